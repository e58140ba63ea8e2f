#include "ef/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ef/csv.hpp"

namespace ef {

namespace {

constexpr int kWidth = 860;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 160;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

struct Range {
    double lo = 0.0, hi = 1.0;
    double scale(double v, double px_lo, double px_hi) const {
        if (hi == lo) return 0.5 * (px_lo + px_hi);
        return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
    }
};

Range nice_range(double lo, double hi) {
    if (!(hi > lo)) {
        hi = lo + 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

void open_svg(std::ostringstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
}

void axes(std::ostringstream& out, const Range& xr, const Range& yr,
          const std::string& x_label, const std::string& y_label) {
    const int x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    const int y0 = kHeight - kMarginBottom, y1 = kMarginTop;
    out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double fx = xr.lo + (xr.hi - xr.lo) * i / 5.0;
        const double px = xr.scale(fx, x0, x1);
        out << "<text x=\"" << num(px) << "\" y=\"" << y0 + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(fx)
            << "</text>\n";
        const double fy = yr.lo + (yr.hi - yr.lo) * i / 5.0;
        const double py = yr.scale(fy, y0, y1);
        out << "<text x=\"" << x0 - 8 << "\" y=\"" << num(py + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(fy)
            << "</text>\n";
        out << "<line x1=\"" << x0 << "\" y1=\"" << num(py) << "\" x2=\"" << x1 << "\" y2=\""
            << num(py) << "\" stroke=\"#dddddd\"/>\n";
    }
    out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
        << "</text>\n";
    out << "<text x=\"18\" y=\"" << (y0 + y1) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 18 " << (y0 + y1) / 2 << ")\">" << y_label << "</text>\n";
}

}  // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series) {
    if (series.empty()) throw std::invalid_argument("write_line_chart: no series");
    double x_lo = series[0].x.empty() ? 0.0 : series[0].x[0];
    double x_hi = x_lo, y_lo = 0.0, y_hi = 0.0;
    bool first = true;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw std::invalid_argument("write_line_chart: x/y length mismatch");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                x_lo = x_hi = s.x[i];
                y_lo = y_hi = s.y[i];
                first = false;
            }
            x_lo = std::min(x_lo, s.x[i]);
            x_hi = std::max(x_hi, s.x[i]);
            y_lo = std::min(y_lo, s.y[i]);
            y_hi = std::max(y_hi, s.y[i]);
        }
    }
    const Range xr{x_lo, x_hi > x_lo ? x_hi : x_lo + 1.0};
    const Range yr = nice_range(y_lo, y_hi);
    const int x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    const int y0 = kHeight - kMarginBottom, y1 = kMarginTop;

    std::ostringstream out;
    open_svg(out, title);
    axes(out, xr, yr, x_label, y_label);
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (i) out << " ";
            out << num(xr.scale(s.x[i], x0, x1)) << "," << num(yr.scale(s.y[i], y0, y1));
        }
        out << "\"/>\n";
        const int ly = kMarginTop + 18 * static_cast<int>(si);
        out << "<line x1=\"" << x1 + 10 << "\" y1=\"" << ly << "\" x2=\"" << x1 + 34 << "\" y2=\""
            << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << x1 + 40 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
    }
    out << "</svg>\n";
    write_text_file(path, out.str());
}

void write_bar_chart(const std::string& path, const std::string& title,
                     const std::string& y_label, const std::vector<BarGroup>& bars) {
    if (bars.empty()) throw std::invalid_argument("write_bar_chart: no bars");
    double y_hi = 0.0;
    for (const auto& b : bars) y_hi = std::max(y_hi, b.value + b.error);
    const Range yr = nice_range(0.0, y_hi);
    const int x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    const int y0 = kHeight - kMarginBottom, y1 = kMarginTop;
    const double slot = static_cast<double>(x1 - x0) / static_cast<double>(bars.size());
    const double bw = 0.6 * slot;

    std::ostringstream out;
    open_svg(out, title);
    axes(out, Range{0.0, 1.0}, yr, "", y_label);
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const auto& b = bars[i];
        const double cx = x0 + slot * (static_cast<double>(i) + 0.5);
        const double top = yr.scale(b.value, y0, y1);
        const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "<rect x=\"" << num(cx - bw / 2) << "\" y=\"" << num(top) << "\" width=\"" << num(bw)
            << "\" height=\"" << num(static_cast<double>(y0) - top) << "\" fill=\"" << color
            << "\" fill-opacity=\"0.8\"/>\n";
        if (b.error > 0.0) {
            const double e_hi = yr.scale(b.value + b.error, y0, y1);
            const double e_lo = yr.scale(std::max(0.0, b.value - b.error), y0, y1);
            out << "<line x1=\"" << num(cx) << "\" y1=\"" << num(e_lo) << "\" x2=\"" << num(cx)
                << "\" y2=\"" << num(e_hi) << "\" stroke=\"black\"/>\n";
            out << "<line x1=\"" << num(cx - 6) << "\" y1=\"" << num(e_hi) << "\" x2=\""
                << num(cx + 6) << "\" y2=\"" << num(e_hi) << "\" stroke=\"black\"/>\n";
            out << "<line x1=\"" << num(cx - 6) << "\" y1=\"" << num(e_lo) << "\" x2=\""
                << num(cx + 6) << "\" y2=\"" << num(e_lo) << "\" stroke=\"black\"/>\n";
        }
        out << "<text x=\"" << num(cx) << "\" y=\"" << y0 + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << b.label
            << "</text>\n";
    }
    out << "</svg>\n";
    write_text_file(path, out.str());
}

}  // namespace ef
