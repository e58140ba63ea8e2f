#pragma once

#include <string>
#include <vector>

namespace ef {

// Minimal static vector-plot emitter. Output is plain SVG with fixed
// formatting so identical inputs give identical bytes.

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct BarGroup {
    std::string label;
    double value = 0.0;
    double error = 0.0;  // symmetric error bar; 0 hides it
};

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series);

void write_bar_chart(const std::string& path, const std::string& title,
                     const std::string& y_label, const std::vector<BarGroup>& bars);

}  // namespace ef
