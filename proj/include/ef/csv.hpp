#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace ef {

// Formats a double with 12 significant digits. Used for every CSV the
// library writes so that repeated runs are byte-identical.
std::string fmt_num(double v);

// Full-precision form for weight files (round-trips exactly through strtod).
std::string fmt_num_exact(double v);

std::vector<std::string> split_csv_line(const std::string& line);

// Strict double parse; rejects trailing garbage and empty cells.
std::optional<double> parse_double(const std::string& cell);

// Reads all lines of a text file; throws std::runtime_error when missing.
std::vector<std::string> read_lines(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace ef
