#pragma once

#include <string>
#include <vector>

namespace lf {

/// Shortest round-trip decimal form, locale independent.
std::string fmt_double(double x);
double parse_double(const std::string& s);

/// Grids like "log:1:1e4:60" or "lin:a:b:n" or "list:1,2,3".
std::vector<double> parse_grid(const std::string& spec);
std::vector<double> log_grid(double a, double b, int n);

}  // namespace lf
