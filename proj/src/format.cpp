#include "lf/format.hpp"

#include <charconv>
#include <cmath>

#include "lf/error.hpp"

namespace lf {

std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s) {
  double v = 0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e) fail(Errc::parse_error, "not a number: '" + s + "'");
  return v;
}

std::vector<double> log_grid(double a, double b, int n) {
  if (!(a > 0 && b >= a && n >= 1)) fail(Errc::invalid_input, "log grid needs 0 < a <= b and n >= 1");
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = a;
    return g;
  }
  double la = std::log(a), lb = std::log(b);
  for (int i = 0; i < n; ++i) g[i] = std::exp(la + (lb - la) * i / (n - 1));
  g.front() = a;
  g.back() = b;
  return g;
}

std::vector<double> parse_grid(const std::string& spec) {
  auto parts = [&](const std::string& s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
      auto e = s.find(sep, start);
      out.push_back(s.substr(start, e == std::string::npos ? std::string::npos : e - start));
      if (e == std::string::npos) break;
      start = e + 1;
    }
    return out;
  };
  auto f = parts(spec, ':');
  if (f[0] == "list" && f.size() == 2) {
    std::vector<double> g;
    for (auto& x : parts(f[1], ',')) g.push_back(parse_double(x));
    return g;
  }
  if ((f[0] == "log" || f[0] == "lin") && f.size() == 4) {
    double a = parse_double(f[1]), b = parse_double(f[2]);
    double nn = parse_double(f[3]);
    if (nn < 1 || nn != std::floor(nn)) fail(Errc::parse_error, "grid point count must be a positive integer");
    int n = static_cast<int>(nn);
    if (f[0] == "log") return log_grid(a, b, n);
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return g;
  }
  fail(Errc::parse_error, "bad grid spec '" + spec + "' (want log:a:b:n, lin:a:b:n or list:x,y)");
}

}  // namespace lf
