#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "lf/error.hpp"
#include "lf/format.hpp"
#include "lf/synth.hpp"

namespace lf {

Domain Domain::make_box(Vec2 lo, Vec2 hi) {
  if (!(hi.array() > lo.array()).all() || !lo.allFinite() || !hi.allFinite())
    fail(Errc::invalid_input, "box needs lo < hi");
  Domain d;
  d.box = Box{lo, hi};
  return d;
}

Domain Domain::parse(const std::string& s) {
  if (s == "unit") return make_box({0, 0}, {1, 1});
  if (s.rfind("box:", 0) != 0) fail(Errc::parse_error, "domain must be box:x0,y0,x1,y1 or unit");
  std::vector<double> v;
  std::stringstream ss(s.substr(4));
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(parse_double(item));
  if (v.size() != 4) fail(Errc::parse_error, "domain box needs 4 numbers (planar maps only)");
  return make_box({v[0], v[1]}, {v[2], v[3]});
}

double Domain::volume() const {
  if (box) return box->volume();
  if (halfspaces.empty()) fail(Errc::invalid_input, "unbounded domain");
  // clip a large square by every halfspace
  double R = 1e6;
  Polygon p = {{-R, -R}, {R, -R}, {R, R}, {-R, R}};
  for (const auto& [n, c] : halfspaces) p = clip_halfspace(p, n, c);
  double a = polygon_area(p);
  for (const auto& q : p)
    if (q.cwiseAbs().maxCoeff() >= R * (1 - 1e-12)) fail(Errc::invalid_input, "unbounded domain");
  if (a <= 0) fail(Errc::invalid_input, "empty domain");
  return a;
}

bool Domain::contains(const Vec2& x, double tol) const {
  if (box) return (x.array() >= box->lo.array() - tol).all() && (x.array() <= box->hi.array() + tol).all();
  for (const auto& [n, c] : halfspaces)
    if (n.dot(x) > c + tol) return false;
  return true;
}

std::string Domain::str() const {
  if (!box) return "polytope";
  return "box:" + fmt_double(box->lo[0]) + "," + fmt_double(box->lo[1]) + "," + fmt_double(box->hi[0]) + "," +
         fmt_double(box->hi[1]);
}

double polygon_area(const Polygon& p) {
  double a = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2& u = p[i];
    const Vec2& v = p[(i + 1) % p.size()];
    a += u[0] * v[1] - u[1] * v[0];
  }
  return 0.5 * a;
}

Polygon clip_halfspace(const Polygon& p, const Vec2& n, double c) {
  Polygon out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2& u = p[i];
    const Vec2& v = p[(i + 1) % p.size()];
    double du = n.dot(u) - c, dv = n.dot(v) - c;
    if (du <= 0) out.push_back(u);
    if ((du < 0 && dv > 0) || (du > 0 && dv < 0)) out.push_back(u + (v - u) * (du / (du - dv)));
  }
  return out;
}

RectTiling RectTiling::make(double W, double H, int max_stages) {
  RectTiling t;
  t.W = W;
  t.H = H;
  double x0 = 0, y0 = 0, w = W, h = H;
  for (int k = 0; k < max_stages && w > 0 && h > 0; ++k) {
    if (w * h <= 1e-18 * W * H) break;
    if (w <= h) {
      double n = std::floor(h / w);
      if (n < 1) break;
      t.stages.push_back({true, w, n, x0, y0});
      t.covered += n * w * w;
      y0 += n * w;
      h = H - y0;
    } else {
      double n = std::floor(w / h);
      if (n < 1) break;
      t.stages.push_back({false, h, n, x0, y0});
      t.covered += n * h * h;
      x0 += n * h;
      w = W - x0;
    }
  }
  t.covered = std::min(t.covered, W * H);
  return t;
}

bool RectTiling::locate(double a, double c, double& x0, double& y0, double& side) const {
  for (const auto& s : stages) {
    if (s.vertical) {
      if (a < s.x0 || a > s.x0 + s.side || c < s.y0) continue;
      double j = std::floor((c - s.y0) / s.side);
      if (j >= s.count) continue;
      x0 = s.x0;
      y0 = s.y0 + j * s.side;
    } else {
      if (c < s.y0 || c > s.y0 + s.side || a < s.x0) continue;
      double j = std::floor((a - s.x0) / s.side);
      if (j >= s.count) continue;
      x0 = s.x0 + j * s.side;
      y0 = s.y0;
    }
    side = s.side;
    return true;
  }
  return false;
}

const char* flag_name(CellFlag f) {
  switch (f) {
    case CellFlag::good: return "good";
    case CellFlag::error: return "error";
    case CellFlag::inductive: return "inductive";
    case CellFlag::residual: return "residual";
  }
  return "error";
}

CellFlag parse_flag(const std::string& s) {
  if (s == "good") return CellFlag::good;
  if (s == "error") return CellFlag::error;
  if (s == "inductive") return CellFlag::inductive;
  if (s == "residual") return CellFlag::residual;
  fail(Errc::parse_error, "unknown cell flag '" + s + "'");
}

// Rotated grid: cell (i,j) has corners Rrel (i+a, j+b) / n, a,b in {0,1}.
bool rotated_cell_inside(const Mat2& R, long long n, long long i, long long j) {
  double inv = 1.0 / static_cast<double>(n);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      Vec2 w(static_cast<double>(i + a), static_cast<double>(j + b));
      Vec2 z = R * w * inv;
      if (z[0] < 0 || z[0] > 1 || z[1] < 0 || z[1] > 1) return false;
    }
  return true;
}

long long rotated_inside_count(const Mat2& R, long long n) {
  static std::mutex mu;
  static std::map<std::tuple<double, double, double, double, long long>, long long> cache;
  auto key = std::make_tuple(R(0, 0), R(0, 1), R(1, 0), R(1, 1), n);
  {
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  // w = R^T z n ranges over the rotated unit square
  double nn = static_cast<double>(n);
  Mat2 Rt = R.transpose();
  double wlo[2] = {1e300, 1e300}, whi[2] = {-1e300, -1e300};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      Vec2 w = Rt * Vec2(a, b) * nn;
      for (int k = 0; k < 2; ++k) {
        wlo[k] = std::min(wlo[k], w[k]);
        whi[k] = std::max(whi[k], w[k]);
      }
    }
  long long i0 = static_cast<long long>(std::floor(wlo[0])) - 1, i1 = static_cast<long long>(std::ceil(whi[0])) + 1;
  long long total = 0;
  for (long long i = i0; i <= i1; ++i) {
    // j range from corner constraints 0 <= (R (i+a, j+b))_k / n <= 1, refined with the exact predicate
    double lo = -1e300, hi = 1e300;
    for (int a = 0; a < 2; ++a)
      for (int k = 0; k < 2; ++k) {
        double c0 = R(k, 0) * static_cast<double>(i + a);
        double c1 = R(k, 1);
        if (std::abs(c1) < 1e-15) {
          double z = c0 / nn;
          if (z < 0 || z > 1) lo = 1e300;
          continue;
        }
        // 0 <= c0 + c1 (j + b) <= n for b in {0,1}
        double ja = (0 - c0) / c1, jb = (nn - c0) / c1;
        double l = std::min(ja, jb), h = std::max(ja, jb);
        lo = std::max(lo, l);
        hi = std::min(hi, h - 1);
      }
    if (lo > hi) continue;
    long long jl = static_cast<long long>(std::ceil(lo)) - 1, jh = static_cast<long long>(std::floor(hi)) + 1;
    while (jl <= jh && !rotated_cell_inside(R, n, i, jl)) ++jl;
    while (jh >= jl && !rotated_cell_inside(R, n, i, jh)) --jh;
    if (jh >= jl) total += jh - jl + 1;
  }
  std::lock_guard<std::mutex> lk(mu);
  cache[key] = total;
  return total;
}

namespace {
// vertical extent of a convex polygon at abscissa x
bool vertical_range(const Polygon& p, double x, double& lo, double& hi) {
  lo = 1e300;
  hi = -1e300;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2& u = p[i];
    const Vec2& v = p[(i + 1) % p.size()];
    double a = std::min(u[0], v[0]), b = std::max(u[0], v[0]);
    if (x < a || x > b) continue;
    double y;
    if (b - a <= 0) {
      lo = std::min({lo, u[1], v[1]});
      hi = std::max({hi, u[1], v[1]});
      continue;
    }
    y = u[1] + (v[1] - u[1]) * (x - u[0]) / (v[0] - u[0]);
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  return lo <= hi;
}

bool column_range(const Polygon& tri, double h, long long i, double& lo, double& hi) {
  double l0, h0, l1, h1;
  double x0 = static_cast<double>(i) * h, x1 = static_cast<double>(i + 1) * h;
  if (!vertical_range(tri, x0, l0, h0) || !vertical_range(tri, x1, l1, h1)) return false;
  lo = std::max(l0, l1);
  hi = std::min(h0, h1);
  return lo <= hi;
}
}  // namespace

bool triangle_cell_inside(const Polygon& tri, double h, long long i, long long j) {
  double lo, hi;
  if (!column_range(tri, h, i, lo, hi)) return false;
  return static_cast<double>(j) * h >= lo && static_cast<double>(j + 1) * h <= hi;
}

long long triangle_grid_count(const Polygon& tri, double h) {
  double xmin = 1e300, xmax = -1e300;
  for (const auto& v : tri) {
    xmin = std::min(xmin, v[0]);
    xmax = std::max(xmax, v[0]);
  }
  long long i0 = static_cast<long long>(std::floor(xmin / h)), i1 = static_cast<long long>(std::ceil(xmax / h));
  long long total = 0;
  for (long long i = i0; i <= i1; ++i) {
    double lo, hi;
    if (!column_range(tri, h, i, lo, hi)) continue;
    long long jl = static_cast<long long>(std::ceil(lo / h)) - 1, jh = static_cast<long long>(std::floor(hi / h)) + 1;
    while (jl <= jh && !triangle_cell_inside(tri, h, i, jl)) ++jl;
    while (jh >= jl && !triangle_cell_inside(tri, h, i, jh)) --jh;
    if (jh >= jl) total += jh - jl + 1;
  }
  return total;
}

}  // namespace lf
