#include "lf/matcore.hpp"

#include <cmath>
#include <sstream>

#include "lf/error.hpp"
#include "lf/format.hpp"

namespace lf {

double norm(const Mat& m) { return m.norm(); }

bool all_finite(const Mat& m) { return m.allFinite(); }

int rank(const Mat& m, double tol) {
  if (!all_finite(m)) fail(Errc::invalid_input, "rank: non-finite entry");
  if (!(tol > 0 && tol < 1)) fail(Errc::invalid_input, "rank: tol must lie in (0,1)");
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const Vec& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > tol * s(0)) ++r;
  return r;
}

bool rank_one_connected(const Mat& a, const Mat& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(Errc::invalid_input, "rank_one_connected: shape mismatch");
  return rank(a - b, tol) == 1;
}

Mat diag(const std::vector<double>& d) {
  Mat m = Mat::Zero(d.size(), d.size());
  for (size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Mat rotation(double theta) {
  Mat r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

Mat outer(const Vec& a, const Vec& b) { return a * b.transpose(); }

Vec unit(int n, int i) {
  Vec v = Vec::Zero(n);
  v(i) = 1.0;
  return v;
}

bool is_block_diagonal(const Mat& a, double tol) {
  if (a.rows() != a.cols() || a.rows() % 2) return false;
  int n = a.rows() / 2;
  return a.block(0, n, n, n).norm() <= tol && a.block(n, 0, n, n).norm() <= tol;
}

bool is_block_antidiagonal(const Mat& a, double tol) {
  if (a.rows() != a.cols() || a.rows() % 2) return false;
  int n = a.rows() / 2;
  return a.block(0, 0, n, n).norm() <= tol && a.block(n, n, n, n).norm() <= tol;
}

static void require_split_shape(const Mat& a, const char* who) {
  if (a.rows() != a.cols() || a.rows() % 2 || a.rows() == 0)
    fail(Errc::invalid_input, std::string(who) + ": needs an even square matrix");
}

double dist_L1(const Mat& a) {
  require_split_shape(a, "dist_L1");
  int n = a.rows() / 2;
  return std::hypot(a.block(0, n, n, n).norm(), a.block(n, 0, n, n).norm());
}

double dist_L2(const Mat& a) {
  require_split_shape(a, "dist_L2");
  int n = a.rows() / 2;
  return std::hypot(a.block(0, 0, n, n).norm(), a.block(n, n, n, n).norm());
}

namespace {

bool is_diagonal(const Mat& b, double tol) {
  for (int i = 0; i < b.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j)
      if (i != j && std::abs(b(i, j)) > tol) return false;
  return true;
}

// One n x n block: B = U D V^T, U and V in SO(n).
void block_factor(const Mat& b, double tol, Mat& u, Mat& d, Mat& v) {
  const int n = b.rows();
  if (is_diagonal(b, tol)) {
    u = Mat::Identity(n, n);
    v = Mat::Identity(n, n);
    d = b.diagonal().asDiagonal();
    return;
  }
  Eigen::JacobiSVD<Mat> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec s = svd.singularValues();
  if (s(n - 1) > 0 && s(0) - s(n - 1) <= 1e-14 * s(0)) {
    // conformal block: B = s U with U orthogonal
    u = b / s(0);
    v = Mat::Identity(n, n);
    d = Mat::Identity(n, n) * s(0);
  } else {
    u = svd.matrixU();
    v = svd.matrixV();
    d = s.asDiagonal();
  }
  if (u.determinant() < 0) {
    u.col(0) *= -1;
    d(0, 0) *= -1;
  }
  if (v.determinant() < 0) {
    v.col(0) *= -1;
    d(0, 0) *= -1;
  }
}

}  // namespace

SignedSvd signed_block_svd(const Mat& a, double tol) {
  require_split_shape(a, "signed_block_svd");
  if (!all_finite(a)) fail(Errc::invalid_input, "signed_block_svd: non-finite entry");
  const double scale = 1.0 + a.norm();
  if (!is_block_diagonal(a, tol * scale))
    fail(Errc::invalid_input, "signed_block_svd: matrix is not block diagonal");
  const int n = a.rows() / 2;
  SignedSvd out{Mat::Zero(2 * n, 2 * n), Mat::Zero(2 * n, 2 * n), Mat::Zero(2 * n, 2 * n)};
  for (int k = 0; k < 2; ++k) {
    Mat u, d, v;
    block_factor(a.block(k * n, k * n, n, n), tol * scale, u, d, v);
    out.R.block(k * n, k * n, n, n) = u;
    out.D.block(k * n, k * n, n, n) = d;
    out.Q.block(k * n, k * n, n, n) = v;
  }
  return out;
}

ConformalParts conformal_split(const Mat& a) {
  if (a.rows() != 2 || a.cols() != 2) fail(Errc::invalid_input, "conformal_split: needs 2x2");
  double p = 0.5 * (a(0, 0) + a(1, 1)), q = 0.5 * (a(0, 1) - a(1, 0));
  double c = 0.5 * (a(0, 0) - a(1, 1)), d = 0.5 * (a(0, 1) + a(1, 0));
  ConformalParts out{Mat(2, 2), Mat(2, 2)};
  out.plus << p, q, -q, p;
  out.minus << c, d, d, -c;
  return out;
}

double e_rho_residual(const Mat& m, double rho) {
  // row2 of diag(l, rho l) R equals rho J(row1) with J(a,b) = (-b,a)
  return std::hypot(m(1, 0) + rho * m(0, 1), m(1, 1) - rho * m(0, 0));
}

double kp_residual(const Mat& m, double p) {
  double lam = std::hypot(m(0, 0), m(0, 1));
  if (lam == 0) return std::hypot(m(1, 0), m(1, 1));
  double f = std::pow(lam, p - 2);
  return std::hypot(m(1, 0) + f * m(0, 1), m(1, 1) - f * m(0, 0));
}

SetId SetId::parse(const std::string& s) {
  SetId id;
  if (s.find('|') != std::string::npos) {
    id.tag = Tag::UNION;
    size_t start = 0;
    while (true) {
      auto e = s.find('|', start);
      id.parts.push_back(parse(s.substr(start, e == std::string::npos ? std::string::npos : e - start)));
      if (e == std::string::npos) break;
      start = e + 1;
    }
    return id;
  }
  auto amp = s.find('&');
  if (amp != std::string::npos) {
    id.tag = Tag::INTERSECT;
    size_t start = 0;
    while (true) {
      auto e = s.find('&', start);
      id.parts.push_back(parse(s.substr(start, e == std::string::npos ? std::string::npos : e - start)));
      if (e == std::string::npos) break;
      start = e + 1;
    }
    return id;
  }
  auto num = [&](const std::string& t) -> double {
    try {
      return parse_double(t);
    } catch (const std::exception&) {
      fail(Errc::invalid_input, "set id: bad parameter in '" + s + "'");
    }
  };
  if (s == "FULL") id.tag = Tag::FULL;
  else if (s == "L") id.tag = Tag::SPLIT_L;
  else if (s == "L1") id.tag = Tag::L1;
  else if (s == "L2") id.tag = Tag::L2;
  else if (s == "Sigma") id.tag = Tag::SIGMA;
  else if (s == "D") id.tag = Tag::DIAG;
  else if (s == "D>=2") id.tag = Tag::DIAG_GE2;
  else if (s.rfind("rank<=", 0) == 0) {
    id.tag = Tag::RANK_LE;
    double v = num(s.substr(6));
    if (v < 0 || v != std::floor(v)) fail(Errc::invalid_input, "set id: rank bound must be a non-negative integer");
    id.m = static_cast<int>(v);
  } else if (s.rfind("E:", 0) == 0) {
    id.tag = Tag::E;
    id.param = num(s.substr(2));
    if (!(id.param > 0)) fail(Errc::invalid_input, "set id: E needs rho > 0");
  } else if (s.rfind("Kp:", 0) == 0) {
    id.tag = Tag::KP;
    id.param = num(s.substr(3));
    if (!(id.param > 1)) fail(Errc::invalid_input, "set id: Kp needs p > 1");
  } else {
    fail(Errc::invalid_input, "unknown set id '" + s + "'");
  }
  return id;
}

std::string SetId::str() const {
  std::ostringstream os;
  switch (tag) {
    case Tag::FULL: return "FULL";
    case Tag::SPLIT_L: return "L";
    case Tag::L1: return "L1";
    case Tag::L2: return "L2";
    case Tag::SIGMA: return "Sigma";
    case Tag::DIAG: return "D";
    case Tag::DIAG_GE2: return "D>=2";
    case Tag::RANK_LE: os << "rank<=" << m; return os.str();
    case Tag::E: os << "E:" << fmt_double(param); return os.str();
    case Tag::KP: os << "Kp:" << fmt_double(param); return os.str();
    case Tag::INTERSECT:
      for (size_t i = 0; i < parts.size(); ++i) os << (i ? "&" : "") << parts[i].str();
      return os.str();
    case Tag::UNION:
      for (size_t i = 0; i < parts.size(); ++i) os << (i ? "|" : "") << parts[i].str();
      return os.str();
  }
  return "?";
}

bool member(const Mat& m, const SetId& set, double tol) {
  if (!all_finite(m)) fail(Errc::invalid_input, "member: non-finite entry");
  const double scale = 1.0 + m.norm();
  auto square = [&]() {
    if (m.rows() != m.cols()) fail(Errc::invalid_input, "member: " + set.str() + " needs a square matrix");
  };
  auto two = [&]() {
    if (m.rows() != 2 || m.cols() != 2) fail(Errc::invalid_input, "member: " + set.str() + " needs 2x2");
  };
  switch (set.tag) {
    case SetId::Tag::FULL: return true;
    case SetId::Tag::RANK_LE: return rank(m) <= set.m;
    case SetId::Tag::SPLIT_L:
      require_split_shape(m, "member");
      return is_block_diagonal(m, tol * scale) || is_block_antidiagonal(m, tol * scale);
    case SetId::Tag::L1: require_split_shape(m, "member"); return is_block_diagonal(m, tol * scale);
    case SetId::Tag::L2: require_split_shape(m, "member"); return is_block_antidiagonal(m, tol * scale);
    case SetId::Tag::SIGMA: square(); return std::abs(m.determinant() - 1.0) <= tol;
    case SetId::Tag::DIAG: square(); return is_diagonal(m, tol * scale);
    case SetId::Tag::DIAG_GE2:
      square();
      if (!is_diagonal(m, tol * scale)) return false;
      for (int i = 0; i < m.rows(); ++i)
        if (std::abs(m(i, i)) < 2.0 - tol) return false;
      return true;
    case SetId::Tag::E: two(); return e_rho_residual(m, set.param) <= tol * scale;
    case SetId::Tag::KP: two(); return kp_residual(m, set.param) <= tol * scale;
    case SetId::Tag::INTERSECT:
      if (set.parts.empty()) fail(Errc::invalid_input, "member: empty intersection");
      for (const auto& p : set.parts)
        if (!member(m, p, tol)) return false;
      return true;
    case SetId::Tag::UNION:
      for (const auto& p : set.parts)
        if (member(m, p, tol)) return true;
      return false;
  }
  return false;
}

}  // namespace lf
