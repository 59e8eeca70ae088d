#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace lf {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline constexpr double kRankTol = 1e-9;
inline constexpr double kEqTol = 1e-9;

/// Frobenius norm.
double norm(const Mat& m);

bool all_finite(const Mat& m);

/// Number of singular values above tol times the largest one.
int rank(const Mat& m, double tol = kRankTol);

bool rank_one_connected(const Mat& a, const Mat& b, double tol = kRankTol);

Mat diag(const std::vector<double>& d);
Mat rotation(double theta);
Mat outer(const Vec& a, const Vec& b);
Vec unit(int n, int i);

struct SignedSvd {
  Mat R, D, Q;
};

/// A = R D Q^T with R, Q in SO(2n) block diagonal and D diagonal with signs.
SignedSvd signed_block_svd(const Mat& a, double tol = 1e-10);

struct SetId {
  enum class Tag { FULL, RANK_LE, SPLIT_L, L1, L2, SIGMA, DIAG, DIAG_GE2, E, KP, INTERSECT, UNION };
  Tag tag = Tag::FULL;
  int m = 0;
  double param = 0;
  std::vector<SetId> parts;

  static SetId parse(const std::string& s);
  std::string str() const;
};

bool member(const Mat& m, const SetId& set, double tol = kEqTol);

/// Residual of the closest-point fit in E_rho (X = diag(l, rho l) R).
double e_rho_residual(const Mat& m, double rho);
/// Residual of the fit in K_p (X = diag(l, l^{p-1}) R).
double kp_residual(const Mat& m, double p);

struct ConformalParts {
  Mat plus, minus;
};
ConformalParts conformal_split(const Mat& a);

bool is_block_diagonal(const Mat& a, double tol);
bool is_block_antidiagonal(const Mat& a, double tol);

/// Distance (Frobenius) from a to L1 resp. L2.
double dist_L1(const Mat& a);
double dist_L2(const Mat& a);

}  // namespace lf
