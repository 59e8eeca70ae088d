#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lf/matcore.hpp"
#include "lf/weight.hpp"

namespace lf {

inline constexpr double kMergeTol = 1e-12;

struct Atom {
  Weight w;
  Mat M;
  /// Remainder atom of a truncated staircase (not in the target set).
  bool residual = false;
};

struct SplitStep {
  Mat target, left, right;
  Weight lambda;
  /// Mass taken from the target atom; the whole atom when unset.
  std::optional<Weight> mass;
};

struct Certificate {
  std::vector<SplitStep> steps;
  /// Copy for a root of mass w: recorded split masses are multiplied by w.
  Certificate scaled(const Weight& w) const;
};

class Measure {
 public:
  std::vector<Atom> atoms;
  std::optional<Certificate> cert;

  Measure() = default;
  static Measure dirac(const Mat& a, Weight w = Weight(1));

  Weight mass() const;
  bool empty() const { return atoms.empty(); }
  /// Sort lexicographically and merge points closer than tol*(1+|X|).
  void normalize(double tol = kMergeTol);
  int rows() const;
  int cols() const;
};

Mat barycenter(const Measure& nu, bool raw = false);

/// Throws not_found / invalid_split.
Measure elementary_split(const Measure& nu, const SplitStep& step, double tol = 1e-10);

/// Checks the step's own invariants; empty string when fine.
std::string check_step(const SplitStep& step, double tol);

/// Replays cert from mass*delta_root. Records split masses when absolute != nullptr.
Measure replay(const Mat& root, Weight mass, const Certificate& cert, double tol = 1e-10,
               Certificate* absolute = nullptr);

struct LaminateReport {
  bool pass = true;
  int failed_step = -1;
  std::string message;
};

LaminateReport verify_laminate(const Measure& nu, const Certificate& cert, double tol = 1e-10);

/// Affine map X -> c U X V + K on matrix space.
struct LinearMap {
  Mat U, V;
  double c = 1.0;
  std::optional<Mat> shift;

  Mat operator()(const Mat& x) const;
  static LinearMap identity(int rows, int cols);
  static LinearMap scale(int rows, int cols, double c);
};

using MatFn = std::function<Mat(const Mat&)>;

Measure pushforward(const Measure& nu, const MatFn& T, bool check_rank_one = false);
Certificate pushforward(const Certificate& cert, const MatFn& T, bool check_rank_one);

/// nu(|X| > t), strict.
double tail_mass(const Measure& nu, double t);

/// Sorted-norm tail evaluation for repeated queries.
class TailFn {
 public:
  TailFn() = default;
  explicit TailFn(const Measure& nu);
  TailFn(std::vector<double> norms, std::vector<double> weights);
  double operator()(double t) const;
  /// sup_t t^p nu(|X|>t), attained just below an atom norm.
  double sup_tp_tail(double p) const;
  double total() const { return suffix_.empty() ? 0.0 : suffix_.front(); }
  const std::vector<double>& norms() const { return norms_; }

 private:
  std::vector<double> norms_;   // ascending
  std::vector<double> suffix_;  // suffix_[k] = sum of weights with index >= k
};

double moment(const Measure& nu, double s);

struct TailRow {
  double t, tail, upper, lower;
  bool pass;
};

struct TailReport {
  std::vector<TailRow> rows;
  bool pass = true;
  /// Frobenius norm is used for every |X|; constants below depend on that choice.
  std::string norm = "frobenius";
  bool norm_sensitive = false;
  std::vector<std::string> notes;
  std::string csv() const;
};

enum class Side { upper, lower, both };
Side parse_side(const std::string& s);

using EnvFn = std::function<double(double)>;

/// Generic envelope comparison; missing envelopes are skipped.
TailReport check_envelopes(const std::function<double(double)>& tail, const std::vector<double>& grid,
                           const EnvFn& upper, const EnvFn& lower, double slack = 0.0);

/// Envelopes M^p(1+|A|^p)t^-p (upper) and M^-p(1+|A|^p)t^-p (lower).
TailReport verify_weak_tail(const Measure& nu, double p, double M, double normA, Side side,
                            const std::vector<double>& grid, double slack = 0.0);

/// Smallest C with nu(|X|>t) <= C (1+|A|^p) t^-p for all t (exact on atoms).
double fitted_weak_constant(const Measure& nu, double p, double normA);

using Family = std::function<Measure(std::size_t, const Atom&)>;

/// sum lambda_i nu''_i with merged atoms and a composed certificate.
Measure diamond_compose(const Measure& outer, const Family& family, int jobs = 0);

struct DiamondCheck {
  double p, q;
  double Mp, Mpp;  // fitted constants of the outer measure and the family
  double r, C;
  TailReport report;
};

/// Same composition plus the envelope check C_{p,q} M'M''(1+|A|^r)t^-r. p == q is unsupported.
Measure diamond_compose_checked(const Measure& outer, const Family& family, double p, double q,
                                const std::vector<double>& grid, DiamondCheck& check, int jobs = 0);

/// Equal-exponent composition on 1x1 matrices: nu' = sum_i c 2^-ip delta_{2^i} and
/// nu''_i = sum_k c 2^-kp delta_{2^(i+k)/A}, both truncated at index L and renormalized.
struct EqualExponentExample {
  double p = 0, A = 0;
  int L = 0;
  Measure outer;
  Measure composed;
  /// t^p tail of the composed measure at t = 2^l / A, l = 0..l_max
  std::vector<double> scaled_tail(int l_max) const;
};
EqualExponentExample equal_exponent_example(double p, int L);

double strong_from_weak(double p, double q, double M, double normA);
/// (1+|A|^p)^{1/p}
double bracket_norm(double p, double normA);

/// Least squares slope of log y against log x (points with y > 0).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace lf
