#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "lf/matcore.hpp"
#include "lf/measure.hpp"

namespace lf {

/// One replacement omega_n = (1 - gamma) mu + gamma delta_{A_n}, barycenter A_{n-1}.
struct StepData {
  Mat A;
  Measure mu;  // probability
  Weight gamma;
  /// Splitting sequence from delta_{A_{n-1}} to omega_n (whole-atom splits).
  Certificate cert;
};

using Params = std::map<std::string, double>;

class StaircaseSpec {
 public:
  /// step(n, A_{n-1}) for n >= 1.
  using StepFn = std::function<StepData(int, const Mat&)>;

  StaircaseSpec(Mat A0, StepFn fn, std::string kind, Params params, SetId target);

  const Mat& A0() const { return A0_; }
  const std::string& kind() const { return kind_; }
  const Params& params() const { return params_; }
  const SetId& target() const { return target_; }

  /// Memoized; safe for concurrent readers.
  const StepData& step(int n) const;
  const Mat& A(int n) const { return n == 0 ? A0_ : step(n).A; }
  /// beta_n = prod_{k <= n} gamma_k, beta_0 = 1.
  Weight beta(int n) const;

  StaircaseSpec pushforward(const MatFn& T, const std::string& label) const;

 private:
  struct Memo {
    std::mutex mu;
    std::deque<StepData> steps;
    std::deque<Weight> betas;
  };
  Mat A0_;
  StepFn fn_;
  std::string kind_;
  Params params_;
  SetId target_;
  std::shared_ptr<Memo> memo_;
};

/// nu^N with certificate; the remainder atom beta_N delta_{A_N} is flagged residual.
Measure build_truncation(const StaircaseSpec& spec, int N);

/// Smallest N with beta_N < beta_tol and |A_N| >= t_cover (capped at n_max).
int depth_for(const StaircaseSpec& spec, double beta_tol, double t_cover = 0, int n_max = 100000);

struct HypothesisRow {
  int n;
  double normA, ratio, support_ratio, beta_p, far_mass;
  bool ok_growth, ok_support, ok_upper, ok_far, ok_lower;
};

struct HypothesisReport {
  std::vector<HypothesisRow> rows;
  bool growth = true, upper_support = true, upper_beta = true, lower_mass = true, lower_beta = true;
  bool upper_pass = true, lower_pass = true, pass = true;
  double upper_coef = 0, lower_coef = 0;  // M0 c^p c0^p and M1 c^-p c1^(1+p)
  double beta_p_min = 0, beta_p_max = 0;
  double mu_min_weight = 0;  // measured min over atoms of mu_n weights
  TailReport tails;          // nu^N against the implied envelopes
};

HypothesisReport check_hypotheses(const StaircaseSpec& spec, double p, int N, double c, double c0, double M0,
                                  double c1, double M1);

/// kind in {det1, rank_drop, elliptic, plaplace}. Params: det1 {unchecked}; rank_drop {m};
/// elliptic {K, x}; plaplace {p, b, x}.
StaircaseSpec example_staircase(const std::string& kind, const Mat& A, const Params& params);

struct ExtendedMeasure {
  Mat A;
  std::vector<Atom> finite;
  struct Tail {
    Weight w;
    StaircaseSpec spec;
  };
  std::vector<Tail> tails;
  Certificate root_cert;  // absolute masses, from delta_A
  SetId target;
  std::string kind;
  Params params;

  /// Finite atoms plus each tail truncated at N.
  Measure truncate(int N) const;
  /// sum_j lambda_j beta_N^(j)
  double residual_bound(int N) const;
};

/// kind in {elliptic, plaplace}. Params: elliptic {K}; plaplace {p, b (optional, default select_b(p))}.
ExtendedMeasure extended_measure(const std::string& kind, const Mat& A, const Params& params);

struct TwoSided {
  double M = 0;  // smallest M with M^-1 env <= tail <= M env on the grid
  double M_upper = 0, M_lower = 0;
  TailReport report;
};

/// Fits M for tail vs (1+|A|^q) t^-q on the grid and reports both sides at that M.
TwoSided fit_two_sided(const Measure& nu, double q, double normA, const std::vector<double>& grid, double M_cap);

/// Log-log slope of beta_n over log-spaced n in [n0, n1].
double beta_slope(const StaircaseSpec& spec, int n0, int n1, int points = 200);

}  // namespace lf
