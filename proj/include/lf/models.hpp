#pragma once

#include <string>
#include <vector>

#include "lf/measure.hpp"
#include "lf/staircase.hpp"
#include "lf/synth.hpp"

namespace lf {

struct ExponentProfile {
  std::string kind;
  Params params;
  double value = 0;
  bool valid = false;
  std::string range;
};

/// elliptic: 2K/(K+1); plaplace: (p-1)/(b^(p-1)+1) + b/(b+1).
ExponentProfile exponent(const std::string& kind, const Params& params);
double qbar(double p, double b);
/// d qbar / d b
double qbar_db(double p, double b);

inline constexpr double kBMax = 1e6;
/// Maximizer of qbar(p, .) over (1, kBMax].
double select_b(double p);

struct AfsOptions {
  double K = 3;
  int N = 200;
  double t0 = 2, t1 = 50;  // two-sided window
  int points = 60;
  double M_cap = 1e3;
  double slope_t0 = 10, slope_t1 = 1e3;
  /// depth for the slope fit; 0 picks the first N whose atoms reach slope_t1
  int slope_N = 0;
};

struct AfsReport {
  double q = 0;
  int N = 0;
  bool trivial = false;  // A already in E_K or E_1/K
  std::size_t atoms = 0;
  double residual_bound = 0;
  TwoSided fit;
  double slope = 0;
  int slope_N = 0;
  bool pass = false;  // two-sided verdict on the window with M <= M_cap
};

/// Extended elliptic staircase truncated at N, with two-sided tail fit against (1+|A|^q_K) t^-q_K.
Measure afs_measure(const Mat& A, const AfsOptions& opt, AfsReport& report);
/// Map mode: the truncated measure realized on a box; the fit runs on the map's gradient distribution.
PiecewiseAffineMap afs_map(const Mat& A, const Domain& domain, const Vec& b, const AfsOptions& opt,
                           const Budget& budget, AfsReport& report);

struct PlapOptions {
  double p = 1.5;
  double b = 0;  // 0: select_b(p)
  std::vector<int> Ns = {100, 1000, 10000};
  double q_factor = 0.95;
  int cauchy_from = 1000;
  double growth_min = 0.10;  // per decade of N
  double cauchy_tol = 1e-3;
  int fit_N = 200;
  double t0 = 2, t1 = 50;
  double M_cap = 1e3;
};

struct MomentRow {
  int N;
  double m_qbar, m_q;
};

struct PlapReport {
  double p = 0, b = 0, qbar = 0, q = 0;
  std::vector<MomentRow> rows;
  std::vector<double> growth;  // relative q-bar moment growth between consecutive rows
  double max_increment = 0;    // max |m_q(N+1) - m_q(N)| for N >= cauchy_from
  bool growth_ok = false, cauchy_ok = false;
  bool support_ok = true;  // every unflagged atom in K_p
  TwoSided fit;
  bool pass = false;  // growth_ok && cauchy_ok && support_ok
};

/// Partial moment sum_{atoms of nu^N, not the remainders} w |X|^q for N = 1..N_max (index N-1).
std::vector<double> partial_moments(const ExtendedMeasure& E, double q, int N_max);

/// Extended p-Laplace staircase with b = select_b(p): moment divergence proxy and tail fit.
PlapReport plap_pipeline(const Mat& A, const PlapOptions& opt);

/// Gradient relabelling u = (v, w) -> (w, v)(x2, x1): X -> P X P with P the coordinate swap.
Mat dual_matrix(const Mat& X);

struct DualityReport {
  double p = 0, p_dual = 0;
  double mass_in = 0, mass_out = 0;
  double max_kp_residual = 0;      // inputs against K_p, relative to 1+|X|
  double max_kpd_residual = 0;     // outputs against K_p'
  double max_norm_relation = 0;    // | |grad w|^p' - |grad v|^p | / (1 + |grad v|^p)
  bool pass = false;
};

/// Atoms outside K_p (remainders excepted) are rejected with invalid-input.
Measure duality_swap(const Measure& nu, double p, DualityReport& report, double tol = 1e-8);

/// Swapped view of a map: eval(x) = P u(P x) on the transposed box.
struct DualMap {
  PiecewiseAffineMap base;
  bool swapped = true;
  Box box() const;
  Mat A() const;
  Vec b() const;
  PiecewiseAffineMap::Eval eval(const Vec2& x) const;
  GradientDistribution gradients() const;
  /// sup over perimeter samples of |u - l_{A,b}|.
  double boundary_residual(int samples = 4000) const;
};

DualMap duality_swap(const PiecewiseAffineMap& map, double p, DualityReport& report, double tol = 1e-8);
DualMap duality_swap(const DualMap& map, double p, DualityReport& report, double tol = 1e-8);

}  // namespace lf
