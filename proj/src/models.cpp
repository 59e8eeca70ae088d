#include <algorithm>
#include <cmath>

#include "lf/error.hpp"
#include "lf/format.hpp"
#include "lf/models.hpp"

namespace lf {

namespace {

double tail_slope(const Measure& nu, double t0, double t1) {
  TailFn tf(nu);
  auto grid = log_grid(t0, t1, 40);
  std::vector<double> y;
  for (double t : grid) y.push_back(tf(t));
  return loglog_slope(grid, y);
}

double max_atom(const Measure& nu) {
  double m = 0;
  for (const Atom& a : nu.atoms) m = std::max(m, norm(a.M));
  return m;
}

void fit_afs(const Measure& nu, const Mat& A, const AfsOptions& opt, AfsReport& r) {
  r.fit = fit_two_sided(nu, r.q, norm(A), log_grid(opt.t0, opt.t1, opt.points), opt.M_cap);
  r.pass = r.fit.report.pass && r.fit.M <= opt.M_cap;
}

const Mat2 kSwap = (Mat2() << 0, 1, 1, 0).finished();

}  // namespace

Measure afs_measure(const Mat& A, const AfsOptions& opt, AfsReport& r) {
  if (!(opt.K > 1)) fail(Errc::invalid_input, "afs: needs K > 1");
  if (opt.N < 1) fail(Errc::invalid_input, "afs: needs N >= 1");
  r = AfsReport{};
  r.q = exponent("elliptic", {{"K", opt.K}}).value;
  r.N = opt.N;
  ExtendedMeasure E = extended_measure("elliptic", A, {{"K", opt.K}});
  if (member(A, E.target, 1e-12)) {
    r.trivial = true;
    Measure d = Measure::dirac(A);
    d.cert = Certificate{};
    r.atoms = 1;
    fit_afs(d, A, opt, r);
    return d;
  }
  Measure nu = E.truncate(opt.N);
  r.atoms = nu.atoms.size();
  r.residual_bound = E.residual_bound(opt.N);
  fit_afs(nu, A, opt, r);
  int sN = opt.slope_N;
  if (sN <= 0) {
    sN = opt.N;
    while (max_atom(E.truncate(sN)) < opt.slope_t1 && sN < (1 << 20)) sN *= 2;
  }
  r.slope_N = sN;
  r.slope = tail_slope(sN == opt.N ? nu : E.truncate(sN), opt.slope_t0, opt.slope_t1);
  return nu;
}

PiecewiseAffineMap afs_map(const Mat& A, const Domain& domain, const Vec& b, const AfsOptions& opt,
                           const Budget& budget, AfsReport& r) {
  Measure nu = afs_measure(A, opt, r);
  ExtendedMeasure E = extended_measure("elliptic", A, {{"K", opt.K}});
  const SetId target = E.target;
  GoodFn in_K = [target](const Mat& X) { return member(X, target, 1e-8); };
  PiecewiseAffineMap map = realize_tree(LaminateTree::from_measure(nu, A), domain, b, budget, in_K);
  GradientDistribution g = gradient_distribution(map);
  double slope = r.slope;
  int sN = r.slope_N;
  fit_afs(g.cells, A, opt, r);
  r.slope = slope;
  r.slope_N = sN;
  return map;
}

std::vector<double> partial_moments(const ExtendedMeasure& E, double q, int N_max) {
  std::vector<double> out(static_cast<std::size_t>(std::max(N_max, 0)), 0.0);
  double base = 0;
  for (const Atom& a : E.finite) base += a.w.value() * std::pow(norm(a.M), q);
  for (double& v : out) v = base;
  for (const auto& t : E.tails) {
    double w = t.w.value(), acc = 0;
    for (int n = 1; n <= N_max; ++n) {
      const StepData& st = t.spec.step(n);
      double mom = 0;
      for (const Atom& a : st.mu.atoms) mom += a.w.value() * std::pow(norm(a.M), q);
      acc += w * t.spec.beta(n - 1).value() * (1 - st.gamma.value()) * mom;
      out[n - 1] += acc;
    }
  }
  return out;
}

PlapReport plap_pipeline(const Mat& A, const PlapOptions& opt) {
  if (!(opt.p > 1 && opt.p < 2)) fail(Errc::invalid_input, "plap: needs p in (1,2); use duality for p > 2");
  if (opt.Ns.empty()) fail(Errc::invalid_input, "plap: needs at least one N");
  PlapReport r;
  r.p = opt.p;
  r.b = opt.b > 0 ? opt.b : select_b(opt.p);
  ExponentProfile ex = exponent("plaplace", {{"p", opt.p}, {"b", r.b}});
  if (!ex.valid) fail(Errc::invalid_input, "plap: qbar(p, b) is not in (1, p)");
  r.qbar = ex.value;
  r.q = opt.q_factor * r.qbar;
  ExtendedMeasure E = extended_measure("plaplace", A, {{"p", opt.p}, {"b", r.b}});
  int N_max = std::max(*std::max_element(opt.Ns.begin(), opt.Ns.end()), opt.cauchy_from + 1);
  auto mq = partial_moments(E, r.qbar, N_max);
  auto m95 = partial_moments(E, r.q, N_max);
  for (int N : opt.Ns) {
    if (N < 1) fail(Errc::invalid_input, "plap: N must be positive");
    r.rows.push_back({N, mq[N - 1], m95[N - 1]});
  }
  r.growth_ok = true;
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    double decades = std::log10(static_cast<double>(r.rows[i].N) / r.rows[i - 1].N);
    double g = r.rows[i].m_qbar / r.rows[i - 1].m_qbar - 1;
    r.growth.push_back(g);
    if (!(decades > 0) || g < opt.growth_min * decades) r.growth_ok = false;
  }
  for (int N = opt.cauchy_from; N < N_max; ++N)
    r.max_increment = std::max(r.max_increment, std::abs(m95[N] - m95[N - 1]));
  r.cauchy_ok = r.max_increment < opt.cauchy_tol;
  Measure nu = E.truncate(opt.fit_N);
  SetId kp = SetId::parse("Kp:" + fmt_double(opt.p));
  for (const Atom& a : nu.atoms)
    if (!a.residual && !member(a.M, kp, 1e-8)) r.support_ok = false;
  r.fit = fit_two_sided(nu, r.qbar, norm(A), log_grid(opt.t0, opt.t1, 60), opt.M_cap);
  r.pass = r.growth_ok && r.cauchy_ok && r.support_ok;
  return r;
}

Mat dual_matrix(const Mat& X) {
  if (X.rows() != 2 || X.cols() != 2) fail(Errc::invalid_input, "duality: needs 2x2 gradients");
  return kSwap * X * kSwap;
}

namespace {

double kp_rel(const Mat& X, double p) {
  double lam = std::hypot(X(0, 0), X(0, 1));
  double f = lam == 0 ? 0 : std::pow(lam, p - 2);
  return std::hypot(X(1, 0) + f * X(0, 1), X(1, 1) - f * X(0, 0)) / (1 + norm(X));
}

void check_atom(const Mat& X, double p, double pd, DualityReport& r, double tol) {
  double ein = kp_rel(X, p);
  r.max_kp_residual = std::max(r.max_kp_residual, ein);
  if (ein > tol) fail(Errc::invalid_input, "duality: gradient outside K_p");
  Mat Y = dual_matrix(X);
  r.max_kpd_residual = std::max(r.max_kpd_residual, kp_rel(Y, pd));
  double v = X.row(0).norm(), w = X.row(1).norm();
  double rel = std::abs(std::pow(w, pd) - std::pow(v, p)) / (1 + std::pow(v, p));
  r.max_norm_relation = std::max(r.max_norm_relation, rel);
}

void finish(DualityReport& r, double tol) {
  r.pass = std::abs(r.mass_in - r.mass_out) <= 1e-12 && r.max_kpd_residual <= tol && r.max_norm_relation <= tol;
}

}  // namespace

Measure duality_swap(const Measure& nu, double p, DualityReport& r, double tol) {
  if (!(p > 1)) fail(Errc::invalid_input, "duality: needs p > 1");
  r = DualityReport{};
  r.p = p;
  r.p_dual = p / (p - 1);
  Measure out;
  for (const Atom& a : nu.atoms) {
    r.mass_in += a.w.value();
    if (!a.residual) check_atom(a.M, p, r.p_dual, r, tol);
    out.atoms.push_back({a.w, dual_matrix(a.M), a.residual});
  }
  if (nu.cert) out.cert = pushforward(*nu.cert, [](const Mat& X) { return dual_matrix(X); }, true);
  for (const Atom& a : out.atoms) r.mass_out += a.w.value();
  finish(r, tol);
  return out;
}

Box DualMap::box() const {
  const Box& b0 = *base.domain.box;
  if (!swapped) return b0;
  Box b;
  b.lo = kSwap * b0.lo;
  b.hi = kSwap * b0.hi;
  return b;
}

Mat DualMap::A() const { return swapped ? dual_matrix(base.A) : base.A; }

Vec DualMap::b() const {
  if (!swapped) return base.b;
  Vec v = base.b;
  std::swap(v[0], v[1]);
  return v;
}

PiecewiseAffineMap::Eval DualMap::eval(const Vec2& x) const {
  if (!swapped) return base.eval(x);
  PiecewiseAffineMap::Eval e = base.eval(kSwap * x);
  std::swap(e.u[0], e.u[1]);
  e.grad = dual_matrix(e.grad);
  return e;
}

GradientDistribution DualMap::gradients() const {
  GradientDistribution g = gradient_distribution(base);
  if (!swapped) return g;
  for (auto& a : g.cells.atoms) a.M = dual_matrix(a.M);
  for (auto& m : g.by_flag)
    for (auto& a : m.atoms) a.M = dual_matrix(a.M);
  return g;
}

double DualMap::boundary_residual(int samples) const {
  Box bx = box();
  Vec2 ext = bx.hi - bx.lo;
  double per = 2 * (ext[0] + ext[1]);
  Mat Am = A();
  Vec bv = b();
  double worst = 0;
  for (int i = 0; i < samples; ++i) {
    double s = halton(static_cast<unsigned long long>(i) + 1, 2) * per;
    Vec2 x;
    if (s < ext[0]) x = bx.lo + Vec2(s, 0);
    else if (s < ext[0] + ext[1]) x = bx.lo + Vec2(ext[0], s - ext[0]);
    else if (s < 2 * ext[0] + ext[1]) x = bx.lo + Vec2(ext[0] - (s - ext[0] - ext[1]), ext[1]);
    else x = bx.lo + Vec2(0, ext[1] - (s - 2 * ext[0] - ext[1]));
    Vec xv(2);
    xv << x[0], x[1];
    worst = std::max(worst, (eval(x).u - (Am * xv + bv)).norm());
  }
  return worst;
}

DualMap duality_swap(const DualMap& map, double p, DualityReport& r, double tol) {
  if (!(p > 1)) fail(Errc::invalid_input, "duality: needs p > 1");
  if (map.base.rows() != 2) fail(Errc::invalid_input, "duality: needs maps into R^2");
  r = DualityReport{};
  r.p = p;
  r.p_dual = p / (p - 1);
  GradientDistribution g = map.gradients();
  for (const Atom& a : g.cells.atoms) r.mass_in += a.w.value();
  // error pieces of a realization are not expected in K_p
  for (const Atom& a : g.by_flag[static_cast<int>(CellFlag::good)].atoms) check_atom(a.M, p, r.p_dual, r, tol);
  DualMap out = map;
  out.swapped = !map.swapped;
  for (const Atom& a : out.gradients().cells.atoms) r.mass_out += a.w.value();
  finish(r, tol);
  return out;
}

DualMap duality_swap(const PiecewiseAffineMap& map, double p, DualityReport& r, double tol) {
  DualMap m;
  m.base = map;
  m.swapped = false;
  return duality_swap(m, p, r, tol);
}

}  // namespace lf
