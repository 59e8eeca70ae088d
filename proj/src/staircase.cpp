#include "lf/staircase.hpp"

#include <cmath>

#include "lf/error.hpp"
#include "lf/format.hpp"

namespace lf {

StaircaseSpec::StaircaseSpec(Mat A0, StepFn fn, std::string kind, Params params, SetId target)
    : A0_(std::move(A0)),
      fn_(std::move(fn)),
      kind_(std::move(kind)),
      params_(std::move(params)),
      target_(std::move(target)),
      memo_(std::make_shared<Memo>()) {}

const StepData& StaircaseSpec::step(int n) const {
  if (n < 1) fail(Errc::invalid_input, "staircase step index must be >= 1");
  std::lock_guard<std::mutex> lk(memo_->mu);
  auto& st = memo_->steps;
  while (static_cast<int>(st.size()) < n) {
    const Mat& prev = st.empty() ? A0_ : st.back().A;
    st.push_back(fn_(static_cast<int>(st.size()) + 1, prev));
  }
  return st[n - 1];
}

Weight StaircaseSpec::beta(int n) const {
  if (n < 0) fail(Errc::invalid_input, "beta index must be >= 0");
  if (n > 0) step(n);
  std::lock_guard<std::mutex> lk(memo_->mu);
  auto& b = memo_->betas;
  if (b.empty()) b.push_back(Weight(1));
  while (static_cast<int>(b.size()) <= n) b.push_back(b.back() * memo_->steps[b.size() - 1].gamma);
  return b[n];
}

StaircaseSpec StaircaseSpec::pushforward(const MatFn& T, const std::string& label) const {
  StaircaseSpec base = *this;
  StepFn fn = [base, T](int n, const Mat&) {
    const StepData& s = base.step(n);
    StepData out;
    out.A = T(s.A);
    out.mu = lf::pushforward(s.mu, T, false);
    out.gamma = s.gamma;
    out.cert = lf::pushforward(s.cert, T, true);
    return out;
  };
  return StaircaseSpec(T(A0_), std::move(fn), kind_ + (label.empty() ? "" : "|" + label), params_, target_);
}

Measure build_truncation(const StaircaseSpec& spec, int N) {
  if (N < 1) fail(Errc::invalid_input, "build_truncation needs N >= 1");
  Measure nu;
  Certificate cert;
  for (int n = 1; n <= N; ++n) {
    const StepData& s = spec.step(n);
    const Mat& prev = spec.A(n - 1);
    Weight g = s.gamma;
    if (!(g.value() > 0 && g.value() < 1))
      fail(Errc::invalid_spec, "step " + std::to_string(n) + ": gamma outside (0,1)");
    Measure omega;
    for (const auto& a : s.mu.atoms) omega.atoms.push_back({(Weight(1) - g) * a.w, a.M});
    omega.atoms.push_back({g, s.A});
    omega.normalize();
    Mat bary = barycenter(omega, true);
    if ((bary - prev).norm() > 1e-10 * (1 + prev.norm()))
      fail(Errc::invalid_spec, "step " + std::to_string(n) + ": barycenter of omega_n differs from A_{n-1}");
    LaminateReport lr = verify_laminate(omega, s.cert, 1e-10);
    if (!lr.pass) fail(Errc::invalid_spec, "step " + std::to_string(n) + ": " + lr.message);
    Weight b = spec.beta(n - 1);
    Certificate abs;
    replay(prev, b, s.cert, 1e-10, &abs);
    for (auto& st : abs.steps) cert.steps.push_back(std::move(st));
    for (const auto& a : s.mu.atoms) nu.atoms.push_back({b * (Weight(1) - g) * a.w, a.M});
  }
  nu.atoms.push_back({spec.beta(N), spec.A(N), true});
  nu.normalize();
  nu.cert = std::move(cert);
  return nu;
}

int depth_for(const StaircaseSpec& spec, double beta_tol, double t_cover, int n_max) {
  for (int n = 1; n <= n_max; ++n)
    if (spec.beta(n).value() < beta_tol && spec.A(n).norm() >= t_cover) return n;
  fail(Errc::invalid_spec, "depth_for: tolerance not reached within " + std::to_string(n_max) + " steps");
}

HypothesisReport check_hypotheses(const StaircaseSpec& spec, double p, int N, double c, double c0, double M0,
                                  double c1, double M1) {
  if (!(c > 1 && c0 > 0 && M0 > 0 && c1 > 0 && M1 > 0 && p >= 1 && N >= 1))
    fail(Errc::invalid_input, "check_hypotheses: constants must be positive, c > 1, p >= 1");
  HypothesisReport rep;
  rep.beta_p_min = INFINITY;
  rep.beta_p_max = 0;
  rep.mu_min_weight = INFINITY;
  for (int n = 1; n <= N; ++n) {
    const StepData& s = spec.step(n);
    HypothesisRow r{};
    r.n = n;
    double an = s.A.norm(), aprev = spec.A(n - 1).norm();
    r.normA = an;
    r.ratio = an / aprev;
    r.ok_growth = aprev <= an * (1 + 1e-12) && an <= c * aprev * (1 + 1e-12);
    double smax = 0, far = 0;
    for (const auto& a : s.mu.atoms) {
      smax = std::max(smax, a.M.norm());
      if (a.M.norm() >= c1 * an * (1 - 1e-12)) far += a.w.value();
      rep.mu_min_weight = std::min(rep.mu_min_weight, (1 - s.gamma.value()) * a.w.value());
    }
    r.support_ratio = smax / an;
    r.far_mass = far;
    r.ok_support = smax <= c0 * an * (1 + 1e-12);
    r.beta_p = spec.beta(n).value() * std::pow(an, p);
    r.ok_upper = r.beta_p <= M0 * (1 + 1e-12);
    r.ok_far = far >= c1 * (1 - 1e-12);
    r.ok_lower = r.beta_p >= M1 * (1 - 1e-12);
    rep.beta_p_min = std::min(rep.beta_p_min, r.beta_p);
    rep.beta_p_max = std::max(rep.beta_p_max, r.beta_p);
    rep.growth &= r.ok_growth;
    rep.upper_support &= r.ok_support;
    rep.upper_beta &= r.ok_upper;
    rep.lower_mass &= r.ok_far;
    rep.lower_beta &= r.ok_lower;
    rep.rows.push_back(r);
  }
  rep.upper_pass = rep.growth && rep.upper_support && rep.upper_beta;
  rep.lower_pass = rep.growth && rep.lower_mass && rep.lower_beta;
  rep.pass = rep.upper_pass && rep.lower_pass;
  rep.upper_coef = M0 * std::pow(c, p) * std::pow(c0, p);
  rep.lower_coef = M1 * std::pow(c, -p) * std::pow(c1, 1 + p);

  Measure nu = build_truncation(spec, N);
  TailFn tf(nu);
  double lo = c1 * spec.A0().norm() * (1 + 1e-9);
  double hi = c1 * spec.A(std::max(1, N - 1)).norm();
  if (lo <= 0) lo = 1e-9;
  if (hi <= lo) hi = lo;
  double uc = rep.upper_coef, lc = rep.lower_coef;
  rep.tails = check_envelopes([&](double t) { return tf(t); }, log_grid(lo, hi, 60),
                              [=](double t) { return uc * std::pow(t, -p); },
                              [=](double t) { return lc * std::pow(t, -p); });
  rep.tails.norm_sensitive = true;
  return rep;
}

double beta_slope(const StaircaseSpec& spec, int n0, int n1, int points) {
  std::vector<double> xs, ys;
  double prev = -1;
  for (double n : log_grid(n0, n1, points)) {
    int k = static_cast<int>(std::lround(n));
    if (k == prev) continue;
    prev = k;
    xs.push_back(k);
    ys.push_back(spec.beta(k).value());
  }
  return loglog_slope(xs, ys);
}

}  // namespace lf
