#include "lf/measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "lf/error.hpp"
#include "lf/format.hpp"
#include "lf/parallel.hpp"

namespace lf {

Certificate Certificate::scaled(const Weight& w) const {
  Certificate c = *this;
  for (auto& s : c.steps)
    if (s.mass) s.mass = *s.mass * w;
  return c;
}

Measure Measure::dirac(const Mat& a, Weight w) {
  Measure m;
  m.atoms.push_back({w, a, false});
  m.cert = Certificate{};
  return m;
}

Weight Measure::mass() const {
  Weight s(0);
  for (const auto& a : atoms) s += a.w;
  return s;
}

int Measure::rows() const { return atoms.empty() ? 0 : atoms.front().M.rows(); }
int Measure::cols() const { return atoms.empty() ? 0 : atoms.front().M.cols(); }

namespace {

bool lex_less(const Atom& a, const Atom& b) {
  const double* x = a.M.data();
  const double* y = b.M.data();
  // column-major storage; compare in row-major order
  const int r = a.M.rows(), c = a.M.cols();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) {
      double u = x[j * r + i], v = y[j * r + i];
      if (u != v) return u < v;
    }
  return a.residual < b.residual;
}

double close_tol(const Mat& x, double tol) { return tol * (1.0 + x.norm()); }

// Atom store with a norm index, used by replay.
class AtomStore {
 public:
  explicit AtomStore(double merge_tol) : merge_tol_(merge_tol) {}

  void add(const Mat& x, const Weight& w, bool residual = false) {
    if (w.is_zero()) return;
    std::ptrdiff_t k = find(x, close_tol(x, merge_tol_), residual);
    if (k >= 0) {
      atoms_[k].w += w;
      return;
    }
    atoms_.push_back({w, x, residual});
    index_.emplace(x.norm(), atoms_.size() - 1);
  }

  std::ptrdiff_t find(const Mat& x, double tol, bool residual) const {
    double nx = x.norm();
    auto lo = index_.lower_bound(nx - tol);
    std::ptrdiff_t best = -1;
    double bestd = tol;
    for (auto it = lo; it != index_.end() && it->first <= nx + tol; ++it) {
      const Atom& a = atoms_[it->second];
      if (a.residual != residual || a.M.rows() != x.rows() || a.M.cols() != x.cols()) continue;
      double d = (a.M - x).norm();
      if (d <= bestd) {
        bestd = d;
        best = static_cast<std::ptrdiff_t>(it->second);
      }
    }
    return best;
  }

  // Removes mass from atom k; returns the mass removed.
  Weight take(std::size_t k, const std::optional<Weight>& mass, int step_index) {
    Atom& a = atoms_[k];
    Weight m = mass ? *mass : a.w;
    Weight rest = a.w - m;
    bool gone = false;
    if (rest.exact()) {
      if (rest.rational() < 0) fail(Errc::invalid_split, "step " + std::to_string(step_index) + ": split mass exceeds atom weight");
      gone = rest.is_zero();
    } else {
      double scale = std::max(std::abs(a.w.value()), std::abs(m.value()));
      if (rest.value() < -1e-12 * scale)
        fail(Errc::invalid_split, "step " + std::to_string(step_index) + ": split mass exceeds atom weight");
      gone = rest.value() <= 1e-14 * scale;
    }
    if (gone) {
      erase_index(k);
      a.w = Weight(0);
    } else {
      a.w = rest;
    }
    return m;
  }

  Measure measure() const {
    Measure out;
    for (const auto& a : atoms_)
      if (!a.w.is_zero()) out.atoms.push_back(a);
    return out;
  }

 private:
  void erase_index(std::size_t k) {
    double nk = atoms_[k].M.norm();
    auto range = index_.equal_range(nk);
    for (auto it = range.first; it != range.second; ++it)
      if (it->second == k) {
        index_.erase(it);
        return;
      }
    for (auto it = index_.begin(); it != index_.end(); ++it)
      if (it->second == k) {
        index_.erase(it);
        return;
      }
  }

  double merge_tol_;
  std::vector<Atom> atoms_;
  std::multimap<double, std::size_t> index_;
};

}  // namespace

void Measure::normalize(double tol) {
  std::sort(atoms.begin(), atoms.end(), lex_less);
  std::vector<Atom> out;
  out.reserve(atoms.size());
  for (auto& a : atoms) {
    bool merged = false;
    double t = close_tol(a.M, tol);
    const double first = a.M(0, 0);
    for (std::size_t k = out.size(); k-- > 0;) {
      if (out[k].M(0, 0) < first - t) break;
      if (out[k].residual == a.residual && (out[k].M - a.M).norm() <= t) {
        out[k].w += a.w;
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back(std::move(a));
  }
  atoms = std::move(out);
}

Mat barycenter(const Measure& nu, bool raw) {
  if (nu.atoms.empty()) fail(Errc::invalid_input, "barycenter of an empty measure");
  Mat s = Mat::Zero(nu.rows(), nu.cols());
  double mass = 0;
  for (const auto& a : nu.atoms) {
    s += a.w.value() * a.M;
    mass += a.w.value();
  }
  if (raw) return s;
  if (std::abs(mass - 1.0) > 1e-12)
    fail(Errc::invalid_input, "barycenter: measure is not a probability (mass " + fmt_double(mass) + ")");
  return s;
}

std::string check_step(const SplitStep& st, double tol) {
  if (st.left.rows() != st.right.rows() || st.left.cols() != st.right.cols() ||
      st.left.rows() != st.target.rows() || st.left.cols() != st.target.cols())
    return "shape mismatch";
  double l = st.lambda.value();
  if (!(l > 0 && l < 1)) return "lambda outside (0,1)";
  if (rank(st.left - st.right) != 1) return "rank(left-right) != 1";
  Mat comb = l * st.left + (1.0 - l) * st.right;
  double scale = 1.0 + st.left.norm() + st.right.norm();
  if ((comb - st.target).norm() > tol * scale) return "convexity identity fails";
  if (st.mass && !(st.mass->value() > 0)) return "split mass must be positive";
  return "";
}

static void apply_step(AtomStore& store, const SplitStep& st, double tol, int index, Weight* taken) {
  std::string why = check_step(st, tol);
  if (!why.empty()) fail(Errc::invalid_split, "step " + std::to_string(index) + ": " + why);
  std::ptrdiff_t k = store.find(st.target, close_tol(st.target, tol), false);
  if (k < 0) fail(Errc::not_found, "step " + std::to_string(index) + ": no atom at the split target");
  Weight m = store.take(static_cast<std::size_t>(k), st.mass, index);
  if (taken) *taken = m;
  Weight wl = m * st.lambda;
  store.add(st.left, wl);
  store.add(st.right, m - wl);
}

Measure elementary_split(const Measure& nu, const SplitStep& step, double tol) {
  AtomStore store(kMergeTol);
  for (const auto& a : nu.atoms) store.add(a.M, a.w, a.residual);
  apply_step(store, step, tol, 0, nullptr);
  Measure out = store.measure();
  if (nu.cert) {
    out.cert = nu.cert;
    out.cert->steps.push_back(step);
  }
  return out;
}

Measure replay(const Mat& root, Weight mass, const Certificate& cert, double tol, Certificate* absolute) {
  AtomStore store(kMergeTol);
  store.add(root, mass);
  if (absolute) absolute->steps.clear();
  for (std::size_t i = 0; i < cert.steps.size(); ++i) {
    Weight taken;
    apply_step(store, cert.steps[i], tol, static_cast<int>(i), &taken);
    if (absolute) {
      SplitStep s = cert.steps[i];
      s.mass = taken;
      absolute->steps.push_back(std::move(s));
    }
  }
  Measure out = store.measure();
  out.cert = cert;
  return out;
}

LaminateReport verify_laminate(const Measure& nu, const Certificate& cert, double tol) {
  LaminateReport rep;
  if (nu.atoms.empty()) {
    rep.pass = false;
    rep.message = "empty measure";
    return rep;
  }
  Weight mass = nu.mass();
  Mat root = barycenter(nu, true) / mass.value();
  Measure got;
  try {
    got = replay(root, mass, cert, tol);
  } catch (const Error& e) {
    rep.pass = false;
    std::string msg = e.what();
    if (msg.rfind("step ", 0) == 0) rep.failed_step = std::stoi(msg.substr(5));
    rep.message = msg;
    return rep;
  }
  // residual flags are bookkeeping only; compare points and weights
  AtomStore store(kMergeTol);
  for (const auto& a : got.atoms) store.add(a.M, a.w);
  Measure g = store.measure();
  AtomStore want(kMergeTol);
  for (const auto& a : nu.atoms) want.add(a.M, a.w);
  Measure w = want.measure();
  if (g.atoms.size() != w.atoms.size()) {
    rep.pass = false;
    rep.message = "replay produced " + std::to_string(g.atoms.size()) + " atoms, measure has " +
                  std::to_string(w.atoms.size());
    return rep;
  }
  AtomStore gs(kMergeTol);
  for (const auto& a : g.atoms) gs.add(a.M, a.w);
  Measure gm = gs.measure();
  for (const auto& a : w.atoms) {
    std::ptrdiff_t k = -1;
    double best = close_tol(a.M, tol);
    for (std::size_t j = 0; j < gm.atoms.size(); ++j) {
      double d = (gm.atoms[j].M - a.M).norm();
      if (d <= best) {
        best = d;
        k = static_cast<std::ptrdiff_t>(j);
      }
    }
    if (k < 0 || !gm.atoms[k].w.equals(a.w, std::max(tol, 1e-12))) {
      rep.pass = false;
      rep.message = k < 0 ? "atom missing from replay" : "atom weight differs from replay";
      return rep;
    }
  }
  return rep;
}

Mat LinearMap::operator()(const Mat& x) const {
  Mat y = c * (U * x * V);
  if (shift) y += *shift;
  return y;
}

LinearMap LinearMap::identity(int rows, int cols) {
  return {Mat::Identity(rows, rows), Mat::Identity(cols, cols), 1.0, std::nullopt};
}

LinearMap LinearMap::scale(int rows, int cols, double c) {
  return {Mat::Identity(rows, rows), Mat::Identity(cols, cols), c, std::nullopt};
}

Certificate pushforward(const Certificate& cert, const MatFn& T, bool check_rank_one) {
  Certificate out;
  out.steps.reserve(cert.steps.size());
  for (std::size_t i = 0; i < cert.steps.size(); ++i) {
    const auto& s = cert.steps[i];
    SplitStep t{T(s.target), T(s.left), T(s.right), s.lambda, s.mass};
    if (check_rank_one && rank(t.left - t.right) != 1)
      fail(Errc::invalid_transform, "pushforward: step " + std::to_string(i) + " loses its rank-one connection");
    out.steps.push_back(std::move(t));
  }
  return out;
}

Measure pushforward(const Measure& nu, const MatFn& T, bool check_rank_one) {
  Measure out;
  out.atoms.reserve(nu.atoms.size());
  for (const auto& a : nu.atoms) out.atoms.push_back({a.w, T(a.M), a.residual});
  if (nu.cert) out.cert = pushforward(*nu.cert, T, check_rank_one);
  out.normalize();
  return out;
}

double tail_mass(const Measure& nu, double t) {
  double s = 0;
  for (const auto& a : nu.atoms)
    if (a.M.norm() > t) s += a.w.value();
  return s;
}

TailFn::TailFn(const Measure& nu) {
  std::vector<double> n, w;
  n.reserve(nu.atoms.size());
  w.reserve(nu.atoms.size());
  for (const auto& a : nu.atoms) {
    n.push_back(a.M.norm());
    w.push_back(a.w.value());
  }
  *this = TailFn(std::move(n), std::move(w));
}

TailFn::TailFn(std::vector<double> norms, std::vector<double> weights) {
  std::vector<std::size_t> idx(norms.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return norms[a] < norms[b]; });
  norms_.resize(idx.size());
  suffix_.assign(idx.size() + 1, 0.0);
  for (std::size_t i = 0; i < idx.size(); ++i) norms_[i] = norms[idx[i]];
  long double acc = 0;
  for (std::size_t i = idx.size(); i-- > 0;) {
    acc += weights[idx[i]];
    suffix_[i] = static_cast<double>(acc);
  }
}

double TailFn::operator()(double t) const {
  auto it = std::upper_bound(norms_.begin(), norms_.end(), t);
  return suffix_[it - norms_.begin()];
}

double TailFn::sup_tp_tail(double p) const {
  double best = 0;
  for (std::size_t i = 0; i < norms_.size(); ++i) {
    if (i > 0 && norms_[i] == norms_[i - 1]) continue;
    if (norms_[i] <= 0) continue;
    best = std::max(best, std::pow(norms_[i], p) * suffix_[i]);
  }
  return best;
}

double moment(const Measure& nu, double s) {
  long double acc = 0;
  for (const auto& a : nu.atoms) acc += a.w.value() * std::pow(a.M.norm(), s);
  return static_cast<double>(acc);
}

std::string TailReport::csv() const {
  std::ostringstream os;
  os << "t,tail,upper_env,lower_env,verdict\n";
  auto f = [](double x) { return std::isnan(x) ? std::string() : fmt_double(x); };
  for (const auto& r : rows)
    os << fmt_double(r.t) << ',' << fmt_double(r.tail) << ',' << f(r.upper) << ',' << f(r.lower) << ','
       << (r.pass ? "pass" : "fail") << '\n';
  return os.str();
}

Side parse_side(const std::string& s) {
  if (s == "upper") return Side::upper;
  if (s == "lower") return Side::lower;
  if (s == "both") return Side::both;
  fail(Errc::invalid_input, "side must be upper, lower or both");
}

TailReport check_envelopes(const std::function<double(double)>& tail, const std::vector<double>& grid,
                           const EnvFn& upper, const EnvFn& lower, double slack) {
  TailReport rep;
  const double nan = std::nan("");
  for (double t : grid) {
    TailRow r{t, tail(t), upper ? upper(t) : nan, lower ? lower(t) : nan, true};
    if (upper && r.tail > r.upper * (1 + 1e-12) + slack) r.pass = false;
    if (lower && r.tail < r.lower * (1 - 1e-12) - slack) r.pass = false;
    rep.pass = rep.pass && r.pass;
    rep.rows.push_back(r);
  }
  return rep;
}

TailReport verify_weak_tail(const Measure& nu, double p, double M, double normA, Side side,
                            const std::vector<double>& grid, double slack) {
  if (!(p >= 1)) fail(Errc::invalid_input, "verify_weak_tail: p must be >= 1");
  if (!(M >= 1)) fail(Errc::invalid_input, "verify_weak_tail: M must be >= 1");
  TailFn tf(nu);
  double k = 1 + std::pow(normA, p);
  EnvFn up, lo;
  if (side != Side::lower) up = [=](double t) { return std::pow(M, p) * k * std::pow(t, -p); };
  if (side != Side::upper) lo = [=](double t) { return std::pow(M, -p) * k * std::pow(t, -p); };
  TailReport rep = check_envelopes([&](double t) { return tf(t); }, grid, up, lo, slack);
  rep.norm_sensitive = true;
  return rep;
}

double fitted_weak_constant(const Measure& nu, double p, double normA) {
  return TailFn(nu).sup_tp_tail(p) / (1 + std::pow(normA, p));
}

namespace {

struct Composed {
  Measure nu;
  std::vector<Measure> parts;
};

Composed compose(const Measure& outer, const Family& family, int jobs) {
  Composed c;
  c.parts.resize(outer.atoms.size());
  parallel_for(outer.atoms.size(), [&](std::size_t i) { c.parts[i] = family(i, outer.atoms[i]); }, jobs);
  bool certified = outer.cert.has_value();
  std::vector<Certificate> abs(outer.atoms.size());
  std::vector<Measure> scaled(outer.atoms.size());
  parallel_for(outer.atoms.size(), [&](std::size_t i) {
    const Atom& a = outer.atoms[i];
    const Measure& f = c.parts[i];
    // replay only to fix the absolute mass of every split
    if (f.cert) replay(a.M, a.w, f.cert->scaled(a.w), 1e-9, &abs[i]);
    for (const auto& b : f.atoms) scaled[i].atoms.push_back({a.w * b.w, b.M, b.residual});
  }, jobs);
  for (std::size_t i = 0; i < outer.atoms.size(); ++i) {
    if (!c.parts[i].cert) certified = false;
    for (auto& s : scaled[i].atoms) c.nu.atoms.push_back(std::move(s));
  }
  if (certified) {
    Certificate all = *outer.cert;
    for (auto& a : abs)
      for (auto& s : a.steps) all.steps.push_back(std::move(s));
    c.nu.cert = std::move(all);
  }
  c.nu.normalize();
  return c;
}

}  // namespace

Measure diamond_compose(const Measure& outer, const Family& family, int jobs) {
  return compose(outer, family, jobs).nu;
}

Measure diamond_compose_checked(const Measure& outer, const Family& family, double p, double q,
                                const std::vector<double>& grid, DiamondCheck& check, int jobs) {
  if (p == q) fail(Errc::unsupported, "diamond bound needs p != q (the equal-exponent case can diverge)");
  if (std::abs(outer.mass().value() - 1) > 1e-12) fail(Errc::invalid_input, "diamond_compose: outer measure must be a probability");
  Composed c = compose(outer, family, jobs);
  Mat A = barycenter(outer);
  check.p = p;
  check.q = q;
  check.Mp = fitted_weak_constant(outer, p, A.norm());
  check.Mpp = 0;
  for (std::size_t i = 0; i < c.parts.size(); ++i) {
    if (std::abs(c.parts[i].mass().value() - 1) > 1e-12)
      fail(Errc::invalid_input, "diamond_compose: family member " + std::to_string(i) + " is not a probability");
    check.Mpp = std::max(check.Mpp, fitted_weak_constant(c.parts[i], q, outer.atoms[i].M.norm()));
  }
  check.r = std::min(p, q);
  check.C = 4 * (1 + q / std::abs(p - q));
  const double k = check.C * check.Mp * check.Mpp * (1 + std::pow(A.norm(), check.r));
  const double r = check.r;
  TailFn tf(c.nu);
  check.report = check_envelopes([&](double t) { return tf(t); }, grid, [=](double t) { return k * std::pow(t, -r); },
                                 nullptr);
  // exact sup over all t, not only the grid
  double sup = tf.sup_tp_tail(r);
  if (sup > k * (1 + 1e-12)) {
    check.report.pass = false;
    check.report.notes.push_back("sup_t t^r tail exceeds the envelope constant");
  }
  check.report.norm_sensitive = true;
  return c.nu;
}

EqualExponentExample equal_exponent_example(double p, int L) {
  if (!(p > 1) || !std::isfinite(p)) fail(Errc::invalid_input, "equal_exponent_example needs 1 < p < inf");
  if (L < 1) fail(Errc::invalid_input, "equal_exponent_example needs L >= 1");
  EqualExponentExample ex;
  ex.p = p;
  ex.L = L;
  double z = 0;
  for (int i = 0; i <= L; ++i) z += std::pow(2.0, -i * p);
  auto one = [](double x) { return Mat::Constant(1, 1, x); };
  for (int i = 0; i <= L; ++i) ex.outer.atoms.push_back({Weight(std::pow(2.0, -i * p) / z), one(std::ldexp(1.0, i))});
  ex.A = barycenter(ex.outer)(0, 0);
  const double A = ex.A;
  ex.composed = diamond_compose(ex.outer, [&](std::size_t i, const Atom&) {
    Measure m;
    for (int k = 0; k <= L; ++k)
      m.atoms.push_back({Weight(std::pow(2.0, -k * p) / z), one(std::ldexp(1.0, static_cast<int>(i) + k) / A)});
    return m;
  });
  return ex;
}

std::vector<double> EqualExponentExample::scaled_tail(int l_max) const {
  TailFn tf(composed);
  std::vector<double> out;
  for (int l = 0; l <= l_max; ++l) {
    double t = std::ldexp(1.0, l) / A;
    out.push_back(std::pow(t, p) * tf(t));
  }
  return out;
}

double strong_from_weak(double p, double q, double M, double normA) {
  if (!(q >= 1 && q < p && std::isfinite(p))) fail(Errc::invalid_input, "strong_from_weak needs 1 <= q < p < inf");
  return 2 * std::pow(q / (p - q), q / p) * std::pow(M, q) * (1 + std::pow(normA, q));
}

double bracket_norm(double p, double normA) { return std::pow(1 + std::pow(normA, p), 1 / p); }

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0 && y[i] > 0)) continue;
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::nan("");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace lf
