#include "lf/stages.hpp"

#include <algorithm>
#include <cmath>

#include "lf/error.hpp"
#include "lf/format.hpp"

namespace lf {

namespace {

const SetId& good_set() {
  static const SetId s = SetId::parse("L&Sigma");
  return s;
}

Weight wnum(double x) {
  Rational q;
  if (dyadic_rational(x, q)) return Weight(q);
  return Weight(x);
}

bool diagonal(const Mat& a) {
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (i != j && a(i, j) != 0.0) return false;
  return true;
}

void require_even_square(const Mat& A, const char* who) {
  if (A.rows() != A.cols() || A.rows() % 2 != 0 || A.rows() == 0)
    fail(Errc::invalid_input, std::string(who) + ": needs a 2n x 2n matrix");
  if (!all_finite(A)) fail(Errc::invalid_input, std::string(who) + ": non-finite entry");
}

Measure pass_through(const Atom& a) {
  Measure d = Measure::dirac(a.M);
  d.atoms[0].residual = a.residual;
  return d;
}

}  // namespace

StaircaseSpec stage1_spec(const Mat& A, int m, double tol) {
  require_even_square(A, "stage1_spec");
  if (m < 2) fail(Errc::invalid_input, "stage1_spec: needs m >= 2");
  int rk = rank(A, tol);
  if (rk > m) fail(Errc::invalid_input, "stage1_spec: rank(A) = " + std::to_string(rk) + " exceeds m = " + std::to_string(m));
  if (rk < 2) fail(Errc::invalid_input, "stage1_spec: rank(A) <= 1, nothing to reduce");
  Params p;
  if (diagonal(A)) return example_staircase("rank_drop", A, p);
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec s = svd.singularValues();
  Mat D = Mat::Zero(A.rows(), A.cols());
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > tol * s(0)) D(i, i) = s(i);
  Mat U = svd.matrixU(), V = svd.matrixV();
  StaircaseSpec base = example_staircase("rank_drop", D, p);
  return base.pushforward([U, V](const Mat& X) -> Mat { return U * X * V.transpose(); }, "svd");
}

Measure stage2_laminate(const Mat& A, double tol) {
  require_even_square(A, "stage2_laminate");
  if (norm(A) == 0) return Measure::dirac(A);
  if (rank(A, tol) > 1) fail(Errc::invalid_input, "stage2_laminate: needs rank(A) <= 1");
  const int n = A.rows() / 2;
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec a = svd.singularValues()(0) * svd.matrixU().col(0);
  Vec b = svd.matrixV().col(0);
  auto top = [n](const Vec& v) {
    Vec o = Vec::Zero(2 * n);
    o.head(n) = 2 * v.head(n);
    return o;
  };
  auto bottom = [n](const Vec& v) {
    Vec o = Vec::Zero(2 * n);
    o.tail(n) = 2 * v.tail(n);
    return o;
  };
  Mat A1 = outer(top(a), top(b)), A2 = outer(top(a), bottom(b));
  Mat A3 = outer(bottom(a), top(b)), A4 = outer(bottom(a), bottom(b));
  // equal to (2a_1, 0) x b and (0, 2a_2) x b
  Mat B1 = 0.5 * (A1 + A2), B2 = 0.5 * (A3 + A4);
  Certificate c;
  Weight half = Weight::ratio(1, 2);
  Measure nu;
  c.steps.push_back({A, B1, B2, half, std::nullopt});
  auto split = [&](const Mat& B, const Mat& L, const Mat& R) {
    if (norm(L - R) <= 1e-15 * (1 + norm(B))) {
      nu.atoms.push_back({half, B});
      return;
    }
    c.steps.push_back({B, L, R, half, std::nullopt});
    nu.atoms.push_back({Weight::ratio(1, 4), L});
    nu.atoms.push_back({Weight::ratio(1, 4), R});
  };
  split(B1, A1, A2);
  split(B2, A3, A4);
  nu.cert = c;
  nu.normalize();
  return nu;
}

Mat l2_to_l1(const Mat& X) {
  const int n = X.rows() / 2;
  Mat Y(X.rows(), X.cols());
  Y.topRows(n) = X.bottomRows(n);
  Y.bottomRows(n) = X.topRows(n);
  if (n % 2 == 1) Y.col(0) = -Y.col(0);
  return Y;
}

Mat l1_to_l2(const Mat& Y) { return l2_to_l1(Y); }

Mat Stage3Plan::to_A(const Mat& X) const {
  Mat Y = R * X * Q.transpose();
  return block == 1 ? Y : l1_to_l2(Y);
}

Stage3Plan stage3_spec(const Mat& A, double tol) {
  require_even_square(A, "stage3_spec");
  Stage3Plan plan;
  plan.A = A;
  double scale = 1 + norm(A);
  Mat A1;
  if (is_block_diagonal(A, tol * scale)) {
    plan.block = 1;
    A1 = A;
  } else if (is_block_antidiagonal(A, tol * scale)) {
    plan.block = 2;
    A1 = l2_to_l1(A);
  } else {
    fail(Errc::invalid_input, "stage3_spec: A is not split (neither L1 nor L2)");
  }
  SignedSvd f = signed_block_svd(A1, tol);
  plan.R = f.R;
  plan.D = f.D;
  plan.Q = f.Q;
  const int d = A.rows();
  // pre-split every entry with |a_i| < 2 into +-2
  std::vector<Atom> atoms = {{Weight(1), plan.D, false}};
  Certificate cert;
  for (int i = 0; i < d; ++i) {
    double ai = plan.D(i, i);
    if (std::abs(ai) >= 2) continue;
    std::vector<Atom> next;
    Weight lam = (Weight(2) + wnum(ai)) / Weight(4);
    for (const Atom& at : atoms) {
      Mat L = at.M, Rm = at.M;
      L(i, i) = 2;
      Rm(i, i) = -2;
      cert.steps.push_back({at.M, L, Rm, lam, std::nullopt});
      next.push_back({at.w * lam, L, false});
      next.push_back({at.w * (Weight(1) - lam), Rm, false});
    }
    atoms = std::move(next);
  }
  plan.presplit.atoms = atoms;
  plan.presplit.cert = cert;
  plan.presplit.normalize();
  Params p;
  for (const Atom& at : plan.presplit.atoms) plan.corners.push_back(example_staircase("det1", at.M, p));
  return plan;
}

Measure stage3_measure(const Stage3Plan& plan, double beta_tol, double t_cover, int jobs) {
  const auto& corners = plan.corners;
  Measure inD = diamond_compose(
      plan.presplit,
      [&](std::size_t i, const Atom&) {
        int N = depth_for(corners[i], beta_tol, t_cover);
        return build_truncation(corners[i], N);
      },
      jobs);
  return pushforward(inD, [&plan](const Mat& X) { return plan.to_A(X); }, false);
}

Measure product_measure(const Mat& A, const PipelineOptions& opt) {
  require_even_square(A, "product_measure");
  if (!(opt.beta_tol > 0 && opt.beta_tol < 1)) fail(Errc::invalid_input, "beta_tol must lie in (0,1)");
  Measure cur = Measure::dirac(A);
  cur.cert = Certificate{};
  if (member(A, good_set(), opt.member_tol)) return cur;
  const int d = A.rows();
  if (opt.stage1) {
    for (int m = d; m >= 2; --m) {
      cur = diamond_compose(
          cur,
          [&](std::size_t, const Atom& a) {
            if (a.residual || rank(a.M) < m || member(a.M, good_set(), opt.member_tol)) return pass_through(a);
            StaircaseSpec s = stage1_spec(a.M, m);
            return build_truncation(s, depth_for(s, opt.beta_tol, opt.t_cover));
          },
          opt.jobs);
    }
  }
  cur = diamond_compose(
      cur,
      [&](std::size_t, const Atom& a) {
        if (a.residual || member(a.M, good_set(), opt.member_tol)) return pass_through(a);
        if (rank(a.M) > 1) fail(Errc::contract_violation, "stage 2 received an atom of rank > 1");
        return stage2_laminate(a.M);
      },
      opt.jobs);
  cur = diamond_compose(
      cur,
      [&](std::size_t, const Atom& a) {
        if (a.residual || member(a.M, good_set(), opt.member_tol)) return pass_through(a);
        return stage3_measure(stage3_spec(a.M), opt.beta_tol, opt.t_cover, 1);
      },
      opt.jobs);
  return cur;
}

PipelineReport pipeline_report(const Mat& A, const Measure& nu, const PipelineOptions& opt, double t0, double t1) {
  PipelineReport r;
  r.n = static_cast<int>(A.rows()) / 2;
  r.t0 = t0;
  r.t1 = t1;
  r.atoms = nu.atoms.size();
  for (const Atom& a : nu.atoms) {
    double w = a.w.value();
    if (a.residual) {
      r.residual_mass += w;
    } else if (member(a.M, good_set(), opt.member_tol)) {
      r.good_mass += w;
    } else {
      r.other_mass += w;
      r.support_ok = false;
    }
  }
  int stairs = (opt.stage1 ? static_cast<int>(A.rows()) - 1 : 0) + 1;
  r.residual_budget = stairs * opt.beta_tol;
  r.barycenter_error = norm(barycenter(nu) - A);
  double p = 2.0 * r.n;
  r.best_constant = fitted_weak_constant(nu, p, norm(A));
  TailFn tf(nu);
  auto grid = log_grid(t0, t1, 40);
  std::vector<double> y;
  for (double t : grid) y.push_back(tf(t));
  r.slope = loglog_slope(grid, y);
  double M = std::pow(std::max(r.best_constant, 1e-300), 1 / p);
  r.tails = verify_weak_tail(nu, p, M, norm(A), Side::upper, log_grid(1, 1e4, 60), 1e-12);
  return r;
}

StepBuilder pipeline_builder(const PipelineOptions& opt, double p, double growth) {
  return [opt, p, growth](const Mat& G, int) {
    Measure nu = product_measure(G, opt);
    BuilderOutput o;
    o.tree = LaminateTree::from_measure(nu, G);
    o.Mp = TailFn(nu).sup_tp_tail(p) / (1 + std::pow(norm(G), growth));
    return o;
  };
}

StepBuilder stage3_builder(const PipelineOptions& opt, double p, double growth) {
  return [opt, p, growth](const Mat& G, int) {
    double scale = 1 + norm(G);
    bool split = is_block_diagonal(G, 1e-9 * scale) || is_block_antidiagonal(G, 1e-9 * scale);
    Measure nu = split && !member(G, good_set(), opt.member_tol)
                     ? stage3_measure(stage3_spec(G), opt.beta_tol, opt.t_cover, opt.jobs)
                     : product_measure(G, opt);
    BuilderOutput o;
    o.tree = LaminateTree::from_measure(nu, G);
    o.Mp = TailFn(nu).sup_tp_tail(p) / (1 + std::pow(norm(G), growth));
    return o;
  };
}

PiecewiseAffineMap product_map(const Mat& A, const Domain& domain, const Vec& b, double delta, double alpha, int K,
                               double r, const PipelineOptions& opt, ReduceReport& report) {
  require_even_square(A, "product_map");
  double p = static_cast<double>(A.rows());
  GoodFn in_K = [tol = opt.member_tol](const Mat& X) { return member(X, good_set(), tol); };
  return reduce_exact(pipeline_builder(opt, p, p), domain, A, b, delta, alpha, K, p, r, in_K, report, 64, p);
}

PiecewiseAffineMap approximate_sequence(const Mat& A, const Domain& domain, const Vec& b, int j, double alpha,
                                        const PipelineOptions& opt, ApproxReport& rep) {
  require_even_square(A, "approximate_sequence");
  if (rank(A) != 1) fail(Errc::invalid_input, "approximate_sequence: needs rank(A) = 1");
  if (member(A, SetId::parse("L"), opt.member_tol)) fail(Errc::invalid_input, "approximate_sequence: A lies in L");
  if (j < 1) fail(Errc::invalid_input, "approximate_sequence: needs j >= 1");
  const int n = static_cast<int>(A.rows()) / 2;
  rep = ApproxReport{};
  rep.j = j;
  rep.s = 2.0 * n + j;
  rep.error_budget = std::ldexp(1.0, -j);
  PipelineOptions o = opt;
  o.stage1 = false;
  Measure nu = product_measure(A, o);
  LaminateTree tree = LaminateTree::from_measure(nu, A);
  Budget bud;
  bud.frac_loss = 0.05;
  bud.moment = rep.error_budget;
  bud.s = rep.s;
  bud.holder = rep.error_budget;
  bud.alpha = alpha;
  GoodFn in_K = [tol = opt.member_tol](const Mat& X) { return member(X, good_set(), tol); };
  PiecewiseAffineMap map = realize_tree(tree, domain, b, bud, in_K);
  GradientDistribution g = gradient_distribution(map);
  rep.error_moment = g.error_moment(rep.s, false);
  rep.inductive_volume = g.inductive * domain.volume();
  rep.residual_volume = g.residual_volume;
  for (const Atom& a : g.cells.atoms) {
    rep.dist_L1 += a.w.value() * dist_L1(a.M);
    rep.dist_L2 += a.w.value() * dist_L2(a.M);
  }
  rep.dist_floor = std::min(dist_L1(A), dist_L2(A));
  double p = 2.0 * n;
  TailFn tf(g.cells);
  rep.best_constant = tf.sup_tp_tail(p) / (1 + std::pow(norm(A), p));
  auto grid = log_grid(10, 1000, 40);
  std::vector<double> y;
  for (double t : grid) y.push_back(tf(t));
  rep.slope = loglog_slope(grid, y);
  rep.map = verify_map(map, alpha, 4000);
  rep.holder_bound = rep.map.holder_bound;
  rep.pass = rep.error_moment <= rep.error_budget && rep.holder_bound < rep.error_budget && rep.map.pass;
  return map;
}

}  // namespace lf
