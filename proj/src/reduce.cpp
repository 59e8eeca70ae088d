#include <algorithm>
#include <cmath>
#include <map>

#include "lf/error.hpp"
#include "lf/synth.hpp"

namespace lf {

namespace {

std::vector<double> key_of(const Mat& G, const Mat2& F, int round) {
  std::vector<double> k(G.data(), G.data() + G.size());
  k.insert(k.end(), F.data(), F.data() + 4);
  k.push_back(round);
  return k;
}

struct Candidate {
  double contribution;
  int t, cls;
};

// error pieces that a patch could refine, largest r-moment first
std::vector<Candidate> candidates(const PiecewiseAffineMap& map, double r) {
  std::vector<Candidate> out;
  auto V = map.template_volumes();
  for (int t : map.topo_order()) {
    const Template& T = map.templates[t];
    for (int c = 0; c < static_cast<int>(T.classes.size()); ++c) {
      const TemplateClass& k = T.classes[c];
      if (k.flag != CellFlag::error || !patchable(T, c)) continue;
      double m = V[t] * k.frac;
      if (m <= 0) continue;
      out.push_back({m * (1 + std::pow(norm(k.G), r)), t, c});
    }
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.contribution != b.contribution) return a.contribution > b.contribution;
    return std::tie(a.t, a.cls) < std::tie(b.t, b.cls);
  });
  return out;
}

// grid side for a triangle patch leaving at most `loss` of the triangle unrefined
double patch_side(const Polygon& tri, double loss) {
  double area = std::abs(polygon_area(tri));
  double w = 0, h = 0;
  for (const auto& v : tri) {
    w = std::max(w, v[0]);
    h = std::max(h, v[1]);
  }
  double base = std::min(w, h);
  double side = base / 8;
  for (int it = 0; it < 22; ++it) {
    double cov = static_cast<double>(triangle_grid_count(tri, side)) * side * side / area;
    if (1 - cov <= loss) break;
    side /= 2;
  }
  return side;
}

}  // namespace

PiecewiseAffineMap reduce_exact(const StepBuilder& builder, const Domain& domain, const Mat& A, const Vec& b,
                                double delta, double alpha, int K, double p, double r, const GoodFn& in_K,
                                ReduceReport& report, int max_patches_per_round, double growth) {
  if (K < 1) fail(Errc::invalid_input, "reduce_exact needs K >= 1");
  if (!(delta > 0)) fail(Errc::invalid_input, "delta must be positive");
  if (!(alpha >= 0 && alpha < 1)) fail(Errc::invalid_input, "alpha must lie in [0,1)");
  if (!(p > 0) || !(r > 0)) fail(Errc::invalid_input, "p and r must be positive");
  if (!in_K) fail(Errc::invalid_input, "reduce_exact needs a membership test");
  report = ReduceReport{};
  PiecewiseAffineMap map = affine_map(domain, A, b);
  Realizer R(map, in_K);
  R.set_strict(true);
  double normA = norm(A);
  if (growth < 0) growth = r;

  std::map<std::vector<double>, BuilderOutput> outputs;
  auto build = [&](const Mat& G, int round) -> const BuilderOutput& {
    auto key = key_of(G, Mat2::Identity(), round);
    auto it = outputs.find(key);
    if (it != outputs.end()) return it->second;
    BuilderOutput o = builder(G, round);
    std::string where = "round " + std::to_string(round) + ": ";
    if (o.tree.nodes.empty()) fail(Errc::contract_violation, where + "builder returned an empty tree");
    const Mat& root = o.tree.nodes[o.tree.root].G;
    if (root.rows() != G.rows() || root.cols() != G.cols() || norm(root - G) > 1e-9 * (1 + norm(G)))
      fail(Errc::contract_violation, where + "builder tree does not start at the seed");
    if (!(o.Mp >= 0) || !std::isfinite(o.Mp)) fail(Errc::contract_violation, where + "builder constant is not finite");
    report.Mp = std::max(report.Mp, o.Mp);
    return outputs.emplace(key, std::move(o)).first->second;
  };
  auto budget = [&](int k, double moment) {
    Budget bb;
    bb.frac_loss = 0.02;
    bb.moment = moment;
    bb.s = r;
    bb.alpha = alpha;
    bb.holder = delta * std::ldexp(1.0, -k - 2);
    // keep the error of deeper nodes below the final target
    bb.focus = std::max(0.0, 1 - std::ldexp(1.0, -(K + 1 - k)));
    return bb;
  };
  auto record = [&](int k, int patches) {
    GradientDistribution d = gradient_distribution(map);
    RoundReport rr;
    rr.round = k;
    rr.error_moment = d.error_moment(r, false);
    rr.budget = std::ldexp(1.0, -k);
    rr.tail_constant = TailFn(d.cells).sup_tp_tail(p) / (1 + std::pow(normA, growth));
    rr.tail_bound = (2 - std::ldexp(1.0, -k)) * report.Mp;
    rr.patches = patches;
    rr.holder_bound = map.holder_bound(alpha);
    rr.inductive_volume = d.inductive;
    rr.pass = rr.error_moment <= rr.budget && rr.tail_constant <= rr.tail_bound * (1 + 1e-12) &&
              rr.holder_bound < delta;
    report.pass = report.pass && rr.pass;
    report.rounds.push_back(rr);
  };

  if (in_K(A)) {
    report.Mp = std::pow(normA, p) / (1 + std::pow(normA, growth));
    for (int k = 1; k <= K; ++k) record(k, 0);
    return map;
  }

  // round 1: the builder's own output
  const BuilderOutput& first = build(A, 1);
  int root = R.realize(first.tree, budget(1, 0.5));
  if (root < 0) {
    map.base_flag = R.leaf_flag(first.tree.nodes[first.tree.root]);
  } else {
    attach_root(map, root);
  }
  record(1, 0);

  std::map<std::vector<double>, int> children;
  for (int k = 2; k <= K; ++k) {
    double target = std::ldexp(1.0, -k);
    int patches = 0;
    while (patches < max_patches_per_round) {
      double current = gradient_distribution(map).error_moment(r, false);
      if (current <= target) break;
      auto cand = candidates(map, r);
      if (cand.empty()) break;
      const Candidate c = cand.front();
      Mat G = map.templates[c.t].classes[c.cls].G;
      Mat2 F = map.templates[c.t].F;
      auto key = key_of(G, F, k);
      int child;
      auto it = children.find(key);
      if (it != children.end()) {
        child = it->second;
      } else {
        const BuilderOutput& o = build(G, k);
        child = R.realize(o.tree, budget(k, std::ldexp(1.0, -k - 2)), F);
        if (child < 0) fail(Errc::contract_violation, "round " + std::to_string(k) + ": builder left an error seed as is");
        children.emplace(key, child);
      }
      const Template& T = map.templates[c.t];
      double h = 0;
      if (T.kind == Template::Kind::roof && c.cls >= 2) {
        double loss = std::ldexp(1.0, -k - 2) / (1 + std::pow(norm(G), r));
        h = patch_side(class_triangle(T, c.cls), loss);
      }
      apply_patch(map, c.t, c.cls, child, h);
      ++patches;
    }
    record(k, patches);
  }
  return map;
}

}  // namespace lf
