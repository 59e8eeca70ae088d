#include <algorithm>
#include <cmath>
#include <functional>

#include "lf/error.hpp"
#include "lf/synth.hpp"

namespace lf {

LaminateTree LaminateTree::dirac(const Mat& A) {
  LaminateTree t;
  TreeNode n;
  n.G = A;
  t.nodes.push_back(n);
  return t;
}

LaminateTree LaminateTree::from_measure(const Measure& nu, const Mat& A, double tol) {
  LaminateTree t = dirac(A);
  std::vector<int> active = {0};
  auto close = [&](const Mat& x, const Mat& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && norm(x - y) <= tol * (1 + norm(y));
  };
  auto add = [&](const Mat& G, double w) {
    TreeNode n;
    n.G = G;
    n.w = w;
    t.nodes.push_back(n);
    return static_cast<int>(t.nodes.size()) - 1;
  };
  if (nu.cert) {
    const auto& steps = nu.cert->steps;
    for (std::size_t si = 0; si < steps.size(); ++si) {
      const SplitStep& st = steps[si];
      std::vector<int> cand;
      double total = 0;
      for (int id : active)
        if (close(t.nodes[id].G, st.target)) {
          cand.push_back(id);
          total += t.nodes[id].w;
        }
      if (cand.empty())
        fail(Errc::invalid_laminate, "step " + std::to_string(si + 1) + ": target not among current atoms");
      double m = st.mass ? st.mass->value() : total;
      if (m > total * (1 + 1e-9) + 1e-300)
        fail(Errc::invalid_laminate, "step " + std::to_string(si + 1) + ": split mass exceeds atom weight");
      double lam = st.lambda.value();
      // consume the split mass from one atom of exactly that weight, else newest atoms first
      std::vector<std::pair<int, double>> use;
      if (m < total * (1 - 1e-12)) {
        auto exact = std::find_if(cand.rbegin(), cand.rend(), [&](int id) {
          return std::abs(t.nodes[id].w - m) <= 1e-12 * m;
        });
        if (exact != cand.rend()) {
          use.push_back({*exact, 1.0});
        } else {
          double left = m;
          for (auto it = cand.rbegin(); it != cand.rend() && left > 1e-15 * m; ++it) {
            double w = t.nodes[*it].w;
            double f = std::min(1.0, left / w);
            use.push_back({*it, f});
            left -= f * w;
          }
        }
      } else {
        for (int id : cand) use.push_back({id, 1.0});
      }
      std::vector<int> next;
      for (int id : active)
        if (std::find_if(use.begin(), use.end(), [id](const auto& u) { return u.first == id; }) == use.end())
          next.push_back(id);
      for (auto [id, frac] : use) {
        double w = t.nodes[id].w;
        int target = id;
        if (frac < 1 - 1e-12) {
          int part = add(t.nodes[id].G, w * frac);
          int rest = add(t.nodes[id].G, w * (1 - frac));
          t.nodes[id].kind = TreeNode::Kind::mix;
          t.nodes[id].parts = {{frac, part}, {1 - frac, rest}};
          next.push_back(rest);
          target = part;
        }
        double wt = t.nodes[target].w;
        int l = add(st.left, wt * lam);
        int r = add(st.right, wt * (1 - lam));
        TreeNode& n = t.nodes[target];
        n.kind = TreeNode::Kind::split;
        n.lambda = lam;
        n.left = l;
        n.right = r;
        next.push_back(l);
        next.push_back(r);
      }
      active = std::move(next);
    }
  } else if (!(nu.atoms.size() == 1 && close(nu.atoms[0].M, A))) {
    fail(Errc::invalid_laminate, "measure has no splitting certificate");
  }
  for (int id : active)
    for (const Atom& a : nu.atoms)
      if (a.residual && close(a.M, t.nodes[id].G)) t.nodes[id].residual = true;
  return t;
}

int LaminateTree::depth() const {
  std::function<int(int)> rec = [&](int id) -> int {
    const TreeNode& n = nodes[id];
    if (n.kind == TreeNode::Kind::leaf) return 0;
    if (n.kind == TreeNode::Kind::split) return 1 + std::max(rec(n.left), rec(n.right));
    int d = 0;
    for (const auto& [f, c] : n.parts) d = std::max(d, rec(c));
    return 1 + d;
  };
  return nodes.empty() ? 0 : rec(root);
}

int LaminateTree::internal_count() const {
  int c = 0;
  for (const auto& n : nodes) c += n.kind != TreeNode::Kind::leaf;
  return c;
}

Measure LaminateTree::leaves() const {
  Measure m;
  std::function<void(int)> rec = [&](int id) {
    const TreeNode& n = nodes[id];
    if (n.kind == TreeNode::Kind::leaf) {
      m.atoms.push_back({Weight(n.w), n.G, n.residual});
      return;
    }
    if (n.kind == TreeNode::Kind::split) {
      rec(n.left);
      rec(n.right);
      return;
    }
    for (const auto& [f, c] : n.parts) rec(c);
  };
  rec(root);
  m.normalize();
  return m;
}

}  // namespace lf
