#include "lf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "lf/error.hpp"
#include "lf/staircase.hpp"

namespace lf {

namespace {

double phi(const Mat& X, double s) { return std::pow(1 + norm(X), s); }

Vec2 perp(const Vec2& v) { return {-v[1], v[0]}; }

double holder_from(double B, double L, double alpha) {
  if (B <= 0) return 0;
  return B + std::pow(L, alpha) * std::pow(2 * B, 1 - alpha);
}

long long ceil_ll(double x) {
  if (!(x < 9.2e18)) return static_cast<long long>(9.2e18);
  return static_cast<long long>(std::ceil(x));
}

struct RoofEval {
  bool ok;
  double tau, loss, mom, B, L, H;
  RectTiling t1, t2;
};

}  // namespace

// ---------------------------------------------------------------- realizer

CellFlag Realizer::leaf_flag(const TreeNode& n) const {
  if (n.residual) return CellFlag::inductive;
  return strict_ && in_K_ && !in_K_(n.G) ? CellFlag::error : CellFlag::good;
}

CellFlag Realizer::aux_flag(const Mat& G) const {
  return in_K_ && in_K_(G) ? CellFlag::good : CellFlag::error;
}

int Realizer::realize(const LaminateTree& tree, const Budget& budget, const Mat2& F) {
  if (tree.nodes.empty() || tree.nodes[tree.root].kind == TreeNode::Kind::leaf) return -1;
  if (tree.nodes[tree.root].G.cols() != 2) fail(Errc::unsupported, "maps are planar: gradients need 2 columns");
  if (!(budget.frac_loss > 0) || !(budget.moment > 0) || !(budget.holder > 0))
    fail(Errc::invalid_input, "realization budgets must be positive");
  int D = std::max(1, tree.depth());
  int nint = std::max(1, tree.internal_count());
  double l = budget.frac_loss / (2.0 * D);
  double focus = std::clamp(budget.focus, 0.0, 1.0);
  double e_abs = budget.moment * (1 - focus) / (2.0 * nint);
  double e_root = budget.moment * focus;
  return build(tree, tree.root, F, budget, l, e_abs, e_root);
}

int Realizer::build(const LaminateTree& t, int node, const Mat2& F, const Budget& b, double l, double e_abs,
                    double e_root) {
  const TreeNode& n = t.nodes[node];
  if (n.kind == TreeNode::Kind::leaf) return -1;
  if (n.kind == TreeNode::Kind::mix) return mix(t, node, F, b, l, e_abs, e_root);
  Mat Dm = t.nodes[n.right].G - t.nodes[n.left].G;
  Eigen::JacobiSVD<Mat> svd(Dm, Eigen::ComputeFullV);
  if (svd.singularValues()(0) <= 0) fail(Errc::invalid_split, "degenerate split in laminate tree");
  if (svd.singularValues().size() > 1 && svd.singularValues()(1) > 1e-9 * svd.singularValues()(0))
    fail(Errc::invalid_split, "split in laminate tree is not rank-one");
  Vec2 xi = svd.matrixV().col(0);
  Vec2 loc = F.transpose() * xi;
  const double snap = 1e-12;
  if (std::abs(loc[1]) <= snap) return roof(t, node, F, 0, loc[0] > 0 ? 1 : -1, b, l, e_abs, e_root);
  if (std::abs(loc[0]) <= snap) return roof(t, node, F, 1, loc[1] > 0 ? 1 : -1, b, l, e_abs, e_root);
  return rotate(t, node, F, xi, b, l, e_abs, e_root);
}

int Realizer::roof(const LaminateTree& t, int node, const Mat2& F, int axis, int sign, const Budget& b, double l,
                   double e_abs, double e_root) {
  const TreeNode& n = t.nodes[node];
  const TreeNode& nl = t.nodes[n.left];
  const TreeNode& nr = t.nodes[n.right];
  int c1 = build(t, n.left, F, b, l, e_abs, e_root);
  int c2 = build(t, n.right, F, b, l, e_abs, e_root);
  const Mat& G = n.G;
  const Mat& A1 = nl.G;
  const Mat& A2 = nr.G;
  Vec2 xi = static_cast<double>(sign) * F.col(axis);
  Vec2 nv = F.col(1 - axis);
  Vec eta = (A2 - A1) * xi;
  double l1 = n.lambda, l2 = 1 - n.lambda;
  double e2 = eta.squaredNorm();
  double Mx = std::max(norm(A1), norm(A2));
  double c = eta.dot(G * nv);
  double gap = std::max(Mx * Mx - G.squaredNorm(), l1 * l2 * e2 * 0.5);
  double rmax = (-std::abs(c) + std::sqrt(c * c + e2 * gap)) / e2;
  double r = std::min(0.5, 0.99 * rmax);
  Mat Gp = G + r * eta * nv.transpose();
  Mat Gm = G - r * eta * nv.transpose();
  double ww = std::max(n.w, 1e-300);
  double e = (e_abs + (node == t.root ? e_root : 0)) / ww;
  double s = b.s;
  bool in1 = c1 >= 0, in2 = c2 >= 0;
  CellFlag f1 = in1 ? aux_flag(A1) : leaf_flag(nl);
  CellFlag f2 = in2 ? aux_flag(A2) : leaf_flag(nr);
  CellFlag fp = aux_flag(Gp), fm = aux_flag(Gm);
  auto cost = [&](CellFlag f, const Mat& X) { return f == CellFlag::error ? phi(X, s) : 0.0; };
  double B1 = in1 ? map_.templates[c1].B : 0, B2 = in2 ? map_.templates[c2].B : 0;
  double L1 = in1 ? map_.templates[c1].L : 0, L2 = in2 ? map_.templates[c2].L : 0;
  double en = std::sqrt(e2);

  auto evaluate = [&](double N) {
    RoofEval ev{};
    double P = 1.0 / N;
    ev.tau = l1 * l2 * P / r;
    if (2 * ev.tau >= 1) {
      ev.ok = false;
      ev.loss = ev.mom = ev.H = 1e300;
      return ev;
    }
    double H = 1 - 2 * ev.tau;
    ev.t1 = RectTiling::make(l1 * P, H);
    ev.t2 = RectTiling::make(l2 * P, H);
    double cov1 = ev.t1.coverage(), cov2 = ev.t2.coverage();
    double loss1 = in1 ? 1 - H * cov1 : ev.tau, loss2 = in2 ? 1 - H * cov2 : ev.tau;
    ev.loss = std::max(loss1, loss2);
    ev.mom = ev.tau / 2 * (cost(fp, Gp) + cost(fm, Gm));
    if (in1) ev.mom += l1 * (ev.tau + H * (1 - cov1)) * cost(f1, A1);
    if (in2) ev.mom += l2 * (ev.tau + H * (1 - cov2)) * cost(f2, A2);
    double s1 = ev.t1.stages.empty() ? 0 : ev.t1.stages[0].side;
    double s2 = ev.t2.stages.empty() ? 0 : ev.t2.stages[0].side;
    ev.B = en * l1 * l2 * P + std::max(in1 ? s1 * B1 : 0.0, in2 ? s2 * B2 : 0.0);
    ev.L = std::max({l2 * en, l1 * en, r * en, in1 ? L1 + norm(A1 - G) : 0.0, in2 ? L2 + norm(A2 - G) : 0.0});
    ev.H = holder_from(ev.B, ev.L, b.alpha);
    ev.ok = ev.loss <= l && ev.mom <= e && ev.H <= b.holder;
    return ev;
  };

  double N = std::max(1.0, std::ceil(std::max(2.5 * l1 * l2 / r, l1 * l2 / (r * l))));
  RoofEval ev = evaluate(N);
  for (int it = 0; !ev.ok && it < 400; ++it) {
    double f = 1.05;
    if (ev.loss > l) f = std::max(f, 1.05 * ev.loss / l);
    if (ev.mom > e) f = std::max(f, 1.05 * ev.mom / e);
    if (ev.H > b.holder) f = std::max(f, 1.05 * std::pow(ev.H / b.holder, 1 / (1 - b.alpha)));
    f = std::min(f, 1e6);
    double next = std::max(N + 1, std::ceil(N * f));
    if (next > b.max_teeth) {
      if (N == b.max_teeth) break;
      next = b.max_teeth;
    }
    N = next;
    ev = evaluate(N);
  }

  Template T;
  T.kind = Template::Kind::roof;
  T.G = G;
  T.F = F;
  T.node = node;
  T.A1 = A1;
  T.A2 = A2;
  T.eta = eta;
  T.axis = axis;
  T.sign = sign;
  T.lam1 = l1;
  T.teeth = N;
  T.P = 1.0 / N;
  T.r = r;
  T.tau = ev.tau;
  T.tile1 = ev.t1;
  T.tile2 = ev.t2;
  double H = 1 - 2 * ev.tau;
  auto core = [&](const Mat& A, double lam, int child, CellFlag f, const RectTiling& tl) {
    TemplateClass k;
    k.G = A;
    k.flag = f;
    k.frac = lam * H;
    if (child >= 0) {
      k.child = child;
      k.cov = tl.coverage();
      k.scale = tl.stages.empty() ? 0 : tl.stages[0].side;
    }
    return k;
  };
  T.classes.push_back(core(A1, l1, c1, f1, ev.t1));
  T.classes.push_back(core(A2, l2, c2, f2, ev.t2));
  T.classes.push_back({A1, f1, l1 * ev.tau, -1, 0, 0});
  T.classes.push_back({A2, f2, l2 * ev.tau, -1, 0, 0});
  T.classes.push_back({Gp, fp, ev.tau / 2, -1, 0, 0});
  T.classes.push_back({Gm, fm, ev.tau / 2, -1, 0, 0});
  T.B = ev.B;
  T.L = ev.L;
  map_.templates.push_back(std::move(T));
  return static_cast<int>(map_.templates.size()) - 1;
}

int Realizer::rotate(const LaminateTree& t, int node, const Mat2& F, const Vec2& xi, const Budget& b, double l,
                     double e_abs, double e_root) {
  Mat2 Fp;
  Fp.col(0) = xi;
  Fp.col(1) = perp(xi);
  Mat2 Rrel = F.transpose() * Fp;
  int child = build(t, node, Fp, b, l, e_abs, e_root);
  const TreeNode& n = t.nodes[node];
  double e = e_abs / std::max(n.w, 1e-300);
  CellFlag f = aux_flag(n.G) == CellFlag::good ? CellFlag::good : CellFlag::residual;
  double cst = f == CellFlag::good ? 0 : phi(n.G, b.s);
  double Bc = map_.templates[child].B, Lc = map_.templates[child].L;
  long long ng = std::max<long long>(4, ceil_ll(8.0 / l));
  double cov = 0, H = 0;
  for (int it = 0; it < 200; ++it) {
    ng = std::min(ng, b.max_grid);
    cov = static_cast<double>(rotated_inside_count(Rrel, ng)) / (static_cast<double>(ng) * static_cast<double>(ng));
    H = holder_from(Bc / static_cast<double>(ng), Lc, b.alpha);
    double loss = 1 - cov, mom = loss * cst;
    double fct = 1.0;
    if (loss > l) fct = std::max(fct, 1.05 * loss / l);
    if (mom > e) fct = std::max(fct, 1.05 * mom / e);
    if (H > b.holder) fct = std::max(fct, 1.05 * std::pow(H / b.holder, 1 / (1 - b.alpha)));
    if (fct <= 1.0 || ng == b.max_grid) break;
    ng = std::max(ng + 1, ceil_ll(static_cast<double>(ng) * std::min(fct, 1e4)));
  }
  Template T;
  T.kind = Template::Kind::rotate;
  T.G = n.G;
  T.F = F;
  T.node = node;
  T.Rrel = Rrel;
  T.grid_n = ng;
  TemplateClass k;
  k.G = n.G;
  k.flag = f;
  k.frac = 1;
  k.child = child;
  k.cov = cov;
  k.scale = 1.0 / static_cast<double>(ng);
  T.classes.push_back(k);
  T.B = Bc / static_cast<double>(ng);
  T.L = Lc;
  map_.templates.push_back(std::move(T));
  return static_cast<int>(map_.templates.size()) - 1;
}

int Realizer::mix(const LaminateTree& t, int node, const Mat2& F, const Budget& b, double l, double e_abs,
                  double e_root) {
  const TreeNode& n = t.nodes[node];
  Template T;
  T.kind = Template::Kind::mix;
  T.G = n.G;
  T.F = F;
  T.node = node;
  double x = 0;
  for (const auto& [theta, c] : n.parts) {
    int child = build(t, c, F, b, l, e_abs, e_root);
    T.cuts.push_back(x);
    RectTiling tl = RectTiling::make(theta, 1.0);
    TemplateClass k;
    k.G = t.nodes[c].G;
    k.frac = theta;
    if (child >= 0) {
      k.child = child;
      k.cov = tl.coverage();
      k.scale = tl.stages.empty() ? 0 : tl.stages[0].side;
      k.flag = aux_flag(k.G);
      T.B = std::max(T.B, k.scale * map_.templates[child].B);
      T.L = std::max(T.L, map_.templates[child].L + norm(k.G - n.G));
    } else {
      k.flag = leaf_flag(t.nodes[c]);
    }
    T.strips.push_back(tl);
    T.classes.push_back(k);
    x += theta;
  }
  (void)e_root;
  map_.templates.push_back(std::move(T));
  return static_cast<int>(map_.templates.size()) - 1;
}

// ---------------------------------------------------------------- map

PiecewiseAffineMap affine_map(const Domain& domain, const Mat& A, const Vec& b) {
  if (!domain.box) fail(Errc::unsupported, "maps are built on box domains");
  if (A.cols() != 2) fail(Errc::unsupported, "maps are planar: A needs 2 columns");
  if (b.size() != A.rows()) fail(Errc::invalid_input, "b has wrong length");
  PiecewiseAffineMap m;
  m.domain = domain;
  m.A = A;
  m.b = b;
  Vec2 ext = domain.box->hi - domain.box->lo;
  m.top = RectTiling::make(ext[0], ext[1]);
  return m;
}

void attach_root(PiecewiseAffineMap& map, int root, const CoverPlan* plan) {
  map.root = root;
  if (plan) {
    map.top = plan->tiling;
    map.top_subdiv = plan->subdiv;
  }
}

bool patchable(const Template& t, int cls) {
  if (t.kind == Template::Kind::rotate || cls < 0 || cls >= static_cast<int>(t.classes.size())) return false;
  return t.classes[cls].child < 0;
}

Polygon class_triangle(const Template& t, int cls) {
  double P = t.P, l2 = 1 - t.lam1, tau = t.tau;
  switch (cls) {
    case 2: return {{l2 * P, tau}, {P, 0}, {P, tau}};
    case 3: return {{0, 0}, {l2 * P, tau}, {0, tau}};
    case 4:
    case 5: return {{0, 0}, {P, 0}, {l2 * P, tau}};
    default: fail(Errc::internal, "class has no triangle geometry");
  }
}

void apply_patch(PiecewiseAffineMap& map, int t, int cls, int child, double h) {
  Template& T = map.templates.at(t);
  if (!patchable(T, cls)) fail(Errc::invalid_input, "class is not patchable");
  if (T.kind == Template::Kind::mix || cls <= 1) {
    const RectTiling& tl = T.kind == Template::Kind::mix ? T.strips[cls] : (cls == 0 ? T.tile1 : T.tile2);
    TemplateClass& k = T.classes[cls];
    k.child = child;
    k.cov = tl.coverage();
    k.scale = tl.stages.empty() ? 0 : tl.stages[0].side;
    return;
  }
  Polygon tri = class_triangle(T, cls);
  double area = std::abs(polygon_area(tri));
  long long cnt = triangle_grid_count(tri, h);
  TemplateClass& k = T.classes[cls];
  k.child = child;
  k.cov = std::min(1.0, static_cast<double>(cnt) * h * h / area);
  k.scale = h;
}

namespace {
struct Step {
  bool leaf;
  int cls;
  Vec2 corner;
  double side;
  int child;
};

// class of z in template T and the child square, if any
Step locate(const Template& T, const Vec2& z, double& f_out) {
  Step st{true, 0, Vec2::Zero(), 0, -1};
  f_out = 0;
  if (T.kind == Template::Kind::roof) {
    int ax = T.axis;
    double t = T.sign > 0 ? z[ax] : 1 - z[ax];
    double v = z[1 - ax];
    t = std::clamp(t, 0.0, 1.0);
    v = std::clamp(v, 0.0, 1.0);
    double P = T.P;
    double i = std::clamp(std::floor(t / P), 0.0, T.teeth - 1);
    double a = std::clamp(t - i * P, 0.0, P);
    double l1 = T.lam1, l2 = 1 - T.lam1;
    bool rising = a < l2 * P;
    double hh = rising ? l1 * a : l2 * (P - a);
    double g = T.r * std::min(v, 1 - v);
    f_out = std::min(hh, g);
    int cls;
    if (g < hh)
      cls = v < 0.5 ? 4 : 5;
    else if (v >= T.tau && v <= 1 - T.tau)
      cls = rising ? 1 : 0;
    else
      cls = rising ? 3 : 2;
    st.cls = cls;
    const TemplateClass& k = T.classes[cls];
    if (k.child < 0) return st;
    double tlo, vlo, side;
    if (cls <= 1) {
      double t0 = i * P + (rising ? 0 : l2 * P);
      const RectTiling& tl = rising ? T.tile2 : T.tile1;
      double x0, y0;
      if (!tl.locate(t - t0, v - T.tau, x0, y0, side)) return st;
      tlo = t0 + x0;
      vlo = T.tau + y0;
    } else {
      bool low = v < 0.5;
      double vl = low ? v : 1 - v;
      double h = k.scale;
      auto ii = static_cast<long long>(std::floor(a / h)), jj = static_cast<long long>(std::floor(vl / h));
      if (!triangle_cell_inside(class_triangle(T, cls), h, ii, jj)) return st;
      side = h;
      tlo = i * P + static_cast<double>(ii) * h;
      double vl0 = static_cast<double>(jj) * h;
      vlo = low ? vl0 : 1 - vl0 - h;
    }
    st.corner[ax] = T.sign > 0 ? tlo : 1 - tlo - side;
    st.corner[1 - ax] = vlo;
    st.side = side;
    st.child = k.child;
    st.leaf = false;
    return st;
  }
  if (T.kind == Template::Kind::rotate) {
    double n = static_cast<double>(T.grid_n);
    Vec2 w = T.Rrel.transpose() * z * n;
    auto i = static_cast<long long>(std::floor(w[0])), j = static_cast<long long>(std::floor(w[1]));
    if (!rotated_cell_inside(T.Rrel, T.grid_n, i, j)) return st;
    // child coordinates are w - (i, j); encode by corner in w units
    st.corner = Vec2(static_cast<double>(i), static_cast<double>(j));
    st.side = 1.0 / n;
    st.child = T.classes[0].child;
    st.leaf = false;
    return st;
  }
  // mix: strips along the first axis
  std::size_t k = 0;
  while (k + 1 < T.cuts.size() && z[0] >= T.cuts[k + 1]) ++k;
  st.cls = static_cast<int>(k);
  const TemplateClass& kc = T.classes[k];
  if (kc.child < 0) return st;
  double x0, y0, side;
  if (!T.strips[k].locate(z[0] - T.cuts[k], z[1], x0, y0, side)) return st;
  st.corner = Vec2(T.cuts[k] + x0, y0);
  st.side = side;
  st.child = kc.child;
  st.leaf = false;
  return st;
}
}  // namespace

PiecewiseAffineMap::Eval PiecewiseAffineMap::eval(const Vec2& x) const {
  Eval out;
  Vec xv(2);
  xv << x[0], x[1];
  out.u = A * xv + b;
  out.grad = A;
  out.depth = 0;
  out.flag = base_flag;
  if (root < 0) return out;
  Vec2 a = x - domain.box->lo;
  double x0, y0, side;
  if (!top.locate(a[0], a[1], x0, y0, side)) {
    out.flag = CellFlag::residual;
    return out;
  }
  if (top_subdiv > 1) {
    double sub = side / static_cast<double>(top_subdiv);
    double i = std::clamp(std::floor((a[0] - x0) / sub), 0.0, static_cast<double>(top_subdiv - 1));
    double j = std::clamp(std::floor((a[1] - y0) / sub), 0.0, static_cast<double>(top_subdiv - 1));
    x0 += i * sub;
    y0 += j * sub;
    side = sub;
  }
  Vec2 z = (a - Vec2(x0, y0)) / side;
  double scale = side;
  int t = root;
  Vec dev = Vec::Zero(A.rows());
  while (true) {
    const Template& T = templates[t];
    double f;
    Step st = locate(T, z, f);
    if (T.kind == Template::Kind::roof) dev += scale * f * T.eta;
    ++out.depth;
    if (st.leaf) {
      const TemplateClass& k = T.classes[st.cls];
      out.grad = k.G;
      out.flag = k.flag;
      break;
    }
    if (T.kind == Template::Kind::rotate) {
      double n = static_cast<double>(T.grid_n);
      z = T.Rrel.transpose() * z * n - st.corner;
    } else {
      z = (z - st.corner) / st.side;
    }
    scale *= st.side;
    t = st.child;
  }
  out.u += dev;
  return out;
}

std::vector<int> PiecewiseAffineMap::topo_order() const {
  std::vector<int> order;
  if (root < 0) return order;
  std::vector<char> seen(templates.size(), 0);
  std::vector<std::pair<int, std::size_t>> stack = {{root, 0}};
  seen[root] = 1;
  while (!stack.empty()) {
    auto& [t, k] = stack.back();
    const auto& cls = templates[t].classes;
    if (k < cls.size()) {
      int c = cls[k++].child;
      if (c >= 0 && !seen[c]) {
        seen[c] = 1;
        stack.push_back({c, 0});
      }
      continue;
    }
    order.push_back(t);
    stack.pop_back();
  }
  std::reverse(order.begin(), order.end());
  return order;
}

std::vector<double> PiecewiseAffineMap::template_volumes() const {
  std::vector<double> V(templates.size(), 0.0);
  if (root < 0) return V;
  double cover = top.coverage();
  V[root] = cover;
  for (int t : topo_order())
    for (const auto& k : templates[t].classes)
      if (k.child >= 0) V[k.child] += V[t] * k.frac * k.cov;
  return V;
}

void PiecewiseAffineMap::refresh_bounds() {
  auto order = topo_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Template& T = templates[*it];
    double B = T.kind == Template::Kind::roof ? T.eta.norm() * T.lam1 * (1 - T.lam1) * T.P : 0.0;
    double L = 0;
    double Bc = 0;
    for (const auto& k : T.classes) {
      if (k.cov < 1) L = std::max(L, norm(k.G - T.G));
      if (k.child >= 0 && k.cov > 0) {
        const Template& C = templates[k.child];
        Bc = std::max(Bc, k.scale * C.B);
        L = std::max(L, C.L + norm(C.G - T.G));
      }
    }
    T.B = B + Bc;
    T.L = L;
  }
}

double PiecewiseAffineMap::holder_bound(double alpha) {
  if (root < 0) return 0;
  refresh_bounds();
  double side = top.stages.empty() ? 0 : top.stages[0].side / static_cast<double>(top_subdiv);
  const Template& R = templates[root];
  double global = holder_from(side * R.B, R.L + norm(R.G - A), alpha);
  // children vanish on the boundary of their squares, so the seminorm of a sum over
  // disjoint squares is at most 2^(1-alpha) times the largest one
  const double join = std::pow(2.0, 1 - alpha);
  auto order = topo_order();
  std::vector<double> S(templates.size(), 0.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Template& T = templates[*it];
    double own_B = T.kind == Template::Kind::roof ? T.eta.norm() * T.lam1 * (1 - T.lam1) * T.P : 0.0;
    double own_L = 0, kids = 0;
    for (const auto& k : T.classes) {
      if (k.frac > 0) own_L = std::max(own_L, norm(k.G - T.G));
      if (k.child >= 0 && k.cov > 0) kids = std::max(kids, std::pow(k.scale, 1 - alpha) * S[k.child]);
    }
    double own = own_B > 0 ? std::pow(own_L, alpha) * std::pow(2 * own_B, 1 - alpha) : 0.0;
    S[*it] = own + join * kids;
  }
  double nested = side * R.B + join * std::pow(side, 1 - alpha) * S[root];
  return std::min(global, nested);
}

double PiecewiseAffineMap::lipschitz_bound() const {
  double L = norm(A);
  if (root < 0) return L;
  for (int t : topo_order())
    for (const auto& k : templates[t].classes)
      if (k.cov < 1 && k.frac > 0) L = std::max(L, norm(k.G));
  return L;
}

GradientDistribution gradient_distribution(const PiecewiseAffineMap& map) {
  GradientDistribution d;
  double vol = map.domain.volume();
  auto add = [&](const Mat& G, CellFlag f, double w) {
    if (w <= 0) return;
    bool res = f == CellFlag::inductive;
    d.cells.atoms.push_back({Weight(w), G, res});
    d.by_flag[static_cast<int>(f)].atoms.push_back({Weight(w), G, res});
    switch (f) {
      case CellFlag::good: d.good += w; break;
      case CellFlag::error: d.error += w; break;
      case CellFlag::inductive: d.inductive += w; break;
      case CellFlag::residual: d.residual += w; break;
    }
  };
  if (map.root < 0) {
    add(map.A, map.base_flag, 1.0);
  } else {
    auto V = map.template_volumes();
    add(map.A, CellFlag::residual, 1 - map.top.coverage());
    for (int t : map.topo_order())
      for (const auto& k : map.templates[t].classes) add(k.G, k.flag, V[t] * k.frac * (1 - k.cov));
  }
  d.cells.normalize();
  for (auto& m : d.by_flag) m.normalize();
  d.residual_volume = d.residual * vol;
  return d;
}

double GradientDistribution::error_moment(double s, bool plus) const {
  double m = 0;
  for (int f : {1, 3})
    for (const auto& a : by_flag[f].atoms) {
      double x = norm(a.M);
      m += a.w.value() * (plus ? std::pow(1 + x, s) : 1 + std::pow(x, s));
    }
  return m;
}

// ---------------------------------------------------------------- verification

double halton(unsigned long long i, int base) {
  double f = 1, r = 0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % static_cast<unsigned long long>(base));
    i /= static_cast<unsigned long long>(base);
  }
  return r;
}

MapReport verify_map(PiecewiseAffineMap& map, double alpha, int sample_budget, double tol) {
  MapReport rep;
  const Box& bx = *map.domain.box;
  Vec2 ext = bx.hi - bx.lo;
  double diam = ext.norm();
  auto affine = [&](const Vec2& x) {
    Vec xv(2);
    xv << x[0], x[1];
    return Vec(map.A * xv + map.b);
  };
  double scaleu = 1 + norm(map.A) * diam + map.b.norm();
  // boundary: points along the perimeter
  double per = 2 * (ext[0] + ext[1]);
  for (int i = 0; i < sample_budget; ++i) {
    double s = halton(static_cast<unsigned long long>(i) + 1, 2) * per;
    Vec2 x;
    if (s < ext[0]) x = bx.lo + Vec2(s, 0);
    else if (s < ext[0] + ext[1]) x = bx.lo + Vec2(ext[0], s - ext[0]);
    else if (s < 2 * ext[0] + ext[1]) x = bx.lo + Vec2(ext[0] - (s - ext[0] - ext[1]), ext[1]);
    else x = bx.lo + Vec2(0, ext[1] - (s - 2 * ext[0] - ext[1]));
    rep.boundary_residual = std::max(rep.boundary_residual, (map.eval(x).u - affine(x)).norm());
  }
  rep.boundary_samples = sample_budget;
  // Hoelder quotient, stratified over dyadic scales
  const int scales = 20;
  int per_scale = std::max(1, sample_budget / scales);
  double q = 0;
  for (int k = 1; k <= scales; ++k) {
    double d = diam * std::ldexp(1.0, -k);
    for (int i = 0; i < per_scale; ++i) {
      unsigned long long idx = static_cast<unsigned long long>(k) * 100003ULL + static_cast<unsigned long long>(i) + 1;
      Vec2 x = bx.lo + Vec2(halton(idx, 2) * ext[0], halton(idx, 3) * ext[1]);
      double th = 2 * M_PI * halton(idx, 5);
      Vec2 dir(std::cos(th), std::sin(th));
      Vec2 y = x + d * dir;
      if (!map.domain.contains(y)) y = x - d * dir;
      y = y.cwiseMax(bx.lo).cwiseMin(bx.hi);
      double dist = (x - y).norm();
      if (dist <= 0) continue;
      Vec dx = map.eval(x).u - affine(x), dy = map.eval(y).u - affine(y);
      rep.sup_deviation = std::max({rep.sup_deviation, dx.norm(), dy.norm()});
      q = std::max(q, (dx - dy).norm() / std::pow(dist, alpha));
      ++rep.pairs;
    }
  }
  rep.holder_estimate = rep.sup_deviation + q;
  // continuity across pieces: symmetric differences against the Lipschitz bound
  rep.lipschitz_bound = map.lipschitz_bound();
  double h = 1e-12 * diam;
  for (int i = 0; i < sample_budget / 2; ++i) {
    unsigned long long idx = static_cast<unsigned long long>(i) + 7;
    Vec2 x = bx.lo + Vec2(halton(idx, 7) * ext[0], halton(idx, 11) * ext[1]);
    for (int axis = 0; axis < 2; ++axis) {
      Vec2 e = Vec2::Zero();
      e[axis] = h;
      Vec2 xp = (x + e).cwiseMin(bx.hi), xm = (x - e).cwiseMax(bx.lo);
      double jump = (map.eval(xp).u - map.eval(xm).u).norm();
      double allowed = (xp - xm).norm() * rep.lipschitz_bound + 64 * 2.2e-16 * scaleu;
      rep.continuity_residual = std::max(rep.continuity_residual, jump - allowed);
      ++rep.facet_samples;
    }
  }
  rep.continuity_residual = std::max(0.0, rep.continuity_residual);
  rep.holder_bound = map.holder_bound(alpha);
  rep.pass = rep.boundary_residual <= tol * scaleu && rep.continuity_residual <= tol * scaleu;
  return rep;
}

CoverPlan rescale_and_cover(const Box& box, double alpha, double eps) {
  if (!(eps > 0) || !(alpha >= 0 && alpha < 1)) fail(Errc::invalid_input, "cover needs eps > 0, alpha in [0,1)");
  CoverPlan p;
  Vec2 ext = box.hi - box.lo;
  p.tiling = RectTiling::make(ext[0], ext[1]);
  double smax = std::pow(eps, 1 / (1 - alpha));
  double big = p.tiling.stages.empty() ? 0 : p.tiling.stages[0].side;
  p.subdiv = std::max<long long>(1, ceil_ll(big / smax));
  p.max_side = big / static_cast<double>(p.subdiv);
  p.holder_factor = 2 * std::pow(p.max_side, 1 - alpha);
  return p;
}

// ---------------------------------------------------------------- operations

PiecewiseAffineMap realize_tree(const LaminateTree& tree, const Domain& domain, const Vec& b, const Budget& budget,
                                GoodFn in_K) {
  const Mat& A = tree.nodes[tree.root].G;
  PiecewiseAffineMap map = affine_map(domain, A, b);
  Vec2 ext = domain.box->hi - domain.box->lo;
  Budget bb = budget;
  // boxes larger than the unit square scale the deviation up
  double big = std::max(1.0, std::max(ext[0], ext[1]));
  bb.holder = budget.holder / big;
  Realizer R(map, in_K);
  int root = R.realize(tree, bb);
  attach_root(map, root);
  if (root < 0) {
    const TreeNode& n = tree.nodes[tree.root];
    map.base_flag = n.residual ? CellFlag::inductive : (in_K && !in_K(A) ? CellFlag::error : CellFlag::good);
  }
  return map;
}

PiecewiseAffineMap roof(const Mat& A, const Vec& b, const Mat& A1, const Mat& A2, double lam1, const Domain& domain,
                        double eps) {
  if (!(eps > 0)) fail(Errc::invalid_input, "roof needs eps > 0");
  if (!(lam1 > 0 && lam1 < 1)) fail(Errc::invalid_input, "roof needs lambda1 in (0,1)");
  if (A1.rows() != A2.rows() || A1.cols() != A2.cols() || A.rows() != A1.rows() || A.cols() != A1.cols())
    fail(Errc::invalid_input, "roof matrices must share a shape");
  if (rank(A1 - A2) != 1) fail(Errc::invalid_input, "roof needs rank(A1 - A2) = 1");
  if (norm(A - (lam1 * A1 + (1 - lam1) * A2)) > 1e-10 * (1 + norm(A)))
    fail(Errc::invalid_input, "roof needs A = lambda1 A1 + lambda2 A2");
  Measure nu;
  nu.atoms = {{Weight(lam1), A1, false}, {Weight(1 - lam1), A2, false}};
  Certificate c;
  c.steps.push_back({A, A1, A2, Weight(lam1), std::nullopt});
  nu.cert = c;
  LaminateTree tree = LaminateTree::from_measure(nu, A);
  Budget bud;
  bud.frac_loss = eps;
  bud.moment = 1e300;
  bud.holder = 1e300;
  return realize_tree(tree, domain, b, bud);
}

PiecewiseAffineMap realize_finite_laminate(const Measure& nu, const Domain& domain, const Mat& A, const Vec& b,
                                           double eps, double alpha, double delta, double s) {
  if (!(eps > 0 && eps < 1)) fail(Errc::invalid_input, "eps must lie in (0,1)");
  if (!(delta > 0)) fail(Errc::invalid_input, "delta must be positive");
  if (nu.cert) {
    auto rep = verify_laminate(nu, *nu.cert);
    if (!rep.pass) fail(Errc::invalid_laminate, rep.message);
  }
  Mat bar = barycenter(nu, true);
  double mass = nu.mass().value();
  if (norm(bar / mass - A) > 1e-9 * (1 + norm(A))) fail(Errc::invalid_laminate, "barycenter differs from A");
  LaminateTree tree = LaminateTree::from_measure(nu, A);
  Budget bud;
  bud.frac_loss = eps;
  bud.moment = 1e300;
  bud.s = s;
  bud.holder = delta / 2;
  bud.alpha = alpha;
  return realize_tree(tree, domain, b, bud);
}

StaircaseRealization realize_staircase(const StaircaseSpec& spec, int N, const Domain& domain, const Vec& b,
                                       double eta, double alpha, double s) {
  if (N < 1) fail(Errc::invalid_input, "N must be at least 1");
  if (!(eta > 0 && eta < 1)) fail(Errc::invalid_input, "eta must lie in (0,1)");
  StaircaseRealization out;
  out.nuN = build_truncation(spec, N);
  out.c_N = 1;
  for (int j = 1; j <= N; ++j) out.c_N *= 1 + std::ldexp(eta, -j);
  LaminateTree tree = LaminateTree::from_measure(out.nuN, spec.A0());
  Budget bud;
  bud.frac_loss = 1 - 1 / out.c_N;
  bud.moment = eta * (1 - std::ldexp(1.0, -N));
  bud.s = s;
  bud.holder = eta;
  bud.alpha = alpha;
  out.map = realize_tree(tree, domain, b, bud);
  return out;
}

}  // namespace lf
