#pragma once
#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lf/matcore.hpp"
#include "lf/measure.hpp"

namespace lf {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

struct Box {
  Vec2 lo{0, 0}, hi{1, 1};
  double volume() const { return (hi - lo).prod(); }
};

/// Box, or a bounded polytope {x : n_i . x <= c_i}.
struct Domain {
  std::optional<Box> box;
  std::vector<std::pair<Vec2, double>> halfspaces;
  static Domain make_box(Vec2 lo, Vec2 hi);
  /// "box:x0,y0,x1,y1" or "unit".
  static Domain parse(const std::string& s);
  double volume() const;
  bool contains(const Vec2& x, double tol = 0) const;
  std::string str() const;
};

/// Convex polygon helpers (counter-clockwise vertices).
using Polygon = std::vector<Vec2>;
double polygon_area(const Polygon& p);
Polygon clip_halfspace(const Polygon& p, const Vec2& n, double c);

/// Greedy square tiling of a W x H rectangle in Euclid order.
struct RectTiling {
  struct Stage {
    bool vertical;  // squares stacked along the second axis
    double side;
    double count;
    double x0, y0;
  };
  double W = 0, H = 0;
  std::vector<Stage> stages;
  double covered = 0;  // area
  static RectTiling make(double W, double H, int max_stages = 48);
  /// Square containing (a, c): lower corner and side. False on the leftover.
  bool locate(double a, double c, double& x0, double& y0, double& side) const;
  double coverage() const { return W * H > 0 ? covered / (W * H) : 0; }
};

enum class CellFlag { good, error, inductive, residual };
const char* flag_name(CellFlag f);
CellFlag parse_flag(const std::string& s);

/// Occurrence tree of a finite laminate: binary splits, proportional partitions, leaves.
struct TreeNode {
  enum class Kind { leaf, split, mix };
  Kind kind = Kind::leaf;
  Mat G;
  double w = 1;  // nominal volume fraction
  double lambda = 0;
  int left = -1, right = -1;                 // split: G = lambda left + (1 - lambda) right
  std::vector<std::pair<double, int>> parts;  // mix: fractions summing to 1
  bool residual = false;                      // leaf is a staircase remainder
};

struct LaminateTree {
  std::vector<TreeNode> nodes;
  int root = 0;
  static LaminateTree dirac(const Mat& A);
  /// Follows nu's certificate from delta_A; leaves take the residual flag of matching atoms.
  static LaminateTree from_measure(const Measure& nu, const Mat& A, double tol = 1e-9);
  int depth() const;
  int internal_count() const;
  /// Leaves as a (merged) measure of nominal weights.
  Measure leaves() const;
};

/// One class of a template: region of fraction frac with affine gradient G, part of which
/// (fraction cov of the region) is refined by a child template.
struct TemplateClass {
  Mat G;
  CellFlag flag = CellFlag::error;
  double frac = 0;
  int child = -1;
  double cov = 0;
  double scale = 0;  // side of the largest child square, template units
};

struct Template {
  enum class Kind { roof, rotate, mix };
  Kind kind = Kind::roof;
  Mat G;
  Mat2 F = Mat2::Identity();  // frame: columns are the local axes
  int node = -1;
  // roof
  Mat A1, A2;
  Vec eta;
  int axis = 0, sign = 1;
  double lam1 = 0.5, P = 1, r = 0.5, tau = 0;
  double teeth = 1;  // may exceed 2^53; tooth lookup is then approximate
  RectTiling tile1, tile2;  // core rectangles of A1 and A2
  // rotate
  Mat2 Rrel = Mat2::Identity();
  long long grid_n = 1;
  // mix
  std::vector<double> cuts;  // strip starts along the first axis
  std::vector<RectTiling> strips;
  std::vector<TemplateClass> classes;
  // bounds for the deviation u - l_G in template units
  double B = 0, L = 0;
};

/// Procedural piecewise-affine map on a box: affine boundary data refined by a template DAG.
struct PiecewiseAffineMap {
  Domain domain;
  Mat A;
  Vec b;
  std::vector<Template> templates;
  int root = -1;     // -1: the map is affine
  RectTiling top;    // squares of the box carrying the root template
  long long top_subdiv = 1;
  CellFlag base_flag = CellFlag::good;  // flag of the affine map when root < 0

  int rows() const { return static_cast<int>(A.rows()); }
  struct Eval {
    Vec u;
    Mat grad;
    CellFlag flag;
    int depth;
  };
  Eval eval(const Vec2& x) const;
  /// Templates ordered parents first.
  std::vector<int> topo_order() const;
  /// Global volume fraction of each template.
  std::vector<double> template_volumes() const;
  /// Recomputes deviation bounds B, L bottom-up.
  void refresh_bounds();
  /// Upper bound of ||u - l_{A,b}||_{C^alpha} from the stored deviation bounds.
  double holder_bound(double alpha);
  double lipschitz_bound() const;
};

struct GradientDistribution {
  Measure cells;  // every affine piece, including residual, merged, weights are volume fractions
  double good = 0, error = 0, inductive = 0, residual = 0;
  Measure by_flag[4];
  /// Integral over error and residual pieces of (1+|X|)^s (plus) or 1+|X|^s, per unit volume.
  double error_moment(double s, bool plus = true) const;
  double residual_volume = 0;  // absolute
};
GradientDistribution gradient_distribution(const PiecewiseAffineMap& map);

/// Realization budgets.
struct Budget {
  double frac_loss = 0.05;  // allowed relative volume loss of any leaf
  double moment = 0.05;     // allowed error moment per unit volume
  double s = 2;             // moment exponent, (1+|X|)^s
  double holder = 1.0;      // allowed C^alpha distance
  double alpha = 0.5;
  double focus = 0;         // share of the moment budget spent at the root node
  double max_teeth = 1e100;
  long long max_grid = 1 << 21;
};

using GoodFn = std::function<bool(const Mat&)>;

/// Builds templates for trees into a map under construction.
class Realizer {
 public:
  Realizer(PiecewiseAffineMap& map, GoodFn in_K = {}) : map_(map), in_K_(std::move(in_K)) {}
  /// Template realizing tree.root in frame F, or -1 when the root is a leaf.
  int realize(const LaminateTree& tree, const Budget& budget, const Mat2& F = Mat2::Identity());
  CellFlag leaf_flag(const TreeNode& n) const;
  CellFlag aux_flag(const Mat& G) const;
  /// Leaves outside K become error pieces (staircase remainders stay inductive).
  void set_strict(bool on) { strict_ = on; }

 private:
  int build(const LaminateTree& t, int node, const Mat2& F, const Budget& b, double l, double e_abs,
            double e_root);
  int roof(const LaminateTree& t, int node, const Mat2& F, int axis, int sign, const Budget& b, double l,
           double e_abs, double e_root);
  int rotate(const LaminateTree& t, int node, const Mat2& F, const Vec2& xi, const Budget& b, double l,
             double e_abs, double e_root);
  int mix(const LaminateTree& t, int node, const Mat2& F, const Budget& b, double l, double e_abs,
          double e_root);
  PiecewiseAffineMap& map_;
  GoodFn in_K_;
  bool strict_ = false;
};

/// Number of rotated grid squares (side 1/n, frame Rrel) inside the unit square.
long long rotated_inside_count(const Mat2& Rrel, long long n);
bool rotated_cell_inside(const Mat2& Rrel, long long n, long long i, long long j);
/// Squares of a grid of side h anchored at the origin lying in triangle tri (convex).
long long triangle_grid_count(const Polygon& tri, double h);
bool triangle_cell_inside(const Polygon& tri, double h, long long i, long long j);

struct CoverPlan;

/// Starts a map on a box domain with boundary data l_{A,b}.
PiecewiseAffineMap affine_map(const Domain& domain, const Mat& A, const Vec& b);
/// Attaches template root to the box, tiled by squares (optionally by a cover plan).
void attach_root(PiecewiseAffineMap& map, int root, const CoverPlan* plan = nullptr);

PiecewiseAffineMap roof(const Mat& A, const Vec& b, const Mat& A1, const Mat& A2, double lam1, const Domain& domain,
                        double eps);
PiecewiseAffineMap realize_finite_laminate(const Measure& nu, const Domain& domain, const Mat& A, const Vec& b,
                                           double eps, double alpha, double delta, double s = 2);
PiecewiseAffineMap realize_tree(const LaminateTree& tree, const Domain& domain, const Vec& b, const Budget& budget,
                                GoodFn in_K = {});

class StaircaseSpec;
struct StaircaseRealization {
  PiecewiseAffineMap map;
  double c_N;
  Measure nuN;
};
StaircaseRealization realize_staircase(const StaircaseSpec& spec, int N, const Domain& domain, const Vec& b,
                                       double eta, double alpha, double s = 2);

/// Unrefined roof and mix classes can be refined by patches.
bool patchable(const Template& t, int cls);
/// Geometry of a roof triangle class (2..5) in layer coordinates of one tooth.
Polygon class_triangle(const Template& t, int cls);
/// Refines class cls of template t by child. Triangle classes use a grid of side h (template
/// units); core and strip classes reuse their square tilings.
void apply_patch(PiecewiseAffineMap& map, int t, int cls, int child, double h);

struct RoundReport {
  int round;
  double error_moment;  // (1+|X|^r) over error and residual pieces per unit volume
  double budget;
  double tail_constant;  // sup_t t^p tail / (1+|A|^growth)
  double tail_bound;     // (sum_{i<k} 2^-i) M^p
  int patches;
  double holder_bound;
  double inductive_volume;  // staircase remainders left for later rounds, per unit volume
  bool pass;
};

/// Seed -> laminate tree with its weak-L^p constant Mp (so tails <= Mp (1+|G|^r) t^-p).
struct BuilderOutput {
  LaminateTree tree;
  double Mp;
};
using StepBuilder = std::function<BuilderOutput(const Mat& G, int round)>;

struct ReduceReport {
  std::vector<RoundReport> rounds;
  double Mp = 0;  // max builder constant seen
  bool pass = true;
};

/// r: exponent of the error moment; growth: exponent in (1 + |A|^growth) of the tail bound (r when < 0).
PiecewiseAffineMap reduce_exact(const StepBuilder& builder, const Domain& domain, const Mat& A, const Vec& b,
                                double delta, double alpha, int K, double p, double r, const GoodFn& in_K,
                                ReduceReport& report, int max_patches_per_round = 64, double growth = -1);

struct MapReport {
  double boundary_residual = 0;
  double holder_estimate = 0;  // sampled, a lower bound for the true norm
  double sup_deviation = 0;
  double continuity_residual = 0;
  double holder_bound = 0;
  double lipschitz_bound = 0;
  int boundary_samples = 0, pairs = 0, facet_samples = 0;
  bool pass = true;
};
MapReport verify_map(PiecewiseAffineMap& map, double alpha, int sample_budget = 10000, double tol = 1e-9);
/// Radical inverse in the given base (Halton coordinate).
double halton(unsigned long long i, int base);

/// Covers a box by copies r_i Omega_0 + x_i (squares) of a template: max side from r^(1-alpha) <= eps.
struct CoverPlan {
  RectTiling tiling;
  long long subdiv = 1;
  double max_side = 0;
  double holder_factor = 0;  // 2 max r_i^(1-alpha)
};
CoverPlan rescale_and_cover(const Box& box, double alpha, double eps);

}  // namespace lf
