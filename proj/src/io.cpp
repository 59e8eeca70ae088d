#include "lf/io.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "lf/error.hpp"
#include "lf/format.hpp"

namespace lf {

namespace {

const Json& field(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object()) fail(Errc::parse_error, what + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(Errc::parse_error, what + ": missing \"" + key + "\"");
  return *it;
}

long long get_int(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) fail(Errc::parse_error, what + ": expected an integer");
  return j.get<long long>();
}

bool get_bool(const Json& j, const std::string& what) {
  if (!j.is_boolean()) fail(Errc::parse_error, what + ": expected true or false");
  return j.get<bool>();
}

std::string get_str(const Json& j, const std::string& what) {
  if (!j.is_string()) fail(Errc::parse_error, what + ": expected a string");
  return j.get<std::string>();
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

Vec vec_from(const Json& j, const std::string& what) {
  if (!j.is_array()) fail(Errc::parse_error, what + ": expected an array");
  Vec v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = get_num(j[i], what);
  return v;
}

std::vector<double> dvec_from(const Json& j, const std::string& what) {
  Vec v = vec_from(j, what);
  return std::vector<double>(v.data(), v.data() + v.size());
}

Json tiling_json(const RectTiling& t) {
  Json st = Json::array();
  for (const auto& s : t.stages)
    st.push_back({{"vertical", s.vertical}, {"side", num(s.side)}, {"count", num(s.count)}, {"x0", num(s.x0)},
                  {"y0", num(s.y0)}});
  return {{"W", num(t.W)}, {"H", num(t.H)}, {"covered", num(t.covered)}, {"stages", st}};
}

RectTiling tiling_from(const Json& j, const std::string& what) {
  RectTiling t;
  t.W = get_num(field(j, "W", what), what);
  t.H = get_num(field(j, "H", what), what);
  t.covered = get_num(field(j, "covered", what), what);
  const Json& st = field(j, "stages", what);
  if (!st.is_array()) fail(Errc::parse_error, what + ": stages must be an array");
  for (const auto& s : st) {
    RectTiling::Stage g;
    g.vertical = get_bool(field(s, "vertical", what), what);
    g.side = get_num(field(s, "side", what), what);
    g.count = get_num(field(s, "count", what), what);
    g.x0 = get_num(field(s, "x0", what), what);
    g.y0 = get_num(field(s, "y0", what), what);
    t.stages.push_back(g);
  }
  return t;
}

const char* kind_name(Template::Kind k) {
  switch (k) {
    case Template::Kind::roof: return "roof";
    case Template::Kind::rotate: return "rotate";
    case Template::Kind::mix: return "mix";
  }
  return "roof";
}

Template::Kind parse_kind(const std::string& s) {
  if (s == "roof") return Template::Kind::roof;
  if (s == "rotate") return Template::Kind::rotate;
  if (s == "mix") return Template::Kind::mix;
  fail(Errc::parse_error, "unknown template kind '" + s + "'");
}

Json template_json(const Template& t) {
  Json cls = Json::array();
  for (const auto& c : t.classes)
    cls.push_back({{"A", to_json(c.G)},
                   {"flag", flag_name(c.flag)},
                   {"frac", num(c.frac)},
                   {"child", c.child},
                   {"cov", num(c.cov)},
                   {"scale", num(c.scale)}});
  Json j = {{"kind", kind_name(t.kind)}, {"G", to_json(t.G)}, {"F", to_json(Mat(t.F))}, {"node", t.node}};
  if (t.kind == Template::Kind::roof) {
    j["A1"] = to_json(t.A1);
    j["A2"] = to_json(t.A2);
    j["eta"] = vec_json(t.eta);
    j["axis"] = t.axis;
    j["sign"] = t.sign;
    j["lam1"] = num(t.lam1);
    j["P"] = num(t.P);
    j["r"] = num(t.r);
    j["tau"] = num(t.tau);
    j["teeth"] = num(t.teeth);
    j["tile1"] = tiling_json(t.tile1);
    j["tile2"] = tiling_json(t.tile2);
  } else if (t.kind == Template::Kind::rotate) {
    j["Rrel"] = to_json(Mat(t.Rrel));
    j["grid_n"] = t.grid_n;
  } else {
    Json strips = Json::array();
    for (const auto& s : t.strips) strips.push_back(tiling_json(s));
    Json cuts = Json::array();
    for (double c : t.cuts) cuts.push_back(num(c));
    j["cuts"] = cuts;
    j["strips"] = strips;
  }
  j["classes"] = cls;
  j["B"] = num(t.B);
  j["L"] = num(t.L);
  return j;
}

Mat2 mat2_from(const Json& j, const std::string& what) {
  Mat m = mat_from_json(j, what);
  if (m.rows() != 2 || m.cols() != 2) fail(Errc::parse_error, what + ": expected a 2x2 matrix");
  return m;
}

Template template_from(const Json& j, const std::string& what) {
  Template t;
  t.kind = parse_kind(get_str(field(j, "kind", what), what));
  t.G = mat_from_json(field(j, "G", what), what + ".G");
  t.F = mat2_from(field(j, "F", what), what + ".F");
  t.node = static_cast<int>(get_int(field(j, "node", what), what));
  if (t.kind == Template::Kind::roof) {
    t.A1 = mat_from_json(field(j, "A1", what), what + ".A1");
    t.A2 = mat_from_json(field(j, "A2", what), what + ".A2");
    t.eta = vec_from(field(j, "eta", what), what + ".eta");
    t.axis = static_cast<int>(get_int(field(j, "axis", what), what));
    t.sign = static_cast<int>(get_int(field(j, "sign", what), what));
    t.lam1 = get_num(field(j, "lam1", what), what);
    t.P = get_num(field(j, "P", what), what);
    t.r = get_num(field(j, "r", what), what);
    t.tau = get_num(field(j, "tau", what), what);
    t.teeth = get_num(field(j, "teeth", what), what);
    t.tile1 = tiling_from(field(j, "tile1", what), what + ".tile1");
    t.tile2 = tiling_from(field(j, "tile2", what), what + ".tile2");
  } else if (t.kind == Template::Kind::rotate) {
    t.Rrel = mat2_from(field(j, "Rrel", what), what + ".Rrel");
    t.grid_n = get_int(field(j, "grid_n", what), what);
  } else {
    t.cuts = dvec_from(field(j, "cuts", what), what + ".cuts");
    const Json& st = field(j, "strips", what);
    if (!st.is_array()) fail(Errc::parse_error, what + ": strips must be an array");
    for (const auto& s : st) t.strips.push_back(tiling_from(s, what + ".strips"));
  }
  const Json& cls = field(j, "classes", what);
  if (!cls.is_array()) fail(Errc::parse_error, what + ": classes must be an array");
  for (const auto& c : cls) {
    TemplateClass k;
    std::string w = what + ".classes";
    k.G = mat_from_json(field(c, "A", w), w + ".A");
    try {
      k.flag = parse_flag(get_str(field(c, "flag", w), w));
    } catch (const Error& e) {
      fail(Errc::parse_error, w + ": " + e.what());
    }
    k.frac = get_num(field(c, "frac", w), w);
    k.child = static_cast<int>(get_int(field(c, "child", w), w));
    k.cov = get_num(field(c, "cov", w), w);
    k.scale = get_num(field(c, "scale", w), w);
    t.classes.push_back(k);
  }
  t.B = get_num(field(j, "B", what), what);
  t.L = get_num(field(j, "L", what), what);
  return t;
}

// line and column (1-based) of byte offset pos
std::pair<int, int> line_col(const std::string& text, std::size_t pos) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < pos && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

Json rows_json(const std::vector<TailRow>& rows) {
  Json a = Json::array();
  for (const auto& r : rows)
    a.push_back({{"t", num(r.t)},
                 {"tail", num(r.tail)},
                 {"upper_env", num(r.upper)},
                 {"lower_env", num(r.lower)},
                 {"verdict", r.pass ? "pass" : "fail"}});
  return a;
}

}  // namespace

Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // byte is one past the offending character
    std::size_t pos = e.byte > 0 ? e.byte - 1 : 0;
    auto [line, col] = line_col(text, pos);
    std::string msg = e.what();
    auto cut = msg.find("syntax error");
    if (cut != std::string::npos) msg = msg.substr(cut);
    fail(Errc::parse_error, source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::invalid_input, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Json read_json(const std::string& path) { return parse_json(read_text(path), path); }

std::string dump_json(const Json& j, bool compact) { return j.dump(compact ? -1 : 2) + "\n"; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::invalid_input, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(Errc::internal, "write failed for '" + path + "'");
}

Json num(double x) {
  if (std::isfinite(x)) return x;
  return fmt_double(x);
}

double get_num(const Json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return NAN;
  }
  fail(Errc::parse_error, what + ": expected a number");
}

Json to_json(const Mat& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (int k = 0; k < m.cols(); ++k) r.push_back(num(m(i, k)));
    rows.push_back(r);
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", rows}};
}

Mat mat_from_json(const Json& j, const std::string& what) {
  long long r = get_int(field(j, "rows", what), what + ".rows");
  long long c = get_int(field(j, "cols", what), what + ".cols");
  if (r < 0 || c < 0 || r > 4096 || c > 4096) fail(Errc::parse_error, what + ": bad shape");
  const Json& e = field(j, "entries", what);
  if (!e.is_array() || static_cast<long long>(e.size()) != r)
    fail(Errc::parse_error, what + ": entries must hold " + std::to_string(r) + " rows");
  Mat m(r, c);
  for (long long i = 0; i < r; ++i) {
    const Json& row = e[i];
    if (!row.is_array() || static_cast<long long>(row.size()) != c)
      fail(Errc::parse_error, what + ": row " + std::to_string(i) + " must hold " + std::to_string(c) + " entries");
    for (long long k = 0; k < c; ++k) m(i, k) = get_num(row[k], what);
  }
  return m;
}

Mat parse_matrix_arg(const std::string& s) {
  if (s.rfind("diag(", 0) == 0) {
    if (s.back() != ')') fail(Errc::parse_error, "diag(...) is missing ')'");
    std::vector<double> d;
    std::stringstream ss(s.substr(5, s.size() - 6));
    std::string item;
    while (std::getline(ss, item, ',')) d.push_back(parse_double(item));
    if (d.empty()) fail(Errc::parse_error, "diag() needs entries");
    return diag(d);
  }
  if (!s.empty() && s.front() == '{') return mat_from_json(parse_json(s, "<matrix>"));
  return mat_from_json(read_json(s), s);
}

Json to_json(const Weight& w) {
  if (w.exact()) return w.str();
  return num(w.value());
}

Weight weight_from_json(const Json& j, const std::string& what) {
  if (j.is_number_integer()) return Weight(Rational(j.get<long long>()));
  if (j.is_number()) return Weight(j.get<double>());
  if (j.is_string()) {
    try {
      return Weight::parse(j.get<std::string>());
    } catch (const Error& e) {
      fail(Errc::parse_error, what + ": " + e.what());
    }
  }
  fail(Errc::parse_error, what + ": expected a number or \"p/q\"");
}

Json to_json(const Certificate& c) {
  Json a = Json::array();
  for (const auto& s : c.steps) {
    Json j = {{"target", to_json(s.target)},
              {"left", to_json(s.left)},
              {"right", to_json(s.right)},
              {"lambda", to_json(s.lambda)}};
    if (s.mass) j["mass"] = to_json(*s.mass);
    a.push_back(j);
  }
  return a;
}

Certificate cert_from_json(const Json& j) {
  if (!j.is_array()) fail(Errc::parse_error, "certificate must be an array");
  Certificate c;
  for (std::size_t i = 0; i < j.size(); ++i) {
    std::string w = "certificate[" + std::to_string(i) + "]";
    SplitStep s;
    s.target = mat_from_json(field(j[i], "target", w), w + ".target");
    s.left = mat_from_json(field(j[i], "left", w), w + ".left");
    s.right = mat_from_json(field(j[i], "right", w), w + ".right");
    s.lambda = weight_from_json(field(j[i], "lambda", w), w + ".lambda");
    if (j[i].contains("mass")) s.mass = weight_from_json(j[i]["mass"], w + ".mass");
    c.steps.push_back(std::move(s));
  }
  return c;
}

Json to_json(const Measure& nu) {
  Json atoms = Json::array();
  for (const auto& a : nu.atoms) {
    Json j = {{"w", to_json(a.w)}, {"M", to_json(a.M)}};
    if (a.residual) j["residual"] = true;
    atoms.push_back(j);
  }
  Json j = {{"atoms", atoms}};
  if (nu.cert) j["certificate"] = to_json(*nu.cert);
  return j;
}

Measure measure_from_json(const Json& j) {
  const Json& atoms = field(j, "atoms", "measure");
  if (!atoms.is_array()) fail(Errc::parse_error, "measure: atoms must be an array");
  Measure nu;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    std::string w = "atoms[" + std::to_string(i) + "]";
    Atom a;
    a.w = weight_from_json(field(atoms[i], "w", w), w + ".w");
    a.M = mat_from_json(field(atoms[i], "M", w), w + ".M");
    if (atoms[i].contains("residual")) a.residual = get_bool(atoms[i]["residual"], w + ".residual");
    if (!nu.atoms.empty() && (a.M.rows() != nu.atoms[0].M.rows() || a.M.cols() != nu.atoms[0].M.cols()))
      fail(Errc::parse_error, w + ": shape differs from the first atom");
    nu.atoms.push_back(std::move(a));
  }
  if (j.contains("certificate")) nu.cert = cert_from_json(j["certificate"]);
  return nu;
}

Json to_json(const Domain& d) {
  if (d.box) return {{"box", {num(d.box->lo[0]), num(d.box->lo[1]), num(d.box->hi[0]), num(d.box->hi[1])}}};
  Json hs = Json::array();
  for (const auto& [n, c] : d.halfspaces) hs.push_back({{"n", {num(n[0]), num(n[1])}}, {"c", num(c)}});
  return {{"halfspaces", hs}};
}

Domain domain_from_json(const Json& j) {
  if (j.is_object() && j.contains("box")) {
    auto v = dvec_from(j["box"], "domain.box");
    if (v.size() != 4) fail(Errc::parse_error, "domain.box needs 4 numbers");
    return Domain::make_box({v[0], v[1]}, {v[2], v[3]});
  }
  const Json& hs = field(j, "halfspaces", "domain");
  if (!hs.is_array()) fail(Errc::parse_error, "domain.halfspaces must be an array");
  Domain d;
  for (const auto& h : hs) {
    auto n = dvec_from(field(h, "n", "halfspace"), "halfspace.n");
    if (n.size() != 2) fail(Errc::parse_error, "halfspace normal needs 2 numbers");
    d.halfspaces.push_back({Vec2(n[0], n[1]), get_num(field(h, "c", "halfspace"), "halfspace.c")});
  }
  return d;
}

Json to_json(const PiecewiseAffineMap& map) {
  Json templates = Json::array();
  for (const auto& t : map.templates) templates.push_back(template_json(t));
  GradientDistribution d = gradient_distribution(map);
  Json cells = Json::array();
  for (int f = 0; f < 4; ++f)
    for (const auto& a : d.by_flag[f].atoms)
      cells.push_back({{"A", to_json(a.M)}, {"flag", flag_name(static_cast<CellFlag>(f))}, {"volume", num(a.w.value())}});
  return {{"domain", to_json(map.domain)},
          {"boundary", {{"A", to_json(map.A)}, {"b", vec_json(map.b)}}},
          {"root", map.root},
          {"base_flag", flag_name(map.base_flag)},
          {"top", tiling_json(map.top)},
          {"top_subdiv", map.top_subdiv},
          {"templates", templates},
          {"cells", cells},
          {"residual_volume", num(d.residual_volume)}};
}

PiecewiseAffineMap map_from_json(const Json& j) {
  PiecewiseAffineMap m;
  m.domain = domain_from_json(field(j, "domain", "map"));
  const Json& bd = field(j, "boundary", "map");
  m.A = mat_from_json(field(bd, "A", "boundary"), "boundary.A");
  m.b = vec_from(field(bd, "b", "boundary"), "boundary.b");
  if (m.b.size() != m.A.rows()) fail(Errc::parse_error, "boundary.b must have one entry per row of A");
  m.root = static_cast<int>(get_int(field(j, "root", "map"), "map.root"));
  try {
    m.base_flag = parse_flag(get_str(field(j, "base_flag", "map"), "map.base_flag"));
  } catch (const Error& e) {
    fail(Errc::parse_error, std::string("map.base_flag: ") + e.what());
  }
  m.top = tiling_from(field(j, "top", "map"), "map.top");
  m.top_subdiv = get_int(field(j, "top_subdiv", "map"), "map.top_subdiv");
  const Json& ts = field(j, "templates", "map");
  if (!ts.is_array()) fail(Errc::parse_error, "map.templates must be an array");
  for (std::size_t i = 0; i < ts.size(); ++i) m.templates.push_back(template_from(ts[i], "templates[" + std::to_string(i) + "]"));
  int n = static_cast<int>(m.templates.size());
  if (m.root < -1 || m.root >= n) fail(Errc::parse_error, "map.root out of range");
  for (const auto& t : m.templates)
    for (const auto& c : t.classes)
      if (c.child < -1 || c.child >= n) fail(Errc::parse_error, "template child out of range");
  // template DAG must be acyclic
  std::vector<int> state(n, 0);
  std::function<void(int)> visit = [&](int t) {
    if (state[t] == 2) return;
    if (state[t] == 1) fail(Errc::parse_error, "template graph has a cycle");
    state[t] = 1;
    for (const auto& c : m.templates[t].classes)
      if (c.child >= 0) visit(c.child);
    state[t] = 2;
  };
  for (int t = 0; t < n; ++t) visit(t);
  return m;
}

Json to_json(const TailReport& r) {
  Json notes = Json::array();
  for (const auto& s : r.notes) notes.push_back(s);
  return {{"pass", r.pass}, {"norm", r.norm}, {"norm_sensitive", r.norm_sensitive}, {"notes", notes},
          {"rows", rows_json(r.rows)}};
}

Json to_json(const TwoSided& r) {
  return {{"M", num(r.M)}, {"M_upper", num(r.M_upper)}, {"M_lower", num(r.M_lower)}, {"tails", to_json(r.report)}};
}

Json to_json(const LaminateReport& r) {
  return {{"pass", r.pass}, {"failed_step", r.failed_step}, {"message", r.message}};
}

Json to_json(const HypothesisReport& r) {
  Json rows = Json::array();
  for (const auto& h : r.rows)
    rows.push_back({{"n", h.n},
                    {"normA", num(h.normA)},
                    {"ratio", num(h.ratio)},
                    {"support_ratio", num(h.support_ratio)},
                    {"beta_p", num(h.beta_p)},
                    {"far_mass", num(h.far_mass)},
                    {"ok_growth", h.ok_growth},
                    {"ok_support", h.ok_support},
                    {"ok_upper", h.ok_upper},
                    {"ok_far", h.ok_far},
                    {"ok_lower", h.ok_lower}});
  return {{"pass", r.pass},
          {"upper_pass", r.upper_pass},
          {"lower_pass", r.lower_pass},
          {"growth", r.growth},
          {"upper_support", r.upper_support},
          {"upper_beta", r.upper_beta},
          {"lower_mass", r.lower_mass},
          {"lower_beta", r.lower_beta},
          {"upper_coef", num(r.upper_coef)},
          {"lower_coef", num(r.lower_coef)},
          {"beta_p_min", num(r.beta_p_min)},
          {"beta_p_max", num(r.beta_p_max)},
          {"mu_min_weight", num(r.mu_min_weight)},
          {"rows", rows},
          {"tails", to_json(r.tails)}};
}

Json to_json(const MapReport& r) {
  return {{"pass", r.pass},
          {"boundary_residual", num(r.boundary_residual)},
          {"holder_estimate", num(r.holder_estimate)},
          {"holder_bound", num(r.holder_bound)},
          {"lipschitz_bound", num(r.lipschitz_bound)},
          {"sup_deviation", num(r.sup_deviation)},
          {"continuity_residual", num(r.continuity_residual)},
          {"boundary_samples", r.boundary_samples},
          {"pairs", r.pairs},
          {"facet_samples", r.facet_samples}};
}

Json to_json(const ReduceReport& r) {
  Json rounds = Json::array();
  for (const auto& k : r.rounds)
    rounds.push_back({{"round", k.round},
                      {"error_moment", num(k.error_moment)},
                      {"budget", num(k.budget)},
                      {"tail_constant", num(k.tail_constant)},
                      {"tail_bound", num(k.tail_bound)},
                      {"patches", k.patches},
                      {"holder_bound", num(k.holder_bound)},
                      {"inductive_volume", num(k.inductive_volume)},
                      {"pass", k.pass}});
  return {{"pass", r.pass}, {"Mp", num(r.Mp)}, {"rounds", rounds}};
}

Json to_json(const PipelineReport& r) {
  return {{"n", r.n},
          {"atoms", r.atoms},
          {"good_mass", num(r.good_mass)},
          {"residual_mass", num(r.residual_mass)},
          {"other_mass", num(r.other_mass)},
          {"residual_budget", num(r.residual_budget)},
          {"barycenter_error", num(r.barycenter_error)},
          {"support_ok", r.support_ok},
          {"best_constant", num(r.best_constant)},
          {"slope", num(r.slope)},
          {"t0", num(r.t0)},
          {"t1", num(r.t1)},
          {"tails", to_json(r.tails)}};
}

Json to_json(const ApproxReport& r) {
  return {{"pass", r.pass},
          {"j", r.j},
          {"s", num(r.s)},
          {"error_moment", num(r.error_moment)},
          {"error_budget", num(r.error_budget)},
          {"inductive_volume", num(r.inductive_volume)},
          {"residual_volume", num(r.residual_volume)},
          {"dist_L1", num(r.dist_L1)},
          {"dist_L2", num(r.dist_L2)},
          {"dist_floor", num(r.dist_floor)},
          {"best_constant", num(r.best_constant)},
          {"slope", num(r.slope)},
          {"holder_bound", num(r.holder_bound)},
          {"map", to_json(r.map)}};
}

Json to_json(const AfsReport& r) {
  return {{"pass", r.pass},
          {"q", num(r.q)},
          {"N", r.N},
          {"trivial", r.trivial},
          {"atoms", r.atoms},
          {"residual_bound", num(r.residual_bound)},
          {"slope", num(r.slope)},
          {"slope_N", r.slope_N},
          {"fit", to_json(r.fit)}};
}

Json to_json(const PlapReport& r) {
  Json rows = Json::array();
  for (const auto& m : r.rows) rows.push_back({{"N", m.N}, {"m_qbar", num(m.m_qbar)}, {"m_q", num(m.m_q)}});
  Json growth = Json::array();
  for (double g : r.growth) growth.push_back(num(g));
  return {{"pass", r.pass},
          {"p", num(r.p)},
          {"b", num(r.b)},
          {"qbar", num(r.qbar)},
          {"q", num(r.q)},
          {"rows", rows},
          {"growth", growth},
          {"max_increment", num(r.max_increment)},
          {"growth_ok", r.growth_ok},
          {"cauchy_ok", r.cauchy_ok},
          {"support_ok", r.support_ok},
          {"fit", to_json(r.fit)}};
}

Json to_json(const DualityReport& r) {
  return {{"pass", r.pass},
          {"p", num(r.p)},
          {"p_dual", num(r.p_dual)},
          {"mass_in", num(r.mass_in)},
          {"mass_out", num(r.mass_out)},
          {"max_kp_residual", num(r.max_kp_residual)},
          {"max_kpd_residual", num(r.max_kpd_residual)},
          {"max_norm_relation", num(r.max_norm_relation)}};
}

Json to_json(const GradientDistribution& d) {
  return {{"good", num(d.good)},
          {"error", num(d.error)},
          {"inductive", num(d.inductive)},
          {"residual", num(d.residual)},
          {"residual_volume", num(d.residual_volume)},
          {"cells", to_json(d.cells)}};
}

}  // namespace lf
