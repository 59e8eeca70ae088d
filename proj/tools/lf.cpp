#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "lf/error.hpp"
#include "lf/format.hpp"
#include "lf/io.hpp"
#include "lf/parallel.hpp"

using namespace lf;

namespace {

enum Exit { ok = 0, parse_err = 2, precondition = 3, verdict_fail = 4, internal = 5 };

int exit_code(Errc c) {
  switch (c) {
    case Errc::parse_error: return parse_err;
    case Errc::internal: return internal;
    default: return precondition;
  }
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    write_text(path, text);
  }
}

Params parse_params(const std::string& s) {
  Params p;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) fail(Errc::parse_error, "params entry '" + item + "' is not k=v");
    p[item.substr(0, eq)] = parse_double(item.substr(eq + 1));
  }
  return p;
}

const char* verdict(bool pass) { return pass ? "pass" : "fail"; }

// either a measure or a map file; maps are summarized by their gradient distribution
Measure load_distribution(const std::string& path, Mat* A) {
  Json j = read_json(path);
  if (j.contains("templates")) {
    PiecewiseAffineMap m = map_from_json(j);
    if (A) *A = m.A;
    return gradient_distribution(m).cells;
  }
  Measure nu = measure_from_json(j);
  if (nu.empty()) fail(Errc::invalid_input, path + ": measure has no atoms");
  if (A) *A = barycenter(nu);
  return nu;
}

struct TailArgs {
  double p = 2, M = 1, slack = 0;
  std::string grid = "log:1:1e4:60", side = "upper";
  std::string A;
};

void add_tail_options(CLI::App* c, TailArgs& t) {
  c->add_option("--p", t.p, "tail exponent")->check(CLI::PositiveNumber);
  c->add_option("--M", t.M, "weak constant")->check(CLI::PositiveNumber);
  c->add_option("--t-grid", t.grid, "log:a:b:n, lin:a:b:n or list:...");
  c->add_option("--side", t.side, "upper, lower or both");
  c->add_option("--slack", t.slack, "additive slack")->check(CLI::NonNegativeNumber);
  c->add_option("--A", t.A, "matrix for |A| (default: barycenter)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Laminate constructions and verifiers"};
  app.require_subcommand(1);
  int jobs = 0;
  app.add_option("--jobs", jobs, "worker threads (LF_JOBS overrides)")->check(CLI::NonNegativeNumber);

  std::string out, A_arg, kind, params, measure_path, map_path, domain = "unit", csv_path, report_path;
  int N = 10, m = 0, n_max = 10000, n = 1, depth = 8, j_idx = 6, samples = 10000;
  double tol = 1e-10, eps = 0.05, alpha = 0.5, delta = 1, s = 2, beta_tol = 1e-4, t_cover = 0, r_exp = 2;
  double member_tol = 1e-8, slope_t0 = 10, slope_t1 = 1e3, p = 1.5;
  bool no_stage1 = false;
  TailArgs tails;
  std::string mode = "measure";

  // staircase
  auto* st = app.add_subcommand("staircase", "staircase laminates");
  st->require_subcommand(1);
  auto* st_build = st->add_subcommand("build", "truncated staircase measure with certificate");
  auto* st_slopes = st->add_subcommand("slopes", "beta_n against n");
  for (auto* c : {st_build, st_slopes}) {
    c->add_option("--kind", kind, "det1, rankdrop, elliptic or plaplace")->required();
    c->add_option("--A", A_arg, "diag(...), inline matrix JSON or a file (optional for elliptic, plaplace)");
    c->add_option("--params", params, "k=v,...");
    c->add_option("--m", m, "rank bound (rankdrop)")->check(CLI::PositiveNumber);
    c->add_option("--out", out, "output path (stdout when absent)");
  }
  st_build->add_option("--N", N, "truncation depth")->check(CLI::NonNegativeNumber);
  st_slopes->add_option("--n-max", n_max, "largest n")->check(CLI::PositiveNumber);
  int points = 200;
  st_slopes->add_option("--points", points, "log-spaced n values")->check(CLI::PositiveNumber);

  // laminate
  auto* lam = app.add_subcommand("laminate", "laminate certificates");
  lam->require_subcommand(1);
  auto* lam_verify = lam->add_subcommand("verify", "replay the certificate of a measure");
  lam_verify->add_option("--measure", measure_path)->required();
  lam_verify->add_option("--tol", tol)->check(CLI::PositiveNumber);
  lam_verify->add_option("--out", out);

  // verify
  auto* ver = app.add_subcommand("verify", "envelope checks");
  ver->require_subcommand(1);
  auto* ver_tails = ver->add_subcommand("tails", "weak-L^p tail envelopes as CSV");
  ver_tails->add_option("--measure", measure_path, "measure or map JSON")->required();
  add_tail_options(ver_tails, tails);
  ver_tails->add_option("--out", out);

  // synth
  auto* sy = app.add_subcommand("synth", "piecewise-affine maps");
  sy->require_subcommand(1);
  auto* sy_real = sy->add_subcommand("realize", "map with the gradient distribution of a finite laminate");
  sy_real->add_option("--measure", measure_path)->required();
  sy_real->add_option("--domain", domain, "box:x0,y0,x1,y1 or unit");
  sy_real->add_option("--eps", eps)->check(CLI::PositiveNumber);
  sy_real->add_option("--alpha", alpha)->check(CLI::Range(0.0, 0.999999));
  sy_real->add_option("--delta", delta, "C^alpha budget")->check(CLI::PositiveNumber);
  sy_real->add_option("--s", s, "moment exponent")->check(CLI::PositiveNumber);
  sy_real->add_option("--out", out);
  auto* sy_ver = sy->add_subcommand("verify", "boundary, continuity and Holder checks");
  sy_ver->add_option("--map", map_path)->required();
  sy_ver->add_option("--alpha", alpha)->check(CLI::Range(0.0, 0.999999));
  sy_ver->add_option("--samples", samples)->check(CLI::PositiveNumber);
  sy_ver->add_option("--tol", tol)->check(CLI::PositiveNumber);
  sy_ver->add_option("--out", out);

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "product reduction pipeline");
  pl->require_subcommand(1);
  auto* pl_prod = pl->add_subcommand("product", "delta_A to L cap Sigma");
  auto* pl_appr = pl->add_subcommand("approx", "approximate sequence for rank-one A");
  for (auto* c : {pl_prod, pl_appr}) {
    c->add_option("--A", A_arg)->required();
    c->add_option("--beta-tol", beta_tol)->check(CLI::PositiveNumber);
    c->add_option("--t-cover", t_cover)->check(CLI::NonNegativeNumber);
    c->add_option("--member-tol", member_tol)->check(CLI::PositiveNumber);
    c->add_option("--domain", domain);
    c->add_option("--alpha", alpha)->check(CLI::Range(0.0, 0.999999));
    c->add_option("--out", out, "measure or map JSON");
    c->add_option("--report", report_path, "report JSON");
    c->add_option("--tails", csv_path, "TailReport CSV");
  }
  pl_prod->add_option("--n", n, "A is 2n x 2n")->check(CLI::PositiveNumber);
  pl_prod->add_option("--mode", mode, "measure or map")->check(CLI::IsMember({"measure", "map"}));
  pl_prod->add_option("--depth", depth, "recursion rounds (map mode)")->check(CLI::PositiveNumber);
  pl_prod->add_option("--delta", delta)->check(CLI::PositiveNumber);
  pl_prod->add_option("--r", r_exp, "error moment exponent (map mode)")->check(CLI::PositiveNumber);
  pl_prod->add_flag("--no-stage1", no_stage1, "skip the rank-drop stage");
  pl_prod->add_option("--slope-t0", slope_t0)->check(CLI::PositiveNumber);
  pl_prod->add_option("--slope-t1", slope_t1)->check(CLI::PositiveNumber);
  pl_appr->add_option("--j", j_idx)->check(CLI::PositiveNumber);

  // models
  auto* mo = app.add_subcommand("models", "application models");
  mo->require_subcommand(1);
  auto* mo_afs = mo->add_subcommand("afs", "elliptic staircase, two-sided tail fit");
  AfsOptions afs;
  mo_afs->add_option("--K", afs.K)->check(CLI::Range(1.0000001, 1e6));
  mo_afs->add_option("--A", A_arg)->required();
  mo_afs->add_option("--N", afs.N)->check(CLI::PositiveNumber);
  mo_afs->add_option("--M-cap", afs.M_cap)->check(CLI::PositiveNumber);
  mo_afs->add_option("--mode", mode)->check(CLI::IsMember({"measure", "map"}));
  mo_afs->add_option("--domain", domain);
  mo_afs->add_option("--measure-out", measure_path, "truncated measure (measure mode) or map JSON");
  mo_afs->add_option("--tails", csv_path);
  mo_afs->add_option("--out", out);
  auto* mo_plap = mo->add_subcommand("plap", "p-Laplace moment divergence proxy");
  PlapOptions plap;
  int plap_N = 10000;
  mo_plap->add_option("--p", plap.p)->check(CLI::Range(1.0000001, 1e6));
  mo_plap->add_option("--b", plap.b, "staircase parameter (default: maximizer)")->check(CLI::NonNegativeNumber);
  mo_plap->add_option("--N", plap_N, "largest N (decades from 100)")->check(CLI::Range(100, 10000000));
  mo_plap->add_option("--A", A_arg);
  mo_plap->add_option("--moments", csv_path, "N,m_qbar,m_q CSV");
  mo_plap->add_option("--out", out);
  auto* mo_dual = mo->add_subcommand("duality", "K_p to K_p' relabelling");
  mo_dual->add_option("--in", measure_path, "measure or map JSON")->required();
  mo_dual->add_option("--p", p)->check(CLI::Range(1.0000001, 1e6));
  mo_dual->add_option("--out", out);
  mo_dual->add_option("--report", report_path);

  // report
  auto* rep = app.add_subcommand("report", "summaries");
  rep->require_subcommand(1);
  auto* rep_dist = rep->add_subcommand("dist", "gradient distribution of a map with tail CSV");
  rep_dist->add_option("--map", map_path, "map or measure JSON")->required();
  add_tail_options(rep_dist, tails);
  rep_dist->add_option("--tails", csv_path);
  rep_dist->add_option("--out", out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return parse_err;
  }

  if (const char* env = std::getenv("LF_JOBS")) {
    try {
      jobs = std::stoi(env);
    } catch (const std::exception&) {
      std::cerr << "error: LF_JOBS must be an integer\n";
      return parse_err;
    }
    if (jobs < 0) {
      std::cerr << "error: LF_JOBS must be non-negative\n";
      return parse_err;
    }
  }
  if (jobs > 0) set_default_jobs(jobs);

  try {
    if (st_build->parsed() || st_slopes->parsed()) {
      Mat A = A_arg.empty() ? Mat() : parse_matrix_arg(A_arg);
      Params pr = parse_params(params);
      if (m > 0) pr["m"] = m;
      if (kind == "plaplace" && !pr.count("b") && pr.count("p")) pr["b"] = select_b(pr["p"]);
      StaircaseSpec spec = example_staircase(kind, A, pr);
      if (st_build->parsed()) {
        emit(out, dump_json(to_json(build_truncation(spec, N)), true));
        return ok;
      }
      std::vector<int> ns;
      for (double x : log_grid(1, n_max, std::min(points, n_max))) {
        int k = static_cast<int>(std::lround(x));
        if (ns.empty() || k > ns.back()) ns.push_back(k);
      }
      std::ostringstream os;
      os << "n,beta,normA\n";
      for (int k : ns) os << k << ',' << fmt_double(spec.beta(k).value()) << ',' << fmt_double(norm(spec.A(k))) << '\n';
      emit(out, os.str());
      return ok;
    }

    if (lam_verify->parsed()) {
      Measure nu = measure_from_json(read_json(measure_path));
      if (!nu.cert) fail(Errc::invalid_input, measure_path + ": measure has no certificate");
      LaminateReport r = verify_laminate(nu, *nu.cert, tol);
      emit(out, dump_json(to_json(r)));
      return r.pass ? ok : verdict_fail;
    }

    if (ver_tails->parsed() || rep_dist->parsed()) {
      Mat A;
      Measure nu;
      GradientDistribution dist;
      bool is_map = false;
      std::string path = ver_tails->parsed() ? measure_path : map_path;
      if (rep_dist->parsed()) {
        Json j = read_json(path);
        if (j.contains("templates")) {
          PiecewiseAffineMap mp = map_from_json(j);
          A = mp.A;
          dist = gradient_distribution(mp);
          nu = dist.cells;
          is_map = true;
        } else {
          nu = measure_from_json(j);
          A = barycenter(nu);
        }
      } else {
        nu = load_distribution(path, &A);
      }
      if (!tails.A.empty()) A = parse_matrix_arg(tails.A);
      TailReport r = verify_weak_tail(nu, tails.p, tails.M, norm(A), parse_side(tails.side),
                                      parse_grid(tails.grid), tails.slack);
      if (ver_tails->parsed()) {
        emit(out, r.csv());
        return r.pass ? ok : verdict_fail;
      }
      Json j = is_map ? to_json(dist) : Json{{"cells", to_json(nu)}};
      j["fitted_constant"] = num(fitted_weak_constant(nu, tails.p, norm(A)));
      j["tails"] = to_json(r);
      if (!csv_path.empty()) write_text(csv_path, r.csv());
      emit(out, dump_json(j));
      return r.pass ? ok : verdict_fail;
    }

    if (sy_real->parsed()) {
      Measure nu = measure_from_json(read_json(measure_path));
      if (nu.empty()) fail(Errc::invalid_input, "measure has no atoms");
      Mat A = barycenter(nu);
      Domain d = Domain::parse(domain);
      PiecewiseAffineMap mp = realize_finite_laminate(nu, d, A, Vec::Zero(A.rows()), eps, alpha, delta, s);
      emit(out, dump_json(to_json(mp), true));
      return ok;
    }

    if (sy_ver->parsed()) {
      PiecewiseAffineMap mp = map_from_json(read_json(map_path));
      MapReport r = verify_map(mp, alpha, samples, tol);
      emit(out, dump_json(to_json(r)));
      return r.pass ? ok : verdict_fail;
    }

    if (pl_prod->parsed() || pl_appr->parsed()) {
      Mat A = parse_matrix_arg(A_arg);
      PipelineOptions opt;
      opt.beta_tol = beta_tol;
      opt.t_cover = t_cover;
      opt.member_tol = member_tol;
      opt.stage1 = !no_stage1;
      opt.jobs = jobs;
      Domain d = Domain::parse(domain);
      Vec b = Vec::Zero(A.rows());
      if (pl_appr->parsed()) {
        ApproxReport r;
        PiecewiseAffineMap mp = approximate_sequence(A, d, b, j_idx, alpha, opt, r);
        if (!out.empty()) emit(out, dump_json(to_json(mp), true));
        if (!csv_path.empty()) {
          Measure cells = gradient_distribution(mp).cells;
          double n2 = static_cast<double>(A.rows());
          write_text(csv_path, verify_weak_tail(cells, n2, 1, norm(A), Side::upper, log_grid(slope_t0, slope_t1, 60)).csv());
        }
        emit(report_path.empty() && out.empty() ? "-" : report_path, dump_json(to_json(r)));
        return r.pass ? ok : verdict_fail;
      }
      if (A.rows() != 2 * n || A.cols() != 2 * n)
        fail(Errc::invalid_input, "A must be " + std::to_string(2 * n) + "x" + std::to_string(2 * n));
      if (mode == "map") {
        ReduceReport r;
        PiecewiseAffineMap mp = product_map(A, d, b, delta, alpha, depth, r_exp, opt, r);
        if (!out.empty()) emit(out, dump_json(to_json(mp), true));
        emit(report_path.empty() && out.empty() ? "-" : report_path, dump_json(to_json(r)));
        return r.pass ? ok : verdict_fail;
      }
      Measure nu = product_measure(A, opt);
      PipelineReport r = pipeline_report(A, nu, opt, slope_t0, slope_t1);
      bool pass = r.support_ok && r.residual_mass <= r.residual_budget * (1 + 1e-9) &&
                  r.barycenter_error <= 1e-9 * (1 + norm(A));
      Json j = to_json(r);
      j["verdict"] = verdict(pass);
      if (!out.empty()) emit(out, dump_json(to_json(nu), true));
      if (!csv_path.empty()) write_text(csv_path, r.tails.csv());
      emit(report_path.empty() && out.empty() ? "-" : report_path, dump_json(j));
      return pass ? ok : verdict_fail;
    }

    if (mo_afs->parsed()) {
      Mat A = parse_matrix_arg(A_arg);
      AfsReport r;
      if (mode == "map") {
        Budget bud;
        bud.alpha = alpha;
        bud.holder = 0.5;
        PiecewiseAffineMap mp = afs_map(A, Domain::parse(domain), Vec::Zero(A.rows()), afs, bud, r);
        if (!measure_path.empty()) write_text(measure_path, dump_json(to_json(mp), true));
      } else {
        Measure nu = afs_measure(A, afs, r);
        if (!measure_path.empty()) write_text(measure_path, dump_json(to_json(nu), true));
      }
      if (!csv_path.empty()) write_text(csv_path, r.fit.report.csv());
      emit(out, dump_json(to_json(r)));
      return r.pass ? ok : verdict_fail;
    }

    if (mo_plap->parsed()) {
      Mat A = A_arg.empty() ? Mat(Mat::Zero(2, 2)) : parse_matrix_arg(A_arg);
      plap.Ns.clear();
      for (long long k = 100; k <= plap_N; k *= 10) plap.Ns.push_back(static_cast<int>(k));
      if (plap.Ns.back() != plap_N) plap.Ns.push_back(plap_N);
      PlapReport r = plap_pipeline(A, plap);
      if (!csv_path.empty()) {
        std::ostringstream os;
        os << "N,m_qbar,m_q\n";
        for (const auto& row : r.rows) os << row.N << ',' << fmt_double(row.m_qbar) << ',' << fmt_double(row.m_q) << '\n';
        write_text(csv_path, os.str());
      }
      emit(out, dump_json(to_json(r)));
      return r.pass ? ok : verdict_fail;
    }

    if (mo_dual->parsed()) {
      Json j = read_json(measure_path);
      DualityReport r;
      Json res;
      if (j.contains("swapped")) {
        if (!j.contains("base") || !j["swapped"].is_boolean())
          fail(Errc::parse_error, measure_path + ": swapped map needs \"base\" and a boolean \"swapped\"");
        DualMap dm{map_from_json(j["base"]), j["swapped"].get<bool>()};
        DualMap back = duality_swap(dm, p, r);
        res = back.swapped ? Json{{"swapped", true}, {"base", to_json(back.base)}} : to_json(back.base);
      } else if (j.contains("templates")) {
        DualMap dm = duality_swap(map_from_json(j), p, r);
        res = {{"swapped", true}, {"base", to_json(dm.base)}};
      } else {
        res = to_json(duality_swap(measure_from_json(j), p, r));
      }
      emit(out, dump_json(res, true));
      if (!report_path.empty()) write_text(report_path, dump_json(to_json(r)));
      return r.pass ? ok : verdict_fail;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << errc_name(e.code()) << "): " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return internal;
  }
  return internal;
}
