#include "diffdist/cli.hpp"

#include "diffdist/bench.hpp"
#include "diffdist/gap_solver.hpp"
#include "diffdist/io.hpp"
#include "diffdist/phi.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace diffdist {

namespace {

struct CommonFlags
{
  double h = 0.1;
  int k = 2;
  double eps = 0.01;
  double sigma = 0.989;
  double tol = 1e-3;
  int max_iter = 5000;
  std::uint64_t seed = 1;
  int n_pairs = 1000;
  int n_ineq = 10;
  int dim = 3;
  double min_dist = 0.05;
  std::string out;
};

// Emits text to --out (or the output stream when unset).
void emit(const std::string& path, const std::string& text, std::ostream& out)
{
  if (path.empty())
    out << text << (text.empty() || text.back() != '\n' ? "\n" : "");
  else
    io::write_text(path, text);
}

void add_phi_flags(CLI::App* cmd, CommonFlags& f)
{
  cmd->add_option("--h", f.h, "smoothing parameter h")->capture_default_str();
  cmd->add_option("--k", f.k, "differentiability order k")->capture_default_str();
}

void add_metric_flags(CLI::App* cmd, CommonFlags& f)
{
  add_phi_flags(cmd, f);
  cmd->add_option("--eps", f.eps, "convexification weight on rho")->capture_default_str();
  cmd->add_option("--sigma", f.sigma, "convexification weight on e")->capture_default_str();
}

void add_solver_flags(CLI::App* cmd, CommonFlags& f)
{
  cmd->add_option("--tol", f.tol, "stop when |a[k+1] - a[k]| < tol")->capture_default_str();
  cmd->add_option("--max-iter", f.max_iter, "iteration budget")->capture_default_str();
}

int run_dist(const std::string& file_a, const std::string& file_b, const std::string& pose_a, const std::string& pose_b,
             bool gradient, bool accelerate, const CommonFlags& f, std::ostream& out)
{
  const auto A = io::load_body(file_a);
  const auto B = io::load_body(file_b);
  const auto MA = io::make_metric(A, f.h, f.k, f.eps, f.sigma);
  const auto MB = io::make_metric(B, f.h, f.k, f.eps, f.sigma);
  const auto n = MA.dim();
  const auto pa = pose_a.empty() ? RigidPose<double>::identity(n) : io::pose_from_list(io::parse_list(pose_a), n);
  const auto pb = pose_b.empty() ? RigidPose<double>::identity(n) : io::pose_from_list(io::parse_list(pose_b), n);
  SolverOptions opt;
  opt.tol = f.tol;
  opt.max_iter = f.max_iter;
  opt.with_gradient = gradient;
  opt.accelerate = accelerate;
  try {
    const auto res = differentiable_distance(MA, MB, pa, pb, opt);
    emit(f.out, io::metric_result_to_json(res).dump(2), out);
    return 0;
  } catch (const MaxIterExceeded& e) {
    const nlohmann::json j = {{"converged", false},
                              {"overlap", false},
                              {"error", e.what()},
                              {"iterations", e.iterations()},
                              {"residual", e.residual()},
                              {"last_iterate", io::vector_to_json(e.last_iterate())}};
    emit(f.out, j.dump(2), out);
    return 1;
  }
}

int run_bench(bench::BenchConfig cfg, const std::string& summary, std::ostream& out)
{
  const auto stats = bench::run_benchmark(cfg);
  const std::string csv = bench::records_to_csv(stats.records);
  const auto sj = bench::summary_json(cfg, stats).dump(2);
  if (cfg.output.empty()) {
    out << csv;
    if (!summary.empty())
      io::write_text(summary, sj);
    else
      out << sj << '\n';
  } else {
    io::write_text(cfg.output, csv);
    io::write_text(summary.empty() ? bench::summary_path(cfg.output) : summary, sj);
  }
  return 0;
}

int run_sweep(const std::string& file_a, const std::string& file_b, const std::string& path_file, int n_samples, bool accelerate,
              const CommonFlags& f, std::ostream& out)
{
  const auto A = io::load_body(file_a);
  const auto B = io::load_body(file_b);
  const auto MA = io::make_metric(A, f.h, f.k, f.eps, f.sigma);
  const auto MB = io::make_metric(B, f.h, f.k, f.eps, f.sigma);
  const auto path = io::path_from_json(io::read_json(path_file), MA.dim());
  SweepOptions opt;
  opt.solver.tol = f.tol;
  opt.solver.max_iter = f.max_iter;
  opt.solver.accelerate = accelerate;
  emit(f.out, io::sweep_to_csv(sweep(MA, MB, path, n_samples, opt)), out);
  return 0;
}

int run_calibrate(const std::string& file, int samples, const CommonFlags& f, std::ostream& out)
{
  const auto body = io::load_body(file);
  const PhiParams<double> phi(body.config.h.value_or(f.h), body.config.k.value_or(f.k));
  const auto weights = body.config.weights ? *body.config.weights : auto_weights(body.polytope);
  CalibrationOptions opt;
  opt.eps0 = f.eps;
  opt.sigma_max = f.sigma;
  opt.samples = samples;
  opt.seed = f.seed;
  try {
    const auto c = calibrate(body.polytope, phi, weights, opt);
    auto j = io::calibration_to_json(c);
    j["max_simultaneous_positive"] = max_simultaneous_positive(body.polytope);
    j["weights"] = weights;
    emit(f.out, j.dump(2), out);
    return 0;
  } catch (const CalibrationFailed& e) {
    emit(f.out, nlohmann::json{{"error", e.what()}}.dump(2), out);
    return 1;
  }
}

int run_validate(const std::string& file, int samples, bool explicit_pair, const CommonFlags& f, std::ostream& out)
{
  nlohmann::json reports = nlohmann::json::array();
  bool ok = true;

  const PhiParams<double> phi(f.h, f.k);
  const auto basic = validate_basic_p2s(phi);
  ok = ok && basic.passed();
  reports.push_back(io::report_to_json(basic));

  const Polytope P = file.empty() ? random_polytope<double>(f.seed, f.dim, f.n_ineq) : io::load_body(file).polytope;
  const auto weights = auto_weights(P);
  double eps = f.eps, sigma = f.sigma;
  if (!explicit_pair) {
    CalibrationOptions opt;
    opt.eps0 = f.eps;
    opt.sigma_max = f.sigma;
    opt.samples = samples;
    opt.seed = f.seed;
    try {
      const auto c = calibrate(P, phi, weights, opt);
      eps = c.eps;
      sigma = c.sigma;
    } catch (const CalibrationFailed& e) {
      reports.push_back({{"subject", "calibration"}, {"passed", false}, {"error", e.what()}});
      emit(f.out, nlohmann::json{{"passed", false}, {"reports", reports}}.dump(2), out);
      return 1;
    }
  }
  // Fresh seed so the check is independent of the calibration draw.
  const Metric M(P, phi, weights, eps, sigma);
  const auto hess = validate_hessian_bounds(M, samples, f.seed ^ 0x9e3779b97f4a7c15ULL);
  ok = ok && hess.passed();
  reports.push_back(io::report_to_json(hess));

  emit(f.out, nlohmann::json{{"passed", ok}, {"reports", reports}}.dump(2), out);
  return ok ? 0 : 1;
}

} // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Differentiable distance between convex polytopes"};
  app.name("diffdist");
  // -h is taken by the smoothing parameter.
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  CommonFlags f;

  std::string file_a, file_b, pose_a, pose_b, path_file, poly_file, summary;
  bool gradient = false, accelerate = false;
  int n_samples = 1000, calib_samples = 10000, workers = 1;
  double scale = 1.0;

  auto* dist = app.add_subcommand("dist", "metric between two bodies (polytope or metric config JSON)");
  dist->add_option("a", file_a, "body A")->required();
  dist->add_option("b", file_b, "body B")->required();
  dist->add_option("--pose-a", pose_a, "translation[,rotation coords] of A, comma separated");
  dist->add_option("--pose-b", pose_b, "translation[,rotation coords] of B, comma separated");
  dist->add_flag("--gradient", gradient, "include the pose gradient");
  dist->add_flag("--accelerate", accelerate, "Newton-accelerated iteration");
  add_metric_flags(dist, f);
  add_solver_flags(dist, f);
  dist->add_option("--out", f.out, "output file (default stdout)");

  auto* bench_cmd = app.add_subcommand("bench", "convergence benchmark over random pairs");
  add_phi_flags(bench_cmd, f);
  bench_cmd->add_option("--eps", f.eps, "calibration eps")->capture_default_str();
  bench_cmd->add_option("--sigma", f.sigma, "largest sigma tried by calibration")->capture_default_str();
  add_solver_flags(bench_cmd, f);
  bench_cmd->add_option("--seed", f.seed, "base seed")->capture_default_str();
  bench_cmd->add_option("--n-pairs", f.n_pairs, "number of pairs")->capture_default_str();
  bench_cmd->add_option("--n-ineq", f.n_ineq, "inequalities per polytope")->capture_default_str();
  bench_cmd->add_option("--dim", f.dim, "ambient dimension")->capture_default_str();
  bench_cmd->add_option("--min-dist", f.min_dist, "Euclidean distance filter")->capture_default_str();
  bench_cmd->add_option("--scale", scale, "geometry scale")->capture_default_str();
  bench_cmd->add_option("--calibration-samples", calib_samples, "Hessian samples per calibration")->capture_default_str();
  bench_cmd->add_option("--workers", workers, "worker threads")->capture_default_str();
  bench_cmd->add_option("--out", f.out, "CSV file (default stdout)");
  bench_cmd->add_option("--summary", summary, "summary JSON (default next to --out)");

  auto* sweep_cmd = app.add_subcommand("sweep", "metric and Euclidean distance along a pose path");
  sweep_cmd->add_option("a", file_a, "body A")->required();
  sweep_cmd->add_option("b", file_b, "body B")->required();
  sweep_cmd->add_option("--path", path_file, "path JSON")->required();
  sweep_cmd->add_option("--n-samples", n_samples, "samples in tau")->capture_default_str();
  sweep_cmd->add_flag("--accelerate", accelerate, "Newton-accelerated iteration");
  add_metric_flags(sweep_cmd, f);
  add_solver_flags(sweep_cmd, f);
  sweep_cmd->add_option("--out", f.out, "CSV file (default stdout)");

  auto* calib = app.add_subcommand("calibrate", "largest (eps, sigma) passing the Hessian check");
  calib->add_option("polytope", poly_file, "polytope or metric config JSON")->required();
  add_metric_flags(calib, f);
  calib->add_option("--seed", f.seed, "sampling seed")->capture_default_str();
  calib->add_option("--n-samples", calib_samples, "Hessian samples")->capture_default_str();
  calib->add_option("--out", f.out, "output file (default stdout)");

  auto* validate = app.add_subcommand("validate", "kernel and metric property checks");
  validate->add_option("--polytope", poly_file, "polytope JSON (default: random)");
  add_phi_flags(validate, f);
  auto* eps_opt = validate->add_option("--eps", f.eps, "eps (with --sigma: skip calibration)")->capture_default_str();
  auto* sigma_opt = validate->add_option("--sigma", f.sigma, "sigma (with --eps: skip calibration)")->capture_default_str();
  validate->add_option("--seed", f.seed, "seed")->capture_default_str();
  validate->add_option("--n-ineq", f.n_ineq, "inequalities of the random polytope")->capture_default_str();
  validate->add_option("--dim", f.dim, "dimension of the random polytope")->capture_default_str();
  validate->add_option("--n-samples", calib_samples, "Hessian samples")->capture_default_str();
  validate->add_option("--out", f.out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0)
      return 0;
    err << app.help();
    return 2;
  }

  try {
    if (*dist)
      return run_dist(file_a, file_b, pose_a, pose_b, gradient, accelerate, f, out);
    if (*bench_cmd) {
      bench::BenchConfig cfg;
      cfg.n_pairs = f.n_pairs;
      cfg.dim = f.dim;
      cfg.n_ineq = f.n_ineq;
      cfg.min_euclid_dist = f.min_dist;
      cfg.h = f.h;
      cfg.k = f.k;
      cfg.tol = f.tol;
      cfg.max_iter = f.max_iter;
      cfg.seed = f.seed;
      cfg.scale = scale;
      cfg.eps = f.eps;
      cfg.sigma_max = f.sigma;
      cfg.calibration_samples = calib_samples;
      cfg.workers = workers;
      cfg.output = f.out;
      return run_bench(cfg, summary, out);
    }
    if (*sweep_cmd)
      return run_sweep(file_a, file_b, path_file, n_samples, accelerate, f, out);
    if (*calib)
      return run_calibrate(poly_file, calib_samples, f, out);
    if (*validate)
      return run_validate(poly_file, calib_samples, eps_opt->count() > 0 && sigma_opt->count() > 0, f, out);
  } catch (const CalibrationFailed& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const MaxIterExceeded& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

} // namespace diffdist
