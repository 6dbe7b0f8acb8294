#include "diffdist/bench.hpp"

#include "diffdist/euclid.hpp"
#include "diffdist/gap_solver.hpp"
#include "diffdist/p2s_metric.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>

namespace diffdist::bench {

namespace {

constexpr int kMaxAttempts = 10000;

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b)
{
  return splitmix64(splitmix64(seed ^ splitmix64(a)) ^ b);
}

std::string format_double(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Histogram histogram(const std::vector<double>& edges, const std::vector<double>& values)
{
  Histogram h{edges, std::vector<long>(edges.size() - 1, 0)};
  for (const double v : values) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    if (it == edges.begin())
      continue;
    const auto bin = static_cast<std::size_t>(it - edges.begin() - 1);
    if (bin < h.counts.size())
      ++h.counts[bin];
  }
  return h;
}

struct PairOutcome
{
  BenchRecord record;
  long rejected = 0;
};

PairOutcome run_pair(const BenchConfig& cfg, int pair_id)
{
  PairOutcome out;
  out.record.pair_id = pair_id;
  const PhiParams<double> phi(cfg.h, cfg.k);
  try {
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      const std::uint64_t base = derive(cfg.seed, static_cast<std::uint64_t>(pair_id), static_cast<std::uint64_t>(attempt));
      const Polytope A = random_polytope<double>(derive(base, 0, 0), cfg.dim, cfg.n_ineq, cfg.scale);
      const Polytope B = random_polytope<double>(derive(base, 1, 0), cfg.dim, cfg.n_ineq, cfg.scale);
      const auto eu = euclid_pair(A, B);
      if (eu.overlap || eu.distance < cfg.min_euclid_dist) {
        ++out.rejected;
        continue;
      }
      out.record.euclid_dist = eu.distance;

      CalibrationOptions copt;
      copt.eps0 = cfg.eps;
      copt.sigma_max = cfg.sigma_max;
      copt.samples = cfg.calibration_samples;
      copt.seed = derive(base, 2, 0);
      const auto wa = auto_weights(A);
      const auto ca = calibrate(A, phi, wa, copt);
      copt.seed = derive(base, 3, 0);
      const auto wb = auto_weights(B);
      const auto cb = calibrate(B, phi, wb, copt);
      const Metric MA(A, phi, wa, ca.eps, ca.sigma);
      const Metric MB(B, phi, wb, cb.eps, cb.sigma);

      SolverOptions sopt;
      sopt.tol = cfg.tol;
      sopt.max_iter = cfg.max_iter;
      const auto id = RigidPose<double>::identity(cfg.dim);
      try {
        const auto res = differentiable_distance(MA, MB, id, id, sopt);
        out.record.lambda = res.lambda;
        out.record.iterations = res.witness.iterations;
        out.record.time_us = res.solve_us;
        out.record.converged = res.witness.converged;
      } catch (const MaxIterExceeded& e) {
        out.record.iterations = e.iterations();
        out.record.converged = false;
        out.record.error = e.what();
      }
      return out;
    }
    throw GenerationFailed("no pair passed the distance filter in " + std::to_string(kMaxAttempts) + " attempts");
  } catch (const Error& e) {
    out.record.converged = false;
    out.record.error = e.what();
  }
  return out;
}

} // namespace

void BenchConfig::validate() const
{
  if (n_pairs < 1)
    throw InvalidParams("bench: n_pairs must be at least 1");
  if (!(min_euclid_dist > 0.0))
    throw InvalidParams("bench: min_euclid_dist must be positive");
  if (dim < 2 || dim > kMaxDim)
    throw InvalidParams("bench: dim must lie in [2, " + std::to_string(kMaxDim) + "]");
  if (n_ineq < dim + 1)
    throw InvalidParams("bench: n_ineq must be at least dim + 1");
  if (!(tol > 0.0) || max_iter < 1)
    throw InvalidParams("bench: tol must be positive and max_iter at least 1");
  if (!(scale > 0.0))
    throw InvalidParams("bench: scale must be positive");
  if (calibration_samples < 1 || workers < 1)
    throw InvalidParams("bench: calibration_samples and workers must be at least 1");
  PhiParams<double>(h, k);
}

std::vector<double> iteration_bin_edges()
{
  return {0, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, std::numeric_limits<double>::infinity()};
}

std::vector<double> time_bin_edges()
{
  return {0, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000, std::numeric_limits<double>::infinity()};
}

Aggregates aggregate(const std::vector<BenchRecord>& records)
{
  Aggregates a;
  a.n_records = static_cast<int>(records.size());
  std::vector<double> its, times;
  double it_sum = 0, t_sum = 0;
  for (const auto& r : records) {
    a.n_converged += r.converged ? 1 : 0;
    it_sum += r.iterations;
    t_sum += r.time_us;
    a.max_iterations = std::max(a.max_iterations, r.iterations);
    a.max_time_us = std::max(a.max_time_us, r.time_us);
    its.push_back(r.iterations);
    times.push_back(r.time_us);
  }
  if (!records.empty()) {
    a.mean_iterations = it_sum / static_cast<double>(records.size());
    a.mean_time_us = t_sum / static_cast<double>(records.size());
  }
  a.iterations_hist = histogram(iteration_bin_edges(), its);
  a.time_hist = histogram(time_bin_edges(), times);
  return a;
}

BenchStats run_benchmark(const BenchConfig& config)
{
  config.validate();
  BenchStats stats;
  std::vector<PairOutcome> outcomes(static_cast<std::size_t>(config.n_pairs));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int id = next++; id < config.n_pairs; id = next++)
      outcomes[static_cast<std::size_t>(id)] = run_pair(config, id);
  };
  if (config.workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < config.workers; ++w)
      pool.emplace_back(worker);
    for (auto& t : pool)
      t.join();
  }
  for (auto& o : outcomes) {
    stats.rejected += o.rejected;
    stats.records.push_back(std::move(o.record));
  }
  stats.aggregates = aggregate(stats.records);
  return stats;
}

std::string records_to_csv(const std::vector<BenchRecord>& records)
{
  std::string out = "pair_id,euclid_dist,lambda,iterations,time_us,converged\n";
  for (const auto& r : records) {
    out += std::to_string(r.pair_id) + ',' + format_double(r.euclid_dist) + ',' + format_double(r.lambda) + ',' +
           std::to_string(r.iterations) + ',' + format_double(r.time_us) + ',' + (r.converged ? "1" : "0") + '\n';
  }
  return out;
}

std::vector<BenchRecord> records_from_csv(const std::string& text)
{
  std::vector<BenchRecord> out;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "pair_id,euclid_dist,lambda,iterations,time_us,converged")
    throw InvalidParams("bench CSV: unexpected header");
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    std::istringstream row(line);
    std::string f[6];
    for (auto& field : f)
      if (!std::getline(row, field, ','))
        throw InvalidParams("bench CSV: short row '" + line + "'");
    BenchRecord r;
    r.pair_id = std::stoi(f[0]);
    r.euclid_dist = std::stod(f[1]);
    r.lambda = std::stod(f[2]);
    r.iterations = std::stoi(f[3]);
    r.time_us = std::stod(f[4]);
    r.converged = f[5] == "1";
    out.push_back(r);
  }
  return out;
}

nlohmann::json summary_json(const BenchConfig& c, const BenchStats& stats)
{
  using nlohmann::json;
  auto hist = [](const Histogram& h) {
    json edges = json::array();
    for (const double e : h.edges)
      edges.push_back(std::isinf(e) ? json("inf") : json(e));
    return json{{"edges", edges}, {"counts", h.counts}};
  };
  const auto& a = stats.aggregates;
  json failures = json::array();
  for (const auto& r : stats.records)
    if (!r.error.empty())
      failures.push_back({{"pair_id", r.pair_id}, {"error", r.error}});
  return {{"config",
           {{"n_pairs", c.n_pairs},
            {"dim", c.dim},
            {"n_ineq", c.n_ineq},
            {"min_euclid_dist", c.min_euclid_dist},
            {"h", c.h},
            {"k", c.k},
            {"tol", c.tol},
            {"max_iter", c.max_iter},
            {"seed", c.seed},
            {"scale", c.scale},
            {"eps", c.eps},
            {"sigma_max", c.sigma_max},
            {"calibration_samples", c.calibration_samples},
            {"workers", c.workers}}},
          {"aggregates",
           {{"n_records", a.n_records},
            {"n_converged", a.n_converged},
            {"mean_iterations", a.mean_iterations},
            {"max_iterations", a.max_iterations},
            {"mean_time_us", a.mean_time_us},
            {"max_time_us", a.max_time_us},
            {"rejected_pairs", stats.rejected}}},
          {"histograms", {{"iterations", hist(a.iterations_hist)}, {"time_us", hist(a.time_hist)}}},
          {"failures", failures}};
}

std::string summary_path(const std::string& csv_path)
{
  const auto dot = csv_path.find_last_of('.');
  const auto slash = csv_path.find_last_of('/');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? csv_path.substr(0, dot) : csv_path) + ".summary.json";
}

} // namespace diffdist::bench
