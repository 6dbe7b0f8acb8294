#ifndef DIFFDIST_BENCH_HPP
#define DIFFDIST_BENCH_HPP

// Convergence benchmark over random polytope pairs.

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace diffdist::bench {

struct BenchConfig
{
  int n_pairs = 1000;
  int dim = 3;
  int n_ineq = 10;
  double min_euclid_dist = 0.05;
  double h = 0.1;
  int k = 2;
  double tol = 1e-3;
  int max_iter = 5000;
  std::uint64_t seed = 1;
  /// Geometry scale handed to random_polytope.
  double scale = 1.0;
  /// Calibration: ε fixed, σ searched down from sigma_max.
  double eps = 0.01;
  double sigma_max = 0.989;
  int calibration_samples = 10000;
  int workers = 1;
  /// CSV destination; the summary goes next to it (see summary_path).
  std::string output;

  /// Throws InvalidParams on out-of-range fields.
  void validate() const;
};

struct BenchRecord
{
  int pair_id = 0;
  double euclid_dist = 0;
  double lambda = 0;
  int iterations = 0;
  double time_us = 0;
  bool converged = false;
  /// Failure message (not serialized).
  std::string error;
};

struct Histogram
{
  /// Bin i counts values in [edges[i], edges[i+1]); the last edge is +inf.
  std::vector<double> edges;
  std::vector<long> counts;
};

struct Aggregates
{
  int n_records = 0;
  int n_converged = 0;
  double mean_iterations = 0;
  int max_iterations = 0;
  double mean_time_us = 0;
  double max_time_us = 0;
  Histogram iterations_hist;
  Histogram time_hist;
};

struct BenchStats
{
  std::vector<BenchRecord> records;
  Aggregates aggregates;
  /// Pairs regenerated because they overlapped or were closer than the
  /// filter distance.
  long rejected = 0;
};

/// Fixed histogram edges.
std::vector<double> iteration_bin_edges();
std::vector<double> time_bin_edges();

/// Aggregates from records alone (same values the CSV round trip yields).
Aggregates aggregate(const std::vector<BenchRecord>& records);

/// Generates, filters, calibrates and solves n_pairs pairs. Deterministic in
/// every field except time_us for a fixed seed, regardless of workers.
BenchStats run_benchmark(const BenchConfig& config);

std::string records_to_csv(const std::vector<BenchRecord>& records);
/// Parses the CSV written by records_to_csv.
std::vector<BenchRecord> records_from_csv(const std::string& text);

nlohmann::json summary_json(const BenchConfig& config, const BenchStats& stats);

/// "<output without extension>.summary.json".
std::string summary_path(const std::string& csv_path);

} // namespace diffdist::bench

#endif // DIFFDIST_BENCH_HPP
