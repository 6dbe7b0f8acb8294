#ifndef DIFFDIST_IO_HPP
#define DIFFDIST_IO_HPP

// JSON and CSV serialization for the double-precision front end.

#include "diffdist/gap_solver.hpp"
#include "diffdist/halfspace.hpp"
#include "diffdist/p2s_metric.hpp"
#include "diffdist/validation.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace diffdist::io {

using nlohmann::json;

/// {"dim": n, "halfspaces": [{"u": [..], "v": s}, ..]}. The cover ball is
/// recomputed on load.
Polytope polytope_from_json(const json& j);
json polytope_to_json(const Polytope& P);
Polytope load_polytope(const std::filesystem::path& path);
void save_polytope(const Polytope& P, const std::filesystem::path& path);

/// Metric parameters; fields left empty fall back to caller defaults.
struct MetricConfig
{
  std::optional<double> h;
  std::optional<int> k;
  std::optional<double> eps;
  std::optional<double> sigma;
  std::optional<std::vector<double>> weights;
};

struct Body
{
  Polytope polytope;
  MetricConfig config;
};

/// Reads either a bare polytope file or a metric configuration
/// {"h", "k", "eps", "sigma", "weights", "polytope": <file or object>}.
/// Relative polytope paths resolve against the configuration's directory.
Body load_body(const std::filesystem::path& path);

/// Builds the metric, filling unset fields from the defaults; weights
/// default to the automatic rule.
Metric make_metric(const Body& body, double h, int k, double eps, double sigma);

json report_to_json(const ValidationReport& report);
json witness_to_json(const WitnessResult<double>& w);
json metric_result_to_json(const MetricResult<double>& r);
json calibration_to_json(const CalibrationResult& c);

std::vector<double> vector_from_json(const json& j);
json vector_to_json(const Vec& v);
json vector_to_json(const DenseVector<double>& v);

/// Comma-separated list of numbers ("1,0,0.5").
std::vector<double> parse_list(const std::string& text);

/// Pose from [translation (n), rotation coordinates (n(n−1)/2)]; rotation
/// may be omitted.
RigidPose<double> pose_from_list(const std::vector<double>& values, Eigen::Index dim);

/// Sweep path {"a": {...}, "b": {...}} with per-body "translation",
/// "rotation" (coordinates), "angular_rate", "linear_rate"; all optional.
PosePath<double> path_from_json(const json& j, Eigen::Index dim);

/// CSV with header tau,lambda,dlambda_dtau,euclid_dist,euclid_fd_deriv,iterations,converged.
std::string sweep_to_csv(const std::vector<SweepRow<double>>& rows);

json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace diffdist::io

#endif // DIFFDIST_IO_HPP
