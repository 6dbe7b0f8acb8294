#include "diffdist/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace diffdist::io {

namespace {

std::string format_double(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Vec to_vec(const std::vector<double>& v)
{
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

Vec field_or_zero(const json& j, const char* key, Eigen::Index size)
{
  if (!j.contains(key))
    return Vec::Zero(size);
  const auto v = vector_from_json(j.at(key));
  if (static_cast<Eigen::Index>(v.size()) != size)
    throw ConfigMismatch(std::string("path: field '") + key + "' should have " + std::to_string(size) + " entries");
  return to_vec(v);
}

} // namespace

std::vector<double> vector_from_json(const json& j)
{
  if (!j.is_array())
    throw InvalidParams("expected a JSON array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number())
      throw InvalidParams("expected a JSON array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

json vector_to_json(const Vec& v)
{
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out.push_back(v(i));
  return out;
}

json vector_to_json(const DenseVector<double>& v)
{
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out.push_back(v(i));
  return out;
}

Polytope polytope_from_json(const json& j)
{
  if (!j.is_object() || !j.contains("dim") || !j.contains("halfspaces"))
    throw InvalidParams("polytope JSON needs \"dim\" and \"halfspaces\"");
  const auto dim = j.at("dim").get<Eigen::Index>();
  std::vector<HalfSpace<double>> hs;
  for (const auto& h : j.at("halfspaces")) {
    const auto u = vector_from_json(h.at("u"));
    if (static_cast<Eigen::Index>(u.size()) != dim)
      throw ConfigMismatch("polytope JSON: halfspace direction does not match dim");
    hs.push_back({to_vec(u), h.at("v").get<double>()});
  }
  return make_polytope<double>(hs, dim);
}

json polytope_to_json(const Polytope& P)
{
  json hs = json::array();
  for (Eigen::Index i = 0; i < P.size(); ++i) {
    const auto h = P.halfspace(i);
    hs.push_back({{"u", vector_to_json(h.u)}, {"v", h.v}});
  }
  return {{"dim", P.dim()}, {"halfspaces", hs}};
}

json read_json(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw InvalidParams("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidParams(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
  std::ofstream out(path);
  if (!out)
    throw InvalidParams("cannot write " + path.string());
  out << text;
  if (text.empty() || text.back() != '\n')
    out << '\n';
}

Polytope load_polytope(const std::filesystem::path& path)
{
  return polytope_from_json(read_json(path));
}

void save_polytope(const Polytope& P, const std::filesystem::path& path)
{
  write_text(path, polytope_to_json(P).dump(2));
}

Body load_body(const std::filesystem::path& path)
{
  const json j = read_json(path);
  try {
    if (j.contains("halfspaces"))
      return {polytope_from_json(j), {}};
    if (!j.contains("polytope"))
      throw InvalidParams(path.string() + ": neither a polytope nor a metric configuration");

    const auto& pj = j.at("polytope");
    Polytope P = pj.is_string() ? load_polytope(path.parent_path() / pj.get<std::string>()) : polytope_from_json(pj);
    MetricConfig c;
    if (j.contains("h"))
      c.h = j.at("h").get<double>();
    if (j.contains("k"))
      c.k = j.at("k").get<int>();
    if (j.contains("eps"))
      c.eps = j.at("eps").get<double>();
    if (j.contains("sigma"))
      c.sigma = j.at("sigma").get<double>();
    if (j.contains("weights"))
      c.weights = vector_from_json(j.at("weights"));
    return {std::move(P), c};
  } catch (const json::exception& e) {
    throw InvalidParams(path.string() + ": " + e.what());
  }
}

Metric make_metric(const Body& body, double h, int k, double eps, double sigma)
{
  const auto& c = body.config;
  PhiParams<double> phi(c.h.value_or(h), c.k.value_or(k));
  auto weights = c.weights ? *c.weights : auto_weights(body.polytope);
  return Metric(body.polytope, phi, std::move(weights), c.eps.value_or(eps), c.sigma.value_or(sigma));
}

json report_to_json(const ValidationReport& report)
{
  json checks = json::array();
  for (const auto& c : report.checks) {
    json cj = {{"name", c.name}, {"passed", c.passed}, {"failures", c.failures}, {"samples", c.samples}, {"worst", c.worst}};
    if (!c.note.empty())
      cj["note"] = c.note;
    checks.push_back(cj);
  }
  return {{"subject", report.subject}, {"passed", report.passed()}, {"checks", checks}};
}

json witness_to_json(const WitnessResult<double>& w)
{
  return {{"a_star", vector_to_json(w.a_star)},
          {"b_star", vector_to_json(w.b_star)},
          {"iterations", w.iterations},
          {"converged", w.converged},
          {"residual", w.residual},
          {"overlap", w.overlap}};
}

json metric_result_to_json(const MetricResult<double>& r)
{
  json out = {{"lambda", r.lambda},
              {"overlap", r.witness.overlap},
              {"converged", r.witness.converged},
              {"witness", witness_to_json(r.witness)},
              {"euclid_dist", r.euclid.distance},
              {"solve_us", r.solve_us}};
  if (!r.euclid.overlap) {
    out["euclid_a"] = vector_to_json(r.euclid.a0_star);
    out["euclid_b"] = vector_to_json(r.euclid.b0_star);
  }
  if (r.gradient)
    out["gradient"] = vector_to_json(*r.gradient);
  return out;
}

json calibration_to_json(const CalibrationResult& c)
{
  return {{"eps", c.eps},
          {"sigma", c.sigma},
          {"max_hessian_norm", c.max_hessian_norm},
          {"analytic_bound", c.analytic_bound},
          {"candidates_tested", c.candidates_tested}};
}

std::vector<double> parse_list(const std::string& text)
{
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      throw InvalidParams("not a number: '" + item + "'");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos)
      throw InvalidParams("not a number: '" + item + "'");
    out.push_back(x);
  }
  return out;
}

RigidPose<double> pose_from_list(const std::vector<double>& values, Eigen::Index dim)
{
  const auto size = static_cast<Eigen::Index>(values.size());
  if (size != dim && size != twist_dof(dim))
    throw ConfigMismatch("pose needs " + std::to_string(dim) + " or " + std::to_string(twist_dof(dim)) + " numbers");
  Vec t(dim);
  for (Eigen::Index j = 0; j < dim; ++j)
    t(j) = values[static_cast<std::size_t>(j)];
  Vec omega = Vec::Zero(rotation_dof(dim));
  for (Eigen::Index j = dim; j < size; ++j)
    omega(j - dim) = values[static_cast<std::size_t>(j)];
  return RigidPose<double>::from_twist(omega, t);
}

PosePath<double> path_from_json(const json& j, Eigen::Index dim)
{
  auto body = [&](const char* key) {
    const json b = j.contains(key) ? j.at(key) : json::object();
    const Vec t = field_or_zero(b, "translation", dim);
    const Vec omega = field_or_zero(b, "rotation", rotation_dof(dim));
    return BodyMotion<double>{RigidPose<double>::from_twist(omega, t), field_or_zero(b, "angular_rate", rotation_dof(dim)),
                              field_or_zero(b, "linear_rate", dim)};
  };
  try {
    return {body("a"), body("b")};
  } catch (const json::exception& e) {
    throw InvalidParams(std::string("path: ") + e.what());
  }
}

std::string sweep_to_csv(const std::vector<SweepRow<double>>& rows)
{
  std::string out = "tau,lambda,dlambda_dtau,euclid_dist,euclid_fd_deriv,iterations,converged\n";
  for (const auto& r : rows) {
    out += format_double(r.tau) + ',' + format_double(r.lambda) + ',' + format_double(r.dlambda_dtau) + ',' +
           format_double(r.euclid_dist) + ',' + format_double(r.euclid_fd_deriv) + ',' + std::to_string(r.iterations) + ',' +
           (r.converged ? "1" : "0") + '\n';
  }
  return out;
}

} // namespace diffdist::io
