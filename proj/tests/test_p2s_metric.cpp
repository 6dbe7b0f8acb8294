#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "diffdist/p2s_metric.hpp"
#include "oracles.hpp"

#include <random>

using namespace diffdist;

namespace {

const PhiParams<double> kPhi(0.1, 2);

Vec vec(std::initializer_list<double> xs)
{
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs)
    v(i++) = x;
  return v;
}

Metric random_metric(std::uint64_t seed, double eps = 0.01, double sigma = 0.5)
{
  const auto P = random_polytope<double>(seed, 3, 10);
  return Metric(P, kPhi, auto_weights(P), eps, sigma);
}

Vec sample_near(std::mt19937_64& rng, const Polytope& P, double spread)
{
  std::uniform_real_distribution<double> U(-1, 1);
  Vec p(P.dim());
  for (Eigen::Index j = 0; j < P.dim(); ++j)
    p(j) = P.cover_center()(j) + spread * P.cover_radius() * U(rng);
  return p;
}

double plane_gap(const Polytope& P, const Vec& p)
{
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < P.size(); ++i)
    gap = std::min(gap, std::abs(P.evaluate(i, p)));
  return gap;
}

} // namespace

TEST_CASE("weak_e vanishes inside")
{
  const auto M = random_metric(3);
  const auto f = weak_e(M, M.polytope().interior_point());
  CHECK(f.value == 0.0);
  CHECK(f.gradient.isZero(0));
  CHECK(f.hessian.isZero(0));
}

TEST_CASE("weak_e of a single violated facet")
{
  // Square with x ≤ 0 and far walls; only x ≤ 0 is violated at (1, 0).
  const auto P = make_polytope<double>({{vec({1, 0}), 0}, {vec({-1, 0}), -10}, {vec({0, 1}), -10}, {vec({0, -1}), -10}}, 2);
  const Metric M(P, kPhi, {0.5, 0.5, 0.5, 0.5}, 0.01, 0.5);
  const auto f = weak_e(M, vec({1, 0}));
  CHECK(f.value == doctest::Approx(0.5 * phi(1.0, kPhi)).epsilon(1e-14));
  CHECK(f.gradient(0) == doctest::Approx(0.5 * phi_d1(1.0, kPhi)).epsilon(1e-14));
  CHECK(f.hessian(0, 0) == doctest::Approx(0.5 * phi_d2(1.0, kPhi)).epsilon(1e-14));
}

TEST_CASE("weak_e Hessian is PSD and bounded by the active weights")
{
  std::mt19937_64 rng(21);
  for (int t = 0; t < 1000; ++t) {
    const auto M = random_metric(static_cast<std::uint64_t>(t % 20));
    const Vec p = sample_near(rng, M.polytope(), 3.0);
    const auto f = weak_e(M, p);
    Eigen::SelfAdjointEigenSolver<Mat> es(f.hessian);
    double active = 0;
    for (Eigen::Index i = 0; i < M.polytope().size(); ++i)
      if (M.polytope().evaluate(i, p) > 0)
        active += M.weights()[static_cast<std::size_t>(i)];
    CHECK(es.eigenvalues().minCoeff() >= -1e-14);
    CHECK(es.eigenvalues().maxCoeff() <= active + 1e-14);
  }
}

TEST_CASE("rho values")
{
  const auto M = random_metric(5);
  const auto& P = M.polytope();
  const auto c = rho(M, P.cover_center());
  CHECK(c.value == doctest::Approx(-0.5 * P.cover_radius() * P.cover_radius()));
  CHECK(c.gradient.norm() < 1e-15);
  CHECK(c.hessian.isIdentity(0));
  const Vec on_sphere = P.cover_center() + P.cover_radius() * vec({0, 0.6, 0.8});
  CHECK(std::abs(rho(M, on_sphere).value) < 1e-12);
  CHECK(rho(M, P.interior_point()).value < 0);
}

TEST_CASE("strict_E special values")
{
  const auto M = random_metric(8);
  const auto& P = M.polytope();
  const auto in = strict_E(M, P.interior_point());
  CHECK(in.value == 0.0);
  CHECK(in.gradient.isZero(0));
  CHECK(in.hessian.isZero(0));

  // On the cover sphere ρ = 0, so E = σ·e.
  const Vec p = P.cover_center() + P.cover_radius() * vec({0.48, -0.6, 0.64});
  REQUIRE_FALSE(contains(P, p));
  CHECK(strict_E(M, p).value == doctest::Approx(M.sigma() * weak_e(M, p).value).epsilon(1e-12));
}

TEST_CASE("E is zero exactly on the set")
{
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10000; ++t) {
    const auto M = random_metric(static_cast<std::uint64_t>(t % 25));
    const Vec p = sample_near(rng, M.polytope(), 1.5);
    const auto f = strict_E(M, p);
    const bool in = contains(M.polytope(), p);
    CHECK(f.value >= 0.0);
    CHECK((f.value == 0.0) == in);
    CHECK((f.gradient.isZero(0)) == in);
    CHECK((project(M, p) == p) == in);
  }
}

TEST_CASE("strict_E derivatives match central differences")
{
  std::mt19937_64 rng(17);
  const double step = 1e-6;
  int tested = 0;
  double worst_g = 0, worst_h = 0;
  while (tested < 1000) {
    const auto M = random_metric(static_cast<std::uint64_t>(tested % 20), 0.01, 0.989);
    const Vec p = sample_near(rng, M.polytope(), 3.0);
    if (contains(M.polytope(), p) || plane_gap(M.polytope(), p) < 1e-4)
      continue;
    ++tested;
    const auto f = strict_E(M, p);
    Vec g(3);
    Mat H(3, 3);
    for (int j = 0; j < 3; ++j) {
      Vec e = Vec::Zero(3);
      e(j) = step;
      const auto fp = strict_E(M, Vec(p + e));
      const auto fm = strict_E(M, Vec(p - e));
      g(j) = (fp.value - fm.value) / (2 * step);
      H.col(j) = (fp.gradient - fm.gradient) / (2 * step);
    }
    worst_g = std::max(worst_g, (g - f.gradient).norm() / std::max(1.0, f.gradient.norm()));
    worst_h = std::max(worst_h, (H - f.hessian).norm() / std::max(1.0, f.hessian.norm()));
  }
  CHECK(worst_g <= 1e-5);
  CHECK(worst_h <= 1e-5);
}

TEST_CASE("projection iterates decrease E")
{
  std::mt19937_64 rng(6);
  for (int t = 0; t < 50; ++t) {
    const auto M = random_metric(static_cast<std::uint64_t>(t), 0.01, 0.5);
    Vec p = sample_near(rng, M.polytope(), 3.0);
    double E = strict_E(M, p).value;
    for (int it = 0; it < 200 && E > 0; ++it) {
      const Vec q = project(M, p);
      CHECK((q - p).norm() > 0);
      const double Eq = strict_E(M, q).value;
      CHECK(Eq < E);
      p = q;
      E = Eq;
    }
  }
}

TEST_CASE("projection is injective")
{
  std::mt19937_64 rng(12);
  for (int t = 0; t < 1000; ++t) {
    const auto M = random_metric(static_cast<std::uint64_t>(t % 20), 0.01, 0.5);
    const Vec p = sample_near(rng, M.polytope(), 3.0);
    const Vec q = sample_near(rng, M.polytope(), 3.0);
    if ((p - q).norm() > 1e-6)
      CHECK(project(M, p) != project(M, q));
  }
}

TEST_CASE("automatic weights satisfy the subset bound")
{
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto P = random_polytope<double>(seed, 3, 10);
    const int m = oracle::max_simultaneous_positive(P);
    const auto w = auto_weights(P);
    CHECK(w[0] == doctest::Approx(1.0 / (m + 0.2)));
    CHECK(weight_bound_holds(w, m));
  }
  CHECK_FALSE(weight_bound_holds(std::vector<double>(6, 0.4), 3));
}

TEST_CASE("metric construction errors")
{
  const auto P = random_polytope<double>(1, 3, 10);
  CHECK_THROWS_AS(Metric(P, kPhi, std::vector<double>(3, 0.1), 0.01, 0.5), InvalidParams);
  CHECK_THROWS_AS(Metric(P, kPhi, std::vector<double>(10, -0.1), 0.01, 0.5), InvalidParams);
  CHECK_THROWS_AS(Metric(P, kPhi, auto_weights(P), 0.0, 0.5), InvalidParams);
}

TEST_CASE("calibration")
{
  const auto P = random_polytope<double>(2, 3, 10);
  const auto w = auto_weights(P);

  CalibrationOptions degenerate;
  degenerate.eps0 = 0;
  degenerate.sigma_max = 0;
  CHECK_THROWS_AS(calibrate(P, kPhi, w, degenerate), CalibrationFailed);

  CalibrationOptions opt;
  opt.samples = 2000;
  opt.seed = 99;
  const auto c = calibrate(P, kPhi, w, opt);
  // On the grid ε₀·2⁻ʲ × σ_max·2⁻ⁱ.
  const double j = std::log2(0.01 / c.eps), i = std::log2(0.989 / c.sigma);
  CHECK(j == std::round(j));
  CHECK(i == std::round(i));
  CHECK(c.max_hessian_norm <= 1.0 - opt.target_margin);
  CHECK(c.analytic_bound >= 3 * c.sigma);

  // Independent re-runs with fresh seeds, uniform and shell-weighted.
  const Metric M(P, kPhi, w, c.eps, c.sigma);
  CHECK(validate_hessian_bounds(M, 2000, 12345).passed());
  const auto shell = detail::hessian_sweep(M, 20000, 777, 3.0, 1.0, detail::SampleMix::BoxAndShell);
  CHECK(shell.norm_violations == 0);
  CHECK(shell.not_positive_definite == 0);
}

TEST_CASE("shell sampling exposes the cover-sphere term")
{
  // Near ρ = 0 the Hessian carries ε²‖p − p_c‖²/(σe), large where e is
  // small. Uniform box samples rarely land there.
  const auto P = random_polytope<double>(7, 3, 10);
  const Metric M(P, kPhi, auto_weights(P), 0.01, 0.989);
  const auto shell = detail::hessian_sweep(M, 20000, 1, 3.0, 1.0, detail::SampleMix::BoxAndShell);
  CHECK(shell.norm_violations > 0);
  CHECK(shell.max_norm > 1.0);
  const Metric smaller_eps(P, kPhi, auto_weights(P), 0.001, 0.989);
  CHECK(detail::hessian_sweep(smaller_eps, 20000, 1, 3.0, 1.0, detail::SampleMix::BoxAndShell).norm_violations == 0);
}

TEST_CASE("validator flags an oversized sigma")
{
  const auto P = random_polytope<double>(4, 3, 10);
  const auto w = auto_weights(P);
  CHECK(validate_hessian_bounds(Metric(P, kPhi, w, 0.01, 0.1), 10000, 1).passed());
  // Keep doubling σ until the sampled check breaks.
  double sigma = 0.989;
  const Check* norm = nullptr;
  ValidationReport report;
  for (int j = 0; j < 8; ++j) {
    sigma *= 2;
    report = validate_hessian_bounds(Metric(P, kPhi, w, 0.01, sigma), 10000, 1);
    norm = report.find("spectral_norm_below_one");
    REQUIRE(norm != nullptr);
    if (!norm->passed)
      break;
  }
  CAPTURE(sigma);
  CHECK_FALSE(norm->passed);
  CHECK(norm->worst > 1.0);
  CHECK(report.find("interior_hessian_zero")->passed);
}

TEST_CASE("transformed metric is the composition with the inverse pose")
{
  const auto M = random_metric(11);
  const auto q = RigidPose<double>::from_twist(vec({0.4, -0.2, 0.9}), vec({1, -2, 0.5}));
  const auto Mq = M.transformed(q);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    const Vec p = sample_near(rng, M.polytope(), 3.0);
    CHECK(strict_E(Mq, q.apply(p)).value == doctest::Approx(strict_E(M, p).value).epsilon(1e-10));
  }
}
