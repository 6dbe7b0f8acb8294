#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "diffdist/gap_solver.hpp"
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

Metric metric_of(const Polytope& P, double sigma = 0.5)
{
  return Metric(P, kPhi, auto_weights(P), 0.01, sigma);
}

struct Placed
{
  Metric A, B;
};

// Disjoint random pair already placed in the world, Euclidean gap ≥ 0.05.
Placed disjoint_pair(std::uint64_t& seed, double sigma = 0.5)
{
  for (;; ++seed) {
    const auto A = random_polytope<double>(2 * seed, 3, 10);
    const auto B = random_polytope<double>(2 * seed + 1, 3, 10);
    const auto e = euclid_pair(A, B);
    if (!e.overlap && e.distance >= 0.05) {
      ++seed;
      return {metric_of(A, sigma), metric_of(B, sigma)};
    }
  }
}

SolverOptions tight(double tol = 1e-10)
{
  SolverOptions o;
  o.tol = tol;
  o.max_iter = 100000;
  o.accelerate = true;
  return o;
}

const auto kId = RigidPose<double>::identity(3);

} // namespace

TEST_CASE("identical polytopes overlap")
{
  const auto M = metric_of(random_polytope<double>(3, 3, 10));
  const auto r = differentiable_distance(M, M, kId, kId);
  CHECK(r.lambda == 0.0);
  CHECK(r.witness.overlap);
  CHECK(r.witness.a_star == r.witness.b_star);
  CHECK(contains(M.polytope(), r.witness.a_star));
}

TEST_CASE("separated cubes")
{
  const auto C = metric_of(oracle::cube(1.0), 0.989);
  const auto pose_b = RigidPose<double>::from_translation(vec({3, 0, 0}));
  const auto r = differentiable_distance(C, C, kId, pose_b);
  CHECK_FALSE(r.witness.overlap);
  CHECK(r.lambda > 0);
  CHECK(r.euclid.distance == doctest::Approx(1.0));
  const auto MB = C.transformed(pose_b);
  CHECK(strict_E(MB, r.euclid.a0_star).value >= r.lambda);
  CHECK(std::abs(metric_value(C, MB, r.witness) - r.lambda) < 1e-12);
}

TEST_CASE("approaching cubes")
{
  const auto C = metric_of(oracle::cube(0.5), 0.989);
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 50; ++i) {
    const double gap = 1.0 - i / 50.0;
    const auto r = differentiable_distance(C, C, kId, RigidPose<double>::from_translation(vec({1.0 + gap, 0, 0})));
    CAPTURE(gap);
    if (i < 50) {
      CHECK(r.lambda < prev);
      CHECK(r.lambda > 0);
    } else {
      CHECK(r.lambda < 1e-4);
    }
    prev = r.lambda;
  }
}

TEST_CASE("fixed point is unique")
{
  std::uint64_t seed = 0;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 1);
  const double tol = 1e-9;
  for (int t = 0; t < 20; ++t) {
    const auto [MA, MB] = disjoint_pair(seed);
    const auto ref = alternate(MA, MB, MA.polytope().interior_point(), tol, 100000, false, true);
    for (int k = 0; k < 5; ++k) {
      const Vec a0 = MA.polytope().cover_center() + 2.0 * vec({g(rng), g(rng), g(rng)});
      const auto w = alternate(MA, MB, a0, tol, 100000, false, true);
      CHECK((w.a_star - ref.a_star).norm() <= 10 * tol);
    }
  }
}

TEST_CASE("starting at the fixed point takes one iteration")
{
  std::uint64_t seed = 40;
  const auto [MA, MB] = disjoint_pair(seed);
  const auto w = alternate(MA, MB, MA.polytope().interior_point(), 1e-10, 100000, false, true);
  const auto again = alternate(MA, MB, w.a_star, 1e-3, 10);
  CHECK(again.iterations == 1);
  CHECK(again.converged);
}

TEST_CASE("plain iteration stop rule and contraction")
{
  std::uint64_t seed = 100;
  for (int t = 0; t < 20; ++t) {
    const auto [MA, MB] = disjoint_pair(seed);
    const auto e = euclid_pair(MA.polytope(), MB.polytope());
    const auto w = alternate(MA, MB, e.a0_star, 1e-3, 5000, true);
    CHECK(w.converged);
    CHECK(w.residual < 1e-3);
    CHECK(static_cast<int>(w.residual_log.size()) == w.iterations);
    // Fixed-point certificate.
    CHECK((project(MA, project(MB, w.a_star)) - w.a_star).norm() <= 1e-3);
    CHECK(contraction_factor(MA, MB, w) < 1.0);
    // Eventually geometric: the tail of the log decreases step over step.
    const auto& log = w.residual_log;
    if (log.size() >= 4) {
      for (std::size_t i = log.size() / 2; i + 1 < log.size(); ++i)
        CHECK(log[i + 1] < log[i]);
    }
  }
}

TEST_CASE("roles can be swapped")
{
  std::uint64_t seed = 200;
  const double tol = 1e-9;
  for (int t = 0; t < 20; ++t) {
    const auto [MA, MB] = disjoint_pair(seed);
    const auto w = alternate(MA, MB, MA.polytope().interior_point(), tol, 100000, false, true);
    const auto swapped = alternate(MB, MA, MB.polytope().interior_point(), tol, 100000, false, true);
    CHECK((swapped.a_star - project(MB, w.a_star)).norm() <= 10 * tol);
    CHECK(std::abs(metric_value(MB, MA, swapped) - metric_value(MA, MB, w)) < 1e-9);
  }
}

TEST_CASE("sandwich and positivity on random pairs")
{
  std::uint64_t seed = 300;
  for (int t = 0; t < 100; ++t) {
    const auto [MA, MB] = disjoint_pair(seed);
    const auto r = differentiable_distance(MA, MB, kId, kId);
    CHECK(r.lambda > 0);
    CHECK(strict_E(MB, r.euclid.a0_star).value >= r.lambda - 1e-10);
  }
}

TEST_CASE("saddle diagnostics at a tight tolerance")
{
  std::uint64_t seed = 500;
  for (int t = 0; t < 20; ++t) {
    const auto [MA, MB] = disjoint_pair(seed);
    const auto r = differentiable_distance(MA, MB, kId, kId, tight(1e-9));
    const auto d = saddle_residuals(MA, MB, r.witness);
    CHECK(d.r_a <= 1e-6);
    CHECK(d.r_b <= 1e-6);
    CHECK(d.inner_eigenvalues.maxCoeff() < 0);
    CHECK(d.inner_eigenvalues.minCoeff() > -1);
  }
}

TEST_CASE("envelope gradient matches finite differences")
{
  std::uint64_t seed = 700;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0, 1);
  auto opt = tight(1e-11);
  opt.with_gradient = true;
  for (int t = 0; t < 10; ++t) {
    const auto [MA, MB] = disjoint_pair(seed);
    const auto pa = RigidPose<double>::from_twist(vec({0.2 * g(rng), 0.2 * g(rng), 0.2 * g(rng)}), vec({0, 0, 0}));
    const auto pb = RigidPose<double>::from_twist(vec({0.2 * g(rng), 0.2 * g(rng), 0.2 * g(rng)}), vec({0, 0, 0}));
    const auto r = differentiable_distance(MA, MB, pa, pb, opt);
    if (r.witness.overlap)
      continue;
    const auto& grad = *r.gradient;
    for (int k = 0; k < 12; ++k) {
      auto at = [&](double s) {
        Vec tw = Vec::Zero(6);
        tw(k % 6) = s;
        const auto qa = k < 6 ? perturb_world(pa, tw) : pa;
        const auto qb = k < 6 ? pb : perturb_world(pb, tw);
        return differentiable_distance(MA, MB, qa, qb, tight(1e-11)).lambda;
      };
      const double h = 1e-5;
      const double fd = (at(h) - at(-h)) / (2 * h);
      CAPTURE(k);
      CHECK(std::abs(grad(k) - fd) / (1 + std::abs(fd)) <= 1e-4);
    }
    // Moving both bodies together leaves Λ unchanged.
    for (int k = 0; k < 6; ++k)
      CHECK(std::abs(grad(k) + grad(k + 6)) <= 1e-8);
  }
}

TEST_CASE("moving B away increases the metric")
{
  const auto C = metric_of(oracle::cube(0.5), 0.989);
  SolverOptions o = tight();
  o.with_gradient = true;
  const auto r = differentiable_distance(C, C, kId, RigidPose<double>::from_translation(vec({1.5, 0.1, 0})), o);
  const Vec axis = (r.witness.a_star - r.witness.b_star).normalized();
  // d/ds of moving B along −axis (from a* towards b*, i.e. away).
  const double dlam = -(r.gradient->segment(6, 3).dot(axis));
  CHECK(dlam > 0);
}

TEST_CASE("error paths")
{
  std::uint64_t seed = 900;
  const auto [MA, MB] = disjoint_pair(seed);
  try {
    alternate(MA, MB, MA.polytope().interior_point(), 1e-14, 2);
    FAIL("expected MaxIterExceeded");
  } catch (const MaxIterExceeded& e) {
    CHECK(e.iterations() == 2);
    CHECK(e.residual() > 0);
    CHECK(e.last_iterate().size() == 3);
  }
  CHECK_THROWS_AS(alternate(MA, MB, MA.polytope().interior_point(), 0.0, 10), InvalidParams);

  auto w = alternate(MA, MB, MA.polytope().interior_point(), 1e-3, 5000);
  w.residual = 1.0;
  CHECK_THROWS_AS(metric_gradient(MA, MB, w), NotConverged);

  const Metric flat(oracle::cube(0.5, 2), kPhi, {0.3, 0.3, 0.3, 0.3}, 0.01, 0.5);
  CHECK_THROWS_AS(differentiable_distance(MA, flat, kId, RigidPose<double>::identity(2)), ConfigMismatch);
}

TEST_CASE("sweep rows")
{
  const auto C = metric_of(oracle::cube(0.5), 0.989);
  const PosePath<double> still{BodyMotion<double>::still(kId),
                               BodyMotion<double>::still(RigidPose<double>::from_translation(vec({1.7, 0.2, 0})))};
  const auto rows = sweep(C, C, still, 5);
  REQUIRE(rows.size() == 5);
  for (const auto& r : rows) {
    CHECK(r.error.empty());
    CHECK(r.lambda == rows[0].lambda);
    CHECK(r.dlambda_dtau == 0.0);
    CHECK(r.euclid_fd_deriv == 0.0);
  }
  CHECK(rows.front().tau == 0.0);
  CHECK(rows.back().tau == 1.0);
  CHECK_THROWS_AS(sweep(C, C, still, 1), InvalidParams);

  // Translation along x at unit speed: dΛ/dτ matches the difference quotient.
  const PosePath<double> slide{BodyMotion<double>::still(kId),
                               BodyMotion<double>::about_axis(RigidPose<double>::from_translation(vec({1.6, 0.1, 0})), vec({0, 0, 1}),
                                                              0.0, vec({0.5, 0, 0}))};
  SweepOptions so;
  so.solver = tight();
  const auto s = sweep(C, C, slide, 101, so);
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const double fd = (s[i + 1].lambda - s[i - 1].lambda) / (s[i + 1].tau - s[i - 1].tau);
    CHECK(std::abs(fd - s[i].dlambda_dtau) < 1e-5);
    CHECK(s[i].euclid_fd_deriv == doctest::Approx(0.5).epsilon(1e-6));
  }
}
