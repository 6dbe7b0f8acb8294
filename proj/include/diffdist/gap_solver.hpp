#ifndef DIFFDIST_GAP_SOLVER_HPP
#define DIFFDIST_GAP_SOLVER_HPP

// Generalized alternating projection a ← Π^A(Π^B(a)), witness points and the
// set-to-set metric
//
//   Λ = E^A(b*) + E^B(a*) − ½‖a* − b*‖²,
//
// with its gradient along rigid motions of either body.

#include "diffdist/euclid.hpp"
#include "diffdist/p2s_metric.hpp"
#include "diffdist/pose.hpp"
#include "diffdist/types.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace diffdist {

template<typename Scalar>
struct WitnessResult
{
  Vector<Scalar> a_star;
  Vector<Scalar> b_star;
  int iterations = 0;
  bool converged = false;
  /// ‖a[k+1] − a[k]‖ at the last step.
  Scalar residual{0};
  /// Stopping tolerance the witness was computed with.
  Scalar tolerance{0};
  bool overlap = false;
  /// Per-iteration residuals, filled when requested.
  std::vector<Scalar> residual_log;
};

struct SolverOptions
{
  double tol = 1e-3;
  int max_iter = 5000;
  /// Also compute ∂Λ/∂(pose parameters).
  bool with_gradient = false;
  bool log_residuals = false;
  /// Safeguarded Newton steps on a − F(a) (same fixed point, far fewer
  /// iterations at tight tolerances).
  bool accelerate = false;
};

/// Fixed-point iteration a[k+1] = Π^A(Π^B(a[k])) from a0 until the step is
/// below tol. b* = Π^B(a*). Throws MaxIterExceeded with the last iterate.
///
/// With `accelerate`, each step also tries the Newton update
/// a + (I − J)⁻¹(F(a) − a), J = (I − ∇²E^A(b))(I − ∇²E^B(a)), and keeps it
/// only if it lowers the residual. Near tangential contact J has an
/// eigenvalue close to one and the plain iteration crawls.
template<typename Scalar>
WitnessResult<Scalar> alternate(const P2SMetric<Scalar>& MA, const P2SMetric<Scalar>& MB, const Vector<Scalar>& a0,
                                Scalar tol, int max_iter, bool log_residuals = false, bool accelerate = false)
{
  if (MA.dim() != MB.dim() || a0.size() != MA.dim())
    throw ConfigMismatch("alternate: dimension mismatch");
  if (!(tol > Scalar(0)))
    throw InvalidParams("alternate: tol must be positive");
  if (max_iter < 1)
    throw InvalidParams("alternate: max_iter must be at least 1");

  const Eigen::Index n = MA.dim();
  const Matrix<Scalar> I = Matrix<Scalar>::Identity(n, n);
  WitnessResult<Scalar> out;
  out.tolerance = tol;
  Vector<Scalar> a = a0;
  Vector<Scalar> b = project(MB, a);
  Vector<Scalar> Fa = project(MA, b);
  auto newton = [&](Scalar r) {
    const Matrix<Scalar> J = (I - strict_E(MA, b).hessian) * (I - strict_E(MB, a).hessian);
    const Vector<Scalar> step = (I - J).partialPivLu().solve(Fa - a);
    for (Scalar t = 1; t > Scalar(1e-3) && step.allFinite(); t *= Scalar(0.5)) {
      const Vector<Scalar> cand = a + t * step;
      const Vector<Scalar> cb = project(MB, cand);
      const Vector<Scalar> cF = project(MA, cb);
      if ((cF - cand).norm() < r) {
        a = cand;
        b = cb;
        Fa = cF;
        return true;
      }
    }
    return false;
  };
  for (int it = 1; it <= max_iter; ++it) {
    Scalar r = (Fa - a).norm();
    if (log_residuals)
      out.residual_log.push_back(r);
    out.iterations = it;
    out.residual = r;
    if (r < tol) {
      // The step length understates the distance to the fixed point by
      // 1/(1 − q), and q can be 1 − 1e-5. Newton is already quadratic here,
      // so a few more steps make a* accurate to rounding.
      for (int k = 0; accelerate && k < 4 && r > 0 && newton(r); ++k)
        r = out.residual = (Fa - a).norm();
      a = Fa;
      out.converged = true;
      break;
    }
    Vector<Scalar> next = Fa;
    if (accelerate && newton(r))
      continue;
    a = next;
    b = project(MB, a);
    Fa = project(MA, b);
  }
  if (!out.converged)
    throw MaxIterExceeded("alternate: no convergence in " + std::to_string(max_iter) + " iterations",
                          Vec(a.template cast<double>()), static_cast<double>(out.residual), out.iterations);
  out.a_star = a;
  out.b_star = project(MB, a);
  return out;
}

/// Λ from a witness pair (0 for an overlap witness).
template<typename Scalar>
Scalar metric_value(const P2SMetric<Scalar>& MA, const P2SMetric<Scalar>& MB, const WitnessResult<Scalar>& w)
{
  if (w.overlap)
    return Scalar(0);
  return strict_E_gradient(MA, w.b_star).value + strict_E_gradient(MB, w.a_star).value -
         Scalar(0.5) * (w.a_star - w.b_star).squaredNorm();
}

template<typename Scalar>
struct MetricResult
{
  Scalar lambda{0};
  WitnessResult<Scalar> witness;
  EuclidResult<Scalar> euclid;
  /// ∂Λ/∂[v_A, ω_A, v_B, ω_B], world-frame twists (see metric_gradient).
  std::optional<DenseVector<Scalar>> gradient;
  /// Wall time of the Euclidean step plus the iteration.
  double solve_us = 0;
};

/// ∂Λ/∂θ for world-frame twists θ = [v_A, ω_A, v_B, ω_B] applied after the
/// current poses (x ↦ exp(Ω)x + v). By stationarity of the witness pair only
/// the explicit dependence of E^A at b* and E^B at a* survives:
///   ∂/∂v  E^{A(θ)}(b*) = −∇E^A(b*),   ∂/∂ω_k E^{A(θ)}(b*) = −∇E^A(b*)ᵀ G_k b*.
/// MA and MB are the metrics already placed at their poses. An overlap
/// witness yields zeros. Throws NotConverged for an unconverged witness.
template<typename Scalar>
DenseVector<Scalar> metric_gradient(const P2SMetric<Scalar>& MA, const P2SMetric<Scalar>& MB, const WitnessResult<Scalar>& w)
{
  const Eigen::Index n = MA.dim();
  const Eigen::Index dof = twist_dof(n);
  DenseVector<Scalar> grad = DenseVector<Scalar>::Zero(2 * dof);
  if (w.overlap)
    return grad;
  if (!w.converged || !(w.residual <= w.tolerance))
    throw NotConverged("metric_gradient: witness residual above tolerance");

  auto body = [&](const P2SMetric<Scalar>& M, const Vector<Scalar>& x, Eigen::Index offset) {
    const Vector<Scalar> g = strict_E_gradient(M, x).gradient;
    grad.segment(offset, n) = -g;
    for (Eigen::Index k = 0; k < rotation_dof(n); ++k)
      grad(offset + n + k) = -g.dot(apply_generator<Scalar>(k, x));
  };
  body(MA, w.b_star, 0);
  body(MB, w.a_star, dof);
  return grad;
}

/// Full pipeline: place both metrics, run the Euclidean reference, and
/// either report overlap (Λ = 0 at the deepest common point) or iterate from
/// the Euclidean closest point on A.
template<typename Scalar>
MetricResult<Scalar> differentiable_distance(const P2SMetric<Scalar>& A, const P2SMetric<Scalar>& B, const RigidPose<Scalar>& pose_a,
                                             const RigidPose<Scalar>& pose_b, const SolverOptions& opt = {})
{
  if (A.dim() != B.dim() || pose_a.dim() != A.dim() || pose_b.dim() != B.dim())
    throw ConfigMismatch("differentiable_distance: dimension mismatch");
  pose_a.validate();
  pose_b.validate();
  const P2SMetric<Scalar> MA = A.transformed(pose_a);
  const P2SMetric<Scalar> MB = B.transformed(pose_b);

  MetricResult<Scalar> out;
  const auto t0 = std::chrono::steady_clock::now();
  out.euclid = euclid_pair(MA.polytope(), MB.polytope());
  if (out.euclid.overlap) {
    out.witness.a_star = out.euclid.certificate;
    out.witness.b_star = out.euclid.certificate;
    out.witness.overlap = true;
    out.witness.converged = true;
    out.witness.tolerance = Scalar(opt.tol);
    out.lambda = Scalar(0);
  } else {
    out.witness = alternate(MA, MB, out.euclid.a0_star, Scalar(opt.tol), opt.max_iter, opt.log_residuals, opt.accelerate);
    out.lambda = metric_value(MA, MB, out.witness);
  }
  out.solve_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
  if (opt.with_gradient)
    out.gradient = metric_gradient(MA, MB, out.witness);
  return out;
}

template<typename Scalar>
struct SaddleDiagnostics
{
  /// ‖Π^A(b*) − a*‖ and ‖Π^B(a*) − b*‖.
  Scalar r_a{0};
  Scalar r_b{0};
  /// Eigenvalues of ∇²E^A(b*) − I (inner maximizer: all in (−1, 0)).
  Vector<Scalar> inner_eigenvalues;
  /// Eigenvalues of ∇²E^B(a*) − I − (∇²E^A(b*) − I)⁻¹ (outer minimizer: all > 0).
  Vector<Scalar> outer_eigenvalues;
  bool inner_negative_definite = false;
  bool outer_positive_definite = false;
};

/// Stationarity residuals and second-order certificates of the min-max
/// characterization of Λ at a converged, disjoint witness.
template<typename Scalar>
SaddleDiagnostics<Scalar> saddle_residuals(const P2SMetric<Scalar>& MA, const P2SMetric<Scalar>& MB, const WitnessResult<Scalar>& w)
{
  const Eigen::Index n = MA.dim();
  SaddleDiagnostics<Scalar> out;
  out.r_a = (project(MA, w.b_star) - w.a_star).norm();
  out.r_b = (project(MB, w.a_star) - w.b_star).norm();

  const Matrix<Scalar> I = Matrix<Scalar>::Identity(n, n);
  const Matrix<Scalar> inner = strict_E(MA, w.b_star).hessian - I;
  const Matrix<Scalar> HB = strict_E(MB, w.a_star).hessian - I;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> ei(inner, Eigen::EigenvaluesOnly);
  out.inner_eigenvalues = ei.eigenvalues();
  out.inner_negative_definite = out.inner_eigenvalues.maxCoeff() < Scalar(0) && out.inner_eigenvalues.minCoeff() > Scalar(-1);
  if (out.inner_negative_definite) {
    const Matrix<Scalar> outer = HB - inner.inverse();
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eo(Scalar(0.5) * (outer + outer.transpose()), Eigen::EigenvaluesOnly);
    out.outer_eigenvalues = eo.eigenvalues();
    out.outer_positive_definite = out.outer_eigenvalues.minCoeff() > Scalar(0);
  }
  return out;
}

/// Spectral norm of ∂F/∂a = (I − ∇²E^A(b*))(I − ∇²E^B(a*)) at the witness,
/// F = Π^A ∘ Π^B.
template<typename Scalar>
Scalar contraction_factor(const P2SMetric<Scalar>& MA, const P2SMetric<Scalar>& MB, const WitnessResult<Scalar>& w)
{
  const Eigen::Index n = MA.dim();
  const Matrix<Scalar> I = Matrix<Scalar>::Identity(n, n);
  const Matrix<Scalar> J = (I - strict_E(MA, w.b_star).hessian) * (I - strict_E(MB, w.a_star).hessian);
  Eigen::JacobiSVD<Matrix<Scalar>> svd(J);
  return svd.singularValues()(0);
}

// ---------------------------------------------------------------------------
// Pose paths.

/// One body's motion: x ↦ exp(τΩ) R₀ x + t₀ + τ ṫ (rotation about the body
/// origin at a constant rate, translation at a constant velocity).
template<typename Scalar>
struct BodyMotion
{
  RigidPose<Scalar> base;
  /// Rotation coordinates per unit τ (see so_generator).
  Vector<Scalar> angular_rate;
  Vector<Scalar> linear_rate;

  static BodyMotion still(const RigidPose<Scalar>& base)
  {
    const Eigen::Index n = base.dim();
    return {base, Vector<Scalar>::Zero(rotation_dof(n)), Vector<Scalar>::Zero(n)};
  }

  /// 3D: rotate about `axis` at `angle_rate` rad per unit τ.
  static BodyMotion about_axis(const RigidPose<Scalar>& base, const Vector<Scalar>& axis, Scalar angle_rate, const Vector<Scalar>& linear_rate)
  {
    if (base.dim() != 3 || axis.size() != 3)
      throw ConfigMismatch("BodyMotion::about_axis: axis form is 3D only");
    return {base, Vector<Scalar>(axis.normalized() * angle_rate), linear_rate};
  }

  RigidPose<Scalar> at(Scalar tau) const
  {
    const Eigen::Index n = base.dim();
    const Matrix<Scalar> R = rotation_exp<Scalar>(n, Vector<Scalar>(tau * angular_rate));
    return {R * base.rotation, base.translation + tau * linear_rate};
  }

  /// World-frame twist [v, ω] of the motion at τ (about the world origin).
  DenseVector<Scalar> world_twist(Scalar tau) const
  {
    const Eigen::Index n = base.dim();
    const Vector<Scalar> t = base.translation + tau * linear_rate;
    Vector<Scalar> v = linear_rate;
    for (Eigen::Index k = 0; k < rotation_dof(n); ++k)
      v -= angular_rate(k) * apply_generator<Scalar>(k, t);
    DenseVector<Scalar> out(twist_dof(n));
    out << v, angular_rate;
    return out;
  }

  void validate() const
  {
    base.validate();
    if (angular_rate.size() != rotation_dof(base.dim()) || linear_rate.size() != base.dim())
      throw ConfigMismatch("BodyMotion: rate dimensions do not match pose");
  }
};

template<typename Scalar>
struct PosePath
{
  BodyMotion<Scalar> a;
  BodyMotion<Scalar> b;

  RigidPose<Scalar> pose_a(Scalar tau) const { return a.at(tau); }
  RigidPose<Scalar> pose_b(Scalar tau) const { return b.at(tau); }
};

template<typename Scalar>
struct SweepRow
{
  Scalar tau{0};
  Scalar lambda{0};
  Scalar dlambda_dtau{0};
  Scalar euclid_dist{0};
  Scalar euclid_fd_deriv{0};
  int iterations = 0;
  bool converged = false;
  std::string error;
};

struct SweepOptions
{
  SolverOptions solver{};
  /// Central-difference step for the Euclidean derivative.
  double fd_step = 1e-6;
};

/// Samples τ uniformly on [0, 1]; per sample Λ, dΛ/dτ (envelope gradient
/// contracted with the path's world twists), the Euclidean distance and its
/// central-difference derivative. Solver failures flag the row and the sweep
/// continues.
template<typename Scalar>
std::vector<SweepRow<Scalar>> sweep(const P2SMetric<Scalar>& A, const P2SMetric<Scalar>& B, const PosePath<Scalar>& path, int n_samples,
                                    const SweepOptions& opt = {})
{
  if (n_samples < 2)
    throw InvalidParams("sweep: need at least two samples");
  path.a.validate();
  path.b.validate();
  if (path.a.base.dim() != A.dim() || path.b.base.dim() != B.dim())
    throw ConfigMismatch("sweep: path dimension does not match metrics");

  SolverOptions solver = opt.solver;
  solver.with_gradient = true;
  const Eigen::Index dof = twist_dof(A.dim());

  auto euclid_at = [&](Scalar tau) {
    return euclid_pair(transform(A.polytope(), path.pose_a(tau)), transform(B.polytope(), path.pose_b(tau))).distance;
  };

  std::vector<SweepRow<Scalar>> rows;
  rows.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    SweepRow<Scalar> row;
    row.tau = Scalar(i) / Scalar(n_samples - 1);
    try {
      const Scalar h = Scalar(opt.fd_step);
      row.euclid_dist = euclid_at(row.tau);
      row.euclid_fd_deriv = (euclid_at(row.tau + h) - euclid_at(row.tau - h)) / (Scalar(2) * h);
      const auto res = differentiable_distance(A, B, path.pose_a(row.tau), path.pose_b(row.tau), solver);
      row.lambda = res.lambda;
      row.iterations = res.witness.iterations;
      row.converged = res.witness.converged;
      DenseVector<Scalar> rate(2 * dof);
      rate << path.a.world_twist(row.tau), path.b.world_twist(row.tau);
      row.dlambda_dtau = res.gradient->dot(rate);
    } catch (const MaxIterExceeded& e) {
      row.iterations = e.iterations();
      row.converged = false;
      row.error = e.what();
    } catch (const Error& e) {
      row.converged = false;
      row.error = e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

} // namespace diffdist

#endif // DIFFDIST_GAP_SOLVER_HPP
