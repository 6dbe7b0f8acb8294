#ifndef DIFFDIST_EUCLID_HPP
#define DIFFDIST_EUCLID_HPP

// Exact Euclidean machinery on H-representation polytopes: projection,
// overlap test and closest pairs.

#include "diffdist/halfspace.hpp"
#include "diffdist/lp.hpp"
#include "diffdist/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace diffdist {

/// Two polytopes count as overlapping when the stacked system has max slack
/// above −kTouchTol (touching within 1e-9 included).
inline constexpr double kTouchTol = 1e-9;

struct ProjectionOptions
{
  double tol = 1e-10;
  int max_sweeps = 200000;
};

namespace detail {

// Minimizer of ½‖x − p‖² on {x : A_S x = b_S} closest to the current guess;
// returns false if the active system is numerically inconsistent.
template<typename Scalar>
bool equality_projection(const DenseMatrix<Scalar>& A, const DenseVector<Scalar>& b, const std::vector<Eigen::Index>& active,
                         const Vector<Scalar>& p, Vector<Scalar>& x, DenseVector<Scalar>& mult)
{
  const auto k = static_cast<Eigen::Index>(active.size());
  const Eigen::Index n = A.cols();
  if (k == 0) {
    x = p;
    mult.resize(0);
    return true;
  }
  DenseMatrix<Scalar> As(k, n);
  DenseVector<Scalar> bs(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    As.row(r) = A.row(active[static_cast<std::size_t>(r)]);
    bs(r) = b(active[static_cast<std::size_t>(r)]);
  }
  // x = p − A_Sᵀ μ with A_S A_Sᵀ μ = A_S p − b_S (min-norm μ).
  const DenseMatrix<Scalar> G = As * As.transpose();
  Eigen::CompleteOrthogonalDecomposition<DenseMatrix<Scalar>> cod(G);
  cod.setThreshold(Scalar(1e-12));
  mult = cod.solve(As * p - bs);
  x = p - As.transpose() * mult;
  return ((As * x) - bs).cwiseAbs().maxCoeff() <= Scalar(1e-9);
}

template<typename Scalar>
Scalar max_residual(const DenseMatrix<Scalar>& A, const DenseVector<Scalar>& b, const Vector<Scalar>& x)
{
  return ((A * x) - b).maxCoeff();
}

} // namespace detail

/// argmin_{x ∈ P} ‖x − p‖. Hildreth's dual coordinate ascent drives the
/// constraint violation below opt.tol; the active set it identifies is then
/// solved exactly. Returns p itself when p ∈ P.
template<typename Scalar>
Vector<Scalar> project_euclid(const HalfSpacePolytope<Scalar>& P, const Vector<Scalar>& p, const ProjectionOptions& opt = {})
{
  if (p.size() != P.dim())
    throw ConfigMismatch("project_euclid: point dimension does not match polytope");
  if (contains(P, p))
    return p;

  const auto& A = P.normals();
  const DenseVector<Scalar> b = -P.offsets();
  const Eigen::Index m = A.rows();

  // Dual: λ ≥ 0, x = p − Aᵀλ. Rows are unit, so the coordinate step is the
  // raw violation.
  DenseVector<Scalar> lambda = DenseVector<Scalar>::Zero(m);
  Vector<Scalar> x = p;
  bool done = false;
  int sweep = 0;
  for (; sweep < opt.max_sweeps && !done; ++sweep) {
    Scalar moved = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Scalar viol = A.row(i).dot(x) - b(i);
      const Scalar next = std::max(Scalar(0), lambda(i) + viol);
      const Scalar delta = next - lambda(i);
      if (delta != Scalar(0)) {
        x.noalias() -= delta * A.row(i).transpose();
        lambda(i) = next;
        moved = std::max(moved, std::abs(delta));
      }
    }
    done = moved <= Scalar(opt.tol) && detail::max_residual(A, b, x) <= Scalar(opt.tol);
  }
  if (!done)
    throw ProjectionStalled("project_euclid: dual ascent did not reach tolerance in " + std::to_string(opt.max_sweeps) + " sweeps");

  // Polish on the detected active set.
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < m; ++i)
    if (lambda(i) > Scalar(0))
      active.push_back(i);
  Vector<Scalar> polished;
  DenseVector<Scalar> mult;
  if (detail::equality_projection(A, b, active, p, polished, mult) &&
      detail::max_residual(A, b, polished) <= Scalar(kContainsTol) && (mult.size() == 0 || mult.minCoeff() >= Scalar(-1e-10)) &&
      (polished - x).norm() <= Scalar(1e-6))
    return polished;
  return x;
}

template<typename Scalar>
struct EuclidResult
{
  Scalar distance{0};
  Vector<Scalar> a0_star;
  Vector<Scalar> b0_star;
  bool overlap = false;
  /// Deepest point of A ∩ B (only meaningful when overlap).
  Vector<Scalar> certificate;
  int iterations = 0;
  Scalar residual{0};
};

struct PairOptions
{
  double tol = 1e-9;
  int max_iter = 100000;
};

/// Max-slack point of the stacked systems of A and B and its slack.
template<typename Scalar>
lp::SlackSolution<Scalar> common_slack(const HalfSpacePolytope<Scalar>& A, const HalfSpacePolytope<Scalar>& B)
{
  DenseMatrix<Scalar> N(A.size() + B.size(), A.dim());
  N << A.normals(), B.normals();
  DenseVector<Scalar> b(A.size() + B.size());
  b << -A.offsets(), -B.offsets();
  return lp::max_slack<Scalar>(N, b);
}

namespace detail {

// Primal active-set method for min ½‖a − b‖² over a ∈ PA, b ∈ PB, started
// from a feasible pair. Working constraints are those tight at the start.
// Steps are taken in the null space of the working rows: Newton on the
// curved part of the reduced Hessian, and a ray to the nearest blocking
// constraint along flat directions that still decrease the gap (nearly
// parallel faces). Returns false if the budget runs out; (a, b) stay
// feasible either way.
template<typename Scalar>
bool polish_pair(const HalfSpacePolytope<Scalar>& PA, const HalfSpacePolytope<Scalar>& PB, Vector<Scalar>& a, Vector<Scalar>& b)
{
  const Eigen::Index n = PA.dim();
  const Eigen::Index ma = PA.size();
  const Eigen::Index m = ma + PB.size();
  // Constraint i acts on a (i < ma) or on b.
  auto row = [&](Eigen::Index i) -> DenseVector<Scalar> {
    DenseVector<Scalar> c = DenseVector<Scalar>::Zero(2 * n);
    if (i < ma)
      c.head(n) = PA.normals().row(i).transpose();
    else
      c.tail(n) = PB.normals().row(i - ma).transpose();
    return c;
  };
  auto value = [&](Eigen::Index i, const DenseVector<Scalar>& z) {
    return i < ma ? PA.evaluate(i, Vector<Scalar>(z.head(n))) : PB.evaluate(i - ma, Vector<Scalar>(z.tail(n)));
  };

  DenseMatrix<Scalar> Q(2 * n, 2 * n);
  Q << DenseMatrix<Scalar>::Identity(n, n), -DenseMatrix<Scalar>::Identity(n, n), -DenseMatrix<Scalar>::Identity(n, n),
      DenseMatrix<Scalar>::Identity(n, n);

  DenseVector<Scalar> z(2 * n);
  z << a, b;
  std::vector<Eigen::Index> work;
  for (Eigen::Index i = 0; i < m; ++i)
    if (value(i, z) > Scalar(-1e-10))
      work.push_back(i);

  constexpr int kMaxSteps = 64;
  const Scalar flat = Scalar(1e-14);
  for (int step = 0; step < kMaxSteps; ++step) {
    const auto k = static_cast<Eigen::Index>(work.size());
    DenseMatrix<Scalar> C(k, 2 * n);
    for (Eigen::Index r = 0; r < k; ++r)
      C.row(r) = row(work[static_cast<std::size_t>(r)]).transpose();
    const DenseVector<Scalar> g = Q * z;

    DenseMatrix<Scalar> Z;
    if (k == 0) {
      Z = DenseMatrix<Scalar>::Identity(2 * n, 2 * n);
    } else {
      Eigen::FullPivLU<DenseMatrix<Scalar>> lu(C);
      lu.setThreshold(Scalar(1e-10));
      Z = lu.kernel();
      if (lu.rank() == 2 * n)
        Z.resize(2 * n, 0);
      else
        Z = Eigen::HouseholderQR<DenseMatrix<Scalar>>(Z).householderQ() * DenseMatrix<Scalar>::Identity(2 * n, Z.cols());
    }

    DenseVector<Scalar> d = DenseVector<Scalar>::Zero(2 * n);
    bool ray = false;
    if (Z.cols() > 0) {
      const DenseVector<Scalar> gz = Z.transpose() * g;
      Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> es(Z.transpose() * Q * Z);
      DenseVector<Scalar> y = DenseVector<Scalar>::Zero(Z.cols());
      DenseVector<Scalar> y_flat = DenseVector<Scalar>::Zero(Z.cols());
      for (Eigen::Index i = 0; i < Z.cols(); ++i) {
        const Scalar lam = es.eigenvalues()(i);
        const Scalar gi = es.eigenvectors().col(i).dot(gz);
        if (lam > flat)
          y -= (gi / lam) * es.eigenvectors().col(i);
        else
          y_flat -= gi * es.eigenvectors().col(i);
      }
      if (y_flat.norm() > flat * std::max(Scalar(1), g.norm())) {
        d = Z * y_flat;
        ray = true;
      } else {
        d = Z * y;
      }
    }

    if (!ray && d.norm() <= Scalar(1e-13) * std::max(Scalar(1), z.norm())) {
      if (k == 0) {
        a = z.head(n);
        b = z.tail(n);
        return true;
      }
      // Stationary on the working set: g + Cᵀμ = 0; drop the most negative μ.
      Eigen::CompleteOrthogonalDecomposition<DenseMatrix<Scalar>> cod(C.transpose());
      const DenseVector<Scalar> mu = cod.solve(DenseVector<Scalar>(-g));
      Eigen::Index worst = -1;
      Scalar mu_min = Scalar(-1e-12);
      for (Eigen::Index r = 0; r < k; ++r) {
        if (mu(r) < mu_min) {
          mu_min = mu(r);
          worst = r;
        }
      }
      if (worst < 0) {
        a = z.head(n);
        b = z.tail(n);
        return true;
      }
      work.erase(work.begin() + worst);
      continue;
    }

    Scalar alpha = ray ? std::numeric_limits<Scalar>::infinity() : Scalar(1);
    Eigen::Index blocking = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::find(work.begin(), work.end(), i) != work.end())
        continue;
      const Scalar rate = row(i).dot(d);
      if (rate <= Scalar(0))
        continue;
      const Scalar room = std::max(Scalar(0), -value(i, z));
      if (room / rate < alpha) {
        alpha = room / rate;
        blocking = i;
      }
    }
    if (!std::isfinite(alpha))
      break;
    z += alpha * d;
    if (blocking >= 0)
      work.push_back(blocking);
  }
  a = z.head(n);
  b = z.tail(n);
  return false;
}

} // namespace detail

/// Overlap test and closest pair. Overlap is decided by the max-slack LP on
/// the stacked constraints; otherwise alternating exact projections run until
/// the iterate moves less than opt.tol and the pair is polished on the active
/// faces. Throws MaxIterExceeded (carrying the last a) if alternation stalls.
template<typename Scalar>
EuclidResult<Scalar> euclid_pair(const HalfSpacePolytope<Scalar>& A, const HalfSpacePolytope<Scalar>& B, const PairOptions& opt = {})
{
  if (A.dim() != B.dim())
    throw ConfigMismatch("euclid_pair: dimension mismatch");
  EuclidResult<Scalar> out;
  const auto deep = common_slack(A, B);
  if (deep.slack > Scalar(-kTouchTol)) {
    out.overlap = true;
    out.certificate = deep.point;
    out.a0_star = deep.point;
    out.b0_star = deep.point;
    return out;
  }

  // A pair is optimal iff it is a fixed point of the two projections; the
  // active-face polish usually finds it long before alternation settles.
  auto optimal_pair = [&](const Vector<Scalar>& a, const Vector<Scalar>& b) {
    const Scalar tol = Scalar(1e-11) * std::max(Scalar(1), (a - b).norm());
    return (project_euclid(B, a) - b).norm() <= tol && (project_euclid(A, b) - a).norm() <= tol;
  };

  Vector<Scalar> a = A.interior_point();
  Vector<Scalar> b = project_euclid(B, a);
  a = project_euclid(A, b);
  Scalar step = std::numeric_limits<Scalar>::infinity();
  int it = 0;
  bool polished = false;
  for (; it < opt.max_iter; ++it) {
    const Vector<Scalar> b_next = project_euclid(B, a);
    const Vector<Scalar> a_next = project_euclid(A, b_next);
    step = std::max((a_next - a).norm(), (b_next - b).norm());
    a = a_next;
    b = b_next;
    if (step < Scalar(opt.tol))
      break;
    if (it % 8 == 0) {
      Vector<Scalar> pa = a, pb = b;
      if (detail::polish_pair(A, B, pa, pb) && optimal_pair(pa, pb)) {
        a = pa;
        b = pb;
        polished = true;
        step = 0;
        break;
      }
    }
  }
  out.iterations = it + 1;
  out.residual = step;
  if (!(step < Scalar(opt.tol)))
    throw MaxIterExceeded("euclid_pair: alternating projections did not converge", Vec(a.template cast<double>()),
                          static_cast<double>(step), out.iterations);
  if (!polished)
    detail::polish_pair(A, B, a, b);
  out.a0_star = a;
  out.b0_star = b;
  out.distance = (a - b).norm();
  return out;
}

} // namespace diffdist

#endif // DIFFDIST_EUCLID_HPP
