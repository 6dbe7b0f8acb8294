#ifndef DIFFDIST_HALFSPACE_HPP
#define DIFFDIST_HALFSPACE_HPP

// H-representation convex polytopes {p : u_iᵀp + v_i ≤ 0}.

#include "diffdist/lp.hpp"
#include "diffdist/min_ball.hpp"
#include "diffdist/pose.hpp"
#include "diffdist/types.hpp"

#include <cstdint>
#include <random>
#include <unordered_set>
#include <vector>

namespace diffdist {

/// Membership tolerance on u_iᵀp + v_i.
inline constexpr double kContainsTol = 1e-12;
/// A region is strictly feasible when its max-slack LP exceeds this.
inline constexpr double kStrictSlack = 1e-9;
/// Relative inflation applied to the minimum enclosing ball of the vertices.
inline constexpr double kCoverInflation = 0.05;

template<typename Scalar>
struct HalfSpace
{
  Vector<Scalar> u;
  Scalar v{0};
};

template<typename Scalar>
class HalfSpacePolytope;

template<typename Scalar>
HalfSpacePolytope<Scalar> make_polytope(const std::vector<HalfSpace<Scalar>>& halfspaces, Eigen::Index dim,
                                        double cover_inflation = kCoverInflation);

template<typename Scalar>
HalfSpacePolytope<Scalar> transform(const HalfSpacePolytope<Scalar>& P, const RigidPose<Scalar>& pose);

/// Regular (compact, nonempty interior) convex polytope with unit normals
/// and a strictly covering ball. Immutable; build with make_polytope.
template<typename Scalar>
class HalfSpacePolytope
{
public:
  Eigen::Index dim() const { return normals_.cols(); }
  Eigen::Index size() const { return normals_.rows(); }

  /// Row i is u_iᵀ.
  const DenseMatrix<Scalar>& normals() const { return normals_; }
  const DenseVector<Scalar>& offsets() const { return offsets_; }

  HalfSpace<Scalar> halfspace(Eigen::Index i) const
  {
    return {normals_.row(i).transpose(), offsets_(i)};
  }

  /// u_iᵀp + v_i.
  Scalar evaluate(Eigen::Index i, const Vector<Scalar>& p) const
  {
    return normals_.row(i).dot(p) + offsets_(i);
  }

  /// max_i (u_iᵀp + v_i); ≤ 0 inside.
  Scalar max_violation(const Vector<Scalar>& p) const
  {
    Scalar worst = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index i = 0; i < size(); ++i)
      worst = std::max(worst, evaluate(i, p));
    return worst;
  }

  const Vector<Scalar>& cover_center() const { return cover_center_; }
  Scalar cover_radius() const { return cover_radius_; }

  /// Deepest point found by the regularity certificate and its slack.
  const Vector<Scalar>& interior_point() const { return interior_point_; }
  Scalar interior_slack() const { return interior_slack_; }

private:
  HalfSpacePolytope() = default;

  DenseMatrix<Scalar> normals_;
  DenseVector<Scalar> offsets_;
  Vector<Scalar> cover_center_;
  Scalar cover_radius_{0};
  Vector<Scalar> interior_point_;
  Scalar interior_slack_{0};

  friend HalfSpacePolytope make_polytope<Scalar>(const std::vector<HalfSpace<Scalar>>&, Eigen::Index, double);
  friend HalfSpacePolytope transform<Scalar>(const HalfSpacePolytope&, const RigidPose<Scalar>&);
};

using Polytope = HalfSpacePolytope<double>;

template<typename Scalar>
bool contains(const HalfSpacePolytope<Scalar>& P, const Vector<Scalar>& p)
{
  for (Eigen::Index i = 0; i < P.size(); ++i) {
    if (P.evaluate(i, p) > Scalar(kContainsTol))
      return false;
  }
  return true;
}

/// Vertices of {p : A p ≤ b} by enumerating dim-subsets of rows. Feasibility
/// is checked with an absolute tolerance; duplicates are kept.
template<typename Scalar>
std::vector<Vector<Scalar>> enumerate_vertices(const DenseMatrix<Scalar>& A, const DenseVector<Scalar>& b)
{
  const auto m = static_cast<int>(A.rows());
  const auto n = static_cast<int>(A.cols());
  std::vector<Vector<Scalar>> out;
  if (m < n)
    return out;
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    idx[static_cast<std::size_t>(i)] = i;
  Matrix<Scalar> M(n, n);
  Vector<Scalar> rhs(n);
  while (true) {
    for (int r = 0; r < n; ++r) {
      M.row(r) = A.row(idx[static_cast<std::size_t>(r)]);
      rhs(r) = b(idx[static_cast<std::size_t>(r)]);
    }
    Eigen::FullPivLU<Matrix<Scalar>> lu(M);
    lu.setThreshold(Scalar(1e-10));
    if (lu.isInvertible()) {
      const Vector<Scalar> x = lu.solve(rhs);
      if (((A * x) - b).maxCoeff() <= Scalar(1e-9))
        out.push_back(x);
    }
    // next combination
    int k = n - 1;
    while (k >= 0 && idx[static_cast<std::size_t>(k)] == m - n + k)
      --k;
    if (k < 0)
      break;
    ++idx[static_cast<std::size_t>(k)];
    for (int r = k + 1; r < n; ++r)
      idx[static_cast<std::size_t>(r)] = idx[static_cast<std::size_t>(r - 1)] + 1;
  }
  return out;
}

/// Normalizes every halfspace, certifies regularity (strict interior point)
/// and compactness, and computes the covering ball.
template<typename Scalar>
HalfSpacePolytope<Scalar> make_polytope(const std::vector<HalfSpace<Scalar>>& halfspaces, Eigen::Index dim,
                                        double cover_inflation)
{
  if (dim < 1 || dim > kMaxDim)
    throw ConfigMismatch("make_polytope: unsupported dimension " + std::to_string(dim));
  if (halfspaces.empty())
    throw Unbounded("make_polytope: no halfspaces");

  const auto m = static_cast<Eigen::Index>(halfspaces.size());
  HalfSpacePolytope<Scalar> P;
  P.normals_.resize(m, dim);
  P.offsets_.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& h = halfspaces[static_cast<std::size_t>(i)];
    if (h.u.size() != dim)
      throw ConfigMismatch("make_polytope: halfspace " + std::to_string(i) + " has wrong dimension");
    const Scalar norm = h.u.norm();
    if (!(norm > Scalar(0)) || !std::isfinite(static_cast<double>(norm)) || !std::isfinite(static_cast<double>(h.v)))
      throw InvalidParams("make_polytope: halfspace " + std::to_string(i) + " has a zero or non-finite direction");
    P.normals_.row(i) = h.u.transpose() / norm;
    P.offsets_(i) = h.v / norm;
  }

  // Regularity: maximize s with u_iᵀp + v_i + s ≤ 0.
  const DenseVector<Scalar> b = -P.offsets_;
  const auto deep = lp::max_slack<Scalar>(P.normals_, b);
  if (!(deep.slack > Scalar(kStrictSlack)))
    throw EmptyOrDegenerate("make_polytope: no strict interior point (max slack " +
                            std::to_string(static_cast<double>(deep.slack)) + ")");
  P.interior_point_ = deep.point;
  P.interior_slack_ = deep.slack;

  // Compactness: bounded support along ±e_j, solved from the interior point.
  const DenseVector<Scalar> shifted = b - P.normals_ * deep.point;
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (const Scalar sign : {Scalar(1), Scalar(-1)}) {
      DenseVector<Scalar> c = DenseVector<Scalar>::Zero(dim);
      c(j) = sign;
      if (lp::maximize_from_origin<Scalar>(P.normals_, shifted, c).status == lp::Status::Unbounded)
        throw Unbounded("make_polytope: polytope is unbounded along axis " + std::to_string(j));
    }
  }

  const auto vertices = enumerate_vertices<Scalar>(P.normals_, b);
  if (vertices.empty())
    throw EmptyOrDegenerate("make_polytope: no vertices found");
  const Ball<Scalar> ball = min_enclosing_ball<Scalar>(vertices);
  P.cover_center_ = ball.center;
  P.cover_radius_ = ball.radius * (Scalar(1) + Scalar(cover_inflation));
  if (!(P.cover_radius_ > Scalar(0)))
    throw EmptyOrDegenerate("make_polytope: degenerate covering ball");
  return P;
}

/// Rigid motion of the polytope: u ↦ R u, v ↦ v − (R u)ᵀ t.
template<typename Scalar>
HalfSpacePolytope<Scalar> transform(const HalfSpacePolytope<Scalar>& P, const RigidPose<Scalar>& pose)
{
  if (pose.dim() != P.dim())
    throw ConfigMismatch("transform: pose dimension does not match polytope");
  HalfSpacePolytope<Scalar> out;
  out.normals_ = P.normals_ * pose.rotation.transpose();
  out.offsets_ = P.offsets_ - out.normals_ * pose.translation;
  out.cover_center_ = pose.apply(P.cover_center_);
  out.cover_radius_ = P.cover_radius_;
  out.interior_point_ = pose.apply(P.interior_point_);
  out.interior_slack_ = P.interior_slack_;
  return out;
}

/// Whether {p : u_iᵀp + v_i > 0 ∀ i ∈ subset} is nonempty (max-slack > kStrictSlack).
template<typename Scalar>
bool positive_subset_feasible(const HalfSpacePolytope<Scalar>& P, const std::vector<Eigen::Index>& subset)
{
  const auto k = static_cast<Eigen::Index>(subset.size());
  DenseMatrix<Scalar> A(k, P.dim());
  DenseVector<Scalar> b(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    A.row(r) = -P.normals().row(subset[static_cast<std::size_t>(r)]);
    b(r) = P.offsets()(subset[static_cast<std::size_t>(r)]);
  }
  return lp::max_slack<Scalar>(A, b, Scalar(1)).slack > Scalar(kStrictSlack);
}

/// Largest number of facet inequalities that can be simultaneously positive.
/// Strictly feasible subsets form a down-closed family, so the search grows
/// feasible subsets one facet at a time and only tests candidates whose
/// every one-smaller subset is feasible.
template<typename Scalar>
int max_simultaneous_positive(const HalfSpacePolytope<Scalar>& P)
{
  const auto m = static_cast<int>(P.size());
  if (m > 64)
    throw InvalidParams("max_simultaneous_positive: more than 64 facets");
  using Mask = std::uint64_t;
  auto members = [](Mask s) {
    std::vector<Eigen::Index> out;
    for (int i = 0; i < 64; ++i)
      if (s & (Mask{1} << i))
        out.push_back(i);
    return out;
  };

  std::vector<Mask> level;
  for (int i = 0; i < m; ++i) {
    if (positive_subset_feasible(P, {i}))
      level.push_back(Mask{1} << i);
  }
  int best = level.empty() ? 0 : 1;
  while (!level.empty()) {
    std::unordered_set<Mask> feasible(level.begin(), level.end());
    std::vector<Mask> next;
    std::unordered_set<Mask> tried;
    for (const Mask s : level) {
      const int top = 63 - __builtin_clzll(s);
      for (int j = top + 1; j < m; ++j) {
        const Mask cand = s | (Mask{1} << j);
        if (!tried.insert(cand).second)
          continue;
        bool pruned = false;
        for (const auto i : members(cand)) {
          const Mask sub = cand & ~(Mask{1} << i);
          if (sub != s && !feasible.count(sub)) {
            pruned = true;
            break;
          }
        }
        if (!pruned && positive_subset_feasible(P, members(cand)))
          next.push_back(cand);
      }
    }
    if (!next.empty())
      ++best;
    level = std::move(next);
  }
  return best;
}

/// Random regular polytope: n_ineq unit directions uniform on the sphere,
/// each plane tangent to a sphere of radius in [0.3, 1]·scale about a center
/// uniform in [−scale, scale]^dim. Unbounded draws are rejected.
template<typename Scalar>
HalfSpacePolytope<Scalar> random_polytope(std::uint64_t seed, Eigen::Index dim, Eigen::Index n_ineq, Scalar scale = Scalar(1),
                                          double cover_inflation = kCoverInflation)
{
  if (n_ineq < dim + 1)
    throw GenerationFailed("random_polytope: need at least dim+1 inequalities");
  if (!(scale > Scalar(0)))
    throw GenerationFailed("random_polytope: scale must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> radius(0.3, 1.0);
  std::uniform_real_distribution<double> offset(-1.0, 1.0);

  constexpr int kMaxAttempts = 1000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Vector<Scalar> center(dim);
    for (Eigen::Index j = 0; j < dim; ++j)
      center(j) = scale * Scalar(offset(rng));
    std::vector<HalfSpace<Scalar>> hs;
    hs.reserve(static_cast<std::size_t>(n_ineq));
    for (Eigen::Index i = 0; i < n_ineq; ++i) {
      Vector<Scalar> u(dim);
      do {
        for (Eigen::Index j = 0; j < dim; ++j)
          u(j) = Scalar(gauss(rng));
      } while (u.norm() < Scalar(1e-8));
      u.normalize();
      const Scalar r = scale * Scalar(radius(rng));
      hs.push_back({u, -u.dot(center) - r});
    }
    try {
      return make_polytope<Scalar>(hs, dim, cover_inflation);
    } catch (const Unbounded&) {
    } catch (const EmptyOrDegenerate&) {
    }
  }
  throw GenerationFailed("random_polytope: rejection budget exhausted");
}

} // namespace diffdist

#endif // DIFFDIST_HALFSPACE_HPP
