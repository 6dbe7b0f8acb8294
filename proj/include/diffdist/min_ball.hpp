#ifndef DIFFDIST_MIN_BALL_HPP
#define DIFFDIST_MIN_BALL_HPP

#include "diffdist/types.hpp"

#include <cmath>
#include <list>
#include <vector>

namespace diffdist {

template<typename Scalar>
struct Ball
{
  Vector<Scalar> center;
  Scalar radius{-1};
};

namespace detail {

// Move-to-front minimum enclosing ball (Welzl/Gärtner). Recursion depth is
// bounded by dim+1; the point list is reordered in place.
template<typename Scalar>
class MoveToFrontBall
{
public:
  MoveToFrontBall(const std::vector<Vector<Scalar>>& points, Eigen::Index dim)
    : points_(points.begin(), points.end())
    , dim_(dim)
  {
    ball_.center = Vector<Scalar>::Zero(dim);
    ball_.radius = Scalar(-1);
    solve(points_.end());
  }

  const Ball<Scalar>& ball() const { return ball_; }

private:
  using Iter = typename std::list<Vector<Scalar>>::iterator;

  bool inside(const Vector<Scalar>& p) const
  {
    if (ball_.radius < Scalar(0))
      return false;
    const Scalar r = ball_.radius;
    return (p - ball_.center).norm() <= r * (Scalar(1) + Scalar(1e-12)) + Scalar(1e-15);
  }

  void fit_support()
  {
    const std::size_t k = support_.size();
    if (k == 0) {
      ball_.radius = Scalar(-1);
      return;
    }
    const Vector<Scalar>& q0 = support_.front();
    if (k == 1) {
      ball_.center = q0;
      ball_.radius = Scalar(0);
      return;
    }
    DenseMatrix<Scalar> Q(dim_, static_cast<Eigen::Index>(k - 1));
    for (std::size_t j = 1; j < k; ++j)
      Q.col(static_cast<Eigen::Index>(j - 1)) = support_[j] - q0;
    const DenseMatrix<Scalar> G = Q.transpose() * Q;
    const DenseVector<Scalar> rhs = Scalar(0.5) * G.diagonal();
    const DenseVector<Scalar> lambda = G.completeOrthogonalDecomposition().solve(rhs);
    ball_.center = q0 + Q * lambda;
    ball_.radius = (ball_.center - q0).norm();
  }

  void solve(Iter end)
  {
    fit_support();
    if (static_cast<Eigen::Index>(support_.size()) == dim_ + 1)
      return;
    for (Iter i = points_.begin(); i != end;) {
      Iter j = i++;
      if (!inside(*j)) {
        support_.push_back(*j);
        solve(j);
        support_.pop_back();
        points_.splice(points_.begin(), points_, j);
      }
    }
  }

  std::list<Vector<Scalar>> points_;
  std::vector<Vector<Scalar>> support_;
  Eigen::Index dim_;
  Ball<Scalar> ball_;
};

} // namespace detail

/// Smallest ball enclosing a finite point set (up to round-off; callers that
/// need strict coverage inflate the result).
template<typename Scalar>
Ball<Scalar> min_enclosing_ball(const std::vector<Vector<Scalar>>& points)
{
  if (points.empty())
    throw InvalidParams("min_enclosing_ball: empty point set");
  const Eigen::Index dim = points.front().size();
  detail::MoveToFrontBall<Scalar> solver(points, dim);
  Ball<Scalar> out = solver.ball();
  // Re-measure against every point so the radius is a true cover of the set.
  Scalar r = 0;
  for (const auto& p : points)
    r = std::max(r, (p - out.center).norm());
  out.radius = r;
  return out;
}

} // namespace diffdist

#endif // DIFFDIST_MIN_BALL_HPP
