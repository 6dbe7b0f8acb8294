#ifndef DIFFDIST_LP_HPP
#define DIFFDIST_LP_HPP

// Small dense linear programs: a primal simplex over free variables that
// starts from the origin, and the max-slack feasibility problem built on it.
// Sizes in this library are tiny (tens of rows), so a full tableau with
// Bland's rule is both simple and robust.

#include "diffdist/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace diffdist::lp {

enum class Status
{
  Optimal,
  Unbounded,
};

template<typename Scalar>
struct Solution
{
  Status status = Status::Optimal;
  DenseVector<Scalar> x;
  Scalar objective{0};
};

/// maximize cᵀx  s.t.  A x ≤ b,  x free.  Requires b ≥ 0 so that x = 0 is a
/// feasible starting vertex (no phase 1).
template<typename Scalar>
Solution<Scalar> maximize_from_origin(const DenseMatrix<Scalar>& A,
                                      const DenseVector<Scalar>& b,
                                      const DenseVector<Scalar>& c)
{
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  const Eigen::Index cols = 2 * n + m; // x+, x-, slacks
  const Scalar tiny = Scalar(1e-12);

  // Row i < m: constraint; row m: objective (reduced costs, maximization).
  DenseMatrix<Scalar> T = DenseMatrix<Scalar>::Zero(m + 1, cols + 1);
  T.block(0, 0, m, n) = A;
  T.block(0, n, m, n) = -A;
  T.block(0, 2 * n, m, m).setIdentity();
  T.block(0, cols, m, 1) = b.cwiseMax(Scalar(0));
  T.block(m, 0, 1, n) = -c.transpose();
  T.block(m, n, 1, n) = c.transpose();

  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i)
    basis[static_cast<std::size_t>(i)] = 2 * n + i;

  Solution<Scalar> out;
  const int max_pivots = 50 * static_cast<int>(cols + m) + 1000;
  for (int pivot = 0; pivot < max_pivots; ++pivot) {
    // Bland: lowest-index column with negative reduced cost.
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (T(m, j) < -tiny) {
        enter = j;
        break;
      }
    }
    if (enter < 0)
      break;

    Eigen::Index leave = -1;
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      const Scalar a = T(i, enter);
      if (a > tiny) {
        const Scalar ratio = T(i, cols) / a;
        const bool tie = leave >= 0 && std::abs(ratio - best) <= tiny;
        if (leave < 0 || (ratio < best && !tie) ||
            (tie && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
    }
    if (leave < 0) {
      out.status = Status::Unbounded;
      out.objective = std::numeric_limits<Scalar>::infinity();
      out.x = DenseVector<Scalar>::Zero(n);
      return out;
    }

    T.row(leave) /= T(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i != leave && T(i, enter) != Scalar(0))
        T.row(i) -= T(i, enter) * T.row(leave);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  DenseVector<Scalar> split = DenseVector<Scalar>::Zero(cols);
  for (Eigen::Index i = 0; i < m; ++i)
    split(basis[static_cast<std::size_t>(i)]) = T(i, cols);
  out.x = split.head(n) - split.segment(n, n);
  out.objective = c.dot(out.x);
  return out;
}

template<typename Scalar>
struct SlackSolution
{
  Scalar slack{0};
  DenseVector<Scalar> point;
};

/// maximize s  s.t.  A p + s·1 ≤ b,  s ≤ cap.  Always feasible; the slack is
/// the depth of the deepest point of the (possibly empty) region.
template<typename Scalar>
SlackSolution<Scalar> max_slack(const DenseMatrix<Scalar>& A,
                                const DenseVector<Scalar>& b,
                                Scalar cap = Scalar(1e3))
{
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  const Scalar s0 = b.minCoeff();
  cap = std::max(cap, s0);

  DenseMatrix<Scalar> Ah(m + 1, n + 1);
  Ah.block(0, 0, m, n) = A;
  Ah.block(0, n, m, 1).setOnes();
  Ah.row(m).setZero();
  Ah(m, n) = Scalar(1);
  DenseVector<Scalar> bh(m + 1);
  bh.head(m) = b.array() - s0;
  bh(m) = cap - s0;
  DenseVector<Scalar> c = DenseVector<Scalar>::Zero(n + 1);
  c(n) = Scalar(1);

  const auto sol = maximize_from_origin<Scalar>(Ah, bh, c);
  SlackSolution<Scalar> out;
  out.point = sol.x.head(n);
  // Recompute the slack from the point rather than trusting the tableau.
  out.slack = std::min(cap, (b - A * out.point).minCoeff());
  return out;
}

} // namespace diffdist::lp

#endif // DIFFDIST_LP_HPP
