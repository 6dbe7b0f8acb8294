#ifndef DIFFDIST_TYPES_HPP
#define DIFFDIST_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace diffdist {

/// Largest ambient dimension supported. Points and n×n matrices live on the
/// stack with this bound; facet tables are heap-allocated.
inline constexpr int kMaxDim = 8;

template<typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

template<typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

/// Unbounded-size storage for facet tables and LP tableaus.
template<typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template<typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Vec = Vector<double>;
using Mat = Matrix<double>;

/// Value, gradient and Hessian of a scalar field at one point.
template<typename Scalar>
struct ScalarField
{
  Scalar value{0};
  Vector<Scalar> gradient;
  Matrix<Scalar> hessian;

  static ScalarField zero(Eigen::Index dim)
  {
    return {Scalar(0), Vector<Scalar>::Zero(dim), Matrix<Scalar>::Zero(dim, dim)};
  }
};

// Error hierarchy. Every failure mode named by the library contract has its
// own type so callers can catch exactly what they can recover from.

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class EmptyOrDegenerate : public Error
{
public:
  using Error::Error;
};

class Unbounded : public Error
{
public:
  using Error::Error;
};

class GenerationFailed : public Error
{
public:
  using Error::Error;
};

class InvalidParams : public Error
{
public:
  using Error::Error;
};

class NumericalDegeneracy : public Error
{
public:
  using Error::Error;
};

class CalibrationFailed : public Error
{
public:
  using Error::Error;
};

class ConfigMismatch : public Error
{
public:
  using Error::Error;
};

class NotConverged : public Error
{
public:
  using Error::Error;
};

class ProjectionStalled : public Error
{
public:
  using Error::Error;
};

/// Thrown by the alternating solver; keeps the last iterate so callers can
/// still inspect where the iteration stopped.
class MaxIterExceeded : public Error
{
public:
  MaxIterExceeded(const std::string& what, Vec last_iterate, double residual, int iterations)
    : Error(what)
    , last_iterate_(std::move(last_iterate))
    , residual_(residual)
    , iterations_(iterations)
  {
  }

  const Vec& last_iterate() const noexcept { return last_iterate_; }
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

private:
  Vec last_iterate_;
  double residual_;
  int iterations_;
};

} // namespace diffdist

#endif // DIFFDIST_TYPES_HPP
