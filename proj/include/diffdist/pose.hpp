#ifndef DIFFDIST_POSE_HPP
#define DIFFDIST_POSE_HPP

#include "diffdist/types.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <utility>

namespace diffdist {

/// Number of rotational degrees of freedom in dimension n.
constexpr Eigen::Index rotation_dof(Eigen::Index n) { return n * (n - 1) / 2; }

/// Number of rigid-motion parameters (translation then rotation) in dimension n.
constexpr Eigen::Index twist_dof(Eigen::Index n) { return n + rotation_dof(n); }

/// Plane (i, j) rotated by the k-th generator of so(n). In 3D the order is
/// x, y, z so the rotation coordinates form the usual rotation vector.
inline std::pair<Eigen::Index, Eigen::Index> generator_plane(Eigen::Index n, Eigen::Index k)
{
  if (n == 3) {
    static constexpr std::pair<Eigen::Index, Eigen::Index> xyz[3] = {{1, 2}, {2, 0}, {0, 1}};
    return xyz[k];
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (k-- == 0)
        return {i, j};
    }
  }
  throw InvalidParams("generator_plane: index out of range");
}

/// k-th skew generator G_k = e_j e_iᵀ − e_i e_jᵀ.
template<typename Scalar>
Matrix<Scalar> so_generator(Eigen::Index n, Eigen::Index k)
{
  const auto [i, j] = generator_plane(n, k);
  Matrix<Scalar> G = Matrix<Scalar>::Zero(n, n);
  G(j, i) = Scalar(1);
  G(i, j) = Scalar(-1);
  return G;
}

/// G_k · p without forming the matrix.
template<typename Scalar>
Vector<Scalar> apply_generator(Eigen::Index k, const Vector<Scalar>& p)
{
  const Eigen::Index n = p.size();
  const auto [i, j] = generator_plane(n, k);
  Vector<Scalar> out = Vector<Scalar>::Zero(n);
  out(j) = p(i);
  out(i) = -p(j);
  return out;
}

/// exp(Σ ω_k G_k).
template<typename Scalar>
Matrix<Scalar> rotation_exp(Eigen::Index n, const Vector<Scalar>& omega)
{
  if (omega.size() != rotation_dof(n))
    throw ConfigMismatch("rotation_exp: expected " + std::to_string(rotation_dof(n)) + " rotation coordinates");
  if (n == 2) {
    const Scalar c = std::cos(omega(0)), s = std::sin(omega(0));
    Matrix<Scalar> R(2, 2);
    R << c, -s, s, c;
    return R;
  }
  if (n == 3) {
    const Eigen::Matrix<Scalar, 3, 1> w = omega.template head<3>();
    const Scalar angle = w.norm();
    if (angle == Scalar(0))
      return Matrix<Scalar>::Identity(3, 3);
    return Eigen::AngleAxis<Scalar>(angle, w / angle).toRotationMatrix();
  }
  DenseMatrix<Scalar> S = DenseMatrix<Scalar>::Zero(n, n);
  for (Eigen::Index k = 0; k < omega.size(); ++k)
    S += omega(k) * DenseMatrix<Scalar>(so_generator<Scalar>(n, k));
  return Matrix<Scalar>(S.exp());
}

/// Proper rigid motion x ↦ R x + t.
template<typename Scalar>
struct RigidPose
{
  Matrix<Scalar> rotation;
  Vector<Scalar> translation;

  static RigidPose identity(Eigen::Index n)
  {
    return {Matrix<Scalar>::Identity(n, n), Vector<Scalar>::Zero(n)};
  }

  static RigidPose from_translation(const Vector<Scalar>& t)
  {
    return {Matrix<Scalar>::Identity(t.size(), t.size()), t};
  }

  /// Rotation coordinates ω (see so_generator) then translation.
  static RigidPose from_twist(const Vector<Scalar>& omega, const Vector<Scalar>& t)
  {
    return {rotation_exp<Scalar>(t.size(), omega), t};
  }

  Eigen::Index dim() const { return translation.size(); }

  Vector<Scalar> apply(const Vector<Scalar>& x) const { return rotation * x + translation; }

  RigidPose inverse() const
  {
    const Matrix<Scalar> Rt = rotation.transpose();
    return {Rt, -(Rt * translation)};
  }

  /// (*this) ∘ other.
  RigidPose compose(const RigidPose& other) const
  {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  /// Throws InvalidParams unless RᵀR = I within 1e-10 and det R = +1.
  void validate() const
  {
    const Eigen::Index n = translation.size();
    if (rotation.rows() != n || rotation.cols() != n)
      throw ConfigMismatch("RigidPose: rotation/translation dimension mismatch");
    const Scalar orth = (rotation.transpose() * rotation - Matrix<Scalar>::Identity(n, n)).cwiseAbs().maxCoeff();
    if (!(orth <= Scalar(1e-10)))
      throw InvalidParams("RigidPose: rotation is not orthonormal");
    if (rotation.determinant() <= Scalar(0))
      throw InvalidParams("RigidPose: rotation has negative determinant");
  }
};

/// Left perturbation by a world-frame twist about the world origin:
/// x ↦ exp(Ω)(R x + t) + v, with parameters [v, ω].
template<typename Scalar>
RigidPose<Scalar> perturb_world(const RigidPose<Scalar>& pose, const Vector<Scalar>& twist)
{
  const Eigen::Index n = pose.dim();
  if (twist.size() != twist_dof(n))
    throw ConfigMismatch("perturb_world: twist size mismatch");
  const Vector<Scalar> v = twist.head(n);
  const Vector<Scalar> omega = twist.tail(rotation_dof(n));
  const RigidPose<Scalar> delta{rotation_exp<Scalar>(n, omega), v};
  return delta.compose(pose);
}

} // namespace diffdist

#endif // DIFFDIST_POSE_HPP
