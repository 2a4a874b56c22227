#pragma once

#include <Eigen/Dense>

#include "slim/error.hpp"

namespace slim {

using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

Mat3 so3_exp(const Vec3& phi);

/// Matrix logarithm on SO(3); the angle of the result lies in [0, pi].
/// The theta ~ pi case is handled through the symmetric part of R.
Vec3 so3_log(const Mat3& R);

/// Inverse of the right Jacobian of SO(3). Needed for exact derivatives of
/// residuals of the form Log(A * R * Exp(delta)).
Mat3 so3_right_jacobian_inv(const Vec3& phi);

/// Rigid transform: x_world = rotation * x_local + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  Pose compose(const Pose& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }
  Pose inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
  Vec3 act(const Vec3& p) const { return rotation * p + translation; }

  bool is_valid(double tol = 1e-9) const {
    return (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < tol &&
           std::abs(rotation.determinant() - 1.0) < tol;
  }
};

inline Pose operator*(const Pose& a, const Pose& b) { return a.compose(b); }

/// Infinite line in minimal parameters. The line is the image of the z-axis
/// under the offset (x, y) on the xOy plane followed by the rotation
/// R(alpha, beta).
struct LineParam {
  double alpha = 0;
  double beta = 0;
  double x = 0;
  double y = 0;

  Vec4 vec() const { return {alpha, beta, x, y}; }
  static LineParam from_vec(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }
};

/// Infinite plane in minimal parameters: the xOy plane shifted by d along z,
/// then rotated by R(alpha, beta).
struct PlaneParam {
  double alpha = 0;
  double beta = 0;
  double d = 0;

  Vec3 vec() const { return {alpha, beta, d}; }
  static PlaneParam from_vec(const Vec3& v) { return {v[0], v[1], v[2]}; }
};

/// Point-direction form of a line; q is the point of the line closest to the
/// origin, so q is perpendicular to n.
struct PointNormalLine {
  Vec3 n;
  Vec3 q;
};

/// Normal-distance form of a plane: n'p + d = 0 for points p on the plane.
struct NormalDistancePlane {
  Vec3 n;
  double d;
};

/// The 2-DoF rotation built from two elemental angles. Column 3 (the image of
/// u_z) is (-sin b, sin a cos b, cos a cos b).
Mat3 rot2dof(double alpha, double beta);

/// Derivative of rot2dof(alpha, beta) * u_z with respect to alpha / beta.
Vec3 rot2dof_dz_dalpha(double alpha, double beta);
Vec3 rot2dof_dz_dbeta(double alpha, double beta);

PointNormalLine line_to_point_direction(const LineParam& l);
NormalDistancePlane plane_to_normal_distance(const PlaneParam& p);

/// Recovers minimal parameters from a unit direction and a point on the line.
/// The direction sign is canonicalized first (positive z, then y, then x
/// component), so two inputs describing the same infinite line map to the
/// same parameters. Throws DegenerateDirection never in practice: the gimbal
/// case |n_x| ~ 1 is resolved by clamping with alpha = 0.
LineParam line_from_point_direction(const PointNormalLine& pn);

/// Recovers minimal parameters from normal-distance form. The (n, d) sign is
/// canonicalized (d <= 0 preferred; for d == 0 the first nonzero component of
/// n must be positive) so (n, d) and (-n, -d) give identical parameters.
PlaneParam plane_from_normal_distance(const NormalDistancePlane& nd);

/// (alpha, beta) with cos(beta) >= 0 such that rot2dof(alpha, beta) * u_z = n.
/// Assumes |n| = 1.
void angles_from_unit(const Vec3& n, double& alpha, double& beta);

/// Wraps an angle to (-pi, pi]. Applied only at serialization boundaries.
double wrap_angle(double a);

double point_to_line_distance(const Vec3& p, const PointNormalLine& line);
double point_to_plane_distance(const Vec3& p, const NormalDistancePlane& plane);

}  // namespace slim
