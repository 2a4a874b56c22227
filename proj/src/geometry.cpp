#include "slim/geometry.hpp"

#include <cmath>

namespace slim {

Mat3 so3_exp(const Vec3& phi) {
  const double theta = phi.norm();
  if (theta < 1e-12) {
    return Mat3::Identity() + skew(phi);
  }
  const Vec3 a = phi / theta;
  const Mat3 A = skew(a);
  return Mat3::Identity() + std::sin(theta) * A + (1.0 - std::cos(theta)) * A * A;
}

Vec3 so3_log(const Mat3& R) {
  const Vec3 w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double s = 0.5 * w.norm();                            // sin(theta)
  const double c = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);  // cos(theta)
  const double theta = std::atan2(s, c);
  if (s > 1e-7) {
    return (theta / (2.0 * s)) * w;
  }
  if (c > 0) {
    return 0.5 * w;
  }
  // theta ~ pi: the antisymmetric part vanishes, recover the axis from
  // (R + R^T)/2 = I cos(theta) + a a^T (1 - cos(theta)).
  const Mat3 S = 0.5 * (R + R.transpose());
  int k = 0;
  S.diagonal().maxCoeff(&k);
  Vec3 a;
  a[k] = std::sqrt(std::max(0.0, (S(k, k) - c) / (1.0 - c)));
  for (int i = 0; i < 3; ++i) {
    if (i != k) a[i] = S(i, k) / ((1.0 - c) * a[k]);
  }
  a.normalize();
  if (a.dot(w) < 0) a = -a;
  return theta * a;
}

Mat3 so3_right_jacobian_inv(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 P = skew(phi);
  if (theta < 1e-7) {
    return Mat3::Identity() + 0.5 * P + (1.0 / 12.0) * P * P;
  }
  const double cot_term =
      1.0 / (theta * theta) - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  return Mat3::Identity() + 0.5 * P + cot_term * P * P;
}

Mat3 rot2dof(double alpha, double beta) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  Mat3 R;
  R << cb, 0, -sb,
       sa * sb, ca, sa * cb,
       ca * sb, -sa, ca * cb;
  return R;
}

Vec3 rot2dof_dz_dalpha(double alpha, double beta) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta);
  return {0.0, ca * cb, -sa * cb};
}

Vec3 rot2dof_dz_dbeta(double alpha, double beta) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  return {-cb, -sa * sb, -ca * sb};
}

PointNormalLine line_to_point_direction(const LineParam& l) {
  const Mat3 R = rot2dof(l.alpha, l.beta);
  return {R.col(2), R.col(0) * l.x + R.col(1) * l.y};
}

NormalDistancePlane plane_to_normal_distance(const PlaneParam& p) {
  return {rot2dof(p.alpha, p.beta).col(2), p.d};
}

void angles_from_unit(const Vec3& n, double& alpha, double& beta) {
  // Column 3 of rot2dof is (-sin b, sin a cos b, cos a cos b); asin keeps
  // cos(beta) >= 0 so the remaining two components determine alpha.
  double nx = std::clamp(n.x(), -1.0, 1.0);
  if (std::abs(nx) > 1.0 - 1e-9) {
    // Gimbal case: direction along +-x. cos(beta) = 0 leaves alpha free.
    beta = std::asin(-std::copysign(1.0, nx));
    alpha = 0.0;
    return;
  }
  beta = std::asin(-nx);
  alpha = std::atan2(n.y(), n.z());
}

namespace {

Vec3 canonical_direction(const Vec3& n) {
  // Line directions are sign-free; pick the representative with positive z,
  // breaking ties by y then x.
  if (n.z() > 1e-12) return n;
  if (n.z() < -1e-12) return -n;
  if (n.y() > 1e-12) return n;
  if (n.y() < -1e-12) return -n;
  return n.x() >= 0 ? n : -n;
}

}  // namespace

LineParam line_from_point_direction(const PointNormalLine& pn) {
  const Vec3 n = canonical_direction(pn.n.normalized());
  double alpha = 0, beta = 0;
  angles_from_unit(n, alpha, beta);
  const Mat3 R = rot2dof(alpha, beta);
  const Vec3 closest = pn.q - n.dot(pn.q) * n;
  const Vec3 local = R.transpose() * closest;
  return {alpha, beta, local.x(), local.y()};
}

PlaneParam plane_from_normal_distance(const NormalDistancePlane& nd) {
  Vec3 n = nd.n.normalized();
  double d = nd.d;
  bool flip = d > 1e-12;
  if (std::abs(d) <= 1e-12) {
    d = 0.0;
    for (int i = 0; i < 3; ++i) {
      if (std::abs(n[i]) > 1e-12) {
        flip = n[i] < 0;
        break;
      }
    }
  }
  if (flip) {
    n = -n;
    d = -d;
  }
  double alpha = 0, beta = 0;
  angles_from_unit(n, alpha, beta);
  return {alpha, beta, d};
}

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  if (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

double point_to_line_distance(const Vec3& p, const PointNormalLine& line) {
  const Vec3 r = p - line.q;
  return (r - line.n.dot(r) * line.n).norm();
}

double point_to_plane_distance(const Vec3& p, const NormalDistancePlane& plane) {
  return std::abs(plane.n.dot(p) + plane.d);
}

}  // namespace slim
