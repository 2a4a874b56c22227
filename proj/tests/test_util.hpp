#pragma once

#include <functional>
#include <random>

#include "slim/factors.hpp"
#include "slim/geometry.hpp"

namespace slim::test {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> n;
  Vec3 v(n(rng), n(rng), n(rng));
  while (v.norm() < 1e-6) v = Vec3(n(rng), n(rng), n(rng));
  return v.normalized();
}

inline Mat3 random_rotation(Rng& rng, double max_angle = M_PI - 1e-2) {
  return so3_exp(random_unit(rng) * uniform(rng, 0, max_angle));
}

inline Pose random_pose(Rng& rng, double span = 10.0, double max_angle = M_PI - 1e-2) {
  Pose p;
  p.rotation = random_rotation(rng, max_angle);
  p.translation = Vec3(uniform(rng, -span, span), uniform(rng, -span, span),
                       uniform(rng, -span, span));
  return p;
}

/// Keeps |beta| away from the +-x gimbal so derivative ratios stay finite.
inline LineParam random_line(Rng& rng, double span = 10.0) {
  return {uniform(rng, -M_PI, M_PI), uniform(rng, -1.4, 1.4), uniform(rng, -span, span),
          uniform(rng, -span, span)};
}

inline PlaneParam random_plane(Rng& rng, double span = 10.0) {
  return {uniform(rng, -M_PI, M_PI), uniform(rng, -1.4, 1.4), uniform(rng, -span, 0.0)};
}

/// Central finite differences of f at x with step h.
inline MatX numeric_jacobian(const std::function<VecX(const VecX&)>& f, const VecX& x,
                             double h = 1e-6) {
  const VecX f0 = f(x);
  MatX J(f0.size(), x.size());
  for (int i = 0; i < x.size(); ++i) {
    VecX xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    J.col(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

/// Pose perturbed along the solver's tangent convention [dt, dtheta].
inline Pose perturb_pose(const Pose& p, const Vec6& delta) {
  Pose out;
  out.translation = p.translation + delta.head<3>();
  out.rotation = p.rotation * so3_exp(delta.tail<3>());
  return out;
}

inline double max_rel_error(const MatX& a, const MatX& b, double floor_scale = 1.0) {
  const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), floor_scale});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace slim::test
