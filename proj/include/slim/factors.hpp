#pragma once

#include <array>
#include <vector>

#include "slim/geometry.hpp"
#include "slim/map.hpp"

namespace slim {

enum class FactorKind : uint8_t { odometry, loop, prior_pose, point_to_line, point_to_plane };

inline int residual_dim(FactorKind kind) {
  switch (kind) {
    case FactorKind::odometry:
    case FactorKind::loop:
    case FactorKind::prior_pose: return 6;
    case FactorKind::point_to_line: return 4;
    case FactorKind::point_to_plane: return 3;
  }
  return 0;
}

/// Factor over problem-local indices. pose_a is the observing / first frame,
/// pose_b the second frame for relative-pose kinds, lm the landmark slot
/// (line or plane array depending on kind).
struct Factor {
  FactorKind kind = FactorKind::odometry;
  int pose_a = -1;
  int pose_b = -1;
  int lm = -1;
  Pose z;
  std::array<Vec3, 3> points{};
  MatX sqrt_info;  // residual-dim square
  double huber = 0;  // 0 disables the robust kernel
};

/// Nonlinear least-squares problem over keyframe poses and minimal-parameter
/// landmarks. Pose tangent ordering is [translation, rotation], with a
/// right-multiplicative rotation perturbation R <- R * exp(skew(dtheta)).
struct Problem {
  std::vector<Pose> poses;
  std::vector<LineParam> lines;
  std::vector<PlaneParam> planes;
  std::vector<Factor> factors;
  std::vector<bool> pose_fixed;

  int pose_state_offset(int pose_index) const { return 6 * pose_index; }
  int num_pose_states() const { return int(poses.size()) * 6; }
  int num_landmark_states() const { return int(lines.size()) * 4 + int(planes.size()) * 3; }
};

/// Residual and weighted Jacobian blocks of one factor at the current states.
struct FactorEval {
  VecX r;       // sqrt_info already applied
  MatX J_pose_a;  // r_dim x 6
  MatX J_pose_b;  // r_dim x 6 (relative-pose kinds only)
  MatX J_lm;      // r_dim x 4 or 3 (point kinds only)
};

/// Translation rows first: R_a^T (p_b - p_a) - z.p, then Log(z.R^T R_a^T R_b).
Vec6 residual_rel_pose(const Pose& a, const Pose& b, const Pose& z);

Vec6 residual_prior(const Pose& pose, const Pose& z);

/// Reduced point-to-infinite-line rows: first two rows of R^T(alpha,beta)
/// applied to the world point, minus (x, y); two rows per observation point.
Vec4 residual_line(const Pose& frame, const LineParam& line, const Vec3& pa_local,
                   const Vec3& pb_local);

/// Point-to-infinite-plane distances n^T p_w + d for the three points.
Vec3 residual_plane(const Pose& frame, const PlaneParam& plane, const Vec3& pa_local,
                    const Vec3& pb_local, const Vec3& pc_local);

void evaluate_factor(const Problem& problem, const Factor& f, FactorEval& eval,
                     bool with_jacobians);

/// Robust weight for the squared norm s of a weighted residual under a Huber
/// kernel with threshold delta (cost = s for s <= delta^2, else
/// 2*delta*sqrt(s) - delta^2). Returns 1 when delta == 0.
double huber_weight(double s, double delta);
double huber_cost(double s, double delta);

}  // namespace slim
