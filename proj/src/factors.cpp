#include "slim/factors.hpp"

#include <cmath>

namespace slim {

namespace {

/// First two rows of R^T(alpha, beta).
Eigen::Matrix<double, 2, 3> reduced_rt(double alpha, double beta) {
  return rot2dof(alpha, beta).transpose().topRows<2>();
}

Eigen::Matrix<double, 2, 3> reduced_rt_dalpha(double alpha, double beta) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double sb = std::sin(beta);
  Eigen::Matrix<double, 2, 3> m;
  m << 0, ca * sb, -sa * sb,
       0, -sa, -ca;
  return m;
}

Eigen::Matrix<double, 2, 3> reduced_rt_dbeta(double alpha, double beta) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  Eigen::Matrix<double, 2, 3> m;
  m << -sb, sa * cb, ca * cb,
       0, 0, 0;
  return m;
}

}  // namespace

Vec6 residual_rel_pose(const Pose& a, const Pose& b, const Pose& z) {
  Vec6 r;
  r.head<3>() = a.rotation.transpose() * (b.translation - a.translation) - z.translation;
  r.tail<3>() = so3_log(z.rotation.transpose() * a.rotation.transpose() * b.rotation);
  return r;
}

Vec6 residual_prior(const Pose& pose, const Pose& z) {
  Vec6 r;
  r.head<3>() = z.rotation.transpose() * (pose.translation - z.translation);
  r.tail<3>() = so3_log(z.rotation.transpose() * pose.rotation);
  return r;
}

Vec4 residual_line(const Pose& frame, const LineParam& line, const Vec3& pa_local,
                   const Vec3& pb_local) {
  const auto M = reduced_rt(line.alpha, line.beta);
  const Vec2 xy(line.x, line.y);
  Vec4 r;
  r.head<2>() = M * frame.act(pa_local) - xy;
  r.tail<2>() = M * frame.act(pb_local) - xy;
  return r;
}

Vec3 residual_plane(const Pose& frame, const PlaneParam& plane, const Vec3& pa_local,
                    const Vec3& pb_local, const Vec3& pc_local) {
  const Vec3 n = rot2dof(plane.alpha, plane.beta).col(2);
  return {n.dot(frame.act(pa_local)) + plane.d,
          n.dot(frame.act(pb_local)) + plane.d,
          n.dot(frame.act(pc_local)) + plane.d};
}

void evaluate_factor(const Problem& problem, const Factor& f, FactorEval& eval,
                     bool with_jacobians) {
  const int dim = residual_dim(f.kind);
  switch (f.kind) {
    case FactorKind::odometry:
    case FactorKind::loop: {
      const Pose& a = problem.poses[f.pose_a];
      const Pose& b = problem.poses[f.pose_b];
      const Vec6 raw = residual_rel_pose(a, b, f.z);
      eval.r = f.sqrt_info * raw;
      if (with_jacobians) {
        const Vec3 phi = raw.tail<3>();
        const Mat3 jr_inv = so3_right_jacobian_inv(phi);
        Mat6 Ja = Mat6::Zero(), Jb = Mat6::Zero();
        const Mat3 Rat = a.rotation.transpose();
        Ja.block<3, 3>(0, 0) = -Rat;
        Ja.block<3, 3>(0, 3) = skew(Rat * (b.translation - a.translation));
        Ja.block<3, 3>(3, 3) = -jr_inv * b.rotation.transpose() * a.rotation;
        Jb.block<3, 3>(0, 0) = Rat;
        Jb.block<3, 3>(3, 3) = jr_inv;
        eval.J_pose_a = f.sqrt_info * Ja;
        eval.J_pose_b = f.sqrt_info * Jb;
      }
      break;
    }
    case FactorKind::prior_pose: {
      const Pose& a = problem.poses[f.pose_a];
      const Vec6 raw = residual_prior(a, f.z);
      eval.r = f.sqrt_info * raw;
      if (with_jacobians) {
        Mat6 J = Mat6::Zero();
        J.block<3, 3>(0, 0) = f.z.rotation.transpose();
        J.block<3, 3>(3, 3) = so3_right_jacobian_inv(raw.tail<3>());
        eval.J_pose_a = f.sqrt_info * J;
      }
      break;
    }
    case FactorKind::point_to_line: {
      const Pose& frame = problem.poses[f.pose_a];
      const LineParam& line = problem.lines[f.lm];
      const Vec4 raw = residual_line(frame, line, f.points[0], f.points[1]);
      eval.r = f.sqrt_info * raw;
      if (with_jacobians) {
        const auto M = reduced_rt(line.alpha, line.beta);
        const auto Ma = reduced_rt_dalpha(line.alpha, line.beta);
        const auto Mb = reduced_rt_dbeta(line.alpha, line.beta);
        MatX Jl = MatX::Zero(4, 4);
        MatX Jp = MatX::Zero(4, 6);
        for (int i = 0; i < 2; ++i) {
          const Vec3 local = f.points[i];
          const Vec3 pw = frame.act(local);
          Jl.block<2, 1>(2 * i, 0) = Ma * pw;
          Jl.block<2, 1>(2 * i, 1) = Mb * pw;
          Jl.block<2, 2>(2 * i, 2) = -Mat2::Identity();
          Jp.block<2, 3>(2 * i, 0) = M;
          Jp.block<2, 3>(2 * i, 3) = -M * frame.rotation * skew(local);
        }
        eval.J_lm = f.sqrt_info * Jl;
        eval.J_pose_a = f.sqrt_info * Jp;
      }
      break;
    }
    case FactorKind::point_to_plane: {
      const Pose& frame = problem.poses[f.pose_a];
      const PlaneParam& plane = problem.planes[f.lm];
      const Vec3 raw = residual_plane(frame, plane, f.points[0], f.points[1], f.points[2]);
      eval.r = f.sqrt_info * raw;
      if (with_jacobians) {
        const Vec3 n = rot2dof(plane.alpha, plane.beta).col(2);
        const Vec3 dn_da = rot2dof_dz_dalpha(plane.alpha, plane.beta);
        const Vec3 dn_db = rot2dof_dz_dbeta(plane.alpha, plane.beta);
        MatX Jl = MatX::Zero(3, 3);
        MatX Jp = MatX::Zero(3, 6);
        for (int i = 0; i < 3; ++i) {
          const Vec3 local = f.points[i];
          const Vec3 pw = frame.act(local);
          Jl(i, 0) = pw.dot(dn_da);
          Jl(i, 1) = pw.dot(dn_db);
          Jl(i, 2) = 1.0;
          Jp.block<1, 3>(i, 0) = n.transpose();
          Jp.block<1, 3>(i, 3) = -n.transpose() * frame.rotation * skew(local);
        }
        eval.J_lm = f.sqrt_info * Jl;
        eval.J_pose_a = f.sqrt_info * Jp;
      }
      break;
    }
  }
  (void)dim;
}

double huber_weight(double s, double delta) {
  if (delta <= 0) return 1.0;
  const double d2 = delta * delta;
  if (s <= d2) return 1.0;
  return delta / std::sqrt(s);
}

double huber_cost(double s, double delta) {
  if (delta <= 0) return s;
  const double d2 = delta * delta;
  if (s <= d2) return s;
  return 2.0 * delta * std::sqrt(s) - d2;
}

}  // namespace slim
