#pragma once

#include <limits>
#include <vector>

#include "slim/error.hpp"
#include "slim/geometry.hpp"
#include "slim/map.hpp"

namespace slim::detail {

/// Pose-only robust least squares over point-to-line / point-to-plane terms
/// with fixed target entities; shared by block registration, refinement and
/// online localization.
struct PoseOnlyProblem {
  struct Term {
    GeomKind kind;
    Vec3 n;       // target direction (line) or normal (plane)
    Vec3 target;  // point on the target entity
    Vec3 source;  // moved point
    double weight = 1;
  };
  std::vector<Term> terms;
  double huber = 0;

  double huber_cost_of(double s) const {
    if (huber <= 0) return s;
    const double d2 = huber * huber;
    return s <= d2 ? s : 2 * huber * std::sqrt(s) - d2;
  }
  double huber_weight_of(double s) const {
    if (huber <= 0) return 1;
    const double d2 = huber * huber;
    return s <= d2 ? 1.0 : huber / std::sqrt(s);
  }

  double term_sq(const Term& t, const Pose& T) const {
    const Vec3 d = T.act(t.source) - t.target;
    if (t.kind == GeomKind::line) return t.weight * (d - t.n.dot(d) * t.n).squaredNorm();
    const double r = t.n.dot(d);
    return t.weight * r * r;
  }

  double cost(const Pose& T) const {
    double c = 0;
    for (const auto& t : terms) c += huber_cost_of(term_sq(t, T));
    return c;
  }

  Vec6 step(const Pose& T, double lambda, double* condition = nullptr) const {
    Mat6 H = Mat6::Zero();
    Vec6 b = Vec6::Zero();
    for (const auto& t : terms) {
      const Vec3 moved = T.act(t.source);
      Eigen::Matrix<double, 3, 6> Jp;
      Jp.leftCols<3>() = Mat3::Identity();
      Jp.rightCols<3>() = -T.rotation * skew(t.source);
      if (t.kind == GeomKind::line) {
        const Mat3 proj = Mat3::Identity() - t.n * t.n.transpose();
        const Vec3 r = proj * (moved - t.target);
        const Eigen::Matrix<double, 3, 6> J = proj * Jp;
        const double w = t.weight * huber_weight_of(t.weight * r.squaredNorm());
        H += w * J.transpose() * J;
        b -= w * J.transpose() * r;
      } else {
        const double r = t.n.dot(moved - t.target);
        const Eigen::Matrix<double, 1, 6> J = t.n.transpose() * Jp;
        const double w = t.weight * huber_weight_of(t.weight * r * r);
        H += w * J.transpose() * J;
        b -= w * J.transpose() * r;
      }
    }
    if (condition) {
      const Eigen::SelfAdjointEigenSolver<Mat6> es(H);
      const double lo = std::abs(es.eigenvalues()[0]);
      *condition = lo > 0 ? std::abs(es.eigenvalues()[5]) / lo
                          : std::numeric_limits<double>::infinity();
    }
    Mat6 Hd = H;
    for (int i = 0; i < 6; ++i) Hd(i, i) += lambda * std::max(H(i, i), 1e-12);
    return Hd.ldlt().solve(b);
  }
};

inline Pose solve_pose_only(const PoseOnlyProblem& prob, Pose T, bool check_rank,
                            int max_iters = 50) {
  double lambda = 1e-6;
  double cost = prob.cost(T);
  for (int iter = 0; iter < max_iters; ++iter) {
    double condition = 0;
    const Vec6 delta = prob.step(T, lambda, iter == 0 && check_rank ? &condition : nullptr);
    if (iter == 0 && check_rank && condition > 1e8)
      raise(ErrorCode::RankDeficient, "pose problem does not constrain 6 DoF");
    Pose cand = T;
    cand.translation += delta.head<3>();
    cand.rotation = cand.rotation * so3_exp(delta.tail<3>());
    const double cand_cost = prob.cost(cand);
    if (cand_cost <= cost) {
      T = cand;
      const double drop = cost - cand_cost;
      cost = cand_cost;
      lambda = std::max(lambda * 0.5, 1e-12);
      if (delta.norm() < 1e-12 || drop < 1e-14 * std::max(cost, 1e-12)) break;
    } else {
      lambda *= 10;
      if (lambda > 1e8) break;
    }
  }
  return T;
}

}  // namespace slim::detail
