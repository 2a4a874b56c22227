#include "slim/localize.hpp"

#include <chrono>
#include <cmath>

#include "pose_only_solver.hpp"
#include "slim/registration.hpp"
#include "slim/vectorize.hpp"

namespace slim {

namespace {

struct GeometryGates {
  double cos_angle;
  double dist_line;
  double dist_plane;
};

/// Nearest landmark by perpendicular distance with angle gating; centroids
/// and extents are deliberately not used so the localization-only archive
/// gives identical results.
const Landmark* associate_by_geometry(const Map& map, GeomKind kind, const Vec3& point,
                                      const Vec3& direction, const GeometryGates& gates) {
  const Landmark* best = nullptr;
  double best_perp = kind == GeomKind::line ? gates.dist_line : gates.dist_plane;
  for (const auto& [id, lm] : map.landmarks) {
    if (lm.kind != kind) continue;
    if (std::abs(lm.normal.dot(direction)) < gates.cos_angle) continue;
    const double perp = kind == GeomKind::line ? point_to_line_distance(point, lm.as_line())
                                               : point_to_plane_distance(point, lm.as_plane());
    if (perp < best_perp) {
      best_perp = perp;
      best = &lm;
    }
  }
  return best;
}

}  // namespace

TrackResult track_frame(LocalizerState& state, const std::vector<PointCluster>& frame) {
  const auto t0 = std::chrono::steady_clock::now();
  const Config& cfg = state.cfg;
  const GeometryGates gates{std::cos(cfg.assoc_angle_deg * M_PI / 180.0), cfg.assoc_dist_line,
                            cfg.assoc_dist_plane};

  detail::PoseOnlyProblem prob;
  prob.huber = cfg.refine_huber;
  int associated = 0;
  for (const auto& cluster : frame) {
    if (cluster.kind == GeomKind::line) {
      if (cluster.points.size() < 2) continue;
      const LineObservation obs = extract_line_observation(cluster, cfg);
      const auto s = summarize_line_obs(state.pose, obs);
      const Landmark* lm =
          associate_by_geometry(*state.map, GeomKind::line, s.centroid, s.normal, gates);
      if (!lm) continue;
      ++associated;
      const auto pn = lm->as_line();
      const double w = obs.sqrt_info * obs.sqrt_info;
      for (const Vec3& p : {obs.p_a, obs.p_b}) {
        prob.terms.push_back({GeomKind::line, pn.n, pn.q, state.pose.act(p), w});
      }
    } else {
      if (cluster.points.size() < 3) continue;
      const PlaneObservation obs = extract_plane_observation(cluster, cfg);
      const auto s = summarize_plane_obs(state.pose, obs);
      const Landmark* lm =
          associate_by_geometry(*state.map, GeomKind::plane, s.centroid, s.normal, gates);
      if (!lm) continue;
      ++associated;
      const auto nd = lm->as_plane();
      const Vec3 anchor = -nd.d * nd.n;
      const double w = obs.sqrt_info * obs.sqrt_info;
      for (const Vec3& p : {obs.p_a, obs.p_b, obs.p_c}) {
        prob.terms.push_back({GeomKind::plane, nd.n, anchor, state.pose.act(p), w});
      }
    }
  }
  if (associated < 6) raise(ErrorCode::TrackingLost, "fewer than 6 associated observations");

  // Terms carry world points under the prior pose; solve for the correction.
  const Pose correction = detail::solve_pose_only(prob, Pose::identity(), false, 10);
  TrackResult out;
  out.pose = correction * state.pose;
  out.inliers = associated;

  double res_sum = 0;
  size_t res_count = 0;
  for (const auto& t : prob.terms) {
    const Vec3 d = correction.act(t.source) - t.target;
    res_sum += t.kind == GeomKind::line ? (d - t.n.dot(d) * t.n).norm() : std::abs(t.n.dot(d));
    ++res_count;
  }
  out.mean_residual = res_count ? res_sum / double(res_count) : 0.0;
  if (out.mean_residual > 1.0) raise(ErrorCode::TrackingLost, "mean residual above 1 m");
  state.pose = out.pose;
  out.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

Pose relocalize(const Map& map, const std::vector<PointCluster>& frame, const Config& cfg) {
  SessionData data;
  data.session_id = -1;
  data.odometry = {Pose::identity()};
  data.clusters = {frame};
  const Map frame_map = build_submap(data, cfg);

  const auto matches = register_blocks(map, frame_map, cfg);
  if (matches.empty()) raise(ErrorCode::NoMatch, "no block registration candidate");
  const BlockMatch* best = &matches.front();
  for (const auto& m : matches) {
    if (m.inliers > best->inliers) best = &m;
  }
  return best->map_transform;
}

}  // namespace slim
