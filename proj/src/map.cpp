#include "slim/map.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "slim/error.hpp"

namespace slim {

void validate_map(const Map& map) {
  std::set<int64_t> kf_ids, lm_ids;
  for (const auto& [id, kf] : map.keyframes) {
    if (id != kf.id || !kf_ids.insert(id).second)
      raise(ErrorCode::IdCollision, "keyframe id mismatch or duplicate: " + std::to_string(id));
    if (id >= map.next_keyframe_id)
      raise(ErrorCode::IdCollision, "keyframe id beyond allocator: " + std::to_string(id));
  }
  for (const auto& [id, lm] : map.landmarks) {
    if (id != lm.id || !lm_ids.insert(id).second)
      raise(ErrorCode::IdCollision, "landmark id mismatch or duplicate: " + std::to_string(id));
    if (id >= map.next_landmark_id)
      raise(ErrorCode::IdCollision, "landmark id beyond allocator: " + std::to_string(id));
    for (int64_t kf : lm.observers) {
      if (!map.keyframes.count(kf))
        raise(ErrorCode::IdCollision, "landmark observer missing: " + std::to_string(kf));
    }
  }
  for (const auto& [id, kf] : map.keyframes) {
    for (const auto& [lm, obs] : kf.line_obs) {
      (void)obs;
      if (!map.landmarks.count(lm) || map.landmarks.at(lm).kind != GeomKind::line)
        raise(ErrorCode::IdCollision, "dangling line observation: " + std::to_string(lm));
    }
    for (const auto& [lm, obs] : kf.plane_obs) {
      (void)obs;
      if (!map.landmarks.count(lm) || map.landmarks.at(lm).kind != GeomKind::plane)
        raise(ErrorCode::IdCollision, "dangling plane observation: " + std::to_string(lm));
    }
  }
  for (const auto& f : map.rel_pose_factors) {
    if (!map.keyframes.count(f.kf_a) || !map.keyframes.count(f.kf_b))
      raise(ErrorCode::IdCollision, "rel-pose factor references missing keyframe");
  }
  for (const auto& f : map.prior_factors) {
    if (!map.keyframes.count(f.kf))
      raise(ErrorCode::IdCollision, "prior factor references missing keyframe");
  }
  for (const auto& f : map.recovered_obs) {
    if (!map.keyframes.count(f.keyframe) || !map.landmarks.count(f.landmark))
      raise(ErrorCode::IdCollision, "recovered factor references missing node");
  }
}

void refresh_landmark_caches(Map& map) {
  std::map<int64_t, std::vector<std::pair<Vec3, double>>> pts;
  auto add_point = [&](int64_t lm, const Vec3& p, double w) { pts[lm].emplace_back(p, w); };
  for (const auto& [id, kf] : map.keyframes) {
    for (const auto& [lm, obs] : kf.line_obs) {
      const double w = obs.sqrt_info * obs.sqrt_info;
      add_point(lm, kf.pose.act(obs.p_a), w);
      add_point(lm, kf.pose.act(obs.p_b), w);
    }
    for (const auto& [lm, obs] : kf.plane_obs) {
      const double w = obs.sqrt_info * obs.sqrt_info;
      add_point(lm, kf.pose.act(obs.p_a), w);
      add_point(lm, kf.pose.act(obs.p_b), w);
      add_point(lm, kf.pose.act(obs.p_c), w);
    }
  }
  for (const auto& f : map.recovered_obs) {
    const Pose& pose = map.keyframes.at(f.keyframe).pose;
    const int npts = f.kind == GeomKind::line ? 2 : 3;
    for (int i = 0; i < npts; ++i) add_point(f.landmark, pose.act(f.points[i]), 1.0);
  }

  for (auto& [id, lm] : map.landmarks) {
    Vec3 raw = lm.centroid;
    auto it = pts.find(id);
    if (it != pts.end() && !it->second.empty()) {
      Vec3 sum = Vec3::Zero();
      double wsum = 0;
      for (const auto& [p, w] : it->second) {
        sum += w * p;
        wsum += w;
      }
      raw = sum / wsum;
    }
    if (lm.kind == GeomKind::line) {
      const PointNormalLine pn = lm.as_line();
      lm.centroid = pn.q + pn.n.dot(raw - pn.q) * pn.n;
      lm.normal = pn.n;
    } else {
      const NormalDistancePlane nd = lm.as_plane();
      lm.centroid = raw - (nd.n.dot(raw) + nd.d) * nd.n;
      lm.normal = nd.n;
    }
    if (it != pts.end()) {
      double r = 0;
      for (const auto& [p, w] : it->second) r = std::max(r, (p - lm.centroid).norm());
      if (r > 0) lm.radius = r;
    }
  }
}

}  // namespace slim
