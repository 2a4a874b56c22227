#include "slim/vectorize.hpp"

#include <algorithm>
#include <cmath>

namespace slim {

PcaResult pca_decompose(const std::vector<Vec3>& points) {
  if (points.size() < 3) raise(ErrorCode::DegenerateCluster, "pca needs >= 3 points");
  Vec3 mean = Vec3::Zero();
  for (const auto& p : points) mean += p;
  mean /= double(points.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - mean;
    cov += d * d.transpose();
  }
  cov /= double(points.size());
  if (cov.norm() < 1e-24) raise(ErrorCode::DegenerateCluster, "all points coincident");

  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  Vec3 vals = es.eigenvalues().cwiseMax(0.0);
  Mat3 vecs = es.eigenvectors();
  // Canonical signs for the first two axes, right-handed completion.
  for (int c = 0; c < 2; ++c) {
    int k = 0;
    vecs.col(c).cwiseAbs().maxCoeff(&k);
    if (vecs(k, c) < 0) vecs.col(c) = -vecs.col(c);
  }
  vecs.col(2) = vecs.col(0).cross(vecs.col(1));
  return {mean, vals, vecs};
}

double sigma_for(Label label, const Config& cfg) {
  switch (label) {
    case Label::road: return cfg.sigma_road;
    case Label::building: return cfg.sigma_building;
    case Label::pole: return cfg.sigma_pole;
  }
  return cfg.sigma_building;
}

LineObservation extract_line_observation(const PointCluster& cluster, const Config& cfg) {
  if (cluster.points.size() < 2) raise(ErrorCode::DegenerateCluster, "line cluster needs >= 2 points");
  if (cluster.points.size() == 2) {
    // A two-point cluster is already its own minimal representation.
    if ((cluster.points[0] - cluster.points[1]).squaredNorm() <= 1e-12)
      raise(ErrorCode::DegenerateCluster, "coincident line points");
    LineObservation obs;
    obs.p_a = cluster.points[0];
    obs.p_b = cluster.points[1];
    obs.point_count = 2;
    obs.sqrt_info = 1.0 / sigma_for(cluster.label, cfg);
    return obs;
  }
  const PcaResult pca = pca_decompose(cluster.points);
  const double lambda3 = pca.eigenvalues[2];
  if (lambda3 <= 1e-12) raise(ErrorCode::DegenerateCluster, "no spread along line direction");
  const Vec3 v3 = pca.eigenvectors.col(2);
  const double s = std::sqrt(2.0 * lambda3);
  LineObservation obs;
  obs.p_a = pca.centroid + s * v3;
  obs.p_b = pca.centroid - s * v3;
  obs.point_count = int32_t(cluster.points.size());
  obs.sqrt_info = std::sqrt(double(obs.point_count) / 2.0) / sigma_for(cluster.label, cfg);
  return obs;
}

PlaneObservation extract_plane_observation(const PointCluster& cluster, const Config& cfg) {
  if (cluster.points.size() < 3) raise(ErrorCode::DegenerateCluster, "plane cluster needs >= 3 points");
  const PcaResult pca = pca_decompose(cluster.points);
  const double lambda2 = pca.eigenvalues[1];
  if (lambda2 <= 1e-12) raise(ErrorCode::DegenerateCluster, "collinear plane cluster");
  const double lambda1 = std::max(pca.eigenvalues[0], 1e-12);
  const Vec3 v1 = pca.eigenvectors.col(0);
  const Vec3 v2 = pca.eigenvectors.col(1);
  PlaneObservation obs;
  obs.p_a = pca.centroid + std::sqrt(2.0 * lambda2) * v2;
  obs.p_b = pca.centroid - std::sqrt(lambda2 / 2.0) * v2 + std::sqrt(lambda1 / 2.0) * v1;
  obs.p_c = pca.centroid - std::sqrt(lambda2 / 2.0) * v2 - std::sqrt(lambda1 / 2.0) * v1;
  obs.point_count = int32_t(cluster.points.size());
  obs.sqrt_info = std::sqrt(double(obs.point_count) / 3.0) / sigma_for(cluster.label, cfg);
  return obs;
}

Label classify_ground(const PointCluster& cluster, Label fallback) {
  if (cluster.kind != GeomKind::plane || cluster.points.size() < 3) return fallback;
  const PcaResult pca = pca_decompose(cluster.points);
  return std::abs(pca.eigenvectors.col(0).z()) > 0.95 ? Label::road : fallback;
}

LineParam fit_line_landmark(const std::vector<WeightedLineObs>& obs) {
  if (obs.empty()) raise(ErrorCode::DegenerateFit, "no observations");
  double wsum = 0;
  Vec3 mean = Vec3::Zero();
  for (const auto& o : obs) {
    const double w = o.obs.sqrt_info * o.obs.sqrt_info;
    mean += w * (o.pose.act(o.obs.p_a) + o.pose.act(o.obs.p_b));
    wsum += 2 * w;
  }
  mean /= wsum;
  Mat3 scatter = Mat3::Zero();
  for (const auto& o : obs) {
    const double w = o.obs.sqrt_info * o.obs.sqrt_info;
    for (const Vec3& p : {o.pose.act(o.obs.p_a), o.pose.act(o.obs.p_b)}) {
      const Vec3 d = p - mean;
      scatter += w * d * d.transpose();
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(scatter);
  if (es.eigenvalues()[2] <= 1e-12) raise(ErrorCode::DegenerateFit, "line fit has no spread");
  return line_from_point_direction({es.eigenvectors().col(2), mean});
}

PlaneParam fit_plane_landmark(const std::vector<WeightedPlaneObs>& obs) {
  if (obs.empty()) raise(ErrorCode::DegenerateFit, "no observations");
  Mat3 hint = Mat3::Zero();
  double wsum = 0;
  Vec3 anchor_mean = Vec3::Zero();
  for (const auto& o : obs) {
    const double w = o.obs.sqrt_info * o.obs.sqrt_info;
    const Vec3 pa = o.pose.act(o.obs.p_a);
    const Vec3 pb = o.pose.act(o.obs.p_b);
    const Vec3 pc = o.pose.act(o.obs.p_c);
    const Vec3 h = pb - pc;
    if (h.norm() > 0) {
      const Vec3 hn = h.normalized();
      hint += w * hn * hn.transpose();
    }
    anchor_mean += w * (pa + 0.5 * (pb + pc));
    wsum += 2 * w;
  }
  if (hint.norm() < 1e-20) raise(ErrorCode::DegenerateFit, "plane fit has no normal information");
  anchor_mean /= wsum;
  Eigen::SelfAdjointEigenSolver<Mat3> es(hint);
  const Vec3 n = es.eigenvectors().col(2);
  return plane_from_normal_distance({n, -n.dot(anchor_mean)});
}

namespace {

Vec3 project_to_line(const Vec3& p, const PointNormalLine& l) {
  return l.q + l.n.dot(p - l.q) * l.n;
}

Vec3 project_to_plane(const Vec3& p, const NormalDistancePlane& s) {
  return p - (s.n.dot(p) + s.d) * s.n;
}

}  // namespace

Landmark init_line_landmark(const std::vector<WeightedLineObs>& obs, Label label) {
  Landmark lm;
  lm.kind = GeomKind::line;
  lm.label = label;
  lm.line = fit_line_landmark(obs);
  const PointNormalLine pn = lm.as_line();
  double wsum = 0;
  Vec3 mean = Vec3::Zero();
  for (const auto& o : obs) {
    const double w = o.obs.sqrt_info * o.obs.sqrt_info;
    mean += w * (o.pose.act(o.obs.p_a) + o.pose.act(o.obs.p_b));
    wsum += 2 * w;
  }
  lm.centroid = project_to_line(mean / wsum, pn);
  lm.normal = pn.n;
  for (const auto& o : obs) {
    lm.radius = std::max(lm.radius, (o.pose.act(o.obs.p_a) - lm.centroid).norm());
    lm.radius = std::max(lm.radius, (o.pose.act(o.obs.p_b) - lm.centroid).norm());
  }
  return lm;
}

Landmark init_plane_landmark(const std::vector<WeightedPlaneObs>& obs, Label label) {
  Landmark lm;
  lm.kind = GeomKind::plane;
  lm.label = label;
  lm.plane = fit_plane_landmark(obs);
  const NormalDistancePlane nd = lm.as_plane();
  double wsum = 0;
  Vec3 mean = Vec3::Zero();
  for (const auto& o : obs) {
    const double w = o.obs.sqrt_info * o.obs.sqrt_info;
    mean += w * (o.pose.act(o.obs.p_a) + o.pose.act(o.obs.p_b) + o.pose.act(o.obs.p_c));
    wsum += 3 * w;
  }
  lm.centroid = project_to_plane(mean / wsum, nd);
  lm.normal = nd.n;
  for (const auto& o : obs) {
    for (const Vec3& p : {o.pose.act(o.obs.p_a), o.pose.act(o.obs.p_b), o.pose.act(o.obs.p_c)}) {
      lm.radius = std::max(lm.radius, (p - lm.centroid).norm());
    }
  }
  return lm;
}

ObservationSummary summarize_line_obs(const Pose& pose, const LineObservation& obs) {
  const Vec3 a = pose.act(obs.p_a);
  const Vec3 b = pose.act(obs.p_b);
  return {GeomKind::line, 0.5 * (a + b), (a - b).normalized()};
}

ObservationSummary summarize_plane_obs(const Pose& pose, const PlaneObservation& obs) {
  const Vec3 a = pose.act(obs.p_a);
  const Vec3 b = pose.act(obs.p_b);
  const Vec3 c = pose.act(obs.p_c);
  Vec3 n = b - c;
  if (n.norm() < 1e-12) n = Vec3::UnitZ();
  return {GeomKind::plane, (a + b + c) / 3.0, n.normalized()};
}

std::optional<int64_t> associate_observation(const Map& map, const ObservationSummary& s,
                                             const Config& cfg) {
  const double cos_gate = std::cos(cfg.assoc_angle_deg * M_PI / 180.0);
  double best_dist = cfg.assoc_radius;
  std::optional<int64_t> best;
  for (const auto& [id, lm] : map.landmarks) {
    if (lm.kind != s.kind) continue;
    const double cdist = (lm.centroid - s.centroid).norm();
    if (cdist >= best_dist) continue;
    if (std::abs(lm.normal.dot(s.normal)) < cos_gate) continue;
    const double perp = lm.kind == GeomKind::line
                            ? point_to_line_distance(s.centroid, lm.as_line())
                            : point_to_plane_distance(s.centroid, lm.as_plane());
    if (perp >= (lm.kind == GeomKind::line ? cfg.assoc_dist_line : cfg.assoc_dist_plane)) continue;
    best_dist = cdist;
    best = id;
  }
  return best;
}

Map build_submap(const SessionData& data, const Config& cfg) {
  Map map;
  map.sessions.push_back(data.session_id);
  for (size_t k = 0; k < data.odometry.size(); ++k) {
    Keyframe kf;
    kf.id = map.alloc_keyframe_id();
    kf.pose = data.odometry[k];
    kf.session = data.session_id;
    kf.seq = int32_t(k);
    if (k < data.clusters.size()) {
      for (const auto& cluster : data.clusters[k]) {
        if (cluster.kind == GeomKind::line) {
          const LineObservation obs = extract_line_observation(cluster, cfg);
          const ObservationSummary s = summarize_line_obs(kf.pose, obs);
          auto match = associate_observation(map, s, cfg);
          int64_t lm_id;
          if (match) {
            lm_id = *match;
          } else {
            Landmark lm = init_line_landmark({{kf.pose, obs}}, cluster.label);
            lm.id = map.alloc_landmark_id();
            lm_id = lm.id;
            map.landmarks.emplace(lm.id, std::move(lm));
          }
          map.landmarks.at(lm_id).observers.push_back(kf.id);
          kf.line_obs.emplace_back(lm_id, obs);
        } else {
          const PlaneObservation obs = extract_plane_observation(cluster, cfg);
          const ObservationSummary s = summarize_plane_obs(kf.pose, obs);
          auto match = associate_observation(map, s, cfg);
          int64_t lm_id;
          if (match) {
            lm_id = *match;
          } else {
            Landmark lm = init_plane_landmark({{kf.pose, obs}}, cluster.label);
            lm.id = map.alloc_landmark_id();
            lm_id = lm.id;
            map.landmarks.emplace(lm.id, std::move(lm));
          }
          map.landmarks.at(lm_id).observers.push_back(kf.id);
          kf.plane_obs.emplace_back(lm_id, obs);
        }
      }
    }
    map.keyframes.emplace(kf.id, std::move(kf));
  }

  Mat6 odom_sqrt_info = Mat6::Zero();
  odom_sqrt_info.diagonal() << cfg.odom_info_trans, cfg.odom_info_trans, cfg.odom_info_trans,
      cfg.odom_info_rot, cfg.odom_info_rot, cfg.odom_info_rot;
  for (size_t k = 0; k + 1 < data.odometry.size(); ++k) {
    RelPoseFactor f;
    f.kf_a = int64_t(k);
    f.kf_b = int64_t(k + 1);
    f.z = data.odometry[k].inverse() * data.odometry[k + 1];
    f.sqrt_info = odom_sqrt_info;
    map.rel_pose_factors.push_back(f);
  }
  if (!data.odometry.empty()) {
    PriorFactor prior;
    prior.kf = 0;
    prior.z = data.odometry[0];
    prior.sqrt_info = Mat6::Identity() * 1e3;
    map.prior_factors.push_back(prior);
  }
  refresh_landmark_caches(map);
  return map;
}

}  // namespace slim
