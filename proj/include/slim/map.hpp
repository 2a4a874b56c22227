#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "slim/geometry.hpp"

namespace slim {

enum class Label : uint8_t { road = 0, building = 1, pole = 2 };
enum class GeomKind : uint8_t { line = 0, plane = 1 };

/// Labeled point cluster in keyframe-local coordinates, as produced by the
/// simulator front end or any upstream segmenter.
struct PointCluster {
  std::vector<Vec3> points;
  Label label = Label::building;
  GeomKind kind = GeomKind::plane;
};

/// Two representative points summarizing a line segment cluster. sqrt_info is
/// the scalar of the isotropic square-root information sqrt(N/m)/sigma.
struct LineObservation {
  Vec3 p_a;
  Vec3 p_b;
  double sqrt_info = 1.0;
  int32_t point_count = 0;
};

/// Three representative points summarizing a plane segment cluster.
struct PlaneObservation {
  Vec3 p_a;
  Vec3 p_b;
  Vec3 p_c;
  double sqrt_info = 1.0;
  int32_t point_count = 0;
};

struct Keyframe {
  int64_t id = 0;
  Pose pose;  // world frame; mutable by the optimizers
  int32_t session = 0;
  int32_t seq = 0;  // position within the session, for trajectory evaluation
  std::vector<std::pair<int64_t, LineObservation>> line_obs;
  std::vector<std::pair<int64_t, PlaneObservation>> plane_obs;
};

struct Landmark {
  int64_t id = 0;
  Label label = Label::building;
  GeomKind kind = GeomKind::plane;
  LineParam line;    // valid iff kind == line
  PlaneParam plane;  // valid iff kind == plane
  Vec3 centroid = Vec3::Zero();  // world, cached, lies on the entity
  Vec3 normal = Vec3::UnitZ();   // direction (line) or normal (plane), cached
  double radius = 0;             // extent cache for overlap tests
  std::vector<int64_t> observers;

  PointNormalLine as_line() const { return line_to_point_direction(line); }
  NormalDistancePlane as_plane() const { return plane_to_normal_distance(plane); }
};

/// Relative-pose factor between two keyframes; covers raw odometry edges and
/// the spanning-tree factors recovered by marginalization.
struct RelPoseFactor {
  int64_t kf_a = 0;
  int64_t kf_b = 0;
  Pose z;  // measured T_a^{-1} * T_b
  Mat6 sqrt_info = Mat6::Identity();
  bool recovered = false;
};

struct PriorFactor {
  int64_t kf = 0;
  Pose z;
  Mat6 sqrt_info = Mat6::Identity();
};

/// Landmark observation factor recovered by marginalization: synthesized
/// observation points with a dense recovered square-root information.
struct RecoveredObsFactor {
  int64_t landmark = 0;
  int64_t keyframe = 0;
  GeomKind kind = GeomKind::plane;
  std::array<Vec3, 3> points{};  // keyframe-local; points[2] unused for lines
  MatX sqrt_info;                // 4x4 (line) or 3x3 (plane)
};

struct Map {
  std::map<int64_t, Keyframe> keyframes;
  std::map<int64_t, Landmark> landmarks;
  std::vector<RelPoseFactor> rel_pose_factors;
  std::vector<PriorFactor> prior_factors;
  std::vector<RecoveredObsFactor> recovered_obs;
  std::vector<int32_t> sessions;
  int64_t next_keyframe_id = 0;
  int64_t next_landmark_id = 0;

  bool empty() const { return keyframes.empty() && landmarks.empty(); }
  int64_t alloc_keyframe_id() { return next_keyframe_id++; }
  int64_t alloc_landmark_id() { return next_landmark_id++; }

  size_t observation_count() const {
    size_t n = 0;
    for (const auto& [id, kf] : keyframes) n += kf.line_obs.size() + kf.plane_obs.size();
    return n;
  }
};

/// Full-graph referential integrity walk; throws IdCollision on dangling or
/// duplicated references.
void validate_map(const Map& map);

/// Recomputes every landmark's cached centroid/normal from its geometry and
/// the current keyframe poses. Centroids are projected onto the entity.
void refresh_landmark_caches(Map& map);

}  // namespace slim
