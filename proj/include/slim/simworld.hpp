#pragma once

#include <string>
#include <vector>

#include "slim/map.hpp"
#include "slim/vectorize.hpp"

namespace slim {

struct WorldSpec {
  uint64_t seed = 1;
  double extent = 120.0;            // square side, meters
  int building_count = 10;
  double building_side_min = 8.0;
  double building_side_max = 16.0;
  double building_height = 6.0;
  double pole_density = 2.0;        // per 100 m of road
  double pole_height = 5.0;
  double road_width = 8.0;
  int sessions = 3;
  double keyframe_spacing = 3.0;
  double sigma_obs = 0.05;          // meters
  double drift_rot_per_m = 0.05 * M_PI / 180.0;  // radians per meter
  double drift_trans_per_m = 0.01;               // meters per meter
  double sensor_range = 40.0;
  int cluster_points = 40;
  double sensor_height = 1.5;
};

/// A finite ground-truth entity: a rectangle for planes (center, two in-plane
/// half-axes) or a segment for lines (center, one half-axis).
struct TrueLandmark {
  GeomKind kind = GeomKind::plane;
  Label label = Label::building;
  Vec3 center = Vec3::Zero();
  Vec3 axis_u = Vec3::UnitX();  // unit, half-extent half_u
  Vec3 axis_v = Vec3::UnitY();  // unit, half-extent half_v (planes only)
  double half_u = 1.0;
  double half_v = 1.0;

  Vec3 normal() const { return kind == GeomKind::plane ? axis_u.cross(axis_v) : axis_u; }
};

struct World {
  WorldSpec spec;
  std::vector<TrueLandmark> landmarks;
  std::vector<std::pair<Vec3, Vec3>> road_segments;  // polyline pieces at z=0
};

struct SessionSim {
  int32_t session_id = 0;
  std::vector<Pose> truth;     // world frame
  std::vector<Pose> odometry;  // session frame, drifting
  std::vector<std::vector<PointCluster>> clusters;       // keyframe-local
  std::vector<std::vector<int>> visible;                 // true-landmark indices
};

World generate_world(const WorldSpec& spec);

uint64_t world_hash(const World& world);

SessionSim simulate_session(const World& world, int session_index);

SessionData to_session_data(const SessionSim& sim);

/// RMSE of translation residuals after closed-form rigid alignment (no
/// scale). xy_only projects onto the ground plane before aligning. Throws
/// TooFewPoses below 3 matched poses.
enum class AteMode { se3, xy_only };
double evaluate_ate(const std::vector<Pose>& estimated, const std::vector<Pose>& truth,
                    AteMode mode);

/// Session interchange: odometry.bin, clusters.bin, truth.bin inside dir.
void write_session_dir(const std::string& dir, const SessionSim& sim);
SessionSim read_session_dir(const std::string& dir);

/// Axis-aligned 0.1 m grid point dump of every world surface, the dense
/// baseline for the storage comparison. Returns bytes written.
size_t write_dense_point_dump(const World& world, const std::string& path, double grid = 0.1);

}  // namespace slim
