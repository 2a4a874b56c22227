#pragma once

#include <optional>
#include <vector>

#include "slim/config.hpp"
#include "slim/map.hpp"

namespace slim {

struct PcaResult {
  Vec3 centroid;
  Vec3 eigenvalues;   // ascending
  Mat3 eigenvectors;  // columns, orthonormal, right-handed
};

/// Eigen-decomposition of the population covariance (divide by N).
/// Eigenvector signs are canonicalized and the basis is right-handed.
PcaResult pca_decompose(const std::vector<Vec3>& points);

double sigma_for(Label label, const Config& cfg);

/// Two representative points spread by sqrt(2*lambda3) along the dominant
/// direction; sqrt_info = sqrt(N/2)/sigma(label).
LineObservation extract_line_observation(const PointCluster& cluster, const Config& cfg);

/// Three representative points: +sqrt(2*lambda2) along v2 and
/// -sqrt(lambda2/2)*v2 +- sqrt(lambda1/2)*v1, so their mean is the centroid
/// and p_b - p_c carries the cluster normal. lambda1 is floored at 1e-12 so
/// perfectly flat clusters still yield three distinct points.
/// sqrt_info = sqrt(N/3)/sigma(label).
PlaneObservation extract_plane_observation(const PointCluster& cluster, const Config& cfg);

/// Plane-fit ground classifier for unlabeled clusters: plane-like clusters
/// whose fitted normal satisfies |n_z| > 0.95 are labeled road.
Label classify_ground(const PointCluster& cluster, Label fallback = Label::building);

struct WeightedLineObs {
  Pose pose;  // keyframe pose (world)
  LineObservation obs;
};
struct WeightedPlaneObs {
  Pose pose;
  PlaneObservation obs;
};

/// Weighted total least squares on the union of representative points in the
/// world frame (weights sqrt_info^2).
LineParam fit_line_landmark(const std::vector<WeightedLineObs>& obs);

/// Plane fit using each observation's normal hint (p_b - p_c) and in-plane
/// anchor points p_a and mid(p_b, p_c); the three raw points of one flat
/// observation span the normal, not the plane, so a plain point fit would be
/// ill-posed for a single observation.
PlaneParam fit_plane_landmark(const std::vector<WeightedPlaneObs>& obs);

Landmark init_line_landmark(const std::vector<WeightedLineObs>& obs, Label label);
Landmark init_plane_landmark(const std::vector<WeightedPlaneObs>& obs, Label label);

struct ObservationSummary {
  GeomKind kind;
  Vec3 centroid;  // world
  Vec3 normal;    // direction (line) or normal (plane), world, unit
};

ObservationSummary summarize_line_obs(const Pose& pose, const LineObservation& obs);
ObservationSummary summarize_plane_obs(const Pose& pose, const PlaneObservation& obs);

/// Centroid-based nearest-neighbor association with geometric gates; returns
/// the matched landmark id or nullopt for a new landmark.
std::optional<int64_t> associate_observation(const Map& map, const ObservationSummary& s,
                                             const Config& cfg);

struct SessionData {
  int32_t session_id = 0;
  std::vector<Pose> odometry;                         // per keyframe, session frame
  std::vector<std::vector<PointCluster>> clusters;    // per keyframe
};

/// Vectorizes one session into a submap: keyframes at the odometry poses,
/// observations associated/instantiated incrementally, odometry factors
/// between consecutive keyframes and a gauge prior on the first keyframe.
Map build_submap(const SessionData& data, const Config& cfg);

}  // namespace slim
