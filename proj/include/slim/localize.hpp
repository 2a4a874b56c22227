#pragma once

#include <vector>

#include "slim/config.hpp"
#include "slim/map.hpp"

namespace slim {

/// Continuous scan-to-map tracker. Association and residuals use landmark
/// geometry only, so a localization-only archive behaves identically to the
/// full archive.
struct LocalizerState {
  Pose pose;
  const Map* map = nullptr;
  Config cfg;
};

struct TrackResult {
  Pose pose;
  int inliers = 0;
  double mean_residual = 0;  // meters, unweighted point-to-entity distance
  double solve_seconds = 0;
};

/// One frame of continuous tracking from the previous pose. Throws
/// TrackingLost when fewer than 6 observations associate or the converged
/// mean residual exceeds 1 m.
TrackResult track_frame(LocalizerState& state, const std::vector<PointCluster>& frame);

/// Global relocalization: the frame is registered as a one-keyframe submap.
/// Throws NoMatch when no block pair passes the clique gate.
Pose relocalize(const Map& map, const std::vector<PointCluster>& frame, const Config& cfg);

}  // namespace slim
