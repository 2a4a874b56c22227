#pragma once

#include <utility>
#include <vector>

#include "slim/config.hpp"
#include "slim/map.hpp"

namespace slim {

struct LoopCandidate {
  int64_t base_kf = 0;
  int64_t sub_kf = 0;
  Pose relative;  // sub keyframe pose expressed in the base keyframe frame
  int inlier_count = 0;
};

/// Consistency of two loop candidates: the rotation-log and translation norms
/// of the cycle base_k -> sub_k -> sub_l -> base_l -> base_k closed with the
/// within-map relative poses. Zero for a pair of exact loops over exact
/// trajectories. Throws MissingOdometry when a submap chain would cross
/// sessions.
std::pair<double, double> pcm_consistency(const LoopCandidate& c1, const LoopCandidate& c2,
                                          const Map& base, const Map& sub);

/// Largest pairwise-consistent candidate subset under the rotation /
/// translation gates, found as an exact maximum clique.
std::vector<LoopCandidate> filter_loops(const std::vector<LoopCandidate>& candidates,
                                        const Map& base, const Map& sub, double gamma_rot,
                                        double gamma_trans);

}  // namespace slim
