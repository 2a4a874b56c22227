#pragma once

#include <cstdint>
#include <string>

namespace slim {

/// All tunable thresholds with their documented defaults. Values can be
/// overridden from a JSON config file and from CLI flags.
struct Config {
  // vectorize
  double sigma_road = 0.1;
  double sigma_building = 0.2;
  double sigma_pole = 0.3;
  double assoc_radius = 3.0;        // centroid gate, meters
  double assoc_angle_deg = 5.0;     // direction/normal gate
  double assoc_dist_plane = 0.2;    // perpendicular gate, meters
  double assoc_dist_line = 1.0;

  // register
  double block_spacing = 30.0;
  double block_radius = 50.0;
  double graff_delta = 0.15;        // compatibility truncation threshold
  int max_correspondences = 2000;   // per block pair, seeded subsample cap
  double coarse_huber = 0.5;
  double refine_huber = 0.1;
  int refine_max_iters = 20;

  // loop-prune
  double pcm_gamma_rot_deg = 3.0;
  double pcm_gamma_trans = 1.0;

  // optimize
  double merge_angle_deg = 5.0;
  double merge_dist_plane = 0.2;
  double merge_dist_line = 1.0;
  double huber_ba = 0.1;
  double huber_loop = 0.5;
  double odom_info_trans = 1e2;     // 1/sigma per translation axis
  double odom_info_rot = 1e3;
  double loop_info_trans = 1e2;
  double loop_info_rot = 1e2;
  int lm_max_iters = 100;
  double lm_rel_tol = 1e-8;

  // marginalize
  double keyframe_min_spacing = 4.0;

  // simworld / cli
  uint64_t seed = 1;
  int threads = 1;

  std::string describe() const;
};

/// Loads overrides from a JSON object file. Unknown keys are rejected with
/// ConfigError naming the key.
Config load_config(const std::string& path, const Config& defaults = {});

}  // namespace slim
