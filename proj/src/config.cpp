#include "slim/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "slim/error.hpp"

namespace slim {

namespace {

template <typename T>
void assign(const nlohmann::json& j, const char* key, T& out, bool& known) {
  if (j.contains(key)) {
    out = j.at(key).get<T>();
    known = true;
  }
}

}  // namespace

Config load_config(const std::string& path, const Config& defaults) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoFailure, "cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::ConfigError, "invalid JSON in " + path + ": " + e.what());
  }
  if (!j.is_object()) raise(ErrorCode::ConfigError, "config root must be an object");

  Config c = defaults;
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    const nlohmann::json one{{it.key(), it.value()}};
    assign(one, "sigma_road", c.sigma_road, known);
    assign(one, "sigma_building", c.sigma_building, known);
    assign(one, "sigma_pole", c.sigma_pole, known);
    assign(one, "assoc_radius", c.assoc_radius, known);
    assign(one, "assoc_angle_deg", c.assoc_angle_deg, known);
    assign(one, "assoc_dist_plane", c.assoc_dist_plane, known);
    assign(one, "assoc_dist_line", c.assoc_dist_line, known);
    assign(one, "block_spacing", c.block_spacing, known);
    assign(one, "block_radius", c.block_radius, known);
    assign(one, "graff_delta", c.graff_delta, known);
    assign(one, "max_correspondences", c.max_correspondences, known);
    assign(one, "coarse_huber", c.coarse_huber, known);
    assign(one, "refine_huber", c.refine_huber, known);
    assign(one, "refine_max_iters", c.refine_max_iters, known);
    assign(one, "pcm_gamma_rot_deg", c.pcm_gamma_rot_deg, known);
    assign(one, "pcm_gamma_trans", c.pcm_gamma_trans, known);
    assign(one, "merge_angle_deg", c.merge_angle_deg, known);
    assign(one, "merge_dist_plane", c.merge_dist_plane, known);
    assign(one, "merge_dist_line", c.merge_dist_line, known);
    assign(one, "huber_ba", c.huber_ba, known);
    assign(one, "huber_loop", c.huber_loop, known);
    assign(one, "odom_info_trans", c.odom_info_trans, known);
    assign(one, "odom_info_rot", c.odom_info_rot, known);
    assign(one, "loop_info_trans", c.loop_info_trans, known);
    assign(one, "loop_info_rot", c.loop_info_rot, known);
    assign(one, "lm_max_iters", c.lm_max_iters, known);
    assign(one, "lm_rel_tol", c.lm_rel_tol, known);
    assign(one, "keyframe_min_spacing", c.keyframe_min_spacing, known);
    assign(one, "seed", c.seed, known);
    assign(one, "threads", c.threads, known);
    if (!known) raise(ErrorCode::ConfigError, "unknown config key: " + it.key());
  }
  return c;
}

std::string Config::describe() const {
  std::ostringstream os;
  os << "seed " << seed << " threads " << threads << " block_spacing " << block_spacing
     << " block_radius " << block_radius << " graff_delta " << graff_delta
     << " keyframe_min_spacing " << keyframe_min_spacing;
  return os.str();
}

}  // namespace slim
