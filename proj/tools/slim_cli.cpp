#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "slim/error.hpp"
#include "slim/localize.hpp"
#include "slim/mapio.hpp"
#include "slim/pipeline.hpp"
#include "slim/simworld.hpp"

namespace {

using namespace slim;

int exit_code_for(const Error& e) {
  return e.code() == ErrorCode::ConfigError ? 2 : 3;
}

void emit_report(const Report& report, const std::string& path) {
  std::cout << report.text();
  if (!path.empty()) {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::IoFailure, "cannot write report: " + path);
    out << report.text();
  }
}

std::string session_dir_name(const std::string& root, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "session_%03d", index);
  return root + "/" + buf;
}

int cmd_generate(const WorldSpec& spec, const std::string& out_dir) {
  const World world = generate_world(spec);
  std::filesystem::create_directories(out_dir);
  Report report;
  report.add("world", "landmarks", double(world.landmarks.size()));
  report.add("world", "hash", std::to_string(world_hash(world)));
  for (int s = 0; s < spec.sessions; ++s) {
    const SessionSim sim = simulate_session(world, s);
    write_session_dir(session_dir_name(out_dir, s), sim);
    report.add("session", "keyframes", double(sim.truth.size()));
  }
  report.add("generate", "sessions", double(spec.sessions));
  emit_report(report, "");
  return 0;
}

int cmd_merge(const Config& cfg, const std::string& base_path, const std::string& session_dir,
              const std::string& out_path, const std::string& map_l_path,
              const std::string& report_path, bool no_marginalization) {
  Map base;
  if (!base_path.empty()) base = deserialize_map(base_path);
  const SessionSim sim = read_session_dir(session_dir);

  Report report;
  merge_session(base, sim, cfg, !no_marginalization, &report);

  canonicalize_for_storage(base);
  const size_t full_bytes = serialize_full(base, out_path);
  report.add("map", "bytes_full", double(full_bytes));
  if (!map_l_path.empty()) {
    const size_t l_bytes = serialize_localization_only(base, map_l_path);
    report.add("map", "bytes_localization", double(l_bytes));
  }
  report.add("map", "hash", std::to_string(map_hash(base)));
  emit_report(report, report_path);
  return 0;
}

int cmd_eval(const std::string& map_path, const std::string& session_dir,
             const std::string& mode) {
  const Map map = deserialize_map(map_path);
  const SessionSim sim = read_session_dir(session_dir);
  if (sim.truth.empty()) raise(ErrorCode::IoFailure, "session has no truth.bin");

  std::vector<Pose> est, truth;
  for (const auto& [id, kf] : map.keyframes) {
    if (kf.session != sim.session_id) continue;
    if (kf.seq < 0 || size_t(kf.seq) >= sim.truth.size()) continue;
    est.push_back(kf.pose);
    truth.push_back(sim.truth[kf.seq]);
  }
  const double ate =
      evaluate_ate(est, truth, mode == "se3" ? AteMode::se3 : AteMode::xy_only);
  Report report;
  report.add("eval", "poses", double(est.size()));
  report.add("eval", mode == "se3" ? "ate_se3" : "ate_xy", ate);
  emit_report(report, "");
  return 0;
}

int cmd_localize(const Config& cfg, const std::string& map_path, const std::string& session_dir,
                 const std::string& out_path, const std::string& report_path) {
  const Map map = deserialize_map(map_path);
  const SessionSim sim = read_session_dir(session_dir);

  LocalizerState state;
  state.map = &map;
  state.cfg = cfg;
  if (!sim.truth.empty()) {
    state.pose = sim.truth.front();
  } else {
    if (sim.clusters.empty()) raise(ErrorCode::NoMatch, "session has no frames");
    state.pose = relocalize(map, sim.clusters.front(), cfg);
  }

  std::ofstream out(out_path);
  if (!out) raise(ErrorCode::IoFailure, "cannot write pose file: " + out_path);
  out.precision(12);
  std::vector<Pose> est;
  double solve_sum = 0;
  for (size_t k = 0; k < sim.clusters.size(); ++k) {
    const TrackResult r = track_frame(state, sim.clusters[k]);
    solve_sum += r.solve_seconds;
    est.push_back(r.pose);
    const Eigen::Quaterniond q(r.pose.rotation);
    out << k << " " << r.pose.translation.x() << " " << r.pose.translation.y() << " "
        << r.pose.translation.z() << " " << q.w() << " " << q.x() << " " << q.y() << " "
        << q.z() << "\n";
  }
  Report report;
  report.add("localize", "frames", double(est.size()));
  report.add("localize", "mean_solve_ms", 1e3 * solve_sum / std::max<size_t>(est.size(), 1));
  if (!sim.truth.empty() && est.size() >= 3) {
    std::vector<Pose> truth(sim.truth.begin(), sim.truth.begin() + est.size());
    report.add("localize", "ate_xy", evaluate_ate(est, truth, AteMode::xy_only));
  }
  emit_report(report, report_path);
  return 0;
}

int cmd_info(const std::string& map_path) {
  const Map map = deserialize_map(map_path);
  Report report;
  report.add("info", "sessions", double(map.sessions.size()));
  report.add("info", "keyframes", double(map.keyframes.size()));
  report.add("info", "landmarks", double(map.landmarks.size()));
  report.add("info", "observations", double(map.observation_count()));
  report.add("info", "rel_pose_factors", double(map.rel_pose_factors.size()));
  report.add("info", "recovered_obs", double(map.recovered_obs.size()));
  report.add("info", "bytes_on_disk", double(std::filesystem::file_size(map_path)));
  emit_report(report, "");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slim: vectorized line/plane LiDAR mapping back-end"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, report_path;
  uint64_t seed = 1;
  int threads = 1;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed, "master random seed");
  app.add_option("--threads", threads, "worker threads");
  app.add_option("--report", report_path, "write the report to this path");

  auto* gen = app.add_subcommand("generate", "generate a synthetic world and sessions");
  std::string gen_out;
  WorldSpec spec;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--sessions", spec.sessions, "number of sessions");
  gen->add_option("--extent", spec.extent, "world side length, meters");
  gen->add_option("--buildings", spec.building_count, "building count");
  gen->add_option("--pole-density", spec.pole_density, "poles per 100 m of road");
  gen->add_option("--kf-spacing", spec.keyframe_spacing, "keyframe spacing, meters");
  gen->add_option("--sigma-obs", spec.sigma_obs, "observation noise, meters");
  gen->add_option("--drift-trans", spec.drift_trans_per_m, "odometry drift, m per m");
  gen->add_option("--drift-rot-deg", spec.drift_rot_per_m, "odometry drift, deg per m");
  gen->add_option("--range", spec.sensor_range, "sensor range, meters");

  auto* merge = app.add_subcommand("merge", "merge one session into a base map");
  std::string merge_base, merge_session_dir, merge_out, merge_map_l;
  bool no_marginalization = false;
  merge->add_option("--base", merge_base, "input base map (omit for the first session)");
  merge->add_option("--session", merge_session_dir, "session directory")->required();
  merge->add_option("--out", merge_out, "output map path")->required();
  merge->add_option("--map-l", merge_map_l, "also write a localization-only archive");
  merge->add_flag("--no-marginalization", no_marginalization, "skip marginalization");

  auto* eval = app.add_subcommand("eval", "trajectory error of a map against session truth");
  std::string eval_map, eval_session, eval_mode = "xy";
  eval->add_option("--map", eval_map, "map archive")->required();
  eval->add_option("--session", eval_session, "session directory with truth.bin")->required();
  eval->add_option("--mode", eval_mode, "xy or se3")->check(CLI::IsMember({"xy", "se3"}));

  auto* loc = app.add_subcommand("localize", "scan-to-map localization over a session");
  std::string loc_map, loc_session, loc_out;
  loc->add_option("--map", loc_map, "map archive (full or localization-only)")->required();
  loc->add_option("--session", loc_session, "session directory")->required();
  loc->add_option("--out", loc_out, "output pose file")->required();

  auto* info = app.add_subcommand("info", "print archive statistics");
  std::string info_map;
  info->add_option("--map", info_map, "map archive")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    Config cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    cfg.seed = seed;
    cfg.threads = threads;
    spec.seed = seed;
    if (gen->parsed()) {
      spec.drift_rot_per_m *= gen->count("--drift-rot-deg") ? M_PI / 180.0 : 1.0;
      return cmd_generate(spec, gen_out);
    }
    if (merge->parsed()) {
      return cmd_merge(cfg, merge_base, merge_session_dir, merge_out, merge_map_l, report_path,
                       no_marginalization);
    }
    if (eval->parsed()) return cmd_eval(eval_map, eval_session, eval_mode);
    if (loc->parsed()) return cmd_localize(cfg, loc_map, loc_session, loc_out, report_path);
    if (info->parsed()) return cmd_info(info_map);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
