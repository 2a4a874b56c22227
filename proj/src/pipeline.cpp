#include "slim/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "slim/error.hpp"
#include "slim/mapio.hpp"
#include "slim/pcm.hpp"
#include "slim/registration.hpp"
#include "slim/solver.hpp"
#include "slim/vectorize.hpp"

namespace slim {

void Report::add(const std::string& stage, const std::string& key, double value) {
  std::ostringstream os;
  os << stage << " " << key << " " << value;
  lines.push_back(os.str());
}

void Report::add(const std::string& stage, const std::string& key, const std::string& value) {
  lines.push_back(stage + " " + key + " " + value);
}

std::string Report::text() const {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double session_ate(const Map& map, int32_t session_id, const std::vector<Pose>& truth) {
  if (truth.size() < 3) return -1;
  const auto est = session_trajectory(map, session_id);
  if (est.size() < 3) return -1;
  // Marginalization may have thinned the keyframes; match truth by seq.
  std::vector<Pose> est_poses, truth_poses;
  for (const auto& [id, kf] : map.keyframes) {
    if (kf.session != session_id) continue;
    if (kf.seq < 0 || size_t(kf.seq) >= truth.size()) continue;
    est_poses.push_back(kf.pose);
    truth_poses.push_back(truth[kf.seq]);
  }
  if (est_poses.size() < 3) return -1;
  return evaluate_ate(est_poses, truth_poses, AteMode::xy_only);
}

}  // namespace

std::vector<Pose> session_trajectory(const Map& map, int32_t session_id) {
  std::vector<std::pair<int32_t, Pose>> seq_poses;
  for (const auto& [id, kf] : map.keyframes) {
    if (kf.session == session_id) seq_poses.emplace_back(kf.seq, kf.pose);
  }
  std::sort(seq_poses.begin(), seq_poses.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Pose> out;
  out.reserve(seq_poses.size());
  for (const auto& [seq, pose] : seq_poses) out.push_back(pose);
  return out;
}

uint64_t map_hash(const Map& map) {
  Map copy = map;
  canonicalize_for_storage(copy);
  const std::string tmp =
      (std::filesystem::temp_directory_path() / "slim_hash_tmp.bin").string();
  serialize_full(copy, tmp);
  io::Reader r = io::Reader::from_file(tmp);
  std::filesystem::remove(tmp);
  uint64_t h = 0xcbf29ce484222325ull;
  while (!r.at_end()) {
    h ^= r.u8();
    h *= 0x100000001b3ull;
  }
  return h;
}

MergeOutcome merge_session(Map& base, const SessionSim& session, const Config& cfg,
                           bool marginalize, Report* report) {
  MergeOutcome out;
  Map submap = build_submap(to_session_data(session), cfg);
  out.ate_odom = session.truth.empty()
                     ? -1
                     : evaluate_ate(session.odometry, session.truth, AteMode::xy_only);

  if (base.empty()) {
    out.first_session = true;
    base = std::move(submap);
    out.ate_pgo = out.ate_ba = out.ate_odom;
    if (report) {
      report->add("vectorize", "keyframes", double(base.keyframes.size()));
      report->add("vectorize", "landmarks", double(base.landmarks.size()));
      if (out.ate_odom >= 0) report->add("odometry", "ate_xy", out.ate_odom);
    }
    return out;
  }

  // Algorithm: partition -> registerBlock -> filterLoop -> PGO -> BA ->
  // marginalization.
  auto t0 = std::chrono::steady_clock::now();
  std::vector<BlockMatch> matches;
  try {
    matches = register_blocks(base, submap, cfg);
  } catch (const Error& e) {
    raise(e.code(), std::string("register: ") + e.what());
  }
  std::vector<LoopCandidate> candidates;
  for (const auto& m : matches) {
    LoopCandidate c;
    c.base_kf = m.base_kf;
    c.sub_kf = m.sub_kf;
    c.relative = base.keyframes.at(m.base_kf).pose.inverse() * m.map_transform *
                 submap.keyframes.at(m.sub_kf).pose;
    c.inlier_count = m.inliers;
    candidates.push_back(c);
  }
  out.loop_candidates = int(candidates.size());
  std::vector<LoopCandidate> loops =
      filter_loops(candidates, base, submap, cfg.pcm_gamma_rot_deg * M_PI / 180.0,
                   cfg.pcm_gamma_trans);
  out.loops_kept = int(loops.size());
  out.seconds_register = seconds_since(t0);
  if (loops.empty())
    raise(ErrorCode::NoMatch, "filterLoop: no consistent cross-session relative pose");

  t0 = std::chrono::steady_clock::now();
  std::vector<LoopFactorSpec> loop_factors;
  for (const auto& l : loops) {
    LoopFactorSpec f;
    f.map_a = 0;
    f.kf_a = l.base_kf;
    f.map_b = 1;
    f.kf_b = l.sub_kf;
    f.z = l.relative;
    loop_factors.push_back(f);
  }
  try {
    solve_pgo({&base, &submap}, loop_factors, cfg);
  } catch (const Error& e) {
    raise(e.code(), std::string("pgo: ") + e.what());
  }
  out.seconds_pgo = seconds_since(t0);
  if (!session.truth.empty()) {
    out.ate_pgo = evaluate_ate(session_trajectory(submap, session.session_id), session.truth,
                               AteMode::xy_only);
  }

  merge_into_base(base, submap);
  merge_landmarks(base, cfg);

  t0 = std::chrono::steady_clock::now();
  try {
    solve_ba(base, cfg);
  } catch (const Error& e) {
    raise(e.code(), std::string("ba: ") + e.what());
  }
  out.seconds_ba = seconds_since(t0);
  out.seconds_optimize = out.seconds_pgo + out.seconds_ba;
  out.ate_ba = session_ate(base, session.session_id, session.truth);

  if (marginalize) {
    t0 = std::chrono::steady_clock::now();
    try {
      out.marg = marginalize_map(base, cfg.keyframe_min_spacing, cfg);
    } catch (const Error& e) {
      raise(e.code(), std::string("marginalize: ") + e.what());
    }
    out.seconds_marginalize = seconds_since(t0);
  }

  if (report) {
    report->add("register", "candidates", double(out.loop_candidates));
    report->add("register", "loops", double(out.loops_kept));
    report->add("register", "seconds", out.seconds_register);
    report->add("pgo", "seconds", out.seconds_pgo);
    report->add("ba", "seconds", out.seconds_ba);
    if (marginalize) report->add("marginalize", "seconds", out.seconds_marginalize);
    if (out.ate_odom >= 0) report->add("odometry", "ate_xy", out.ate_odom);
    if (out.ate_pgo >= 0) report->add("pgo", "ate_xy", out.ate_pgo);
    if (out.ate_ba >= 0) report->add("ba", "ate_xy", out.ate_ba);
    report->add("map", "keyframes", double(base.keyframes.size()));
    report->add("map", "landmarks", double(base.landmarks.size()));
  }
  return out;
}

}  // namespace slim
