#pragma once

#include <string>
#include <vector>

#include "slim/config.hpp"
#include "slim/map.hpp"
#include "slim/marginalize.hpp"
#include "slim/simworld.hpp"

namespace slim {

/// Machine-readable report: one "stage key value" line per entry.
struct Report {
  std::vector<std::string> lines;
  void add(const std::string& stage, const std::string& key, double value);
  void add(const std::string& stage, const std::string& key, const std::string& value);
  std::string text() const;
};

struct MergeOutcome {
  bool first_session = false;
  int loop_candidates = 0;
  int loops_kept = 0;
  double ate_odom = -1;  // xy RMSE of the new session, -1 without truth
  double ate_pgo = -1;
  double ate_ba = -1;
  double seconds_register = 0;
  double seconds_pgo = 0;
  double seconds_ba = 0;
  double seconds_marginalize = 0;
  double seconds_optimize = 0;  // pgo + ba
  MarginalizeStats marg;
};

/// One iteration of the mapping pipeline: partition and register blocks,
/// prune loops, PGO over both maps, structural merge, landmark merge, BA,
/// then marginalization. The first session becomes the base map directly.
/// Throws Error with the failing stage in the message.
MergeOutcome merge_session(Map& base, const SessionSim& session, const Config& cfg,
                           bool marginalize, Report* report = nullptr);

/// Keyframe poses of one session ordered by seq, for trajectory evaluation.
std::vector<Pose> session_trajectory(const Map& map, int32_t session_id);

/// FNV-1a hash of the canonical full archive encoding.
uint64_t map_hash(const Map& map);

}  // namespace slim
