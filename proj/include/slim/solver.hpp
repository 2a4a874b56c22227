#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "slim/config.hpp"
#include "slim/factors.hpp"
#include "slim/map.hpp"

namespace slim {

struct SolveOptions {
  int max_iterations = 100;
  double relative_cost_tol = 1e-8;
  double initial_lambda = 1e-4;
  double step_tol = 1e-12;
};

struct SolveSummary {
  int iterations = 0;
  double initial_cost = 0;
  double final_cost = 0;
  bool converged = false;
};

/// Levenberg-Marquardt with block-diagonal landmark Schur elimination.
/// Accepted steps never increase the robustified cost; landmark parameters
/// are re-canonicalized after every accepted step so states stay in the
/// well-conditioned chart. Throws DisconnectedGraph / IllConditioned.
SolveSummary solve_least_squares(Problem& problem, const SolveOptions& opts = {});

/// Problem built from map structures, with the bookkeeping needed to write
/// optimized states back.
struct MapProblem {
  Problem problem;
  std::vector<std::pair<int, int64_t>> pose_keys;  // (map index, keyframe id)
  std::vector<int64_t> line_ids;
  std::vector<int64_t> plane_ids;

  void write_back(const std::vector<Map*>& maps) const;
  int pose_index(int map_index, int64_t kf) const;
};

struct LoopFactorSpec {
  int map_a = 0;
  int64_t kf_a = 0;
  int map_b = 0;
  int64_t kf_b = 0;
  Pose z;  // T_a^{-1} T_b measurement
};

/// Pose-only problem over one or more maps: odometry and recovered
/// relative-pose factors, priors, and robustified loop factors.
MapProblem build_pgo_problem(const std::vector<Map*>& maps,
                             const std::vector<LoopFactorSpec>& loops, const Config& cfg);

/// Joint pose-landmark problem over one map: odometry, priors, raw point
/// observations (robustified) and recovered observation factors. Cross-session
/// loop factors are never included.
MapProblem build_ba_problem(const Map& map, const Config& cfg);

SolveSummary solve_pgo(std::vector<Map*> maps, const std::vector<LoopFactorSpec>& loops,
                       const Config& cfg);
SolveSummary solve_ba(Map& map, const Config& cfg);

/// Union-find landmark merging with the plane/line criteria (angle,
/// perpendicular distance, overlap); merged groups are refit from the union
/// of their observations and ids remapped. Idempotent.
void merge_landmarks(Map& map, const Config& cfg);

/// Nine-way partitioned Gauss-Newton Hessian with landmarks first, retained
/// keyframes in the middle and marginalized keyframes last. H_ll stays
/// strictly block-diagonal; no dense l x l storage is ever formed.
struct BlockHessian {
  std::vector<MatX> H_ll;  // one block per landmark, 4x4 or 3x3
  std::vector<int> lm_offsets;
  Eigen::SparseMatrix<double> H_ln;
  Eigen::SparseMatrix<double> V_l;
  MatX H_nn;
  MatX V_n;
  MatX H_mm;
  int l = 0, n = 0, m = 0;

  /// Dense assembly of the full (l+n+m)^2 matrix; test/oracle use only.
  MatX dense() const;
};

/// Gauss-Newton Hessian at the current linearization with robust-kernel
/// weights frozen at their current values. marginalized simply selects which
/// pose indices land in the trailing m block.
BlockHessian build_block_hessian(const Problem& problem,
                                 const std::vector<int>& marginalized_pose_indices);

/// Pose order bookkeeping matching build_block_hessian's n / m partition.
struct HessianOrder {
  std::vector<int> retained;     // problem pose indices in n-block order
  std::vector<int> marginalized; // problem pose indices in m-block order
};
HessianOrder hessian_order(const Problem& problem,
                           const std::vector<int>& marginalized_pose_indices);

}  // namespace slim
