#pragma once

#include <utility>
#include <vector>

#include "slim/config.hpp"
#include "slim/map.hpp"
#include "slim/solver.hpp"

namespace slim {

/// Sparsified topology: retained / marginalized keyframes plus the recovered
/// factor skeleton (one observation per landmark on its nearest retained
/// keyframe, a minimum spanning tree over the retained keyframes, and one
/// prior on the oldest). The recovered residual dimension always equals the
/// retained state dimension, which keeps the recovered Jacobian square.
struct ReconstructedTopology {
  std::vector<int64_t> retained;
  std::vector<int64_t> marginalized;

  struct ObsSkeleton {
    int64_t landmark = 0;
    int64_t keyframe = 0;  // nearest retained
    GeomKind kind = GeomKind::plane;
  };
  std::vector<ObsSkeleton> obs_factors;
  std::vector<std::pair<int64_t, int64_t>> tree_edges;  // N-1 MST edges
  int64_t prior_keyframe = 0;

  int recovered_residual_dim() const;
  int retained_state_dim() const;
};

/// Greedy density-based keyframe thinning followed by topology
/// reconstruction. Landmarks reattach to the nearest retained keyframe
/// (centroid to pose translation, ties to the lower id); MST edge weights are
/// Euclidean pose distances.
ReconstructedTopology sparsify_keyframes(const Map& map, double min_spacing);

/// Recovered measurements evaluated so every skeleton residual is zero at the
/// current state estimate.
struct RecoveredMeasurements {
  std::vector<RecoveredObsFactor> obs;  // sqrt_info left as identity
  std::vector<RelPoseFactor> tree;
  PriorFactor prior;
};
RecoveredMeasurements measurements_at_mean(const Map& map, const ReconstructedTopology& topo);

/// The covariance blocks of the marginal distribution that factor recovery
/// needs: the diagonal blocks of Sigma_ll, Sigma_ln and Sigma_nn.
struct SigmaBlocks {
  std::vector<MatX> sigma_ll_diag;  // per landmark slot
  MatX sigma_ln;                    // l x n
  MatX sigma_nn;                    // n x n
  size_t peak_dense_elements = 0;   // allocation accounting for the audit test
};

/// Sparse computation of the marginal covariance blocks through the
/// D / P / Q / R / W chain. Never materializes an l x l dense matrix.
/// Throws NonPSD when R^{-1} fails Cholesky even after the diagonal shift.
SigmaBlocks recover_sigma_sparse(const BlockHessian& H);

/// Recovered information matrix of one factor from its Jacobian blocks and
/// the needed covariance blocks: Lambda = (J Sigma J^T)^{-1}, eigenvalues
/// clamped at zero. Throws SingularBlock above condition 1e12.
struct RecoveredInfo {
  MatX info;       // Lambda_r, symmetric PSD
  MatX sqrt_info;  // upper-triangular square root
  int clamped = 0;
};
RecoveredInfo invert_recovered_block(const MatX& j_sigma_jt);

struct MarginalizeStats {
  int retained = 0;
  int marginalized = 0;
  int clamped_eigenvalues = 0;
  size_t peak_dense_elements = 0;
};

/// Map-centric marginalization: replaces the factor set with the recovered
/// skeleton, drops marginalized keyframes and all raw observations, and keeps
/// every landmark.
MarginalizeStats marginalize_map(Map& map, double min_spacing, const Config& cfg);

}  // namespace slim
