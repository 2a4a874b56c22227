#pragma once

#include <vector>

#include "slim/clique.hpp"
#include "slim/config.hpp"
#include "slim/graff.hpp"
#include "slim/map.hpp"

namespace slim {

/// One registration entity: a line landmark or a (possibly merged) coplanar
/// plane cluster, with an anchor point for the hybrid objective.
struct RegEntity {
  GeomKind kind = GeomKind::plane;
  Vec3 normal;  // direction for lines, normal for planes
  Vec3 anchor;  // point on the entity
  double offset = 0;           // plane: signed distance term d
  GraffCoordinate graff;
  std::vector<int64_t> members;  // source landmark ids
  double weight = 1;
};

/// Groups plane landmarks lying on the same infinite plane (angle < 5 deg,
/// aligned offset difference < 0.2 m) into single entities; lines pass
/// through unclustered.
std::vector<RegEntity> cluster_coplanar_planes(const Map& map, const Config& cfg);

struct Block {
  int64_t host_keyframe = 0;
  Pose host_pose;
  std::vector<RegEntity> entities;       // lines then clustered planes
  std::vector<int64_t> member_landmarks;
};

/// Greedy host selection along the trajectory with the given spacing; each
/// block gathers entities within block_radius of its host translation.
std::vector<Block> partition_into_blocks(const Map& map, double block_spacing,
                                         double block_radius, const Config& cfg);

struct Correspondence {
  int base = 0;  // entity index in the base block
  int sub = 0;   // entity index in the sub block
  GeomKind kind = GeomKind::plane;
};

/// All same-kind entity pairs, capped by seeded subsampling.
std::vector<Correspondence> candidate_correspondences(const Block& base, const Block& sub,
                                                      const Config& cfg);

/// Edge iff the Grassmannian compatibility test passes; correspondences
/// sharing an endpoint are never connected.
AdjacencyGraph build_compatibility_graph(const Block& base, const Block& sub,
                                         const std::vector<Correspondence>& corrs, double delta);

/// Hybrid point-to-line / point-to-plane registration over the inlier
/// correspondences, Levenberg-Marquardt from identity with a Huber kernel.
/// Throws RankDeficient when the 6-DoF system is not constrained.
Pose coarse_register(const Block& base, const Block& sub,
                     const std::vector<Correspondence>& inliers, const Config& cfg);

/// Iterated gated nearest-neighbor refinement on original landmarks.
/// Throws NoPairs when association yields fewer than 3 pairs.
Pose refine_register(const std::vector<const Landmark*>& base,
                     const std::vector<const Landmark*>& sub, const Pose& t_init,
                     const Config& cfg);

struct BlockMatch {
  int64_t base_kf = 0;
  int64_t sub_kf = 0;
  Pose map_transform;  // submap frame -> base frame
  int inliers = 0;
};

/// Full pairwise block registration pipeline: correspondences, compatibility
/// clique, coarse alignment, landmark-level refinement.
std::vector<BlockMatch> register_blocks(const Map& base, const Map& sub, const Config& cfg);

}  // namespace slim
