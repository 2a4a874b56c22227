#include "slim/registration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "slim/error.hpp"
#include "pose_only_solver.hpp"

namespace slim {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

RegEntity line_entity(const Landmark& lm) {
  RegEntity e;
  e.kind = GeomKind::line;
  const auto pn = lm.as_line();
  e.normal = pn.n;
  e.anchor = pn.q;
  e.graff = graff_from_line(pn);
  e.members = {lm.id};
  e.weight = std::max<size_t>(lm.observers.size(), 1);
  return e;
}

}  // namespace

std::vector<RegEntity> cluster_coplanar_planes(const Map& map, const Config& cfg) {
  std::vector<const Landmark*> planes;
  for (const auto& [id, lm] : map.landmarks) {
    if (lm.kind == GeomKind::plane) planes.push_back(&lm);
  }
  const double cos_gate = std::cos(cfg.merge_angle_deg * M_PI / 180.0);
  UnionFind uf(int(planes.size()));
  for (size_t i = 0; i < planes.size(); ++i) {
    const auto a = planes[i]->as_plane();
    for (size_t j = i + 1; j < planes.size(); ++j) {
      const auto b = planes[j]->as_plane();
      const double dot = a.n.dot(b.n);
      if (std::abs(dot) < cos_gate) continue;
      const double d_b_aligned = dot >= 0 ? b.d : -b.d;
      if (std::abs(a.d - d_b_aligned) >= cfg.merge_dist_plane) continue;
      uf.unite(int(i), int(j));
    }
  }
  std::map<int, std::vector<int>> groups;
  for (size_t i = 0; i < planes.size(); ++i) groups[uf.find(int(i))].push_back(int(i));

  std::vector<RegEntity> out;
  for (const auto& [root, members] : groups) {
    const auto ref = planes[members.front()]->as_plane();
    Vec3 n_sum = Vec3::Zero();
    double d_sum = 0, w_sum = 0;
    Vec3 anchor = Vec3::Zero();
    RegEntity e;
    e.kind = GeomKind::plane;
    for (int idx : members) {
      const Landmark& lm = *planes[idx];
      const auto nd = lm.as_plane();
      const double w = std::max<size_t>(lm.observers.size(), 1);
      const double sign = nd.n.dot(ref.n) >= 0 ? 1.0 : -1.0;
      n_sum += w * sign * nd.n;
      d_sum += w * sign * nd.d;
      anchor += w * lm.centroid;
      w_sum += w;
      e.members.push_back(lm.id);
    }
    e.normal = n_sum.normalized();
    e.offset = d_sum / w_sum;
    e.anchor = anchor / w_sum;
    // keep the anchor exactly on the representative plane
    e.anchor -= (e.normal.dot(e.anchor) + e.offset) * e.normal;
    e.weight = w_sum;
    e.graff = graff_from_plane({e.normal, e.offset});
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<Block> partition_into_blocks(const Map& map, double block_spacing,
                                         double block_radius, const Config& cfg) {
  if (map.keyframes.empty()) raise(ErrorCode::EmptyMap, "cannot partition an empty map");

  std::vector<std::pair<int64_t, Pose>> hosts;
  for (const auto& [id, kf] : map.keyframes) {
    bool far = true;
    for (const auto& [hid, hpose] : hosts) {
      if ((kf.pose.translation - hpose.translation).norm() < block_spacing) {
        far = false;
        break;
      }
    }
    if (far) hosts.emplace_back(id, kf.pose);
  }

  std::vector<RegEntity> planes = cluster_coplanar_planes(map, cfg);
  std::vector<RegEntity> lines;
  for (const auto& [id, lm] : map.landmarks) {
    if (lm.kind == GeomKind::line) lines.push_back(line_entity(lm));
  }
  // anchor used for the radius test: the landmark centroid region
  std::vector<Vec3> plane_centers(planes.size());
  for (size_t i = 0; i < planes.size(); ++i) {
    Vec3 c = Vec3::Zero();
    for (int64_t id : planes[i].members) c += map.landmarks.at(id).centroid;
    plane_centers[i] = c / double(planes[i].members.size());
  }

  std::vector<Block> blocks;
  for (const auto& [hid, hpose] : hosts) {
    Block b;
    b.host_keyframe = hid;
    b.host_pose = hpose;
    for (const auto& e : lines) {
      const Vec3 centroid = map.landmarks.at(e.members.front()).centroid;
      if ((centroid - hpose.translation).norm() <= block_radius) {
        b.entities.push_back(e);
        b.member_landmarks.push_back(e.members.front());
      }
    }
    for (size_t i = 0; i < planes.size(); ++i) {
      if ((plane_centers[i] - hpose.translation).norm() <= block_radius) {
        b.entities.push_back(planes[i]);
        for (int64_t id : planes[i].members) b.member_landmarks.push_back(id);
      }
    }
    blocks.push_back(std::move(b));
  }
  return blocks;
}

std::vector<Correspondence> candidate_correspondences(const Block& base, const Block& sub,
                                                      const Config& cfg) {
  std::vector<Correspondence> corrs;
  for (int i = 0; i < int(base.entities.size()); ++i) {
    for (int j = 0; j < int(sub.entities.size()); ++j) {
      if (base.entities[i].kind != sub.entities[j].kind) continue;
      corrs.push_back({i, j, base.entities[i].kind});
    }
  }
  if (int(corrs.size()) > cfg.max_correspondences) {
    std::mt19937_64 rng(cfg.seed ^ (uint64_t(base.host_keyframe) << 20) ^
                        uint64_t(sub.host_keyframe));
    std::shuffle(corrs.begin(), corrs.end(), rng);
    corrs.resize(cfg.max_correspondences);
  }
  return corrs;
}

AdjacencyGraph build_compatibility_graph(const Block& base, const Block& sub,
                                         const std::vector<Correspondence>& corrs, double delta) {
  AdjacencyGraph g(int(corrs.size()));
  for (size_t i = 0; i < corrs.size(); ++i) {
    for (size_t j = i + 1; j < corrs.size(); ++j) {
      if (corrs[i].base == corrs[j].base || corrs[i].sub == corrs[j].sub) continue;
      const double db = affine_subspace_distance(base.entities[corrs[i].base].graff,
                                                 base.entities[corrs[j].base].graff);
      const double ds = affine_subspace_distance(sub.entities[corrs[i].sub].graff,
                                                 sub.entities[corrs[j].sub].graff);
      if (std::abs(db - ds) < delta) g.add_edge(int(i), int(j));
    }
  }
  return g;
}

Pose coarse_register(const Block& base, const Block& sub,
                     const std::vector<Correspondence>& inliers, const Config& cfg) {
  if (inliers.size() < 3) raise(ErrorCode::RankDeficient, "need >= 3 inlier correspondences");
  detail::PoseOnlyProblem prob;
  prob.huber = cfg.coarse_huber;
  for (const auto& c : inliers) {
    const auto& be = base.entities[c.base];
    const auto& se = sub.entities[c.sub];
    prob.terms.push_back({c.kind, be.normal, be.anchor, se.anchor, 1.0});
  }
  return detail::solve_pose_only(prob, Pose::identity(), true);
}

Pose refine_register(const std::vector<const Landmark*>& base,
                     const std::vector<const Landmark*>& sub, const Pose& t_init,
                     const Config& cfg) {
  const double cos_gate = std::cos(cfg.assoc_angle_deg * M_PI / 180.0);
  Pose T = t_init;
  for (int round = 0; round < cfg.refine_max_iters; ++round) {
    detail::PoseOnlyProblem prob;
    prob.huber = cfg.refine_huber;
    for (const Landmark* s : sub) {
      const Vec3 moved_centroid = T.act(s->centroid);
      const Vec3 moved_normal = T.rotation * s->normal;
      const Landmark* best = nullptr;
      double best_dist = cfg.assoc_radius;
      for (const Landmark* b : base) {
        if (b->kind != s->kind) continue;
        const double cdist = (b->centroid - moved_centroid).norm();
        if (cdist >= best_dist) continue;
        if (std::abs(b->normal.dot(moved_normal)) < cos_gate) continue;
        const double perp = b->kind == GeomKind::line
                                ? point_to_line_distance(moved_centroid, b->as_line())
                                : point_to_plane_distance(moved_centroid, b->as_plane());
        if (perp >= (b->kind == GeomKind::line ? cfg.assoc_dist_line : cfg.assoc_dist_plane))
          continue;
        best_dist = cdist;
        best = b;
      }
      if (best) {
        prob.terms.push_back({s->kind, best->normal, best->centroid, s->centroid, 1.0});
      }
    }
    if (prob.terms.size() < 3) raise(ErrorCode::NoPairs, "refinement found fewer than 3 pairs");
    const Pose next = detail::solve_pose_only(prob, T, false);
    const double update = (next.inverse() * T).translation.norm() +
                          so3_log(next.rotation.transpose() * T.rotation).norm();
    T = next;
    if (update < 1e-6) break;
  }
  return T;
}

std::vector<BlockMatch> register_blocks(const Map& base, const Map& sub, const Config& cfg) {
  const auto base_blocks = partition_into_blocks(base, cfg.block_spacing, cfg.block_radius, cfg);
  const auto sub_blocks = partition_into_blocks(sub, cfg.block_spacing, cfg.block_radius, cfg);

  std::vector<BlockMatch> matches;
  for (const auto& bb : base_blocks) {
    for (const auto& sb : sub_blocks) {
      const double nb = double(bb.entities.size());
      const double ns = double(sb.entities.size());
      if (nb < 3 || ns < 3) continue;
      const double ratio = nb / ns;
      if (ratio < 0.25 || ratio > 4.0) continue;

      const auto corrs = candidate_correspondences(bb, sb, cfg);
      const auto graph = build_compatibility_graph(bb, sb, corrs, cfg.graff_delta);
      const auto clique = max_clique(graph);
      if (clique.size() < 3) continue;
      std::vector<Correspondence> inliers;
      inliers.reserve(clique.size());
      for (int idx : clique) inliers.push_back(corrs[idx]);

      try {
        const Pose coarse = coarse_register(bb, sb, inliers, cfg);
        std::vector<const Landmark*> base_lms, sub_lms;
        for (int64_t id : bb.member_landmarks) base_lms.push_back(&base.landmarks.at(id));
        for (int64_t id : sb.member_landmarks) sub_lms.push_back(&sub.landmarks.at(id));
        const Pose refined = refine_register(base_lms, sub_lms, coarse, cfg);
        matches.push_back({bb.host_keyframe, sb.host_keyframe, refined, int(clique.size())});
      } catch (const Error&) {
        // under-constrained or unmatched block pair: not a candidate
      }
    }
  }
  return matches;
}

}  // namespace slim
