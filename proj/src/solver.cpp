#include "slim/solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "slim/vectorize.hpp"

namespace slim {

namespace {

struct SlotInfo {
  int dim = 0;     // 4 line, 3 plane
  int offset = 0;  // within the landmark state vector
};

std::vector<SlotInfo> landmark_slots(const Problem& p) {
  std::vector<SlotInfo> slots(p.lines.size() + p.planes.size());
  int off = 0;
  for (size_t i = 0; i < p.lines.size(); ++i) {
    slots[i] = {4, off};
    off += 4;
  }
  for (size_t i = 0; i < p.planes.size(); ++i) {
    slots[p.lines.size() + i] = {3, off};
    off += 3;
  }
  return slots;
}

int factor_slot(const Problem& p, const Factor& f) {
  if (f.kind == FactorKind::point_to_line) return f.lm;
  if (f.kind == FactorKind::point_to_plane) return int(p.lines.size()) + f.lm;
  return -1;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

void check_connectivity(const Problem& p) {
  const int P = int(p.poses.size());
  const int S = int(p.lines.size() + p.planes.size());
  if (P == 0) raise(ErrorCode::DisconnectedGraph, "problem has no poses");
  bool anchored = std::any_of(p.pose_fixed.begin(), p.pose_fixed.end(), [](bool b) { return b; });
  UnionFind uf(P + S);
  for (const auto& f : p.factors) {
    if (f.kind == FactorKind::prior_pose) anchored = true;
    if (f.kind == FactorKind::odometry || f.kind == FactorKind::loop) {
      uf.unite(f.pose_a, f.pose_b);
    } else if (f.kind == FactorKind::point_to_line || f.kind == FactorKind::point_to_plane) {
      uf.unite(f.pose_a, P + factor_slot(p, f));
    }
  }
  if (!anchored) raise(ErrorCode::DisconnectedGraph, "no gauge: no prior factor and no fixed pose");
  // Landmark-free poses of other sessions are legal in PGO only when tied by
  // loops; everything must reach pose 0.
  const int root = uf.find(0);
  for (int i = 1; i < P; ++i) {
    if (uf.find(i) != root) raise(ErrorCode::DisconnectedGraph, "pose graph is disconnected");
  }
  for (int s = 0; s < S; ++s) {
    if (uf.find(P + s) != root) {
      // A landmark with no observation factor cannot be estimated.
      raise(ErrorCode::DisconnectedGraph, "landmark not connected to the pose graph");
    }
  }
}

double evaluate_cost(const Problem& p) {
  double cost = 0;
  FactorEval eval;
  for (const auto& f : p.factors) {
    evaluate_factor(p, f, eval, false);
    cost += huber_cost(eval.r.squaredNorm(), f.huber);
  }
  return cost;
}

void canonicalize_landmarks(Problem& p) {
  for (auto& line : p.lines) {
    line.alpha = wrap_angle(line.alpha);
    line.beta = wrap_angle(line.beta);
    if (std::cos(line.beta) < 0) line = line_from_point_direction(line_to_point_direction(line));
  }
  for (auto& plane : p.planes) {
    plane.alpha = wrap_angle(plane.alpha);
    plane.beta = wrap_angle(plane.beta);
    if (std::cos(plane.beta) < 0 || plane.d > 0)
      plane = plane_from_normal_distance(plane_to_normal_distance(plane));
  }
}

}  // namespace

SolveSummary solve_least_squares(Problem& problem, const SolveOptions& opts) {
  check_connectivity(problem);
  const auto slots = landmark_slots(problem);
  const int num_slots = int(slots.size());
  const int P = int(problem.poses.size());
  if (problem.pose_fixed.size() != size_t(P)) problem.pose_fixed.assign(P, false);

  std::vector<int> active_col(P, -1);
  int A = 0;
  for (int i = 0; i < P; ++i) {
    if (!problem.pose_fixed[i]) active_col[i] = 6 * A++;
  }
  const int pose_dim = 6 * A;

  SolveSummary summary;
  double cost = evaluate_cost(problem);
  summary.initial_cost = cost;
  double lambda = opts.initial_lambda;

  // Per-slot coupling blocks W = J_pose^T J_lm keyed by pose index.
  std::vector<std::map<int, MatX>> W(num_slots);
  std::vector<MatX> Hll(num_slots);
  std::vector<VecX> bl(num_slots);
  MatX Hpp(pose_dim, pose_dim);
  VecX bp(pose_dim);
  FactorEval eval;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    // ----- assemble normal equations at the current states -----
    Hpp.setZero();
    bp.setZero();
    for (int s = 0; s < num_slots; ++s) {
      Hll[s] = MatX::Zero(slots[s].dim, slots[s].dim);
      bl[s] = VecX::Zero(slots[s].dim);
      W[s].clear();
    }
    for (const auto& f : problem.factors) {
      evaluate_factor(problem, f, eval, true);
      const double w = huber_weight(eval.r.squaredNorm(), f.huber);
      const double sw = std::sqrt(w);
      const VecX r = sw * eval.r;
      const int slot = factor_slot(problem, f);
      const int ca = active_col[f.pose_a];
      if (slot >= 0) {
        const MatX Jl = sw * eval.J_lm;
        const MatX Jp = sw * eval.J_pose_a;
        Hll[slot] += Jl.transpose() * Jl;
        bl[slot] -= Jl.transpose() * r;
        if (ca >= 0) {
          Hpp.block<6, 6>(ca, ca) += Jp.transpose() * Jp;
          bp.segment<6>(ca) -= Jp.transpose() * r;
          auto it = W[slot].find(f.pose_a);
          if (it == W[slot].end()) {
            W[slot].emplace(f.pose_a, Jp.transpose() * Jl);
          } else {
            it->second += Jp.transpose() * Jl;
          }
        }
      } else {
        const MatX Ja = sw * eval.J_pose_a;
        if (ca >= 0) {
          Hpp.block<6, 6>(ca, ca) += Ja.transpose() * Ja;
          bp.segment<6>(ca) -= Ja.transpose() * r;
        }
        if (f.kind != FactorKind::prior_pose) {
          const MatX Jb = sw * eval.J_pose_b;
          const int cb = active_col[f.pose_b];
          if (cb >= 0) {
            Hpp.block<6, 6>(cb, cb) += Jb.transpose() * Jb;
            bp.segment<6>(cb) -= Jb.transpose() * r;
          }
          if (ca >= 0 && cb >= 0) {
            const MatX Hab = Ja.transpose() * Jb;
            Hpp.block<6, 6>(ca, cb) += Hab;
            Hpp.block<6, 6>(cb, ca) += Hab.transpose();
          }
        }
      }
    }

    // ----- damped Schur solve, retried with stronger damping on reject -----
    bool accepted = false;
    double new_cost = cost;
    while (!accepted) {
      MatX Hred = Hpp;
      for (int i = 0; i < pose_dim; ++i) Hred(i, i) += lambda * std::max(Hpp(i, i), 1e-9);
      VecX bred = bp;
      std::vector<MatX> Dinv(num_slots);
      for (int s = 0; s < num_slots; ++s) {
        if (W[s].empty() && Hll[s].isZero(0)) continue;  // untouched landmark
        MatX D = Hll[s];
        for (int i = 0; i < D.rows(); ++i) D(i, i) += lambda * std::max(Hll[s](i, i), 1e-9);
        Dinv[s] = D.ldlt().solve(MatX::Identity(D.rows(), D.cols()));
        for (const auto& [pa, Wa] : W[s]) {
          const int ca = active_col[pa];
          bred.segment<6>(ca) -= Wa * (Dinv[s] * bl[s]);
          for (const auto& [pb, Wb] : W[s]) {
            const int cb = active_col[pb];
            Hred.block<6, 6>(ca, cb) -= Wa * Dinv[s] * Wb.transpose();
          }
        }
      }

      VecX dp = VecX::Zero(pose_dim);
      if (pose_dim > 0) {
        Eigen::LDLT<MatX> ldlt(Hred);
        const VecX d = ldlt.vectorD().cwiseAbs();
        const double dmax = d.maxCoeff();
        const double dmin = d.minCoeff();
        if (!(dmin > 0) || dmax / dmin > 1e14)
          raise(ErrorCode::IllConditioned, "reduced pose system is ill-conditioned");
        dp = ldlt.solve(bred);
      }

      // Back-substitute landmarks, apply the candidate step in place.
      const auto saved_poses = problem.poses;
      const auto saved_lines = problem.lines;
      const auto saved_planes = problem.planes;
      for (int i = 0; i < P; ++i) {
        const int c = active_col[i];
        if (c < 0) continue;
        problem.poses[i].translation += dp.segment<3>(c);
        problem.poses[i].rotation = problem.poses[i].rotation * so3_exp(dp.segment<3>(c + 3));
      }
      double step_norm = dp.norm();
      for (int s = 0; s < num_slots; ++s) {
        if (Dinv[s].size() == 0) continue;
        VecX rhs = bl[s];
        for (const auto& [pa, Wa] : W[s]) rhs -= Wa.transpose() * dp.segment<6>(active_col[pa]);
        const VecX dl = Dinv[s] * rhs;
        step_norm += dl.norm();
        if (s < int(problem.lines.size())) {
          problem.lines[s] = LineParam::from_vec(problem.lines[s].vec() + dl);
        } else {
          const int ps = s - int(problem.lines.size());
          problem.planes[ps] = PlaneParam::from_vec(problem.planes[ps].vec() + dl);
        }
      }

      new_cost = evaluate_cost(problem);
      if (new_cost <= cost) {
        accepted = true;
        canonicalize_landmarks(problem);
        lambda = std::max(lambda * 0.5, 1e-12);
        if (step_norm < opts.step_tol) {
          summary.converged = true;
        }
      } else {
        problem.poses = saved_poses;
        problem.lines = saved_lines;
        problem.planes = saved_planes;
        lambda *= 10.0;
        if (lambda > 1e10) {
          summary.converged = true;  // no acceptable step remains
          break;
        }
      }
    }
    ++summary.iterations;
    if (accepted) {
      const double drop = cost - new_cost;
      cost = new_cost;
      if (drop <= opts.relative_cost_tol * std::max(cost, 1e-300)) {
        summary.converged = true;
      }
    }
    if (summary.converged) break;
  }
  summary.final_cost = cost;
  return summary;
}

// ---------------------------------------------------------------------------
// Problem builders
// ---------------------------------------------------------------------------

int MapProblem::pose_index(int map_index, int64_t kf) const {
  for (size_t i = 0; i < pose_keys.size(); ++i) {
    if (pose_keys[i].first == map_index && pose_keys[i].second == kf) return int(i);
  }
  return -1;
}

void MapProblem::write_back(const std::vector<Map*>& maps) const {
  for (size_t i = 0; i < pose_keys.size(); ++i) {
    maps[pose_keys[i].first]->keyframes.at(pose_keys[i].second).pose = problem.poses[i];
  }
  if (!line_ids.empty() || !plane_ids.empty()) {
    Map& m = *maps[0];
    for (size_t i = 0; i < line_ids.size(); ++i) m.landmarks.at(line_ids[i]).line = problem.lines[i];
    for (size_t i = 0; i < plane_ids.size(); ++i)
      m.landmarks.at(plane_ids[i]).plane = problem.planes[i];
  }
}

namespace {

Mat6 loop_sqrt_info(const Config& cfg) {
  Mat6 m = Mat6::Zero();
  m.diagonal() << cfg.loop_info_trans, cfg.loop_info_trans, cfg.loop_info_trans,
      cfg.loop_info_rot, cfg.loop_info_rot, cfg.loop_info_rot;
  return m;
}

}  // namespace

MapProblem build_pgo_problem(const std::vector<Map*>& maps,
                             const std::vector<LoopFactorSpec>& loops, const Config& cfg) {
  MapProblem mp;
  std::map<std::pair<int, int64_t>, int> index;
  for (size_t mi = 0; mi < maps.size(); ++mi) {
    for (const auto& [id, kf] : maps[mi]->keyframes) {
      index[{int(mi), id}] = int(mp.problem.poses.size());
      mp.problem.poses.push_back(kf.pose);
      mp.pose_keys.emplace_back(int(mi), id);
    }
  }
  mp.problem.pose_fixed.assign(mp.problem.poses.size(), false);
  for (size_t mi = 0; mi < maps.size(); ++mi) {
    for (const auto& f : maps[mi]->rel_pose_factors) {
      Factor fac;
      fac.kind = FactorKind::odometry;
      fac.pose_a = index.at({int(mi), f.kf_a});
      fac.pose_b = index.at({int(mi), f.kf_b});
      fac.z = f.z;
      fac.sqrt_info = f.sqrt_info;
      mp.problem.factors.push_back(std::move(fac));
    }
  }
  // One gauge prior: the first map's priors only, so the other sessions are
  // free to move onto the base frame.
  const int prior_map = 0;
  for (const auto& f : maps[prior_map]->prior_factors) {
    Factor fac;
    fac.kind = FactorKind::prior_pose;
    fac.pose_a = index.at({prior_map, f.kf});
    fac.z = f.z;
    fac.sqrt_info = f.sqrt_info;
    mp.problem.factors.push_back(std::move(fac));
  }
  for (const auto& l : loops) {
    Factor fac;
    fac.kind = FactorKind::loop;
    fac.pose_a = index.at({l.map_a, l.kf_a});
    fac.pose_b = index.at({l.map_b, l.kf_b});
    fac.z = l.z;
    fac.sqrt_info = loop_sqrt_info(cfg);
    fac.huber = cfg.huber_loop;
    mp.problem.factors.push_back(std::move(fac));
  }
  return mp;
}

MapProblem build_ba_problem(const Map& map, const Config& cfg) {
  MapProblem mp;
  std::map<int64_t, int> pose_index;
  for (const auto& [id, kf] : map.keyframes) {
    pose_index[id] = int(mp.problem.poses.size());
    mp.problem.poses.push_back(kf.pose);
    mp.pose_keys.emplace_back(0, id);
  }
  mp.problem.pose_fixed.assign(mp.problem.poses.size(), false);

  // Only landmarks with at least one factor enter the problem.
  std::set<int64_t> observed;
  for (const auto& [id, kf] : map.keyframes) {
    for (const auto& [lm, obs] : kf.line_obs) observed.insert(lm);
    for (const auto& [lm, obs] : kf.plane_obs) observed.insert(lm);
  }
  for (const auto& f : map.recovered_obs) observed.insert(f.landmark);

  std::map<int64_t, int> line_index, plane_index;
  for (const auto& [id, lm] : map.landmarks) {
    if (!observed.count(id)) continue;
    if (lm.kind == GeomKind::line) {
      line_index[id] = int(mp.problem.lines.size());
      mp.problem.lines.push_back(lm.line);
      mp.line_ids.push_back(id);
    } else {
      plane_index[id] = int(mp.problem.planes.size());
      mp.problem.planes.push_back(lm.plane);
      mp.plane_ids.push_back(id);
    }
  }

  for (const auto& f : map.rel_pose_factors) {
    Factor fac;
    fac.kind = FactorKind::odometry;
    fac.pose_a = pose_index.at(f.kf_a);
    fac.pose_b = pose_index.at(f.kf_b);
    fac.z = f.z;
    fac.sqrt_info = f.sqrt_info;
    mp.problem.factors.push_back(std::move(fac));
  }
  for (const auto& f : map.prior_factors) {
    Factor fac;
    fac.kind = FactorKind::prior_pose;
    fac.pose_a = pose_index.at(f.kf);
    fac.z = f.z;
    fac.sqrt_info = f.sqrt_info;
    mp.problem.factors.push_back(std::move(fac));
  }
  for (const auto& [id, kf] : map.keyframes) {
    for (const auto& [lm, obs] : kf.line_obs) {
      Factor fac;
      fac.kind = FactorKind::point_to_line;
      fac.pose_a = pose_index.at(id);
      fac.lm = line_index.at(lm);
      fac.points = {obs.p_a, obs.p_b, Vec3::Zero()};
      fac.sqrt_info = obs.sqrt_info * MatX::Identity(4, 4);
      fac.huber = cfg.huber_ba;
      mp.problem.factors.push_back(std::move(fac));
    }
    for (const auto& [lm, obs] : kf.plane_obs) {
      Factor fac;
      fac.kind = FactorKind::point_to_plane;
      fac.pose_a = pose_index.at(id);
      fac.lm = plane_index.at(lm);
      fac.points = {obs.p_a, obs.p_b, obs.p_c};
      fac.sqrt_info = obs.sqrt_info * MatX::Identity(3, 3);
      fac.huber = cfg.huber_ba;
      mp.problem.factors.push_back(std::move(fac));
    }
  }
  for (const auto& f : map.recovered_obs) {
    Factor fac;
    fac.kind = f.kind == GeomKind::line ? FactorKind::point_to_line : FactorKind::point_to_plane;
    fac.pose_a = pose_index.at(f.keyframe);
    fac.lm = f.kind == GeomKind::line ? line_index.at(f.landmark) : plane_index.at(f.landmark);
    fac.points = f.points;
    fac.sqrt_info = f.sqrt_info;
    mp.problem.factors.push_back(std::move(fac));
  }
  return mp;
}

SolveSummary solve_pgo(std::vector<Map*> maps, const std::vector<LoopFactorSpec>& loops,
                       const Config& cfg) {
  MapProblem mp = build_pgo_problem(maps, loops, cfg);
  SolveOptions opts;
  opts.max_iterations = cfg.lm_max_iters;
  opts.relative_cost_tol = cfg.lm_rel_tol;
  SolveSummary s = solve_least_squares(mp.problem, opts);
  mp.write_back(maps);
  for (Map* m : maps) refresh_landmark_caches(*m);
  return s;
}

SolveSummary solve_ba(Map& map, const Config& cfg) {
  MapProblem mp = build_ba_problem(map, cfg);
  SolveOptions opts;
  opts.max_iterations = cfg.lm_max_iters;
  opts.relative_cost_tol = cfg.lm_rel_tol;
  SolveSummary s = solve_least_squares(mp.problem, opts);
  std::vector<Map*> maps{&map};
  mp.write_back(maps);
  refresh_landmark_caches(map);
  return s;
}

// ---------------------------------------------------------------------------
// Landmark merging
// ---------------------------------------------------------------------------

namespace {

bool merge_compatible(const Landmark& a, const Landmark& b, const Config& cfg) {
  if (a.kind != b.kind || a.label != b.label) return false;
  const double cos_gate = std::cos(cfg.merge_angle_deg * M_PI / 180.0);
  if (std::abs(a.normal.dot(b.normal)) < cos_gate) return false;
  double perp;
  if (a.kind == GeomKind::line) {
    perp = std::max(point_to_line_distance(a.centroid, b.as_line()),
                    point_to_line_distance(b.centroid, a.as_line()));
    if (perp >= cfg.merge_dist_line) return false;
  } else {
    perp = std::max(point_to_plane_distance(a.centroid, b.as_plane()),
                    point_to_plane_distance(b.centroid, a.as_plane()));
    if (perp >= cfg.merge_dist_plane) return false;
  }
  // Overlap: the center of one landmark lies within the radius of the other.
  return (a.centroid - b.centroid).norm() < std::max(a.radius, b.radius);
}

}  // namespace

void merge_landmarks(Map& map, const Config& cfg) {
  refresh_landmark_caches(map);
  std::vector<int64_t> ids;
  ids.reserve(map.landmarks.size());
  for (const auto& [id, lm] : map.landmarks) ids.push_back(id);
  UnionFind uf(int(ids.size()));
  for (size_t i = 0; i < ids.size(); ++i) {
    for (size_t j = i + 1; j < ids.size(); ++j) {
      if (merge_compatible(map.landmarks.at(ids[i]), map.landmarks.at(ids[j]), cfg)) {
        uf.unite(int(i), int(j));
      }
    }
  }
  std::map<int, std::vector<int64_t>> groups;
  for (size_t i = 0; i < ids.size(); ++i) groups[uf.find(int(i))].push_back(ids[i]);

  std::map<int64_t, int64_t> remap;
  for (auto& [root, members] : groups) {
    std::sort(members.begin(), members.end());
    for (int64_t id : members) remap[id] = members.front();
  }

  // Rewrite observation references, then refit merged groups.
  for (auto& [id, kf] : map.keyframes) {
    for (auto& [lm, obs] : kf.line_obs) lm = remap.at(lm);
    for (auto& [lm, obs] : kf.plane_obs) lm = remap.at(lm);
  }
  for (auto& f : map.recovered_obs) f.landmark = remap.at(f.landmark);

  for (const auto& [root, members] : groups) {
    if (members.size() <= 1) continue;
    const int64_t keep = members.front();
    Landmark& target = map.landmarks.at(keep);
    std::set<int64_t> observers(target.observers.begin(), target.observers.end());
    for (size_t k = 1; k < members.size(); ++k) {
      const Landmark& victim = map.landmarks.at(members[k]);
      observers.insert(victim.observers.begin(), victim.observers.end());
    }
    target.observers.assign(observers.begin(), observers.end());
    if (target.kind == GeomKind::line) {
      std::vector<WeightedLineObs> obs;
      for (const auto& [kid, kf] : map.keyframes) {
        for (const auto& [lm, o] : kf.line_obs) {
          if (lm == keep) obs.push_back({kf.pose, o});
        }
      }
      if (!obs.empty()) target.line = fit_line_landmark(obs);
    } else {
      std::vector<WeightedPlaneObs> obs;
      for (const auto& [kid, kf] : map.keyframes) {
        for (const auto& [lm, o] : kf.plane_obs) {
          if (lm == keep) obs.push_back({kf.pose, o});
        }
      }
      if (!obs.empty()) target.plane = fit_plane_landmark(obs);
    }
    for (size_t k = 1; k < members.size(); ++k) map.landmarks.erase(members[k]);
  }
  refresh_landmark_caches(map);
  validate_map(map);
}

// ---------------------------------------------------------------------------
// Nine-block Hessian
// ---------------------------------------------------------------------------

HessianOrder hessian_order(const Problem& problem,
                           const std::vector<int>& marginalized_pose_indices) {
  std::set<int> marg(marginalized_pose_indices.begin(), marginalized_pose_indices.end());
  HessianOrder order;
  for (int i = 0; i < int(problem.poses.size()); ++i) {
    if (marg.count(i)) {
      order.marginalized.push_back(i);
    } else {
      order.retained.push_back(i);
    }
  }
  return order;
}

BlockHessian build_block_hessian(const Problem& problem,
                                 const std::vector<int>& marginalized_pose_indices) {
  const auto slots = landmark_slots(problem);
  const auto order = hessian_order(problem, marginalized_pose_indices);

  BlockHessian H;
  H.lm_offsets.resize(slots.size());
  H.H_ll.resize(slots.size());
  for (size_t s = 0; s < slots.size(); ++s) {
    H.lm_offsets[s] = slots[s].offset;
    H.H_ll[s] = MatX::Zero(slots[s].dim, slots[s].dim);
    H.l += slots[s].dim;
  }
  H.n = 6 * int(order.retained.size());
  H.m = 6 * int(order.marginalized.size());
  H.H_nn = MatX::Zero(H.n, H.n);
  H.V_n = MatX::Zero(H.n, H.m);
  H.H_mm = MatX::Zero(H.m, H.m);

  // pose index -> (is_marginalized, column offset in its block)
  std::vector<std::pair<bool, int>> pose_col(problem.poses.size(), {false, -1});
  for (size_t i = 0; i < order.retained.size(); ++i) pose_col[order.retained[i]] = {false, 6 * int(i)};
  for (size_t i = 0; i < order.marginalized.size(); ++i)
    pose_col[order.marginalized[i]] = {true, 6 * int(i)};

  std::vector<Eigen::Triplet<double>> t_ln, t_vl;
  FactorEval eval;
  auto add_dense_block = [&](bool ma, int ca, bool mb, int cb, const MatX& block) {
    if (!ma && !mb) {
      H.H_nn.block(ca, cb, 6, 6) += block;
    } else if (!ma && mb) {
      H.V_n.block(ca, cb, 6, 6) += block;
    } else if (ma && !mb) {
      H.V_n.block(cb, ca, 6, 6) += block.transpose();
    } else {
      H.H_mm.block(ca, cb, 6, 6) += block;
    }
  };
  auto add_sparse_block = [&](std::vector<Eigen::Triplet<double>>& t, int row0, int col0,
                              const MatX& block) {
    for (int r = 0; r < block.rows(); ++r) {
      for (int c = 0; c < block.cols(); ++c) {
        if (block(r, c) != 0.0) t.emplace_back(row0 + r, col0 + c, block(r, c));
      }
    }
  };

  for (const auto& f : problem.factors) {
    evaluate_factor(problem, f, eval, true);
    const double w = huber_weight(eval.r.squaredNorm(), f.huber);
    const int slot = factor_slot(problem, f);
    if (slot >= 0) {
      const MatX Jl = eval.J_lm;
      const MatX Jp = eval.J_pose_a;
      H.H_ll[slot] += w * Jl.transpose() * Jl;
      const auto [ma, ca] = pose_col[f.pose_a];
      const MatX cross = w * Jl.transpose() * Jp;
      if (ma) {
        add_sparse_block(t_vl, slots[slot].offset, ca, cross);
        H.H_mm.block(ca, ca, 6, 6) += w * Jp.transpose() * Jp;
      } else {
        add_sparse_block(t_ln, slots[slot].offset, ca, cross);
        H.H_nn.block(ca, ca, 6, 6) += w * Jp.transpose() * Jp;
      }
    } else if (f.kind == FactorKind::prior_pose) {
      const auto [ma, ca] = pose_col[f.pose_a];
      add_dense_block(ma, ca, ma, ca, w * eval.J_pose_a.transpose() * eval.J_pose_a);
    } else {
      const auto [ma, ca] = pose_col[f.pose_a];
      const auto [mb, cb] = pose_col[f.pose_b];
      add_dense_block(ma, ca, ma, ca, w * eval.J_pose_a.transpose() * eval.J_pose_a);
      add_dense_block(mb, cb, mb, cb, w * eval.J_pose_b.transpose() * eval.J_pose_b);
      const MatX cross = w * eval.J_pose_a.transpose() * eval.J_pose_b;
      add_dense_block(ma, ca, mb, cb, cross);
      add_dense_block(mb, cb, ma, ca, cross.transpose());
    }
  }
  H.H_ln.resize(H.l, H.n);
  H.H_ln.setFromTriplets(t_ln.begin(), t_ln.end());
  H.V_l.resize(H.l, H.m);
  H.V_l.setFromTriplets(t_vl.begin(), t_vl.end());
  return H;
}

MatX BlockHessian::dense() const {
  const int total = l + n + m;
  MatX D = MatX::Zero(total, total);
  for (size_t s = 0; s < H_ll.size(); ++s) {
    const int off = lm_offsets[s];
    D.block(off, off, H_ll[s].rows(), H_ll[s].cols()) = H_ll[s];
  }
  D.block(0, l, l, n) = MatX(H_ln);
  D.block(l, 0, n, l) = MatX(H_ln).transpose();
  D.block(0, l + n, l, m) = MatX(V_l);
  D.block(l + n, 0, m, l) = MatX(V_l).transpose();
  D.block(l, l, n, n) = H_nn;
  D.block(l, l + n, n, m) = V_n;
  D.block(l + n, l, m, n) = V_n.transpose();
  D.block(l + n, l + n, m, m) = H_mm;
  return D;
}

}  // namespace slim
