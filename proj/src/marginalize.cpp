#include "slim/marginalize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "slim/error.hpp"
#include "slim/factors.hpp"

namespace slim {

int ReconstructedTopology::recovered_residual_dim() const {
  int dim = 6;  // prior
  dim += 6 * int(tree_edges.size());
  for (const auto& o : obs_factors) dim += o.kind == GeomKind::line ? 4 : 3;
  return dim;
}

int ReconstructedTopology::retained_state_dim() const {
  int dim = 6 * int(retained.size());
  for (const auto& o : obs_factors) dim += o.kind == GeomKind::line ? 4 : 3;
  return dim;
}

ReconstructedTopology sparsify_keyframes(const Map& map, double min_spacing) {
  if (map.keyframes.empty()) raise(ErrorCode::EmptyMap, "cannot sparsify an empty map");
  ReconstructedTopology topo;
  std::vector<std::pair<int64_t, Vec3>> kept;
  for (const auto& [id, kf] : map.keyframes) {
    bool keep = true;
    for (const auto& [kid, kpos] : kept) {
      if ((kf.pose.translation - kpos).norm() < min_spacing) {
        keep = false;
        break;
      }
    }
    if (keep) {
      kept.emplace_back(id, kf.pose.translation);
      topo.retained.push_back(id);
    } else {
      topo.marginalized.push_back(id);
    }
  }

  for (const auto& [id, lm] : map.landmarks) {
    double best = std::numeric_limits<double>::infinity();
    int64_t best_kf = topo.retained.front();
    for (const auto& [kid, kpos] : kept) {
      const double d = (lm.centroid - kpos).norm();
      if (d < best - 1e-12) {
        best = d;
        best_kf = kid;
      }
    }
    topo.obs_factors.push_back({id, best_kf, lm.kind});
  }

  // Prim's MST over the retained keyframes, Euclidean edge weights.
  const int n = int(kept.size());
  std::vector<bool> in_tree(n, false);
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> link(n, 0);
  in_tree[0] = true;
  for (int i = 1; i < n; ++i) dist[i] = (kept[i].second - kept[0].second).norm();
  for (int added = 1; added < n; ++added) {
    int nxt = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (!in_tree[i] && dist[i] < best) {
        best = dist[i];
        nxt = i;
      }
    }
    in_tree[nxt] = true;
    topo.tree_edges.emplace_back(std::min(kept[link[nxt]].first, kept[nxt].first),
                                 std::max(kept[link[nxt]].first, kept[nxt].first));
    for (int i = 0; i < n; ++i) {
      if (in_tree[i]) continue;
      const double d = (kept[i].second - kept[nxt].second).norm();
      if (d < dist[i]) {
        dist[i] = d;
        link[i] = nxt;
      }
    }
  }
  topo.prior_keyframe = topo.retained.front();
  return topo;
}

RecoveredMeasurements measurements_at_mean(const Map& map, const ReconstructedTopology& topo) {
  RecoveredMeasurements out;
  for (const auto& skel : topo.obs_factors) {
    const Landmark& lm = map.landmarks.at(skel.landmark);
    const Pose& pose = map.keyframes.at(skel.keyframe).pose;
    RecoveredObsFactor f;
    f.landmark = skel.landmark;
    f.keyframe = skel.keyframe;
    f.kind = skel.kind;
    if (skel.kind == GeomKind::line) {
      const auto pn = lm.as_line();
      f.points[0] = pose.inverse().act(lm.centroid + pn.n);
      f.points[1] = pose.inverse().act(lm.centroid - pn.n);
      f.sqrt_info = MatX::Identity(4, 4);
    } else {
      const auto nd = lm.as_plane();
      int k = 0;
      nd.n.cwiseAbs().minCoeff(&k);
      const Vec3 u = nd.n.cross(Vec3::Unit(k)).normalized();
      const Vec3 v = nd.n.cross(u);
      f.points[0] = pose.inverse().act(lm.centroid);
      f.points[1] = pose.inverse().act(lm.centroid + u);
      f.points[2] = pose.inverse().act(lm.centroid + v);
      f.sqrt_info = MatX::Identity(3, 3);
    }
    out.obs.push_back(std::move(f));
  }
  for (const auto& [a, b] : topo.tree_edges) {
    RelPoseFactor f;
    f.kf_a = a;
    f.kf_b = b;
    f.z = map.keyframes.at(a).pose.inverse() * map.keyframes.at(b).pose;
    f.recovered = true;
    out.tree.push_back(std::move(f));
  }
  out.prior.kf = topo.prior_keyframe;
  out.prior.z = map.keyframes.at(topo.prior_keyframe).pose;
  return out;
}

namespace {

MatX symmetric_inverse(const MatX& m, const char* what) {
  MatX sym = 0.5 * (m + m.transpose());
  Eigen::LLT<MatX> llt(sym);
  if (llt.info() != Eigen::Success) {
    sym.diagonal().array() += 1e-12 * std::max(1.0, sym.diagonal().cwiseAbs().maxCoeff());
    llt.compute(sym);
    if (llt.info() != Eigen::Success) raise(ErrorCode::NonPSD, what);
  }
  return llt.solve(MatX::Identity(m.rows(), m.cols()));
}

MatX cholesky_lower(const MatX& m, const char* what) {
  MatX sym = 0.5 * (m + m.transpose());
  Eigen::LLT<MatX> llt(sym);
  if (llt.info() != Eigen::Success) {
    sym.diagonal().array() += 1e-12 * std::max(1.0, sym.diagonal().cwiseAbs().maxCoeff());
    llt.compute(sym);
    if (llt.info() != Eigen::Success) raise(ErrorCode::NonPSD, what);
  }
  return llt.matrixL();
}

}  // namespace

SigmaBlocks recover_sigma_sparse(const BlockHessian& H) {
  using Sparse = Eigen::SparseMatrix<double>;
  SigmaBlocks out;
  const int l = H.l, n = H.n, m = H.m;
  auto track = [&out](size_t elems) { out.peak_dense_elements += elems; };

  // D = H_ll^{-1}: block-diagonal, kept as a sparse matrix of small blocks.
  std::vector<Eigen::Triplet<double>> d_trip;
  std::vector<MatX> D_blocks(H.H_ll.size());
  for (size_t s = 0; s < H.H_ll.size(); ++s) {
    D_blocks[s] = symmetric_inverse(H.H_ll[s], "singular landmark Hessian block");
    const int off = H.lm_offsets[s];
    for (int r = 0; r < D_blocks[s].rows(); ++r)
      for (int c = 0; c < D_blocks[s].cols(); ++c)
        d_trip.emplace_back(off + r, off + c, D_blocks[s](r, c));
  }
  Sparse D(l, l);
  D.setFromTriplets(d_trip.begin(), d_trip.end());

  const Sparse P = D * H.H_ln;
  const MatX S_q = H.H_nn - MatX(H.H_ln.transpose() * P);
  track(size_t(n) * n);
  const MatX Q = symmetric_inverse(S_q, "indefinite reduced pose block");
  track(size_t(n) * n);
  const MatX PQ = P * Q;
  track(size_t(l) * n);

  MatX Wl, Wn;  // l x m and n x m, only when something is marginalized
  if (m > 0) {
    const Sparse DVl = D * H.V_l;
    const MatX PtVl = MatX(Sparse(P.transpose()) * H.V_l);
    track(size_t(n) * m);
    const MatX QVn = Q * H.V_n;
    track(size_t(n) * m);

    MatX R_inv = H.H_mm - MatX(Sparse(H.V_l.transpose()) * DVl);
    R_inv -= PtVl.transpose() * Q * PtVl;
    const MatX G = PtVl.transpose() * QVn;  // = V_l^T P Q V_n
    R_inv += G.transpose() + G;
    R_inv -= H.V_n.transpose() * QVn;
    track(size_t(m) * m * 2);

    const MatX R = symmetric_inverse(R_inv, "marginal covariance of removed frames not PSD");
    const MatX Rc = cholesky_lower(R, "recovered covariance factor not PSD");
    track(size_t(m) * m * 2);

    const MatX T = (PtVl - H.V_n) * Rc;  // n x m
    track(size_t(n) * m);
    Wl = MatX(DVl) * Rc + PQ * T;
    track(size_t(l) * m * 2);
    Wn = -Q * T;
    track(size_t(n) * m);
  }

  out.sigma_nn = Q;
  if (m > 0) out.sigma_nn += Wn * Wn.transpose();
  out.sigma_ln = -PQ;
  if (m > 0) out.sigma_ln += Wl * Wn.transpose();
  track(size_t(l) * n);

  const MatX P_dense(P);
  track(size_t(l) * n);
  out.sigma_ll_diag.resize(H.H_ll.size());
  for (size_t s = 0; s < H.H_ll.size(); ++s) {
    const int off = H.lm_offsets[s];
    const int dim = int(H.H_ll[s].rows());
    MatX block = D_blocks[s] +
                 PQ.block(off, 0, dim, n) * P_dense.block(off, 0, dim, n).transpose();
    if (m > 0) block += Wl.block(off, 0, dim, m) * Wl.block(off, 0, dim, m).transpose();
    out.sigma_ll_diag[s] = 0.5 * (block + block.transpose());
  }
  return out;
}

RecoveredInfo invert_recovered_block(const MatX& j_sigma_jt) {
  const MatX sym = 0.5 * (j_sigma_jt + j_sigma_jt.transpose());
  Eigen::SelfAdjointEigenSolver<MatX> es(sym);
  const VecX ev = es.eigenvalues();
  const double emax_abs = ev.cwiseAbs().maxCoeff();
  const double emin_abs = ev.cwiseAbs().minCoeff();
  if (!(emin_abs > 0) || emax_abs / emin_abs > 1e12)
    raise(ErrorCode::SingularBlock, "recovered covariance block is singular");

  RecoveredInfo out;
  VecX lam = ev.cwiseInverse();
  const double trace = lam.cwiseAbs().sum();
  for (int i = 0; i < lam.size(); ++i) {
    if (lam[i] < 0) {
      if (-lam[i] >= 1e-9 * trace)
        raise(ErrorCode::SingularBlock, "recovered information is indefinite");
      lam[i] = 0;
      ++out.clamped;
    }
  }
  out.info = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  out.info = 0.5 * (out.info + out.info.transpose());
  MatX shifted = out.info;
  if (out.clamped > 0) shifted.diagonal().array() += 1e-12 * trace;
  Eigen::LLT<MatX> llt(shifted);
  if (llt.info() != Eigen::Success) raise(ErrorCode::SingularBlock, "sqrt of recovered info failed");
  out.sqrt_info = MatX(llt.matrixL()).transpose();
  return out;
}

MarginalizeStats marginalize_map(Map& map, double min_spacing, const Config& cfg) {
  const ReconstructedTopology topo = sparsify_keyframes(map, min_spacing);
  const RecoveredMeasurements meas = measurements_at_mean(map, topo);

  MapProblem mp = build_ba_problem(map, cfg);
  std::vector<int> marg_indices;
  {
    std::set<int64_t> marg_ids(topo.marginalized.begin(), topo.marginalized.end());
    for (size_t i = 0; i < mp.pose_keys.size(); ++i) {
      if (marg_ids.count(mp.pose_keys[i].second)) marg_indices.push_back(int(i));
    }
  }
  const BlockHessian H = build_block_hessian(mp.problem, marg_indices);
  const HessianOrder order = hessian_order(mp.problem, marg_indices);
  const SigmaBlocks sigma = recover_sigma_sparse(H);

  // slot / retained-pose lookup tables in the Hessian ordering
  std::map<int64_t, int> lm_slot;
  for (size_t i = 0; i < mp.line_ids.size(); ++i) lm_slot[mp.line_ids[i]] = int(i);
  for (size_t i = 0; i < mp.plane_ids.size(); ++i)
    lm_slot[mp.plane_ids[i]] = int(mp.line_ids.size() + i);
  std::map<int64_t, int> pose_noff;  // keyframe id -> offset inside the n block
  for (size_t i = 0; i < order.retained.size(); ++i)
    pose_noff[mp.pose_keys[order.retained[i]].second] = 6 * int(i);

  // Problem holding the recovered skeleton for Jacobian evaluation. Poses are
  // indexed as in the n block, landmarks exactly as in the BA problem.
  Problem skel;
  skel.lines = mp.problem.lines;
  skel.planes = mp.problem.planes;
  skel.poses.resize(order.retained.size());
  skel.pose_fixed.assign(order.retained.size(), false);
  for (size_t i = 0; i < order.retained.size(); ++i)
    skel.poses[i] = mp.problem.poses[order.retained[i]];
  auto pose_slot = [&](int64_t kf) { return pose_noff.at(kf) / 6; };

  MarginalizeStats stats;
  stats.retained = int(topo.retained.size());
  stats.marginalized = int(topo.marginalized.size());
  stats.peak_dense_elements = sigma.peak_dense_elements;

  FactorEval eval;
  std::vector<RecoveredObsFactor> rec_obs;
  for (const auto& f : meas.obs) {
    auto slot_it = lm_slot.find(f.landmark);
    if (slot_it == lm_slot.end()) continue;  // landmark without factors
    const int slot = slot_it->second;
    Factor fac;
    fac.kind = f.kind == GeomKind::line ? FactorKind::point_to_line : FactorKind::point_to_plane;
    fac.pose_a = pose_slot(f.keyframe);
    fac.lm = f.kind == GeomKind::line ? slot : slot - int(mp.line_ids.size());
    fac.points = f.points;
    fac.sqrt_info = MatX::Identity(residual_dim(fac.kind), residual_dim(fac.kind));
    evaluate_factor(skel, fac, eval, true);

    const int noff = pose_noff.at(f.keyframe);
    const int loff = H.lm_offsets[slot];
    const int dim = eval.J_lm.cols();
    const MatX sig_ln = sigma.sigma_ln.block(loff, noff, dim, 6);
    MatX c = eval.J_lm * sigma.sigma_ll_diag[slot] * eval.J_lm.transpose();
    c += eval.J_lm * sig_ln * eval.J_pose_a.transpose();
    c += eval.J_pose_a * sig_ln.transpose() * eval.J_lm.transpose();
    c += eval.J_pose_a * sigma.sigma_nn.block(noff, noff, 6, 6) * eval.J_pose_a.transpose();
    const RecoveredInfo info = invert_recovered_block(c);
    stats.clamped_eigenvalues += info.clamped;

    RecoveredObsFactor rec = f;
    rec.sqrt_info = info.sqrt_info;
    rec_obs.push_back(std::move(rec));
  }

  std::vector<RelPoseFactor> rec_tree;
  for (const auto& f : meas.tree) {
    Factor fac;
    fac.kind = FactorKind::odometry;
    fac.pose_a = pose_slot(f.kf_a);
    fac.pose_b = pose_slot(f.kf_b);
    fac.z = f.z;
    fac.sqrt_info = Mat6::Identity();
    evaluate_factor(skel, fac, eval, true);
    const int na = pose_noff.at(f.kf_a);
    const int nb = pose_noff.at(f.kf_b);
    MatX c = eval.J_pose_a * sigma.sigma_nn.block(na, na, 6, 6) * eval.J_pose_a.transpose();
    c += eval.J_pose_a * sigma.sigma_nn.block(na, nb, 6, 6) * eval.J_pose_b.transpose();
    c += eval.J_pose_b * sigma.sigma_nn.block(nb, na, 6, 6) * eval.J_pose_a.transpose();
    c += eval.J_pose_b * sigma.sigma_nn.block(nb, nb, 6, 6) * eval.J_pose_b.transpose();
    const RecoveredInfo info = invert_recovered_block(c);
    stats.clamped_eigenvalues += info.clamped;
    RelPoseFactor rec = f;
    rec.sqrt_info = info.sqrt_info;
    rec_tree.push_back(std::move(rec));
  }

  PriorFactor rec_prior = meas.prior;
  {
    Factor fac;
    fac.kind = FactorKind::prior_pose;
    fac.pose_a = pose_slot(meas.prior.kf);
    fac.z = meas.prior.z;
    fac.sqrt_info = Mat6::Identity();
    evaluate_factor(skel, fac, eval, true);
    const int na = pose_noff.at(meas.prior.kf);
    const MatX c =
        eval.J_pose_a * sigma.sigma_nn.block(na, na, 6, 6) * eval.J_pose_a.transpose();
    const RecoveredInfo info = invert_recovered_block(c);
    stats.clamped_eigenvalues += info.clamped;
    rec_prior.sqrt_info = info.sqrt_info;
  }

  // Rebuild the map: sparsified poses, unaltered landmarks, recovered factors.
  std::set<int64_t> retained(topo.retained.begin(), topo.retained.end());
  for (auto it = map.keyframes.begin(); it != map.keyframes.end();) {
    if (!retained.count(it->first)) {
      it = map.keyframes.erase(it);
    } else {
      it->second.line_obs.clear();
      it->second.plane_obs.clear();
      ++it;
    }
  }
  map.rel_pose_factors = std::move(rec_tree);
  map.prior_factors = {rec_prior};
  map.recovered_obs = std::move(rec_obs);
  for (auto& [id, lm] : map.landmarks) lm.observers.clear();
  for (const auto& f : map.recovered_obs)
    map.landmarks.at(f.landmark).observers.push_back(f.keyframe);
  refresh_landmark_caches(map);
  validate_map(map);
  return stats;
}

}  // namespace slim
