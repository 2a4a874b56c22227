#include "slim/pcm.hpp"

#include "slim/clique.hpp"
#include "slim/error.hpp"

namespace slim {

std::pair<double, double> pcm_consistency(const LoopCandidate& c1, const LoopCandidate& c2,
                                          const Map& base, const Map& sub) {
  const Keyframe& sk = sub.keyframes.at(c1.sub_kf);
  const Keyframe& sl = sub.keyframes.at(c2.sub_kf);
  if (sk.session != sl.session)
    raise(ErrorCode::MissingOdometry, "submap keyframes span sessions; no odometry chain");
  const Keyframe& bk = base.keyframes.at(c1.base_kf);
  const Keyframe& bl = base.keyframes.at(c2.base_kf);

  const Pose rel_base = bk.pose.inverse() * bl.pose;  // bl in bk frame
  const Pose rel_sub = sl.pose.inverse() * sk.pose;   // sk in sl frame
  const Pose cycle = rel_base * c2.relative * rel_sub * c1.relative.inverse();
  return {so3_log(cycle.rotation).norm(), cycle.translation.norm()};
}

std::vector<LoopCandidate> filter_loops(const std::vector<LoopCandidate>& candidates,
                                        const Map& base, const Map& sub, double gamma_rot,
                                        double gamma_trans) {
  const int n = int(candidates.size());
  if (n == 0) return {};
  if (n == 1) return candidates;
  AdjacencyGraph g(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto [rot_err, trans_err] = pcm_consistency(candidates[i], candidates[j], base, sub);
      if (rot_err < gamma_rot && trans_err < gamma_trans) g.add_edge(i, j);
    }
  }
  std::vector<LoopCandidate> out;
  for (int idx : max_clique(g)) out.push_back(candidates[idx]);
  return out;
}

}  // namespace slim
