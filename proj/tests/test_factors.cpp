#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "slim/factors.hpp"
#include "test_util.hpp"

using namespace slim;
using test::Rng;

namespace {

Problem one_pose_problem(const Pose& p) {
  Problem pr;
  pr.poses = {p};
  pr.pose_fixed = {false};
  return pr;
}

/// Finite-difference check of every Jacobian block of a factor.
void check_fd(Problem& pr, const Factor& f, double tol = 1e-5) {
  FactorEval eval;
  evaluate_factor(pr, f, eval, true);

  auto eval_r = [&]() {
    FactorEval e;
    evaluate_factor(pr, f, e, false);
    return e.r;
  };

  // pose_a
  {
    const Pose saved = pr.poses[f.pose_a];
    const MatX num = test::numeric_jacobian(
        [&](const VecX& d) {
          pr.poses[f.pose_a] = test::perturb_pose(saved, d);
          VecX r = eval_r();
          pr.poses[f.pose_a] = saved;
          return r;
        },
        VecX::Zero(6));
    CHECK(test::max_rel_error(eval.J_pose_a, num) < tol);
  }
  if (f.kind == FactorKind::odometry || f.kind == FactorKind::loop) {
    const Pose saved = pr.poses[f.pose_b];
    const MatX num = test::numeric_jacobian(
        [&](const VecX& d) {
          pr.poses[f.pose_b] = test::perturb_pose(saved, d);
          VecX r = eval_r();
          pr.poses[f.pose_b] = saved;
          return r;
        },
        VecX::Zero(6));
    CHECK(test::max_rel_error(eval.J_pose_b, num) < tol);
  }
  if (f.kind == FactorKind::point_to_line) {
    const LineParam saved = pr.lines[f.lm];
    const MatX num = test::numeric_jacobian(
        [&](const VecX& d) {
          pr.lines[f.lm] = LineParam::from_vec(saved.vec() + d);
          VecX r = eval_r();
          pr.lines[f.lm] = saved;
          return r;
        },
        VecX::Zero(4));
    CHECK(test::max_rel_error(eval.J_lm, num) < tol);
  }
  if (f.kind == FactorKind::point_to_plane) {
    const PlaneParam saved = pr.planes[f.lm];
    const MatX num = test::numeric_jacobian(
        [&](const VecX& d) {
          pr.planes[f.lm] = PlaneParam::from_vec(saved.vec() + d);
          VecX r = eval_r();
          pr.planes[f.lm] = saved;
          return r;
        },
        VecX::Zero(3));
    CHECK(test::max_rel_error(eval.J_lm, num) < tol);
  }
}

}  // namespace

TEST_CASE("relative pose residual") {
  Rng rng(3);
  SUBCASE("consistent odometry gives zero") {
    for (int i = 0; i < 50; ++i) {
      const Pose a = test::random_pose(rng);
      const Pose z = test::random_pose(rng, 2.0);
      const Pose b = a * z;
      CHECK(residual_rel_pose(a, b, z).norm() < 1e-10);
    }
  }
  SUBCASE("one meter x offset") {
    Pose a, b;
    b.translation = Vec3(1, 0, 0);
    const Vec6 r = residual_rel_pose(a, b, Pose::identity());
    CHECK((r - (Vec6() << 1, 0, 0, 0, 0, 0).finished()).norm() < 1e-12);
  }
}

TEST_CASE("line residual values") {
  SUBCASE("points on the landmark line vanish") {
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
      const LineParam l = test::random_line(rng);
      const auto pn = line_to_point_direction(l);
      const Pose T = test::random_pose(rng);
      const Vec3 pa = T.inverse().act(pn.q + 2.0 * pn.n);
      const Vec3 pb = T.inverse().act(pn.q - 1.0 * pn.n);
      CHECK(residual_line(T, l, pa, pb).norm() < 1e-9);
    }
  }
  SUBCASE("z axis landmark against (1,2,5)") {
    const Vec4 r = residual_line(Pose::identity(), {0, 0, 0, 0}, Vec3(1, 2, 5), Vec3(1, 2, 5));
    CHECK(r.head<2>().isApprox(Vec2(1, 2), 1e-12));
  }
}

TEST_CASE("plane residual values") {
  SUBCASE("coplanar observation vanishes") {
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
      const PlaneParam s = test::random_plane(rng);
      const auto nd = plane_to_normal_distance(s);
      Vec3 u = nd.n.cross(Vec3::UnitX());
      if (u.norm() < 1e-3) u = nd.n.cross(Vec3::UnitY());
      u.normalize();
      const Vec3 v = nd.n.cross(u);
      const Vec3 origin = -nd.d * nd.n;
      const Pose T = test::random_pose(rng);
      const Vec3 pa = T.inverse().act(origin + u);
      const Vec3 pb = T.inverse().act(origin - 0.5 * u + v);
      const Vec3 pc = T.inverse().act(origin - v);
      CHECK(residual_plane(T, s, pa, pb, pc).norm() < 1e-9);
    }
  }
  SUBCASE("distance two above the ground plane") {
    const Vec3 r = residual_plane(Pose::identity(), {0, 0, 0}, Vec3(0, 0, 2), Vec3(1, 1, 0),
                                  Vec3(-1, 0, 0));
    CHECK(r[0] == doctest::Approx(2.0));
    CHECK(r[1] == doctest::Approx(0.0));
    CHECK(r[2] == doctest::Approx(0.0));
  }
}

TEST_CASE("analytic jacobians match finite differences") {
  Rng rng(11);
  SUBCASE("odometry and loop") {
    for (int i = 0; i < 100; ++i) {
      Problem pr;
      pr.poses = {test::random_pose(rng), test::random_pose(rng)};
      pr.pose_fixed = {false, false};
      Factor f;
      f.kind = i % 2 ? FactorKind::odometry : FactorKind::loop;
      f.pose_a = 0;
      f.pose_b = 1;
      f.z = test::random_pose(rng, 2.0);
      f.sqrt_info = Mat6::Identity() * test::uniform(rng, 0.5, 3.0);
      check_fd(pr, f);
    }
  }
  SUBCASE("prior") {
    for (int i = 0; i < 100; ++i) {
      Problem pr = one_pose_problem(test::random_pose(rng));
      Factor f;
      f.kind = FactorKind::prior_pose;
      f.pose_a = 0;
      f.z = test::random_pose(rng);
      f.sqrt_info = Mat6::Identity();
      check_fd(pr, f);
    }
  }
  SUBCASE("point to line") {
    for (int i = 0; i < 100; ++i) {
      Problem pr = one_pose_problem(test::random_pose(rng, 3.0));
      pr.lines = {test::random_line(rng, 3.0)};
      Factor f;
      f.kind = FactorKind::point_to_line;
      f.pose_a = 0;
      f.lm = 0;
      f.points = {Vec3::Random() * 3, Vec3::Random() * 3, Vec3::Zero()};
      f.sqrt_info = MatX::Identity(4, 4) * test::uniform(rng, 0.5, 20.0);
      check_fd(pr, f);
    }
  }
  SUBCASE("point to plane") {
    for (int i = 0; i < 100; ++i) {
      Problem pr = one_pose_problem(test::random_pose(rng, 3.0));
      pr.planes = {test::random_plane(rng, 3.0)};
      Factor f;
      f.kind = FactorKind::point_to_plane;
      f.pose_a = 0;
      f.lm = 0;
      f.points = {Vec3::Random() * 3, Vec3::Random() * 3, Vec3::Random() * 3};
      f.sqrt_info = MatX::Identity(3, 3) * test::uniform(rng, 0.5, 20.0);
      check_fd(pr, f);
    }
  }
}

TEST_CASE("huber kernel") {
  CHECK(huber_weight(4.0, 0.0) == 1.0);
  CHECK(huber_weight(0.5, 1.0) == 1.0);
  CHECK(huber_weight(4.0, 1.0) == doctest::Approx(0.5));
  CHECK(huber_cost(0.5, 1.0) == doctest::Approx(0.5));
  CHECK(huber_cost(4.0, 1.0) == doctest::Approx(3.0));
  // continuous at the threshold
  CHECK(huber_cost(1.0 + 1e-12, 1.0) == doctest::Approx(huber_cost(1.0 - 1e-12, 1.0)));
}
