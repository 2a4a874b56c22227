#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "slim/geometry.hpp"
#include "test_util.hpp"

using namespace slim;
using test::Rng;

TEST_CASE("rot2dof matches the closed form") {
  CHECK((rot2dof(0, 0) - Mat3::Identity()).norm() < 1e-15);

  Mat3 expected;
  expected << 0, 0, -1, 0, 1, 0, 1, 0, 0;
  CHECK((rot2dof(0, M_PI / 2) - expected).norm() < 1e-12);

  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const double a = test::uniform(rng, -10, 10);
    const double b = test::uniform(rng, -10, 10);
    const Mat3 R = rot2dof(a, b);
    CHECK((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("line conversions") {
  SUBCASE("z axis") {
    const auto pn = line_to_point_direction({0, 0, 0, 0});
    CHECK((pn.n - Vec3(0, 0, 1)).norm() < 1e-15);
    CHECK(pn.q.norm() < 1e-15);
  }
  SUBCASE("pure xy offset") {
    const auto pn = line_to_point_direction({0, 0, 1, 2});
    CHECK((pn.n - Vec3(0, 0, 1)).norm() < 1e-15);
    CHECK((pn.q - Vec3(1, 2, 0)).norm() < 1e-15);
  }
  SUBCASE("q is perpendicular to n") {
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
      const auto pn = line_to_point_direction(test::random_line(rng));
      CHECK(std::abs(pn.n.norm() - 1.0) < 1e-12);
      CHECK(std::abs(pn.q.dot(pn.n)) < 1e-9);
    }
  }
  SUBCASE("inverse reproduces the x-axis shifted to y=5") {
    const LineParam l = line_from_point_direction({Vec3(1, 0, 0), Vec3(0, 5, 0)});
    const auto pn = line_to_point_direction(l);
    for (double t : {-3.0, 0.0, 7.0}) {
      CHECK(point_to_line_distance(Vec3(t, 5, 0), pn) < 1e-9);
    }
  }
  SUBCASE("direction sign invariance") {
    const LineParam l = line_from_point_direction({Vec3(0, 0, -1), Vec3(0, 0, 0)});
    CHECK(l.alpha == doctest::Approx(0));
    CHECK(l.beta == doctest::Approx(0));
    CHECK(l.x == doctest::Approx(0));
    CHECK(l.y == doctest::Approx(0));
  }
  SUBCASE("roundtrip is the identity on infinite lines") {
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
      const LineParam l = test::random_line(rng);
      const auto pn = line_to_point_direction(l);
      const auto pn2 = line_to_point_direction(line_from_point_direction(pn));
      for (double t : {-20.0, -1.0, 0.0, 5.0}) {
        CHECK(point_to_line_distance(pn.q + t * pn.n, pn2) < 1e-8);
      }
    }
  }
}

TEST_CASE("plane conversions") {
  SUBCASE("xOy plane") {
    const auto nd = plane_to_normal_distance({0, 0, 0});
    CHECK((nd.n - Vec3(0, 0, 1)).norm() < 1e-15);
    CHECK(nd.d == 0);
  }
  SUBCASE("z translation passes through") {
    const auto nd = plane_to_normal_distance({0, 0, -3});
    CHECK((nd.n - Vec3(0, 0, 1)).norm() < 1e-15);
    CHECK(nd.d == -3);
  }
  SUBCASE("y = -2 plane") {
    const PlaneParam p = plane_from_normal_distance({Vec3(0, 1, 0), 2});
    const auto nd = plane_to_normal_distance(p);
    CHECK(point_to_plane_distance(Vec3(4, -2, 9), nd) < 1e-12);
  }
  SUBCASE("sign canonicalization") {
    const PlaneParam a = plane_from_normal_distance({Vec3(0, 1, 0), 2});
    const PlaneParam b = plane_from_normal_distance({Vec3(0, -1, 0), -2});
    CHECK(a.alpha == doctest::Approx(b.alpha).epsilon(1e-14));
    CHECK(a.beta == doctest::Approx(b.beta).epsilon(1e-14));
    CHECK(a.d == doctest::Approx(b.d).epsilon(1e-14));
  }
  SUBCASE("roundtrip identity on infinite planes") {
    Rng rng(13);
    for (int i = 0; i < 1000; ++i) {
      const PlaneParam p = test::random_plane(rng);
      const auto nd = plane_to_normal_distance(p);
      const auto nd2 = plane_to_normal_distance(plane_from_normal_distance(nd));
      // Compare as canonical (n, d) pairs up to joint sign.
      const double flip = nd.n.dot(nd2.n) >= 0 ? 1.0 : -1.0;
      CHECK((nd.n - flip * nd2.n).norm() < 1e-10);
      CHECK(std::abs(nd.d - flip * nd2.d) < 1e-10);
    }
  }
}

TEST_CASE("so3 log and exp") {
  CHECK(so3_log(Mat3::Identity()).norm() < 1e-15);

  const Vec3 phi(0, 0, 0.1);
  CHECK((so3_log(so3_exp(phi)) - phi).norm() < 1e-10);

  Rng rng(17);
  SUBCASE("roundtrip for random rotations") {
    for (int i = 0; i < 1000; ++i) {
      const Mat3 R = test::random_rotation(rng, M_PI - 1e-3);
      CHECK((so3_exp(so3_log(R)) - R).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  SUBCASE("angle near pi stays stable") {
    for (int i = 0; i < 200; ++i) {
      const Vec3 a = test::random_unit(rng) * (M_PI - test::uniform(rng, 1e-9, 1e-3));
      const Mat3 R = so3_exp(a);
      CHECK((so3_exp(so3_log(R)) - R).cwiseAbs().maxCoeff() < 1e-7);
    }
  }
}

TEST_CASE("pose algebra") {
  Rng rng(23);
  for (int i = 0; i < 200; ++i) {
    const Pose T = test::random_pose(rng);
    const Pose I = T.inverse() * T;
    CHECK((I.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(I.translation.norm() < 1e-9);
    CHECK(T.is_valid());
  }
}

TEST_CASE("right jacobian inverse matches finite differences") {
  Rng rng(29);
  for (int i = 0; i < 100; ++i) {
    const Vec3 phi = test::random_unit(rng) * test::uniform(rng, 1e-8, 2.5);
    const Mat3 analytic = so3_right_jacobian_inv(phi);
    const MatX numeric = test::numeric_jacobian(
        [&](const VecX& d) -> VecX { return so3_log(so3_exp(phi) * so3_exp(d)); },
        VecX::Zero(3));
    CHECK(test::max_rel_error(analytic, numeric) < 1e-6);
  }
}
