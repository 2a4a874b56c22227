#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "slim/vectorize.hpp"
#include "test_util.hpp"

using namespace slim;
using test::Rng;

namespace {

PointCluster segment_cluster(const Vec3& a, const Vec3& b, int n, Label label = Label::pole) {
  PointCluster c;
  c.kind = GeomKind::line;
  c.label = label;
  for (int i = 0; i < n; ++i) c.points.push_back(a + (b - a) * (double(i) / (n - 1)));
  return c;
}

PointCluster patch_cluster(const Vec3& center, const Vec3& u, const Vec3& v, double half, int grid,
                           Label label = Label::building) {
  PointCluster c;
  c.kind = GeomKind::plane;
  c.label = label;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const double s = -half + 2 * half * i / (grid - 1);
      const double t = -half + 2 * half * j / (grid - 1);
      c.points.push_back(center + s * u + t * v);
    }
  }
  return c;
}

}  // namespace

TEST_CASE("pca decomposition") {
  SUBCASE("unit square in z=0") {
    std::vector<Vec3> pts = {{0.5, 0.5, 0}, {0.5, -0.5, 0}, {-0.5, 0.5, 0}, {-0.5, -0.5, 0}};
    const auto pca = pca_decompose(pts);
    CHECK(pca.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(pca.eigenvectors.col(0).dot(Vec3(0, 0, 1))) == doctest::Approx(1.0));
    CHECK(pca.eigenvalues[1] == doctest::Approx(0.25));
    CHECK(pca.eigenvalues[2] == doctest::Approx(0.25));
  }
  SUBCASE("collinear points along x") {
    std::vector<Vec3> pts;
    for (int i = 0; i < 9; ++i) pts.push_back(Vec3(i, 0, 0));
    const auto pca = pca_decompose(pts);
    CHECK(pca.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(pca.eigenvalues[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(pca.eigenvectors.col(2).dot(Vec3(1, 0, 0))) == doctest::Approx(1.0));
  }
  SUBCASE("eigenvalue sum equals covariance trace") {
    Rng rng(5);
    for (int t = 0; t < 50; ++t) {
      std::vector<Vec3> pts;
      Vec3 mean = Vec3::Zero();
      for (int i = 0; i < 40; ++i) {
        pts.push_back(Vec3(test::uniform(rng, -3, 3), test::uniform(rng, -1, 2),
                           test::uniform(rng, 0, 5)));
        mean += pts.back();
      }
      mean /= 40.0;
      double trace = 0;
      for (const auto& p : pts) trace += (p - mean).squaredNorm();
      trace /= 40.0;
      const auto pca = pca_decompose(pts);
      CHECK(pca.eigenvalues.sum() == doctest::Approx(trace).epsilon(1e-10));
      CHECK((pca.eigenvectors * pca.eigenvectors.transpose() - Mat3::Identity())
                .cwiseAbs()
                .maxCoeff() < 1e-10);
      CHECK(pca.eigenvectors.determinant() == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
  SUBCASE("coincident points degenerate") {
    std::vector<Vec3> pts(5, Vec3(1, 2, 3));
    CHECK_THROWS_AS((void)pca_decompose(pts), Error);
  }
}

TEST_CASE("line observation extraction") {
  Config cfg;
  SUBCASE("uniform segment") {
    const double L = 6.0;
    const auto cluster = segment_cluster({0, 0, 0}, {0, 0, L}, 100);
    const auto pca = pca_decompose(cluster.points);
    const auto obs = extract_line_observation(cluster, cfg);
    // symmetric about the midpoint, along z, separation 2*sqrt(2*lambda3)
    CHECK(((obs.p_a + obs.p_b) / 2 - Vec3(0, 0, L / 2)).norm() < 1e-9);
    CHECK((obs.p_a - obs.p_b).norm() ==
          doctest::Approx(2 * std::sqrt(2 * pca.eigenvalues[2])).epsilon(1e-10));
    CHECK(std::abs((obs.p_a - obs.p_b).normalized().dot(Vec3(0, 0, 1))) ==
          doctest::Approx(1.0));
  }
  SUBCASE("two point cluster reproduces the pair") {
    PointCluster c;
    c.kind = GeomKind::line;
    c.label = Label::pole;
    c.points = {Vec3(1, 1, 0), Vec3(1, 1, 4)};
    const auto obs = extract_line_observation(c, cfg);
    const bool same = (obs.p_a - c.points[0]).norm() < 1e-12 &&
                      (obs.p_b - c.points[1]).norm() < 1e-12;
    const bool swapped = (obs.p_a - c.points[1]).norm() < 1e-12 &&
                         (obs.p_b - c.points[0]).norm() < 1e-12;
    CHECK((same || swapped));
  }
  SUBCASE("pole information scalar") {
    auto cluster = segment_cluster({0, 0, 0}, {0, 0, 5}, 50, Label::pole);
    const auto obs = extract_line_observation(cluster, cfg);
    CHECK(obs.sqrt_info == doctest::Approx(std::sqrt(25.0) / 0.3));
    CHECK(obs.point_count == 50);
  }
  SUBCASE("degenerate cluster") {
    PointCluster c;
    c.kind = GeomKind::line;
    c.points.assign(10, Vec3(2, 2, 2));
    CHECK_THROWS_AS((void)extract_line_observation(c, cfg), Error);
  }
}

TEST_CASE("plane observation extraction") {
  Config cfg;
  SUBCASE("square patch in z=0") {
    const auto cluster = patch_cluster({1, 2, 0}, Vec3(1, 0, 0), Vec3(0, 1, 0), 2.0, 11,
                                       Label::road);
    const auto obs = extract_plane_observation(cluster, cfg);
    CHECK(std::abs(obs.p_a.z()) < 1e-5);
    CHECK(std::abs(obs.p_b.z()) < 1e-5);
    CHECK(std::abs(obs.p_c.z()) < 1e-5);
    // mean of the three points is the centroid
    CHECK(((obs.p_a + obs.p_b + obs.p_c) / 3 - Vec3(1, 2, 0)).norm() < 1e-9);
    // the b-c difference carries the (floored) normal direction
    CHECK(std::abs((obs.p_b - obs.p_c).normalized().dot(Vec3(0, 0, 1))) ==
          doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("p_b and p_c symmetric about the v2 axis") {
    Rng rng(31);
    for (int t = 0; t < 20; ++t) {
      const Vec3 u = test::random_unit(rng);
      Vec3 v = u.cross(test::random_unit(rng));
      while (v.norm() < 1e-3) v = u.cross(test::random_unit(rng));
      v.normalize();
      auto cluster = patch_cluster(Vec3(0, 0, 1), u, 0.3 * v, 1.5, 9);
      const auto obs = extract_plane_observation(cluster, cfg);
      const auto pca = pca_decompose(cluster.points);
      const Vec3 mid = 0.5 * (obs.p_b + obs.p_c) - pca.centroid;
      CHECK((mid - mid.dot(pca.eigenvectors.col(1)) * pca.eigenvectors.col(1)).norm() < 1e-8);
    }
  }
  SUBCASE("road information scalar") {
    auto cluster = patch_cluster({0, 0, 0}, Vec3(1, 0, 0), Vec3(0, 1, 0), 3.0, 18, Label::road);
    cluster.points.resize(300);
    const auto obs = extract_plane_observation(cluster, cfg);
    CHECK(obs.sqrt_info == doctest::Approx(std::sqrt(100.0) / 0.1));
  }
  SUBCASE("collinear cluster degenerate") {
    PointCluster c;
    c.kind = GeomKind::plane;
    for (int i = 0; i < 12; ++i) c.points.push_back(Vec3(i, 0, 0));
    CHECK_THROWS_AS((void)extract_plane_observation(c, cfg), Error);
  }
}

TEST_CASE("representative points stay near the cluster") {
  Config cfg;
  Rng rng(37);
  for (int t = 0; t < 50; ++t) {
    PointCluster c;
    c.kind = GeomKind::plane;
    const Vec3 n = test::random_unit(rng);
    Vec3 u = n.cross(Vec3::UnitX());
    if (u.norm() < 1e-3) u = n.cross(Vec3::UnitY());
    u.normalize();
    const Vec3 v = n.cross(u);
    const Vec3 c0(test::uniform(rng, -20, 20), test::uniform(rng, -20, 20),
                  test::uniform(rng, -20, 20));
    for (int i = 0; i < 60; ++i) {
      c.points.push_back(c0 + test::uniform(rng, -4, 4) * u + test::uniform(rng, -2, 2) * v +
                         test::uniform(rng, -0.05, 0.05) * n);
    }
    const auto pca = pca_decompose(c.points);
    const double inflate = 2 * std::sqrt(2 * pca.eigenvalues[1]);
    Vec3 lo = c.points[0], hi = c.points[0];
    for (const auto& p : c.points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const auto obs = extract_plane_observation(c, cfg);
    for (const Vec3& p : {obs.p_a, obs.p_b, obs.p_c}) {
      CHECK((p - (lo - Vec3::Constant(inflate))).minCoeff() > 0);
      CHECK(((hi + Vec3::Constant(inflate)) - p).minCoeff() > 0);
    }
  }
}

TEST_CASE("landmark initialization") {
  SUBCASE("single plane observation on z=0") {
    Config cfg;
    const auto cluster = patch_cluster({0, 0, 0}, Vec3(1, 0, 0), Vec3(0, 1, 0), 2.0, 9,
                                       Label::road);
    const auto obs = extract_plane_observation(cluster, cfg);
    const auto lm = init_plane_landmark({{Pose::identity(), obs}}, Label::road);
    CHECK(std::abs(lm.plane.alpha) < 1e-9);
    CHECK(std::abs(lm.plane.beta) < 1e-9);
    CHECK(std::abs(lm.plane.d) < 1e-9);
  }
  SUBCASE("two noiseless line observations recover the true line") {
    Rng rng(41);
    for (int t = 0; t < 50; ++t) {
      const LineParam truth = test::random_line(rng, 5.0);
      const auto pn = line_to_point_direction(truth);
      std::vector<WeightedLineObs> obs;
      for (int k = 0; k < 2; ++k) {
        const Pose T = test::random_pose(rng, 5.0);
        LineObservation o;
        o.p_a = T.inverse().act(pn.q + test::uniform(rng, 1, 3) * pn.n);
        o.p_b = T.inverse().act(pn.q - test::uniform(rng, 1, 3) * pn.n);
        o.sqrt_info = test::uniform(rng, 0.5, 4.0);
        o.point_count = 10;
        obs.push_back({T, o});
      }
      const LineParam fit = fit_line_landmark(obs);
      const auto fit_pn = line_to_point_direction(fit);
      for (double s : {-6.0, 0.0, 3.0}) {
        CHECK(point_to_line_distance(pn.q + s * pn.n, fit_pn) < 1e-9);
      }
    }
  }
  SUBCASE("asymmetric weights match the dense TLS oracle") {
    Rng rng(43);
    for (int t = 0; t < 30; ++t) {
      std::vector<WeightedLineObs> obs;
      std::vector<std::pair<Vec3, double>> pts;
      for (int k = 0; k < 4; ++k) {
        const Pose T = test::random_pose(rng, 4.0);
        LineObservation o;
        o.p_a = Vec3(test::uniform(rng, -4, 4), test::uniform(rng, -4, 4),
                     test::uniform(rng, -4, 4));
        o.p_b = o.p_a + test::random_unit(rng);
        o.sqrt_info = test::uniform(rng, 0.2, 5.0);
        o.point_count = 8;
        obs.push_back({T, o});
        pts.emplace_back(T.act(o.p_a), o.sqrt_info * o.sqrt_info);
        pts.emplace_back(T.act(o.p_b), o.sqrt_info * o.sqrt_info);
      }
      // dense weighted TLS oracle
      double wsum = 0;
      Vec3 mean = Vec3::Zero();
      for (auto& [p, w] : pts) {
        mean += w * p;
        wsum += w;
      }
      mean /= wsum;
      Mat3 scatter = Mat3::Zero();
      for (auto& [p, w] : pts) scatter += w * (p - mean) * (p - mean).transpose();
      Eigen::SelfAdjointEigenSolver<Mat3> es(scatter);
      const auto oracle = line_to_point_direction(
          line_from_point_direction({es.eigenvectors().col(2), mean}));

      const auto fit = line_to_point_direction(fit_line_landmark(obs));
      CHECK(std::abs(std::abs(fit.n.dot(oracle.n)) - 1.0) < 1e-9);
      CHECK((fit.q - oracle.q).norm() < 1e-8);
    }
  }
}

TEST_CASE("association") {
  Config cfg;
  Map map;
  // plane landmark z=0 and a parallel one 0.5 m above
  for (double z : {0.0, 0.5}) {
    Landmark lm;
    lm.id = map.alloc_landmark_id();
    lm.kind = GeomKind::plane;
    lm.label = Label::road;
    lm.plane = plane_from_normal_distance({Vec3(0, 0, 1), -z});
    lm.centroid = Vec3(0, 0, z);
    lm.normal = Vec3(0, 0, 1);
    lm.radius = 10;
    map.landmarks.emplace(lm.id, lm);
  }

  SUBCASE("observation on an existing landmark matches it") {
    const auto cluster = patch_cluster({0.5, 0.5, 0}, Vec3(1, 0, 0), Vec3(0, 1, 0), 1.0, 7,
                                       Label::road);
    const auto obs = extract_plane_observation(cluster, Config{});
    const auto s = summarize_plane_obs(Pose::identity(), obs);
    auto id = associate_observation(map, s, cfg);
    REQUIRE(id.has_value());
    CHECK(*id == 0);
  }
  SUBCASE("distant observation becomes a new landmark") {
    const auto cluster = patch_cluster({100, 100, 0}, Vec3(1, 0, 0), Vec3(0, 1, 0), 1.0, 7,
                                       Label::road);
    const auto obs = extract_plane_observation(cluster, Config{});
    const auto s = summarize_plane_obs(Pose::identity(), obs);
    CHECK(!associate_observation(map, s, cfg).has_value());
  }
  SUBCASE("parallel plane half a meter away is never matched") {
    const auto cluster = patch_cluster({0, 0, 0}, Vec3(1, 0, 0), Vec3(0, 1, 0), 1.0, 7,
                                       Label::road);
    const auto obs = extract_plane_observation(cluster, Config{});
    const auto s = summarize_plane_obs(Pose::identity(), obs);
    auto id = associate_observation(map, s, cfg);
    REQUIRE(id.has_value());
    CHECK(*id == 0);
  }
}

TEST_CASE("ground classifier") {
  auto ground = patch_cluster({0, 0, 0}, Vec3(1, 0, 0), Vec3(0, 1, 0), 3.0, 9);
  CHECK(classify_ground(ground) == Label::road);
  auto wall = patch_cluster({0, 0, 0}, Vec3(0, 1, 0), Vec3(0, 0, 1), 3.0, 9);
  CHECK(classify_ground(wall) == Label::building);
}
