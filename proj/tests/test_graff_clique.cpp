#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "slim/clique.hpp"
#include "slim/graff.hpp"
#include "test_util.hpp"

using namespace slim;
using test::Rng;

namespace {

PointNormalLine transformed_line(const Pose& T, const PointNormalLine& l) {
  const Vec3 n = T.rotation * l.n;
  const Vec3 q = T.act(l.q);
  return {n, q - n.dot(q) * n};
}

NormalDistancePlane transformed_plane(const Pose& T, const NormalDistancePlane& s) {
  const Vec3 n = T.rotation * s.n;
  // a point on the plane: -d * n_old; transform, re-derive d
  const Vec3 p = T.act(-s.d * s.n);
  return {n, -n.dot(p)};
}

/// Slow maximal-clique enumeration (Bron-Kerbosch without pivoting).
void bk(const AdjacencyGraph& g, std::vector<int>& R, std::vector<int>& P, std::vector<int>& X,
        size_t& best) {
  if (P.empty() && X.empty()) {
    best = std::max(best, R.size());
    return;
  }
  auto Pcopy = P;
  for (int v : Pcopy) {
    std::vector<int> P2, X2;
    for (int u : P)
      if (g.has_edge(u, v)) P2.push_back(u);
    for (int u : X)
      if (g.has_edge(u, v)) X2.push_back(u);
    R.push_back(v);
    bk(g, R, P2, X2, best);
    R.pop_back();
    P.erase(std::find(P.begin(), P.end(), v));
    X.push_back(v);
  }
}

size_t brute_force_max_clique(const AdjacencyGraph& g) {
  std::vector<int> R, P, X;
  for (int i = 0; i < g.size(); ++i) P.push_back(i);
  size_t best = 0;
  bk(g, R, P, X, best);
  return best;
}

}  // namespace

TEST_CASE("graff coordinates") {
  SUBCASE("z axis through the origin") {
    const auto g = graff_from_line({Vec3(0, 0, 1), Vec3(0, 0, 0)});
    MatX expected(4, 2);
    expected << 0, 0, 0, 0, 1, 0, 0, 1;
    CHECK((g.Y - expected).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("plane z=2") {
    // z = 2 plane: n = (0,0,1), d = -2, displacement b = (0,0,2)
    const auto g = graff_from_plane({Vec3(0, 0, 1), -2});
    const Vec4 last = g.Y.col(2);
    CHECK((last - Vec4(0, 0, 2, 1) / std::sqrt(5.0)).norm() < 1e-12);
  }
  SUBCASE("columns orthonormal") {
    Rng rng(3);
    for (int i = 0; i < 300; ++i) {
      const auto gl = graff_from_line(line_to_point_direction(test::random_line(rng)));
      CHECK((gl.Y.transpose() * gl.Y - MatX::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
      const auto gp = graff_from_plane(plane_to_normal_distance(test::random_plane(rng)));
      CHECK((gp.Y.transpose() * gp.Y - MatX::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("graff distance") {
  Rng rng(7);
  SUBCASE("identical entities have zero distance") {
    for (int i = 0; i < 100; ++i) {
      const auto l = line_to_point_direction(test::random_line(rng));
      CHECK(graff_distance(graff_from_line(l), graff_from_line(l)) < 1e-9);
      const auto p = plane_to_normal_distance(test::random_plane(rng));
      CHECK(graff_distance(graff_from_plane(p), graff_from_plane(p)) < 1e-9);
    }
  }
  SUBCASE("symmetric and nonnegative") {
    for (int i = 0; i < 200; ++i) {
      const auto a = graff_from_line(line_to_point_direction(test::random_line(rng)));
      const auto b = graff_from_line(line_to_point_direction(test::random_line(rng)));
      const double dab = graff_distance(a, b);
      const double dba = graff_distance(b, a);
      CHECK(dab >= 0);
      CHECK(dab == doctest::Approx(dba).epsilon(1e-9));
    }
  }
  SUBCASE("invariant under a common rigid transform") {
    for (int i = 0; i < 500; ++i) {
      const Pose T = test::random_pose(rng, 30.0);
      const auto l1 = line_to_point_direction(test::random_line(rng));
      const auto l2 = line_to_point_direction(test::random_line(rng));
      const double d0 = graff_distance(graff_from_line(l1), graff_from_line(l2));
      const double d1 = graff_distance(graff_from_line(transformed_line(T, l1)),
                                       graff_from_line(transformed_line(T, l2)));
      CHECK(std::abs(d0 - d1) < 1e-8);

      const auto s1 = plane_to_normal_distance(test::random_plane(rng));
      const auto s2 = plane_to_normal_distance(test::random_plane(rng));
      const double e0 = graff_distance(graff_from_plane(s1), graff_from_plane(s2));
      const double e1 = graff_distance(graff_from_plane(transformed_plane(T, s1)),
                                       graff_from_plane(transformed_plane(T, s2)));
      CHECK(std::abs(e0 - e1) < 1e-8);
    }
  }
  SUBCASE("strictly increasing with parallel line separation") {
    double prev = -1;
    for (double t : {0.1, 0.5, 1.0, 2.0, 5.0, 20.0}) {
      const auto a = graff_from_line({Vec3(0, 0, 1), Vec3(0, 0, 0)});
      const auto b = graff_from_line({Vec3(0, 0, 1), Vec3(t, 0, 0)});
      const double d = graff_distance(a, b);
      CHECK(d > prev);
      prev = d;
    }
  }
  SUBCASE("dimension mismatch") {
    const auto l = graff_from_line({Vec3(0, 0, 1), Vec3::Zero()});
    const auto p = graff_from_plane({Vec3(0, 0, 1), 0});
    CHECK_THROWS_AS((void)graff_distance(l, p), Error);
    CHECK(affine_subspace_distance(l, p) >= 0);  // generalized form allowed
  }
}

TEST_CASE("maximum clique") {
  SUBCASE("complete graph") {
    AdjacencyGraph g(5);
    for (int i = 0; i < 5; ++i)
      for (int j = i + 1; j < 5; ++j) g.add_edge(i, j);
    CHECK(max_clique(g).size() == 5);
  }
  SUBCASE("two disjoint triangles") {
    AdjacencyGraph g(6);
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    g.add_edge(0, 2);
    g.add_edge(3, 4);
    g.add_edge(4, 5);
    g.add_edge(3, 5);
    const auto c = max_clique(g);
    CHECK(c.size() == 3);
    for (size_t i = 0; i + 1 < c.size(); ++i)
      for (size_t j = i + 1; j < c.size(); ++j) CHECK(g.has_edge(c[i], c[j]));
  }
  SUBCASE("empty graph") {
    AdjacencyGraph g(0);
    CHECK(max_clique(g).empty());
  }
  SUBCASE("matches brute force on random graphs") {
    Rng rng(11);
    for (int t = 0; t < 60; ++t) {
      const int n = 8 + int(test::uniform(rng, 0, 23));
      AdjacencyGraph g(n);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (test::uniform(rng, 0, 1) < 0.3) g.add_edge(i, j);
      const auto c = max_clique(g);
      for (size_t i = 0; i + 1 < c.size(); ++i)
        for (size_t j = i + 1; j < c.size(); ++j) CHECK(g.has_edge(c[i], c[j]));
      CHECK(c.size() == brute_force_max_clique(g));
    }
  }
}
