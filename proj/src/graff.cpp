#include "slim/graff.hpp"

#include <cmath>

#include "slim/error.hpp"

namespace slim {

namespace {

MatX embed(const Mat3& A, int k, const Vec3& b) {
  const double s = 1.0 / std::sqrt(b.squaredNorm() + 1.0);
  MatX Y = MatX::Zero(4, k + 1);
  Y.topLeftCorner(3, k) = A.leftCols(k);
  Y.topRightCorner(3, 1) = b * s;
  Y(3, k) = s;
  return Y;
}

/// Component of v orthogonal to the union of the two direction spans.
Vec3 joint_orthogonal(const Vec3& v, const GraffCoordinate& y1, const GraffCoordinate& y2) {
  MatX B(3, y1.k + y2.k);
  B.leftCols(y1.k) = y1.A.leftCols(y1.k);
  B.rightCols(y2.k) = y2.A.leftCols(y2.k);
  Eigen::JacobiSVD<MatX> svd(B, Eigen::ComputeThinU);
  Vec3 r = v;
  for (int i = 0; i < svd.nonzeroSingularValues(); ++i) {
    if (svd.singularValues()[i] < 1e-9) break;
    const Vec3 u = svd.matrixU().col(i);
    r -= u.dot(v) * u;
  }
  return r;
}

double anchored_distance(const GraffCoordinate& y1, const GraffCoordinate& y2) {
  const Vec3 b02 = joint_orthogonal(y2.b - y1.b, y1, y2);
  const double s = 1.0 / std::sqrt(b02.squaredNorm() + 1.0);
  MatX Y1p = MatX::Zero(4, y1.k + 1);
  Y1p.topLeftCorner(3, y1.k) = y1.A.leftCols(y1.k);
  Y1p(3, y1.k) = 1.0;
  MatX Y2p = MatX::Zero(4, y2.k + 1);
  Y2p.topLeftCorner(3, y2.k) = y2.A.leftCols(y2.k);
  Y2p.topRightCorner(3, 1) = b02 * s;
  Y2p(3, y2.k) = s;

  Eigen::JacobiSVD<MatX> svd(Y1p.transpose() * Y2p);
  double d = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    const double sigma = std::clamp(svd.singularValues()[i], 0.0, 1.0);
    const double a = std::acos(sigma);
    d += a * a;
  }
  return d;
}

}  // namespace

GraffCoordinate graff_from_line(const PointNormalLine& line) {
  GraffCoordinate g;
  g.k = 1;
  const Vec3 n = line.n.normalized();
  g.A.setZero();
  g.A.col(0) = n;
  g.b = line.q - n.dot(line.q) * n;
  g.Y = embed(g.A, 1, g.b);
  return g;
}

GraffCoordinate graff_from_plane(const NormalDistancePlane& plane) {
  GraffCoordinate g;
  g.k = 2;
  const Vec3 n = plane.n.normalized();
  // Deterministic in-plane basis: cross with the axis least aligned with n.
  int k = 0;
  n.cwiseAbs().minCoeff(&k);
  const Vec3 e = Vec3::Unit(k);
  const Vec3 u = n.cross(e).normalized();
  const Vec3 v = n.cross(u);
  g.A.setZero();
  g.A.col(0) = u;
  g.A.col(1) = v;
  g.b = -plane.d * n;
  g.Y = embed(g.A, 2, g.b);
  return g;
}

double graff_distance(const GraffCoordinate& y1, const GraffCoordinate& y2) {
  if (y1.k != y2.k)
    raise(ErrorCode::DimensionMismatch, "graff_distance requires equal subspace dimensions");
  return anchored_distance(y1, y2);
}

double affine_subspace_distance(const GraffCoordinate& y1, const GraffCoordinate& y2) {
  return anchored_distance(y1, y2);
}

}  // namespace slim
