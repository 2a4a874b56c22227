#pragma once

#include <Eigen/Dense>

#include "slim/geometry.hpp"

namespace slim {

/// Graff coordinate of an affine subspace of R^3: the (n+1) x (k+1) matrix
///   [ A  b / sqrt(|b|^2 + 1) ]
///   [ 0  1 / sqrt(|b|^2 + 1) ]
/// with A an orthonormal basis of the direction(s) and b the orthogonal
/// displacement from the origin (b perpendicular to span(A)). k = 1 for
/// lines, k = 2 for planes.
struct GraffCoordinate {
  MatX Y;       // 4 x (k+1), orthonormal columns
  Mat3 A;       // direction basis in the first k columns (padded with zeros)
  Vec3 b;       // orthogonal displacement
  int k = 1;

  int subspace_dim() const { return k; }
};

GraffCoordinate graff_from_line(const PointNormalLine& line);
GraffCoordinate graff_from_plane(const NormalDistancePlane& plane);

/// Subspace distance sum_i arccos^2(sigma_i) over the singular values of
/// (Y1')^T Y2' after re-anchoring the pair at entity 1. The displacement of
/// the re-anchored second entity is taken orthogonal to both spans (the
/// minimum-distance separation), which keeps the metric invariant under a
/// common rigid transform; singular values are clamped to [0, 1].
double graff_distance(const GraffCoordinate& y1, const GraffCoordinate& y2);

/// Same metric without the equal-dimension requirement; used by the
/// compatibility test across line and plane correspondences.
double affine_subspace_distance(const GraffCoordinate& y1, const GraffCoordinate& y2);

}  // namespace slim
