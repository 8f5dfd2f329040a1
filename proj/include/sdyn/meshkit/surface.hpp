#pragma once

#include <vector>

#include "sdyn/types.hpp"

namespace sdyn {

struct SurfaceMesh {
  Positions vertices;
  std::vector<Triangle> faces;
};

// Uniformly scales and recenters so the bounding box fits a cube of side
// `box_size` centered at the origin (longest side equals box_size).
SurfaceMesh normalize_to_box(const SurfaceMesh& surface, double box_size = 5.0);

double winding_number(const SurfaceMesh& surface, const Vec3& p);

class TetMesh;
// Faces used by exactly one tet, oriented outward, over a compacted copy of
// the vertices they touch.
SurfaceMesh boundary_surface(const TetMesh& mesh);

}  // namespace sdyn
