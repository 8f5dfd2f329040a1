#pragma once

#include <functional>
#include <variant>

#include "sdyn/meshkit/surface.hpp"
#include "sdyn/meshkit/tet_mesh.hpp"

namespace sdyn {

struct Sphere {
  double radius = 1.0;
};

struct Ellipsoid {
  Vec3 semi_axes = Vec3::Ones();
};

// Centered box; extents are full side lengths.
struct Box {
  Vec3 extents = Vec3::Ones();
};

using Primitive = std::variant<Sphere, Ellipsoid, Box>;

// Strict interior test shared by the voxelizer and its tests.
bool primitive_contains(const Primitive& shape, const Vec3& p);
Aabb primitive_bounds(const Primitive& shape);

// Voxel centers sit on the lattice i * voxel_size. Every voxel whose center
// satisfies `inside` is split into 6 tets around the (0,0,0)-(1,1,1) cube
// diagonal; only the largest face-connected voxel component is kept.
// Throws Error(EmptyMesh) when no voxel center is inside.
TetMesh voxelize(const std::function<bool(const Vec3&)>& inside, const Aabb& bounds,
                 double voxel_size);

TetMesh voxelize_primitive(const Primitive& shape, double voxel_size);

// Voxelizes the interior of a closed triangle mesh (generalized winding
// number > 0.5).
TetMesh voxelize_surface(const SurfaceMesh& surface, double voxel_size);

}  // namespace sdyn
