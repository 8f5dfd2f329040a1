#pragma once

#include <array>
#include <optional>
#include <vector>

#include "sdyn/meshkit/surface.hpp"
#include "sdyn/meshkit/tet_mesh.hpp"

namespace sdyn {

struct SurfaceEmbedding {
  Positions surface_vertices;
  std::vector<Triangle> faces;
  std::vector<std::uint32_t> host_tet;
  std::vector<Tet> host_vertices;  // vertex ids of host_tet, so deformation needs no mesh
  std::vector<std::array<double, 4>> bary_weights;
  std::size_t mesh_vertex_count = 0;
};

std::array<double, 4> barycentric(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                                  const Vec3& d);

double point_tet_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                          const Vec3& d);

// Host tet = smallest clamped barycentric violation max(0, -min w) among tets
// within `tolerance` of the vertex (ties go to the lower tet index).
// tolerance defaults to half the mesh's shortest edge. Throws
// Error(UnembeddableVertex, index) for a vertex farther than that from every tet.
SurfaceEmbedding embed_surface(const SurfaceMesh& surface, const TetMesh& mesh,
                               std::optional<double> tolerance = std::nullopt);

// Throws Error(LengthMismatch) unless dynamic_positions covers the host mesh.
Positions deform_surface(const SurfaceEmbedding& embedding, const Positions& dynamic_positions);

}  // namespace sdyn
