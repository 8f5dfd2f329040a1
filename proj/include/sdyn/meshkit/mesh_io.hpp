#pragma once

#include <filesystem>

#include "sdyn/meshkit/constraints.hpp"
#include "sdyn/meshkit/surface.hpp"
#include "sdyn/meshkit/tet_mesh.hpp"

namespace sdyn {

// Binary "PDTM" v1, little-endian:
//   char[4] magic, u32 version, u32 vertex_count, u32 tet_count,
//   f64 positions[3 * vertex_count], u32 indices[4 * tet_count]
void write_pdtm(const std::filesystem::path& path, const TetMesh& mesh);
TetMesh read_pdtm(const std::filesystem::path& path);

// Text variant:
//   pdtm-text 1
//   <vertex_count> <tet_count>
//   v x y z      (vertex_count lines)
//   t a b c d    (tet_count lines)
void write_tet_text(const std::filesystem::path& path, const TetMesh& mesh);
TetMesh read_tet_text(const std::filesystem::path& path);

// Dispatches on the leading magic bytes.
TetMesh read_tet_mesh(const std::filesystem::path& path);

// Wavefront OBJ subset: "v" and triangular "f" records; everything else is
// skipped. Face tokens may carry /vt/vn suffixes and negative indices.
SurfaceMesh read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const Positions& vertices,
               const std::vector<Triangle>& faces);

// {"vertex_count": n, "constrained": [sorted indices]}
void write_constraints_json(const std::filesystem::path& path, const ConstraintSet& constraints);
ConstraintSet read_constraints_json(const std::filesystem::path& path);

}  // namespace sdyn
