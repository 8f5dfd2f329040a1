#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sdyn/types.hpp"

namespace sdyn {

// Uniform tetrahedral simulation mesh. Immutable after construction.
//
// Tets are stored with strictly positive signed volume
// det[x1 - x0, x2 - x0, x3 - x0] / 6. neighbors(i) is the sorted 1-ring of
// vertex i: every vertex sharing a tet with i, excluding i itself.
class TetMesh {
 public:
  TetMesh() = default;

  // Validates indices and orientation; throws Error(InvalidArgument) on an
  // out-of-range or repeated index and Error(DegenerateTet) on a tet with
  // non-positive volume.
  TetMesh(Positions vertices, std::vector<Tet> tets);

  std::size_t size() const { return vertices_.size(); }
  std::size_t tet_count() const { return tets_.size(); }

  const Positions& vertices() const { return vertices_; }
  const std::vector<Tet>& tets() const { return tets_; }
  const std::vector<std::uint32_t>& neighbors(std::size_t i) const { return neighbors_[i]; }
  const std::vector<std::vector<std::uint32_t>>& all_neighbors() const { return neighbors_; }

  double min_edge() const { return min_edge_; }
  double max_edge() const { return max_edge_; }
  Aabb bounds() const;

  double signed_volume(std::size_t tet) const;

 private:
  Positions vertices_;
  std::vector<Tet> tets_;
  std::vector<std::vector<std::uint32_t>> neighbors_;
  double min_edge_ = 0.0;
  double max_edge_ = 0.0;
};

double tet_signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

}  // namespace sdyn
