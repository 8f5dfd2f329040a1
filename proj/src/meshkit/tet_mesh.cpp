#include "sdyn/meshkit/tet_mesh.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "sdyn/error.hpp"

namespace sdyn {

double tet_signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  Mat3 m;
  m.col(0) = b - a;
  m.col(1) = c - a;
  m.col(2) = d - a;
  return m.determinant() / 6.0;
}

TetMesh::TetMesh(Positions vertices, std::vector<Tet> tets)
    : vertices_(std::move(vertices)), tets_(std::move(tets)) {
  const auto n = vertices_.size();
  if (tets_.empty()) throw Error(Errc::EmptyMesh, "mesh has no tets");

  std::vector<std::vector<std::uint32_t>> adjacency(n);
  min_edge_ = std::numeric_limits<double>::infinity();
  max_edge_ = 0.0;
  for (std::size_t t = 0; t < tets_.size(); ++t) {
    const Tet& tet = tets_[t];
    for (int a = 0; a < 4; ++a) {
      if (tet[a] >= n) {
        throw Error(Errc::InvalidArgument, "tet index out of range", t);
      }
      for (int b = 0; b < a; ++b) {
        if (tet[a] == tet[b]) throw Error(Errc::InvalidArgument, "repeated tet index", t);
      }
    }
    if (!(signed_volume(t) > 0.0)) {
      throw Error(Errc::DegenerateTet, "non-positive signed volume", t);
    }
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        if (a != b) adjacency[tet[a]].push_back(tet[b]);
      }
      for (int b = a + 1; b < 4; ++b) {
        const double len = (vertices_[tet[a]] - vertices_[tet[b]]).norm();
        min_edge_ = std::min(min_edge_, len);
        max_edge_ = std::max(max_edge_, len);
      }
    }
  }
  for (auto& ring : adjacency) {
    std::sort(ring.begin(), ring.end());
    ring.erase(std::unique(ring.begin(), ring.end()), ring.end());
  }
  neighbors_ = std::move(adjacency);
}

double TetMesh::signed_volume(std::size_t tet) const {
  const Tet& t = tets_[tet];
  return tet_signed_volume(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]], vertices_[t[3]]);
}

Aabb TetMesh::bounds() const {
  Aabb box{Vec3::Constant(std::numeric_limits<double>::infinity()),
           Vec3::Constant(-std::numeric_limits<double>::infinity())};
  for (const Vec3& v : vertices_) {
    box.lo = box.lo.cwiseMin(v);
    box.hi = box.hi.cwiseMax(v);
  }
  return box;
}

}  // namespace sdyn
