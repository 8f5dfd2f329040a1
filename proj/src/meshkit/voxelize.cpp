#include "sdyn/meshkit/voxelize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

#include "sdyn/error.hpp"

namespace sdyn {

namespace {

using Key = std::array<int, 3>;

// The six tets of a unit cube sharing the corner-0 to corner-7 diagonal, one
// per monotone lattice path 0 -> e_a -> e_a + e_b -> 7. Corner c has offset
// (c & 1, (c >> 1) & 1, (c >> 2) & 1).
constexpr std::array<std::array<int, 4>, 6> kCubeTets = {{
    {0, 1, 3, 7},  // x, y, z
    {0, 1, 5, 7},  // x, z, y
    {0, 2, 3, 7},  // y, x, z
    {0, 2, 6, 7},  // y, z, x
    {0, 4, 5, 7},  // z, x, y
    {0, 4, 6, 7},  // z, y, x
}};

Key corner_offset(int corner) { return {corner & 1, (corner >> 1) & 1, (corner >> 2) & 1}; }

std::vector<Key> largest_component(const std::set<Key>& voxels) {
  std::set<Key> unvisited = voxels;
  std::vector<Key> best;
  // Iterating in key order keeps tie-breaking deterministic.
  for (const Key& seed : voxels) {
    if (!unvisited.count(seed)) continue;
    std::vector<Key> component;
    std::deque<Key> queue{seed};
    unvisited.erase(seed);
    while (!queue.empty()) {
      Key v = queue.front();
      queue.pop_front();
      component.push_back(v);
      for (int axis = 0; axis < 3; ++axis) {
        for (int step : {-1, 1}) {
          Key w = v;
          w[axis] += step;
          if (auto it = unvisited.find(w); it != unvisited.end()) {
            unvisited.erase(it);
            queue.push_back(w);
          }
        }
      }
    }
    if (component.size() > best.size()) best = std::move(component);
  }
  std::sort(best.begin(), best.end());
  return best;
}

}  // namespace

bool primitive_contains(const Primitive& shape, const Vec3& p) {
  return std::visit(
      [&](const auto& s) -> bool {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Sphere>) {
          return p.squaredNorm() < s.radius * s.radius;
        } else if constexpr (std::is_same_v<S, Ellipsoid>) {
          return p.cwiseQuotient(s.semi_axes).squaredNorm() < 1.0;
        } else {
          return (p.cwiseAbs().array() < 0.5 * s.extents.array()).all();
        }
      },
      shape);
}

Aabb primitive_bounds(const Primitive& shape) {
  Vec3 half = std::visit(
      [](const auto& s) -> Vec3 {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Sphere>) {
          return Vec3::Constant(s.radius);
        } else if constexpr (std::is_same_v<S, Ellipsoid>) {
          return s.semi_axes;
        } else {
          return 0.5 * s.extents;
        }
      },
      shape);
  return {-half, half};
}

TetMesh voxelize(const std::function<bool(const Vec3&)>& inside, const Aabb& bounds,
                 double voxel_size) {
  if (!(voxel_size > 0.0)) throw Error(Errc::InvalidArgument, "voxel_size must be positive");
  const double h = voxel_size;
  Key lo, hi;
  for (int a = 0; a < 3; ++a) {
    lo[a] = static_cast<int>(std::floor(bounds.lo[a] / h)) - 1;
    hi[a] = static_cast<int>(std::ceil(bounds.hi[a] / h)) + 1;
  }

  std::set<Key> voxels;
  for (int k = lo[2]; k <= hi[2]; ++k) {
    for (int j = lo[1]; j <= hi[1]; ++j) {
      for (int i = lo[0]; i <= hi[0]; ++i) {
        if (inside(Vec3(i * h, j * h, k * h))) voxels.insert({i, j, k});
      }
    }
  }
  if (voxels.empty()) throw Error(Errc::EmptyMesh, "no voxel center inside the shape");
  const std::vector<Key> cells = largest_component(voxels);

  // Corner (i + dx, j + dy, k + dz) of voxel (i, j, k) sits at
  // (i + dx - 1/2, ...) * h; vertices are deduplicated on these integer keys.
  std::map<Key, std::uint32_t> vertex_ids;
  for (const Key& c : cells) {
    for (int corner = 0; corner < 8; ++corner) {
      Key off = corner_offset(corner);
      vertex_ids.emplace(Key{c[0] + off[0], c[1] + off[1], c[2] + off[2]}, 0);
    }
  }
  Positions vertices;
  vertices.reserve(vertex_ids.size());
  for (auto& [key, id] : vertex_ids) {
    id = static_cast<std::uint32_t>(vertices.size());
    vertices.emplace_back((key[0] - 0.5) * h, (key[1] - 0.5) * h, (key[2] - 0.5) * h);
  }

  std::vector<Tet> tets;
  tets.reserve(cells.size() * 6);
  for (const Key& c : cells) {
    std::array<std::uint32_t, 8> corner_ids;
    for (int corner = 0; corner < 8; ++corner) {
      Key off = corner_offset(corner);
      corner_ids[corner] = vertex_ids.at({c[0] + off[0], c[1] + off[1], c[2] + off[2]});
    }
    for (const auto& local : kCubeTets) {
      Tet tet{corner_ids[local[0]], corner_ids[local[1]], corner_ids[local[2]],
              corner_ids[local[3]]};
      if (tet_signed_volume(vertices[tet[0]], vertices[tet[1]], vertices[tet[2]],
                            vertices[tet[3]]) < 0.0) {
        std::swap(tet[2], tet[3]);
      }
      tets.push_back(tet);
    }
  }
  return TetMesh(std::move(vertices), std::move(tets));
}

TetMesh voxelize_primitive(const Primitive& shape, double voxel_size) {
  const bool degenerate = std::visit(
      [](const auto& s) -> bool {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Sphere>) {
          return !(s.radius > 0.0);
        } else if constexpr (std::is_same_v<S, Ellipsoid>) {
          return !(s.semi_axes.minCoeff() > 0.0);
        } else {
          return !(s.extents.minCoeff() > 0.0);
        }
      },
      shape);
  if (degenerate) throw Error(Errc::InvalidArgument, "degenerate primitive");
  return voxelize([&](const Vec3& p) { return primitive_contains(shape, p); },
                  primitive_bounds(shape), voxel_size);
}

TetMesh voxelize_surface(const SurfaceMesh& surface, double voxel_size) {
  if (surface.vertices.empty() || surface.faces.empty()) {
    throw Error(Errc::EmptyMesh, "surface mesh is empty");
  }
  Aabb box{surface.vertices.front(), surface.vertices.front()};
  for (const Vec3& v : surface.vertices) {
    box.lo = box.lo.cwiseMin(v);
    box.hi = box.hi.cwiseMax(v);
  }
  return voxelize([&](const Vec3& p) { return winding_number(surface, p) > 0.5; }, box,
                  voxel_size);
}

}  // namespace sdyn
