#include "sdyn/meshkit/surface.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "sdyn/error.hpp"
#include "sdyn/meshkit/tet_mesh.hpp"

namespace sdyn {

SurfaceMesh normalize_to_box(const SurfaceMesh& surface, double box_size) {
  if (surface.vertices.empty()) throw Error(Errc::EmptyMesh, "surface mesh is empty");
  Vec3 lo = surface.vertices.front();
  Vec3 hi = lo;
  for (const Vec3& v : surface.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double extent = (hi - lo).maxCoeff();
  if (!(extent > 0.0)) throw Error(Errc::InvalidArgument, "surface has zero extent");
  const Vec3 center = 0.5 * (lo + hi);
  const double scale = box_size / extent;

  SurfaceMesh out = surface;
  for (Vec3& v : out.vertices) v = (v - center) * scale;
  return out;
}

// Sum of signed solid angles (Van Oosterom & Strackee) over 4*pi.
double winding_number(const SurfaceMesh& surface, const Vec3& p) {
  double total = 0.0;
  for (const Triangle& f : surface.faces) {
    const Vec3 a = surface.vertices[f[0]] - p;
    const Vec3 b = surface.vertices[f[1]] - p;
    const Vec3 c = surface.vertices[f[2]] - p;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double numerator = a.dot(b.cross(c));
    const double denominator = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    total += 2.0 * std::atan2(numerator, denominator);
  }
  return total / (4.0 * std::numbers::pi);
}

SurfaceMesh boundary_surface(const TetMesh& mesh) {
  std::map<std::array<std::uint32_t, 3>, std::pair<Triangle, int>> faces;
  for (const Tet& t : mesh.tets()) {
    const Triangle local[4] = {{t[1], t[2], t[3]}, {t[0], t[3], t[2]}, {t[0], t[1], t[3]}, {t[0], t[2], t[1]}};
    for (const Triangle& f : local) {
      std::array<std::uint32_t, 3> key = f;
      std::sort(key.begin(), key.end());
      auto [it, inserted] = faces.try_emplace(key, f, 0);
      ++it->second.second;
    }
  }
  SurfaceMesh out;
  std::vector<std::uint32_t> remap(mesh.size(), UINT32_MAX);
  for (const auto& [key, entry] : faces) {
    if (entry.second != 1) continue;
    Triangle tri;
    for (int k = 0; k < 3; ++k) {
      std::uint32_t& r = remap[entry.first[k]];
      if (r == UINT32_MAX) {
        r = static_cast<std::uint32_t>(out.vertices.size());
        out.vertices.push_back(mesh.vertices()[entry.first[k]]);
      }
      tri[k] = r;
    }
    out.faces.push_back(tri);
  }
  return out;
}

}  // namespace sdyn
