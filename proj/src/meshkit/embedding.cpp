#include "sdyn/meshkit/embedding.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>

#include "sdyn/error.hpp"

namespace sdyn {

namespace {

// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection 5.1.5).
Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

// Uniform bucket grid over tet bounding boxes.
class TetGrid {
 public:
  TetGrid(const TetMesh& mesh, double cell) : cell_(cell) {
    const Aabb box = mesh.bounds();
    origin_ = box.lo;
    for (int a = 0; a < 3; ++a) {
      dims_[a] = std::max(1, static_cast<int>(std::ceil((box.hi[a] - box.lo[a]) / cell_)) + 1);
    }
    buckets_.resize(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2]);
    for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
      Vec3 lo = mesh.vertices()[mesh.tets()[t][0]], hi = lo;
      for (int k = 1; k < 4; ++k) {
        lo = lo.cwiseMin(mesh.vertices()[mesh.tets()[t][k]]);
        hi = hi.cwiseMax(mesh.vertices()[mesh.tets()[t][k]]);
      }
      visit(lo, hi, [&](std::vector<std::uint32_t>& bucket) {
        bucket.push_back(static_cast<std::uint32_t>(t));
      });
    }
  }

  std::vector<std::uint32_t> query(const Vec3& p, double radius) {
    std::vector<std::uint32_t> out;
    visit(p - Vec3::Constant(radius), p + Vec3::Constant(radius),
          [&](std::vector<std::uint32_t>& bucket) { out.insert(out.end(), bucket.begin(), bucket.end()); });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  int clamp_index(double x, int axis) const {
    int i = static_cast<int>(std::floor((x - origin_[axis]) / cell_));
    return std::clamp(i, 0, dims_[axis] - 1);
  }

  template <typename F>
  void visit(const Vec3& lo, const Vec3& hi, F&& f) {
    const int i0 = clamp_index(lo[0], 0), i1 = clamp_index(hi[0], 0);
    const int j0 = clamp_index(lo[1], 1), j1 = clamp_index(hi[1], 1);
    const int k0 = clamp_index(lo[2], 2), k1 = clamp_index(hi[2], 2);
    for (int k = k0; k <= k1; ++k)
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i)
          f(buckets_[(static_cast<std::size_t>(k) * dims_[1] + j) * dims_[0] + i]);
  }

  double cell_;
  Vec3 origin_;
  std::array<int, 3> dims_{};
  std::vector<std::vector<std::uint32_t>> buckets_;
};

}  // namespace

std::array<double, 4> barycentric(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                                  const Vec3& d) {
  Mat3 m;
  m.col(0) = b - a;
  m.col(1) = c - a;
  m.col(2) = d - a;
  const Vec3 w = m.partialPivLu().solve(p - a);
  return {1.0 - w.sum(), w[0], w[1], w[2]};
}

double point_tet_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                          const Vec3& d) {
  const auto w = barycentric(p, a, b, c, d);
  if (*std::min_element(w.begin(), w.end()) >= 0.0) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const std::array<std::array<const Vec3*, 3>, 4> faces = {{{&b, &c, &d}, {&a, &c, &d},
                                                            {&a, &b, &d}, {&a, &b, &c}}};
  for (const auto& f : faces) {
    best = std::min(best, (p - closest_on_triangle(p, *f[0], *f[1], *f[2])).norm());
  }
  return best;
}

SurfaceEmbedding embed_surface(const SurfaceMesh& surface, const TetMesh& mesh,
                               std::optional<double> tolerance) {
  const double tau = tolerance.value_or(0.5 * mesh.min_edge());
  TetGrid grid(mesh, mesh.max_edge());
  const auto& X = mesh.vertices();

  SurfaceEmbedding out;
  out.surface_vertices = surface.vertices;
  out.faces = surface.faces;
  out.host_tet.resize(surface.vertices.size());
  out.host_vertices.resize(surface.vertices.size());
  out.mesh_vertex_count = mesh.size();
  out.bary_weights.resize(surface.vertices.size());

  for (std::size_t v = 0; v < surface.vertices.size(); ++v) {
    const Vec3& p = surface.vertices[v];
    double best_violation = std::numeric_limits<double>::infinity();
    std::optional<std::uint32_t> best_tet;
    std::array<double, 4> best_w{};
    for (std::uint32_t t : grid.query(p, tau)) {
      const Tet& tet = mesh.tets()[t];
      const auto w = barycentric(p, X[tet[0]], X[tet[1]], X[tet[2]], X[tet[3]]);
      const double violation = std::max(0.0, -*std::min_element(w.begin(), w.end()));
      if (violation >= best_violation) continue;
      if (violation > 0.0 &&
          point_tet_distance(p, X[tet[0]], X[tet[1]], X[tet[2]], X[tet[3]]) > tau) {
        continue;
      }
      best_violation = violation;
      best_tet = t;
      best_w = w;
      if (violation == 0.0) break;
    }
    if (!best_tet) {
      throw Error(Errc::UnembeddableVertex, "surface vertex farther than tolerance from every tet",
                  v);
    }
    out.host_tet[v] = *best_tet;
    out.host_vertices[v] = mesh.tets()[*best_tet];
    out.bary_weights[v] = best_w;
  }
  return out;
}

Positions deform_surface(const SurfaceEmbedding& embedding, const Positions& dynamic_positions) {
  if (dynamic_positions.size() != embedding.mesh_vertex_count) {
    throw Error(Errc::LengthMismatch, "dynamic positions do not match the tet mesh");
  }
  Positions out(embedding.host_vertices.size());
  for (std::size_t v = 0; v < out.size(); ++v) {
    const Tet& tet = embedding.host_vertices[v];
    const auto& w = embedding.bary_weights[v];
    out[v] = w[0] * dynamic_positions[tet[0]] + w[1] * dynamic_positions[tet[1]] +
             w[2] * dynamic_positions[tet[2]] + w[3] * dynamic_positions[tet[3]];
  }
  return out;
}

}  // namespace sdyn
