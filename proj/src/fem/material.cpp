#include "sdyn/fem/material.hpp"

#include <cmath>

#include "sdyn/error.hpp"

namespace sdyn {

void MaterialField::validate(std::size_t vertex_count) const {
  if (mass.size() != vertex_count || stiffness.size() != vertex_count) {
    throw Error(Errc::LengthMismatch, "material field does not match the vertex count");
  }
  for (std::size_t i = 0; i < vertex_count; ++i) {
    if (!(mass[i] > 0.0) || !std::isfinite(mass[i])) {
      throw Error(Errc::InvalidArgument, "mass must be positive", i);
    }
    if (!(stiffness[i] > 0.0) || !std::isfinite(stiffness[i])) {
      throw Error(Errc::InvalidArgument, "stiffness must be positive", i);
    }
  }
  if (!(poisson >= 0.0 && poisson < 0.5)) {
    throw Error(Errc::InvalidArgument, "Poisson ratio must lie in [0, 0.5)");
  }
  if (!(rayleigh_alpha >= 0.0) || !(rayleigh_beta >= 0.0)) {
    throw Error(Errc::InvalidArgument, "Rayleigh coefficients must be non-negative");
  }
}

std::vector<double> lumped_mass(const TetMesh& mesh, double density) {
  std::vector<double> mass(mesh.size(), 0.0);
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    const double quarter = 0.25 * density * mesh.signed_volume(t);
    for (std::uint32_t v : mesh.tets()[t]) mass[v] += quarter;
  }
  return mass;
}

MaterialField homogeneous_material(const TetMesh& mesh, double stiffness, double density) {
  MaterialField m;
  m.mass = lumped_mass(mesh, density);
  m.stiffness.assign(mesh.size(), stiffness);
  return m;
}

std::size_t paint_material(MaterialField& material, const TetMesh& mesh,
                           const std::function<bool(const Vec3&)>& region,
                           std::optional<double> stiffness, std::optional<double> mass) {
  material.validate(mesh.size());
  if ((stiffness && !(*stiffness > 0.0)) || (mass && !(*mass > 0.0))) {
    throw Error(Errc::InvalidArgument, "painted values must be positive");
  }
  std::size_t painted = 0;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    if (!region(mesh.vertices()[i])) continue;
    if (stiffness) material.stiffness[i] = *stiffness;
    if (mass) material.mass[i] = *mass;
    ++painted;
  }
  return painted;
}

LameParameters lame_from_young(double young, double poisson) {
  return {young / (2.0 * (1.0 + poisson)),
          young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson))};
}

}  // namespace sdyn
