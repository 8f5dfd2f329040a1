#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "sdyn/meshkit/tet_mesh.hpp"

namespace sdyn {

inline constexpr double kDefaultPoisson = 0.45;
inline constexpr double kDefaultRayleighAlpha = 0.1;
inline constexpr double kDefaultRayleighBeta = 0.01;
inline constexpr double kDefaultDensity = 100.0;

// Per-vertex lumped mass m_i and Young's modulus k_i, plus global Poisson
// ratio and Rayleigh damping coefficients (D = alpha M + beta K).
struct MaterialField {
  std::vector<double> mass;
  std::vector<double> stiffness;
  double poisson = kDefaultPoisson;
  double rayleigh_alpha = kDefaultRayleighAlpha;
  double rayleigh_beta = kDefaultRayleighBeta;

  // Throws Error(LengthMismatch) or Error(InvalidArgument).
  void validate(std::size_t vertex_count) const;
};

// Each vertex receives a quarter of the volume of every incident tet.
std::vector<double> lumped_mass(const TetMesh& mesh, double density);

MaterialField homogeneous_material(const TetMesh& mesh, double stiffness,
                                   double density = kDefaultDensity);

struct LameParameters {
  double mu = 0.0;
  double lambda = 0.0;
};

LameParameters lame_from_young(double young, double poisson);

// Overwrites stiffness and / or mass of every vertex whose rest position
// satisfies `region`; returns the number of painted vertices.
std::size_t paint_material(MaterialField& material, const TetMesh& mesh,
                           const std::function<bool(const Vec3&)>& region,
                           std::optional<double> stiffness, std::optional<double> mass = std::nullopt);

// {"poisson", "rayleigh_alpha", "rayleigh_beta", "mass": [...], "stiffness": [...]}
void write_material_json(const std::filesystem::path& path, const MaterialField& material);
MaterialField read_material_json(const std::filesystem::path& path);

}  // namespace sdyn
