#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sdyn/fem/material.hpp"
#include "sdyn/integrators/reference.hpp"
#include "sdyn/meshkit/constraints.hpp"
#include "sdyn/meshkit/tet_mesh.hpp"

namespace sdyn {

inline constexpr std::size_t kInertiaWidth = 21;
inline constexpr std::size_t kNeighborWidth = 43;
inline constexpr const char* kFeatureLayout = "patch-1ring-v1";

// Column layout of the center block (21 values, all positions relative to the
// center's reference position x_i(t)):
//   0-8   u(t), u(t-1), u(t-2)
//   9-17  x(t+1), x(t), x(t-1)
//   18-20 k, m, k/m
// A neighbor input (43 values) is the center block followed by the neighbor's
// 18 position values in the same order and frame, its k, m, k/m and its
// constraint flag.
namespace feature {
inline constexpr std::size_t kDynamic = 0;
inline constexpr std::size_t kReference = 9;
inline constexpr std::size_t kMaterial = 18;
inline constexpr std::size_t kNeighborDynamic = 21;
inline constexpr std::size_t kNeighborReference = 30;
inline constexpr std::size_t kNeighborMaterial = 39;
inline constexpr std::size_t kNeighborConstraint = 42;
}  // namespace feature

// Material features are divided by these so they sit near unit range.
struct FeatureScales {
  double stiffness = 1e5;
  double mass = 0.8;  // lumped interior mass at density 100, voxel 0.2
};

struct FeatureConfig {
  bool use_reference_features = true;  // false zeroes every x(.) slot
  FeatureScales scales;
};

// Positions that feed one prediction of frame t + 1.
struct FrameWindow {
  std::array<const Positions*, 3> dynamic{};    // u(t), u(t-1), u(t-2)
  std::array<const Positions*, 3> reference{};  // x(t+1), x(t), x(t-1)
};

struct PatchFeatures {
  Eigen::VectorXd inertia_input;    // kInertiaWidth
  Eigen::MatrixXd neighbor_inputs;  // kNeighborWidth x neighbor count
  std::uint32_t center_index = 0;
  std::vector<std::uint32_t> neighbor_indices;  // ascending
};

// Writes the 21 center values for vertex i.
template <typename S>
void write_center_features(const FrameWindow& w, const MaterialField& material, std::uint32_t i,
                           const FeatureConfig& config, S* out);

// Writes the 43 values for the pair (i, j); `center` holds i's 21 values.
template <typename S>
void write_neighbor_features(const FrameWindow& w, const MaterialField& material,
                             const ConstraintSet& constraints, std::uint32_t i, std::uint32_t j,
                             const FeatureConfig& config, const S* center, S* out);

// Throws Error(ConstrainedCenter) for a constrained i and Error(InvalidArgument)
// when t < 2 or t + 1 is past the reference.
PatchFeatures extract_patch_features(const TetMesh& mesh, const MaterialField& material,
                                     const ConstraintSet& constraints,
                                     const std::array<const Positions*, 3>& dynamic,
                                     const ReferenceMotion& ref, std::size_t t, std::uint32_t i,
                                     const FeatureConfig& config = {});

}  // namespace sdyn
