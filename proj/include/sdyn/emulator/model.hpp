#pragma once

#include <filesystem>
#include <optional>

#include "sdyn/emulator/features.hpp"
#include "sdyn/neuralnet/checkpoint.hpp"
#include "sdyn/neuralnet/mlp.hpp"

namespace sdyn {

struct EmulatorConfig {
  bool use_reference_features = true;
  double dt = 1.0 / 24.0;
  double voxel_size = 0.2;
  FeatureScales scales;
  std::size_t inertia_width = 64;
  std::size_t internal_width = 128;
  std::size_t head_width = 192;
  std::size_t hidden_layers = 4;

  FeatureConfig features() const { return {use_reference_features, scales}; }
};

// Parameter count the paper reports for its default network.
inline constexpr std::size_t kPaperParameterCount = 237571;

// f_inertia: 21 -> 64 (x4 hidden) -> 64
// f_internal: 43 -> 128 (x4 hidden) -> 128
// g_head: (64 + 128) -> 192 (x4 hidden) -> 3
struct EmulatorModel {
  EmulatorConfig config;
  Mlp inertia;
  Mlp internal;
  Mlp head;

  // Zero parameters.
  explicit EmulatorModel(const EmulatorConfig& config = {});
  // Xavier initialization from `seed`.
  static EmulatorModel initialized(const EmulatorConfig& config, std::uint64_t seed);

  static std::vector<std::vector<std::size_t>> architecture(const EmulatorConfig& config);

  std::size_t parameter_count() const;
  // Concatenation inertia | internal | head.
  Eigen::VectorXd flat_parameters() const;
  void set_flat_parameters(const Eigen::VectorXd& params);
};

// Predicted u_i(t + 1) - u_i(t). Throws Error(ShapeMismatch) when the patch
// widths do not match the model.
Vec3 predict_vertex(const EmulatorModel& model, const PatchFeatures& patch);

// Writes a PDNN checkpoint whose metadata records the feature layout, the
// config and the parameter count, merged with `extra`.
void save_emulator(const std::filesystem::path& path, const EmulatorModel& model,
                   const std::optional<AdamState>& optimizer = std::nullopt,
                   const nlohmann::json& extra = nlohmann::json::object());

struct LoadedEmulator {
  EmulatorModel model;
  std::optional<AdamState> optimizer;
  nlohmann::json metadata;
};

// Throws Error(VersionMismatch) when the feature layout differs and
// Error(ShapeMismatch) when the stored networks do not match the config.
LoadedEmulator load_emulator(const std::filesystem::path& path);

}  // namespace sdyn
