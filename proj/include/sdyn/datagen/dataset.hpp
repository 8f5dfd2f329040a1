#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sdyn/datagen/motion.hpp"
#include "sdyn/fem/material.hpp"
#include "sdyn/integrators/integrators.hpp"
#include "sdyn/meshkit/voxelize.hpp"

namespace sdyn {

// Homogeneous material: Young's modulus and density (mass is lumped from it).
struct MaterialSetting {
  double stiffness = 1e4;
  double density = kDefaultDensity;
};

std::vector<MaterialSetting> default_material_settings();

struct DatasetSpec {
  std::size_t sequence_count = 8;
  std::size_t frames_per_sequence = 60;
  std::vector<MaterialSetting> materials = default_material_settings();
  std::uint64_t rng_seed = 1;
  Primitive primitive = Sphere{1.0};
  double voxel_size = 0.2;
  // Constrained core; the default is a vertical column through the center.
  Aabb core_box{Vec3(-0.3, -0.3, -1e9), Vec3(0.3, 0.3, 1e9)};
  MotionLimits limits;
  double dt = kDefaultDt;
  double poisson = kDefaultPoisson;
  double rayleigh_alpha = kDefaultRayleighAlpha;
  double rayleigh_beta = kDefaultRayleighBeta;

  // Throws Error(InvalidArgument).
  void validate() const;
  std::size_t entry_count() const { return sequence_count * materials.size(); }
  std::size_t total_frames() const { return entry_count() * frames_per_sequence; }
};

struct DatasetEntry {
  std::string id;  // subdirectory name
  std::size_t sequence = 0;
  std::size_t material = 0;
  std::uint64_t seed = 0;          // seed of the script that was kept
  std::size_t regenerations = 0;   // divergent attempts before it
};

struct GenerateOptions {
  std::size_t threads = 1;
  std::function<void(const std::string&)> log;  // optional progress sink
};

// Writes mesh.pdtm, constraints.json, manifest.json and one directory per
// (sequence, material) pair holding ref.pdsq, gt.pdsq, material.json and
// constraints.json. A script whose implicit solve diverges is replaced with a
// freshly seeded one; five consecutive failures throw Error(GenerationFailed).
std::vector<DatasetEntry> generate_dataset(const DatasetSpec& spec,
                                           const std::filesystem::path& out_dir,
                                           const GenerateOptions& options = {});

// Builds the simulation mesh and constraints a spec describes.
TetMesh dataset_mesh(const DatasetSpec& spec);
ConstraintSet dataset_constraints(const DatasetSpec& spec, const TetMesh& mesh);

// Motion script seed for (sequence, attempt).
std::uint64_t sequence_seed(std::uint64_t base_seed, std::size_t sequence, std::size_t attempt);

// A generated dataset read back from disk.
struct Dataset {
  std::filesystem::path root;
  TetMesh mesh;
  ConstraintSet constraints;
  double voxel_size = 0.0;
  double dt = kDefaultDt;
  std::vector<DatasetEntry> entries;

  std::filesystem::path entry_dir(std::size_t i) const { return root / entries[i].id; }
  // Sequence indices in manifest order, each listed once.
  std::vector<std::size_t> sequences() const;
};

// Throws Error(Io) or Error(EmptyDataset).
Dataset load_dataset(const std::filesystem::path& root);

ReferenceMotion reference_from_sequence(const SimSequence& seq);

}  // namespace sdyn
