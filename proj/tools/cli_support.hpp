#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sdyn/datagen/motion.hpp"
#include "sdyn/fem/material.hpp"
#include "sdyn/meshkit/voxelize.hpp"

namespace sdyn::cli {

// Comma-separated numbers, e.g. "0.2,0.3,0.4".
std::vector<double> parse_numbers(const std::string& text, std::size_t expected = 0);
Vec3 parse_vec3(const std::string& text);
Aabb parse_box(const std::string& text);  // x0,y0,z0,x1,y1,z1

// Mesh-relative options shared by simulate, emulate and eval.
struct MaterialOptions {
  std::string material_path;
  double stiffness = 1e4;
  double density = kDefaultDensity;
  std::vector<std::string> paint;  // "stiffness:box=...:value=..." rules

  void add(CLI::App& app);
  MaterialField resolve(const TetMesh& mesh) const;
};

struct MotionOptions {
  std::string ref_path;
  std::uint64_t motion_seed = 1;
  std::size_t frames = 120;
  double dt = 1.0 / 24.0;
  double max_accel = MotionLimits{}.max_accel;
  double max_angular_speed = MotionLimits{}.max_angular_speed;

  void add(CLI::App& app);
  ReferenceMotion resolve(const TetMesh& mesh, const ConstraintSet& constraints) const;
};

// Applies one paint rule. Syntax: "<stiffness|mass>:<region>:value=<v>" with
// region "box=x0,y0,z0,x1,y1,z1" or "sphere=cx,cy,cz,r". The shorter
// "region=...:k=<v>" form paints stiffness over a box.
std::size_t apply_paint(MaterialField& material, const TetMesh& mesh, const std::string& rule);

struct TimingSummary {
  std::size_t frames = 0;
  double mean_seconds = 0.0;
  double stdev_seconds = 0.0;
};
TimingSummary summarize_timing(const std::vector<double>& seconds);
// Prints "timing <label>: frames=.. mean_ms=.. stdev_ms=.." and optionally
// writes the same numbers as JSON.
void report_timing(const std::string& label, const TimingSummary& t,
                   const std::string& json_path);

// Sets the shown and echoed default to a round-trip exact rendering.
CLI::Option* precise_default(CLI::Option* opt, double value);

// Writes the global options and those of the selected subcommand as a config
// file that reproduces the run.
void write_config_echo(const CLI::App& app, const std::filesystem::path& path);

}  // namespace sdyn::cli
