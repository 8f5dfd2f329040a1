#include "cli_support.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "sdyn/error.hpp"
#include "sdyn/integrators/sim_sequence.hpp"

namespace sdyn::cli {

std::vector<double> parse_numbers(const std::string& text, std::size_t expected) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw CLI::ValidationError("expected a number, got '" + item + "'");
    }
    out.push_back(v);
  }
  if (expected != 0 && out.size() != expected) {
    throw CLI::ValidationError("expected " + std::to_string(expected) + " comma-separated numbers in '" +
                               text + "'");
  }
  return out;
}

Vec3 parse_vec3(const std::string& text) {
  const auto v = parse_numbers(text, 3);
  return {v[0], v[1], v[2]};
}

Aabb parse_box(const std::string& text) {
  const auto v = parse_numbers(text, 6);
  return {Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5])};
}

void MaterialOptions::add(CLI::App& app) {
  app.add_option("--material", material_path, "Material field JSON (overrides --stiffness/--density)");
  app.add_option("--stiffness", stiffness, "Homogeneous Young's modulus")->capture_default_str();
  app.add_option("--density", density, "Density used for the lumped mass")->capture_default_str();
  app.add_option("--paint", paint,
                 "Paint a region: <stiffness|mass>:box=x0,y0,z0,x1,y1,z1:value=V, "
                 "<stiffness|mass>:sphere=cx,cy,cz,r:value=V, or region=<box>:k=V (repeatable)");
}

MaterialField MaterialOptions::resolve(const TetMesh& mesh) const {
  MaterialField m = material_path.empty() ? homogeneous_material(mesh, stiffness, density)
                                          : read_material_json(material_path);
  m.validate(mesh.size());
  for (const std::string& rule : paint) {
    const std::size_t count = apply_paint(m, mesh, rule);
    std::cout << "painted " << count << " vertices (" << rule << ")\n";
  }
  return m;
}

void MotionOptions::add(CLI::App& app) {
  app.add_option("--ref", ref_path, "Reference motion (PDSQ); otherwise a random script is generated");
  app.add_option("--motion-seed", motion_seed, "Seed of the generated motion script")->capture_default_str();
  app.add_option("--frames", frames, "Frames of the generated motion script")->capture_default_str();
  precise_default(app.add_option("--dt", dt, "Timestep of the generated script"), dt);
  app.add_option("--max-accel", max_accel, "Acceleration limit of the generated script")
      ->capture_default_str();
  precise_default(app.add_option("--max-angular-speed", max_angular_speed,
                                 "Angular speed limit of the generated script"),
                  max_angular_speed);
}

ReferenceMotion MotionOptions::resolve(const TetMesh& mesh, const ConstraintSet& constraints) const {
  if (!ref_path.empty()) {
    const SimSequence seq = read_pdsq(ref_path);
    if (seq.vertex_count() != mesh.size()) {
      throw Error(Errc::LengthMismatch, "reference motion does not match the mesh");
    }
    return ReferenceMotion(seq.frames, seq.dt);
  }
  const MotionScript script =
      random_motion_script(motion_seed, frames, dt, MotionLimits{max_accel, max_angular_speed});
  return script_to_reference(mesh, constraints, script);
}

std::size_t apply_paint(MaterialField& material, const TetMesh& mesh, const std::string& rule) {
  std::vector<std::string> parts;
  std::stringstream ss(rule);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  std::string property = "stiffness";
  std::optional<double> value;
  std::function<bool(const Vec3&)> region;
  for (const std::string& part : parts) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) {
      if (part != "stiffness" && part != "mass") throw CLI::ValidationError("unknown paint property '" + part + "'");
      property = part;
      continue;
    }
    const std::string key = part.substr(0, eq), val = part.substr(eq + 1);
    if (key == "box" || key == "region") {
      const Aabb box = parse_box(val);
      region = [box](const Vec3& p) { return box.contains(p); };
    } else if (key == "sphere") {
      const auto v = parse_numbers(val, 4);
      const Vec3 c(v[0], v[1], v[2]);
      const double r = v[3];
      region = [c, r](const Vec3& p) { return (p - c).norm() <= r; };
    } else if (key == "value" || key == "k" || key == "m") {
      value = parse_numbers(val, 1)[0];
      if (key == "k") property = "stiffness";
      if (key == "m") property = "mass";
    } else {
      throw CLI::ValidationError("unknown paint key '" + key + "'");
    }
  }
  if (!region || !value) throw CLI::ValidationError("paint rule needs a region and a value: " + rule);
  if (property == "stiffness") return paint_material(material, mesh, region, value, std::nullopt);
  return paint_material(material, mesh, region, std::nullopt, value);
}

TimingSummary summarize_timing(const std::vector<double>& seconds) {
  TimingSummary t;
  t.frames = seconds.size();
  if (seconds.empty()) return t;
  for (double s : seconds) t.mean_seconds += s;
  t.mean_seconds /= static_cast<double>(seconds.size());
  double var = 0.0;
  for (double s : seconds) var += (s - t.mean_seconds) * (s - t.mean_seconds);
  t.stdev_seconds = std::sqrt(var / static_cast<double>(seconds.size()));
  return t;
}

void report_timing(const std::string& label, const TimingSummary& t, const std::string& json_path) {
  std::cout << "timing " << label << ": frames=" << t.frames << " mean_ms=" << t.mean_seconds * 1e3
            << " stdev_ms=" << t.stdev_seconds * 1e3 << '\n';
  if (json_path.empty()) return;
  const nlohmann::json j = {{"label", label},
                            {"frames", t.frames},
                            {"mean_seconds", t.mean_seconds},
                            {"stdev_seconds", t.stdev_seconds}};
  std::ofstream out(json_path);
  if (!out) throw Error(Errc::Io, "cannot write " + json_path);
  out << j.dump(2) << '\n';
}

CLI::Option* precise_default(CLI::Option* opt, double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return opt->default_str(buf);
}

namespace {

// Given options are written as typed; the rest with their defaults. Options
// without a value or default (unused shape choices) are left out.
void echo_options(std::ostream& out, const CLI::App& app) {
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames().front() == "help" || !opt->get_configurable()) continue;
    std::vector<std::string> values;
    if (opt->count() > 0) {
      values = opt->results();
    } else if (!opt->get_default_str().empty()) {
      values = {opt->get_default_str()};
    } else {
      continue;
    }
    out << opt->get_lnames().front() << '=';
    if (values.size() == 1 && opt->get_expected_max() <= 1) {
      out << nlohmann::json(values.front()).dump();
    } else {
      out << nlohmann::json(values).dump();
    }
    out << '\n';
  }
}

}  // namespace

void write_config_echo(const CLI::App& app, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  echo_options(out, app);
  for (const CLI::App* sub : app.get_subcommands()) {
    out << "\n[" << sub->get_name() << "]\n";
    echo_options(out, *sub);
    for (const CLI::App* group : sub->get_subcommands([](const CLI::App* a) { return a->get_name().empty(); })) {
      echo_options(out, *group);
    }
  }
}

}  // namespace sdyn::cli
