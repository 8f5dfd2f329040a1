#include "sdyn/datagen/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "sdyn/datagen/rng.hpp"
#include "sdyn/error.hpp"
#include "sdyn/meshkit/mesh_io.hpp"

namespace sdyn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json primitive_json(const Primitive& p) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Sphere>) return {{"kind", "sphere"}, {"radius", s.radius}};
        if constexpr (std::is_same_v<T, Ellipsoid>)
          return {{"kind", "ellipsoid"}, {"semi_axes", vec_json(s.semi_axes)}};
        if constexpr (std::is_same_v<T, Box>) return {{"kind", "box"}, {"extents", vec_json(s.extents)}};
      },
      p);
}

json spec_json(const DatasetSpec& spec) {
  json mats = json::array();
  for (const auto& m : spec.materials) mats.push_back({{"stiffness", m.stiffness}, {"density", m.density}});
  return {{"sequence_count", spec.sequence_count},
          {"frames_per_sequence", spec.frames_per_sequence},
          {"materials", mats},
          {"rng_seed", spec.rng_seed},
          {"primitive", primitive_json(spec.primitive)},
          {"voxel_size", spec.voxel_size},
          {"core_box", {{"lo", vec_json(spec.core_box.lo)}, {"hi", vec_json(spec.core_box.hi)}}},
          {"max_accel", spec.limits.max_accel},
          {"max_angular_speed", spec.limits.max_angular_speed},
          {"dt", spec.dt},
          {"poisson", spec.poisson},
          {"rayleigh_alpha", spec.rayleigh_alpha},
          {"rayleigh_beta", spec.rayleigh_beta}};
}

std::string entry_id(std::size_t sequence, std::size_t material) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%04zu_m%02zu", sequence, material);
  return buf;
}

struct Job {
  std::size_t sequence, material;
};

}  // namespace

std::vector<MaterialSetting> default_material_settings() {
  std::vector<MaterialSetting> out;
  for (double k : {5e3, 1e4, 2e4, 5e4, 1e5, 2e5, 5e5}) out.push_back({k, kDefaultDensity});
  return out;
}

void DatasetSpec::validate() const {
  if (sequence_count < 1) throw Error(Errc::InvalidArgument, "sequence_count must be at least 1");
  if (frames_per_sequence < 12) throw Error(Errc::InvalidArgument, "frames_per_sequence must be at least 12");
  if (materials.empty()) throw Error(Errc::InvalidArgument, "at least one material setting is required");
  for (const auto& m : materials) {
    if (!(m.stiffness > 0.0) || !(m.density > 0.0)) {
      throw Error(Errc::InvalidArgument, "material stiffness and density must be positive");
    }
  }
  if (!(voxel_size > 0.0)) throw Error(Errc::InvalidArgument, "voxel_size must be positive");
  if (!(dt > 0.0)) throw Error(Errc::InvalidArgument, "dt must be positive");
  if (!(limits.max_accel >= 0.0) || !(limits.max_angular_speed >= 0.0)) {
    throw Error(Errc::InvalidArgument, "motion limits must be non-negative");
  }
}

TetMesh dataset_mesh(const DatasetSpec& spec) { return voxelize_primitive(spec.primitive, spec.voxel_size); }

ConstraintSet dataset_constraints(const DatasetSpec& spec, const TetMesh& mesh) {
  return build_core_constraints(mesh, spec.core_box);
}

std::uint64_t sequence_seed(std::uint64_t base_seed, std::size_t sequence, std::size_t attempt) {
  return derive_seed(base_seed, static_cast<std::uint64_t>(sequence) * 1024 + attempt);
}

ReferenceMotion reference_from_sequence(const SimSequence& seq) {
  return ReferenceMotion(seq.frames, seq.dt);
}

std::vector<DatasetEntry> generate_dataset(const DatasetSpec& spec, const fs::path& out_dir,
                                           const GenerateOptions& options) {
  constexpr std::size_t kMaxAttempts = 5;
  spec.validate();
  const TetMesh mesh = dataset_mesh(spec);
  const ConstraintSet constraints = dataset_constraints(spec, mesh);
  fs::create_directories(out_dir);
  write_pdtm(out_dir / "mesh.pdtm", mesh);
  write_constraints_json(out_dir / "constraints.json", constraints);

  std::vector<Job> jobs;
  for (std::size_t s = 0; s < spec.sequence_count; ++s) {
    for (std::size_t m = 0; m < spec.materials.size(); ++m) jobs.push_back({s, m});
  }
  std::vector<DatasetEntry> entries(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::mutex log_mutex;
  auto log = [&](const std::string& msg) {
    if (!options.log) return;
    std::lock_guard lock(log_mutex);
    options.log(msg);
  };

  auto run_job = [&](std::size_t j) {
    const Job job = jobs[j];
    const MaterialSetting& setting = spec.materials[job.material];
    MaterialField material = homogeneous_material(mesh, setting.stiffness, setting.density);
    material.poisson = spec.poisson;
    material.rayleigh_alpha = spec.rayleigh_alpha;
    material.rayleigh_beta = spec.rayleigh_beta;
    const SimulationSystem system(mesh, material, constraints);

    DatasetEntry entry{entry_id(job.sequence, job.material), job.sequence, job.material, 0, 0};
    for (std::size_t attempt = 0;; ++attempt) {
      if (attempt == kMaxAttempts) {
        throw Error(Errc::GenerationFailed,
                    entry.id + ": " + std::to_string(kMaxAttempts) + " consecutive divergent scripts");
      }
      entry.seed = sequence_seed(spec.rng_seed, job.sequence, attempt);
      entry.regenerations = attempt;
      const MotionScript script =
          random_motion_script(entry.seed, spec.frames_per_sequence, spec.dt, spec.limits);
      const ReferenceMotion ref = script_to_reference(mesh, constraints, script);
      SimulationResult result;
      try {
        result = simulate_sequence(system, ref, SimulationMethod::implicit());
      } catch (const Error& e) {
        if (e.code() != Errc::SolveDiverged && e.code() != Errc::NonFiniteState) throw;
        log(entry.id + ": attempt " + std::to_string(attempt) + " diverged (" + e.what() +
            "), regenerating");
        continue;
      }
      // Stored constrained positions are copied from the reference so the two
      // files agree bit for bit after single-precision rounding.
      SimSequence ref_seq{ref.dt(), {}};
      ref_seq.frames.reserve(ref.frame_count());
      for (std::size_t f = 0; f < ref.frame_count(); ++f) ref_seq.frames.push_back(ref.frame(f));
      for (std::size_t f = 0; f < ref.frame_count(); ++f) {
        for (std::uint32_t i : constraints.constrained_indices()) {
          result.sequence.frames[f][i] = ref_seq.frames[f][i];
        }
      }
      const fs::path dir = out_dir / entry.id;
      fs::create_directories(dir);
      write_pdsq(dir / "ref.pdsq", ref_seq);
      write_pdsq(dir / "gt.pdsq", result.sequence);
      write_material_json(dir / "material.json", material);
      write_constraints_json(dir / "constraints.json", constraints);
      entries[j] = entry;
      log(entry.id + ": done");
      return;
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        run_job(j);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const std::size_t thread_count = std::max<std::size_t>(1, std::min(options.threads, jobs.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < thread_count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  json list = json::array();
  for (const auto& e : entries) {
    list.push_back({{"id", e.id},
                    {"sequence", e.sequence},
                    {"material", e.material},
                    {"seed", e.seed},
                    {"regenerations", e.regenerations},
                    {"stiffness", spec.materials[e.material].stiffness},
                    {"density", spec.materials[e.material].density}});
  }
  const json manifest = {{"format", "sdyn-dataset"},
                         {"version", 1},
                         {"spec", spec_json(spec)},
                         {"vertex_count", mesh.size()},
                         {"tet_count", mesh.tet_count()},
                         {"total_frames", spec.total_frames()},
                         {"entries", list}};
  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw Error(Errc::Io, "cannot write manifest in " + out_dir.string());
  out << manifest.dump(2) << '\n';
  return entries;
}

std::vector<std::size_t> Dataset::sequences() const {
  std::vector<std::size_t> seqs;
  for (const auto& e : entries) {
    if (std::find(seqs.begin(), seqs.end(), e.sequence) == seqs.end()) seqs.push_back(e.sequence);
  }
  return seqs;
}

Dataset load_dataset(const fs::path& root) {
  std::ifstream in(root / "manifest.json");
  if (!in) throw Error(Errc::EmptyDataset, "no manifest.json in " + root.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::Io, "manifest.json: " + std::string(e.what()));
  }
  Dataset d;
  d.root = root;
  d.mesh = read_tet_mesh(root / "mesh.pdtm");
  d.constraints = read_constraints_json(root / "constraints.json");
  try {
    d.voxel_size = manifest.at("spec").at("voxel_size").get<double>();
    d.dt = manifest.at("spec").at("dt").get<double>();
    for (const auto& e : manifest.at("entries")) {
      d.entries.push_back({e.at("id").get<std::string>(), e.at("sequence").get<std::size_t>(),
                           e.at("material").get<std::size_t>(), e.at("seed").get<std::uint64_t>(),
                           e.at("regenerations").get<std::size_t>()});
    }
  } catch (const json::exception& e) {
    throw Error(Errc::Io, "manifest.json: " + std::string(e.what()));
  }
  if (d.entries.empty()) throw Error(Errc::EmptyDataset, "dataset has no entries");
  if (d.constraints.size() != d.mesh.size()) {
    throw Error(Errc::LengthMismatch, "dataset constraints do not match the mesh");
  }
  return d;
}

}  // namespace sdyn
