// sdyn: mesh generation, data generation, training, simulation, emulation
// and evaluation from the command line.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "cli_support.hpp"
#include "sdyn/datagen/dataset.hpp"
#include "sdyn/emulator/rollout.hpp"
#include "sdyn/emulator/train.hpp"
#include "sdyn/error.hpp"
#include "sdyn/meshkit/embedding.hpp"
#include "sdyn/meshkit/mesh_io.hpp"
#include "sdyn/metrics/metrics.hpp"

namespace fs = std::filesystem;
using namespace sdyn;

namespace {

constexpr int kExitDomain = 2;
constexpr int kExitUsage = 64;

const Aabb kDefaultCore{Vec3(-0.3, -0.3, -1e9), Vec3(0.3, 0.3, 1e9)};

struct ShapeOptions {
  double sphere = 0.0;
  std::string ellipsoid, box;

  void add(CLI::App& app, bool required) {
    auto* g = app.add_option_group("shape", "Primitive shape");
    g->add_option("--sphere", sphere, "Sphere radius");
    g->add_option("--ellipsoid", ellipsoid, "Ellipsoid semi-axes a,b,c");
    g->add_option("--box", box, "Box extents x,y,z");
    if (required) g->require_option(1);
    else g->require_option(0, 1);
  }
  std::optional<Primitive> resolve() const {
    if (sphere > 0.0) return Sphere{sphere};
    if (!ellipsoid.empty()) return Ellipsoid{cli::parse_vec3(ellipsoid)};
    if (!box.empty()) return Box{cli::parse_vec3(box)};
    return std::nullopt;
  }
};

// ---------------------------------------------------------------- gen-mesh

struct GenMesh {
  ShapeOptions shape;
  std::string obj, core_box, out, constraints_out, surface_out;
  double voxel = 0.2;
  bool text = false;

  void add(CLI::App& app) {
    shape.add(app, false);
    app.add_option("--obj", obj, "Closed OBJ surface to voxelize (normalized to a 5x5x5 box)");
    app.add_option("--voxel", voxel, "Voxel size (shortest tet edge)")->capture_default_str();
    app.add_option("--core-box", core_box, "Constrained core box x0,y0,z0,x1,y1,z1 (default: |x|,|y| <= 0.3)");
    app.add_option("--out", out, "Output mesh path")->required();
    app.add_option("--constraints", constraints_out, "Constraint JSON path (default: <out dir>/constraints.json)");
    app.add_option("--surface-out", surface_out, "Also write the embedded render surface as OBJ");
    app.add_flag("--text", text, "Write the text mesh format instead of binary PDTM");
  }

  int run(const CLI::App& app) {
    const auto prim = shape.resolve();
    if (!prim && obj.empty()) throw CLI::ValidationError("one of --sphere, --ellipsoid, --box or --obj is required");
    std::optional<SurfaceMesh> surface;
    TetMesh mesh;
    if (!obj.empty()) {
      surface = normalize_to_box(read_obj(obj), 5.0);
      mesh = voxelize_surface(*surface, voxel);
    } else {
      mesh = voxelize_primitive(*prim, voxel);
    }
    const ConstraintSet constraints =
        build_core_constraints(mesh, core_box.empty() ? kDefaultCore : cli::parse_box(core_box));
    const fs::path out_path(out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    text ? write_tet_text(out_path, mesh) : write_pdtm(out_path, mesh);
    const fs::path cpath = constraints_out.empty() ? out_path.parent_path() / "constraints.json" : fs::path(constraints_out);
    write_constraints_json(cpath, constraints);
    if (!surface_out.empty()) {
      const SurfaceMesh s = surface ? *surface : boundary_surface(mesh);
      write_obj(surface_out, s.vertices, s.faces);
    }
    cli::write_config_echo(app, out_path.string() + ".config.toml");
    std::cout << std::setprecision(12) << "vertices " << mesh.size() << "\ntets " << mesh.tet_count() << "\nconstrained "
              << constraints.constrained_indices().size() << "\nedge_range " << mesh.min_edge() << ' '
              << mesh.max_edge() << '\n';
    return 0;
  }
};

// ---------------------------------------------------------------- gen-data

struct GenData {
  ShapeOptions shape;
  std::string out, core_box, stiffness_list;
  std::size_t sequences = 8, frames = 60, materials = 7;
  std::uint64_t seed = 1;
  double voxel = 0.2, density = kDefaultDensity, dt = 1.0 / 24.0;
  double max_accel = MotionLimits{}.max_accel, max_angular_speed = MotionLimits{}.max_angular_speed;
  bool dry_run = false;

  void add(CLI::App& app) {
    shape.add(app, false);
    app.add_option("--out", out, "Dataset directory");
    app.add_option("--sequences", sequences, "Random motion sequences")->capture_default_str();
    app.add_option("--frames", frames, "Frames per sequence")->capture_default_str();
    app.add_option("--materials", materials,
                   "Number of material settings, spread over 5e3..5e5 (ignored with --stiffness)")
        ->capture_default_str()
        ->check(CLI::Range(1, 7));
    app.add_option("--stiffness", stiffness_list, "Explicit comma-separated stiffness list");
    app.add_option("--density", density, "Density of every material")->capture_default_str();
    app.add_option("--seed", seed, "Base RNG seed")->capture_default_str();
    app.add_option("--voxel", voxel, "Voxel size")->capture_default_str();
    app.add_option("--core-box", core_box, "Constrained core box x0,y0,z0,x1,y1,z1");
    cli::precise_default(app.add_option("--dt", dt, "Timestep"), dt);
    app.add_option("--max-accel", max_accel, "Acceleration limit")->capture_default_str();
    cli::precise_default(app.add_option("--max-angular-speed", max_angular_speed, "Angular speed limit"),
                         max_angular_speed);
    app.add_flag("--dry-run", dry_run, "Only report the dataset size");
  }

  DatasetSpec spec() const {
    DatasetSpec s;
    s.sequence_count = sequences;
    s.frames_per_sequence = frames;
    s.rng_seed = seed;
    s.voxel_size = voxel;
    s.dt = dt;
    s.limits = {max_accel, max_angular_speed};
    if (auto p = shape.resolve()) s.primitive = *p;
    if (!core_box.empty()) s.core_box = cli::parse_box(core_box);
    s.materials.clear();
    if (!stiffness_list.empty()) {
      for (double k : cli::parse_numbers(stiffness_list)) s.materials.push_back({k, density});
    } else {
      const auto all = default_material_settings();
      for (std::size_t m = 0; m < materials; ++m) {
        const std::size_t idx = materials == 1 ? all.size() / 2 : m * (all.size() - 1) / (materials - 1);
        s.materials.push_back({all[idx].stiffness, density});
      }
    }
    return s;
  }

  int run(const CLI::App& app, std::size_t threads) {
    const DatasetSpec s = spec();
    s.validate();
    std::cout << "entries " << s.entry_count() << "\nframes " << s.total_frames() << '\n';
    if (dry_run) return 0;
    if (out.empty()) throw CLI::ValidationError("--out is required unless --dry-run is given");
    GenerateOptions opts;
    opts.threads = threads;
    opts.log = [](const std::string& msg) { std::cerr << msg << '\n'; };
    const auto entries = generate_dataset(s, out, opts);
    std::size_t regen = 0;
    for (const auto& e : entries) regen += e.regenerations;
    cli::write_config_echo(app, fs::path(out) / "config.toml");
    std::cout << "regenerated " << regen << "\nwrote " << out << '\n';
    return 0;
  }
};

// ---------------------------------------------------------------- train

struct Train {
  std::string data, out, loss_csv, init;
  TrainConfig cfg;
  double lr = 1e-4, lr_decay = 0.96;
  std::uint64_t init_seed = 1;
  bool no_ref = false;

  void add(CLI::App& app) {
    app.add_option("--data", data, "Dataset directory")->required();
    app.add_option("--out", out, "Checkpoint path (best validation loss)")->required();
    app.add_option("--loss-csv", loss_csv, "Per-epoch loss log (default: <out>.loss.csv)");
    app.add_option("--epochs", cfg.epochs, "Epochs")->capture_default_str();
    app.add_option("--batch-size", cfg.batch_size, "Mini-batch size")->capture_default_str();
    app.add_option("--lr", lr, "Initial learning rate")->capture_default_str();
    app.add_option("--lr-decay", lr_decay, "Learning-rate factor per epoch")->capture_default_str();
    app.add_option("--validation-fraction", cfg.validation_fraction, "Share of sequences held out")
        ->capture_default_str();
    app.add_option("--samples-per-epoch", cfg.samples_per_epoch, "Random training samples per epoch (0 = all)")
        ->capture_default_str();
    app.add_option("--validation-samples", cfg.validation_samples, "Validation samples (0 = all)")
        ->capture_default_str();
    app.add_option("--seed", cfg.seed, "Shuffling and noise seed")->capture_default_str();
    app.add_option("--input-noise", cfg.input_noise, "Std of random-walk noise on the training history (0 = plain teacher forcing)")
        ->capture_default_str();
    app.add_option("--init-seed", init_seed, "Weight initialization seed")->capture_default_str();
    app.add_option("--init", init, "Start from this checkpoint instead of random weights");
    app.add_flag("--no-ref-features", no_ref, "Train the variant without reference-motion features");
  }

  int run(const CLI::App& app, std::size_t threads) {
    const Dataset dataset = load_dataset(data);
    EmulatorConfig ec;
    ec.use_reference_features = !no_ref;
    ec.dt = dataset.dt;
    ec.voxel_size = dataset.voxel_size;
    EmulatorModel model = init.empty() ? EmulatorModel::initialized(ec, init_seed) : load_emulator(init).model;
    model.config.use_reference_features = !no_ref;
    const long delta = static_cast<long>(model.parameter_count()) - static_cast<long>(kPaperParameterCount);
    std::cout << "parameters " << model.parameter_count() << " (paper " << kPaperParameterCount << ", delta "
              << std::showpos << delta << std::noshowpos << ")\n";
    cfg.adam.lr = lr;
    cfg.adam.lr_decay = lr_decay;
    cfg.threads = threads;
    cfg.checkpoint = out;
    cfg.loss_csv = loss_csv.empty() ? out + ".loss.csv" : loss_csv;
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    cfg.on_epoch = [](const EpochLog& l) {
      std::cout << "epoch " << l.epoch << " lr " << std::scientific << std::setprecision(6) << l.lr
                << " train " << l.train_loss << " validation " << l.validation_loss << std::defaultfloat
                << std::setprecision(6) << " seconds " << l.seconds << (l.best ? " best" : "") << std::endl;
    };
    const TrainResult r = train_emulator(model, dataset, cfg);
    cli::write_config_echo(app, out + ".config.toml");
    std::cout << "best_epoch " << r.best_epoch << "\nwrote " << out << '\n';
    return 0;
  }
};

// ---------------------------------------------------------------- simulate

struct Simulate {
  std::string mesh_path, constraints_path, out, ref_out, method = "implicit", timing_json;
  std::size_t substeps = 1;
  cli::MaterialOptions material;
  cli::MotionOptions motion;

  void add(CLI::App& app) {
    app.add_option("--mesh", mesh_path, "Tet mesh")->required();
    app.add_option("--constraints", constraints_path, "Constraint JSON")->required();
    material.add(app);
    motion.add(app);
    app.add_option("--method", method, "implicit or explicit")
        ->check(CLI::IsMember({"implicit", "explicit"}))
        ->capture_default_str();
    app.add_option("--substeps", substeps, "Explicit substeps per frame")->capture_default_str();
    app.add_option("--out", out, "Output sequence (PDSQ)")->required();
    app.add_option("--ref-out", ref_out, "Also write the reference motion (PDSQ)");
    app.add_option("--timing-json", timing_json, "Write the timing report as JSON");
  }

  int run(const CLI::App& app) {
    const TetMesh mesh = read_tet_mesh(mesh_path);
    const ConstraintSet constraints = read_constraints_json(constraints_path);
    const MaterialField mat = material.resolve(mesh);
    const ReferenceMotion ref = motion.resolve(mesh, constraints);
    const SimulationSystem system(mesh, mat, constraints);
    const SimulationMethod m =
        method == "implicit" ? SimulationMethod::implicit() : SimulationMethod::explicit_with(substeps);
    SimulationResult result;
    try {
      result = simulate_sequence(system, ref, m);
    } catch (const Error& e) {
      if (e.index()) std::cerr << "diverged at frame " << *e.index() << '\n';
      throw;
    }
    write_pdsq(out, result.sequence);
    if (!ref_out.empty()) {
      SimSequence r{ref.dt(), {}};
      for (std::size_t f = 0; f < ref.frame_count(); ++f) r.frames.push_back(ref.frame(f));
      write_pdsq(ref_out, r);
    }
    cli::write_config_echo(app, out + ".config.toml");
    const EnergyStats e = energy_stats(result.sequence, system.model(), ref);
    std::cout << "frames " << result.sequence.frame_count() << "\nexploded_at "
              << (result.exploded_at ? std::to_string(*result.exploded_at) : "none") << "\nenergy min "
              << e.min << " stdev " << e.stdev << " max " << e.max << '\n';
    cli::report_timing(method, cli::summarize_timing(result.frame_seconds), timing_json);
    return 0;
  }
};

// ---------------------------------------------------------------- emulate

struct Emulate {
  std::string checkpoint, mesh_path, constraints_path, out, ref_out, surface, surface_dir, init_gt,
      precision = "f32", timing_json;
  cli::MaterialOptions material;
  cli::MotionOptions motion;

  void add(CLI::App& app) {
    app.add_option("--checkpoint", checkpoint, "Trained emulator")->required();
    app.add_option("--mesh", mesh_path, "Tet mesh")->required();
    app.add_option("--constraints", constraints_path, "Constraint JSON")->required();
    material.add(app);
    motion.add(app);
    app.add_option("--init-gt", init_gt, "Seed the history with frames 0-2 of this sequence instead of the reference");
    app.add_option("--precision", precision, "Inference precision")
        ->check(CLI::IsMember({"f32", "f64"}))
        ->capture_default_str();
    app.add_option("--out", out, "Output sequence (PDSQ)")->required();
    app.add_option("--ref-out", ref_out, "Also write the reference motion (PDSQ)");
    app.add_option("--surface", surface, "Render surface OBJ to drive through the embedding");
    app.add_option("--surface-dir", surface_dir, "Directory for per-frame surface OBJs (default: <out>.surface)");
    app.add_option("--timing-json", timing_json, "Write the timing report as JSON");
  }

  int run(const CLI::App& app, std::size_t threads) {
    const LoadedEmulator loaded = load_emulator(checkpoint);
    const TetMesh mesh = read_tet_mesh(mesh_path);
    const ConstraintSet constraints = read_constraints_json(constraints_path);
    if (constraints.size() != mesh.size()) throw Error(Errc::LengthMismatch, "constraints do not match the mesh");
    if (std::abs(mesh.min_edge() - loaded.model.config.voxel_size) > 1e-6 * loaded.model.config.voxel_size) {
      std::cerr << "warning: shortest edge " << mesh.min_edge() << " differs from the training voxel size "
                << loaded.model.config.voxel_size << '\n';
    }
    const MaterialField mat = material.resolve(mesh);
    const ReferenceMotion ref = motion.resolve(mesh, constraints);
    std::vector<Positions> init;
    if (init_gt.empty()) {
      for (std::size_t f = 0; f < 3; ++f) init.push_back(ref.frame(f));
    } else {
      const SimSequence gt = read_pdsq(init_gt);
      if (gt.frame_count() < 3) throw Error(Errc::ShapeMismatch, "--init-gt needs at least 3 frames");
      init.assign(gt.frames.begin(), gt.frames.begin() + 3);
    }
    RolloutOptions opts;
    opts.threads = threads;
    opts.precision = precision == "f32" ? InferencePrecision::F32 : InferencePrecision::F64;
    RolloutResult r;
    try {
      r = rollout(loaded.model, mesh, mat, constraints, ref, init, opts);
    } catch (const Error& e) {
      if (e.code() == Errc::NonFinitePrediction && e.index()) std::cerr << "exploded at frame " << *e.index() << '\n';
      throw;
    }
    write_pdsq(out, r.sequence);
    if (!ref_out.empty()) {
      SimSequence rs{ref.dt(), {}};
      for (std::size_t f = 0; f < ref.frame_count(); ++f) rs.frames.push_back(ref.frame(f));
      write_pdsq(ref_out, rs);
    }
    if (!surface.empty()) {
      const SurfaceEmbedding emb = embed_surface(read_obj(surface), mesh);
      const fs::path dir = surface_dir.empty() ? fs::path(out + ".surface") : fs::path(surface_dir);
      fs::create_directories(dir);
      for (std::size_t f = 0; f < r.sequence.frame_count(); ++f) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04zu.obj", f);
        write_obj(dir / name, deform_surface(emb, r.sequence.frames[f]), emb.faces);
      }
      std::cout << "surface_frames " << r.sequence.frame_count() << " in " << dir.string() << '\n';
    }
    cli::write_config_echo(app, out + ".config.toml");
    const SimulationSystem system(mesh, mat, constraints);
    const EnergyStats e = energy_stats(r.sequence, system.model(), ref);
    std::cout << "frames " << r.sequence.frame_count() << "\nenergy min " << e.min << " stdev " << e.stdev
              << " max " << e.max << '\n';
    cli::report_timing("emulator", cli::summarize_timing(r.frame_seconds), timing_json);
    return 0;
  }
};

// ---------------------------------------------------------------- eval

struct Eval {
  std::string pred, gt, mesh_path, ref_path, checkpoint, constraints_path, csv, json, frames_csv, label = "run";
  cli::MaterialOptions material;

  void add(CLI::App& app) {
    app.add_option("--pred", pred, "Predicted sequence (PDSQ)")->required();
    app.add_option("--gt", gt, "Ground-truth sequence (PDSQ)")->required();
    app.add_option("--mesh", mesh_path, "Tet mesh")->required();
    app.add_option("--ref", ref_path, "Reference motion (PDSQ)")->required();
    material.add(app);
    app.add_option("--checkpoint", checkpoint, "Emulator for the single-frame RMSE (needs --constraints)");
    app.add_option("--constraints", constraints_path, "Constraint JSON");
    app.add_option("--label", label, "Row label")->capture_default_str();
    app.add_option("--csv", csv, "Write the report as CSV");
    app.add_option("--json", json, "Write the report as JSON");
    app.add_option("--frames-csv", frames_csv, "Per-frame rmse and energy CSV");
  }

  int run(const CLI::App& app, std::size_t threads) {
    const TetMesh mesh = read_tet_mesh(mesh_path);
    const MaterialField mat = material.resolve(mesh);
    const SimSequence p = read_pdsq(pred), g = read_pdsq(gt), rs = read_pdsq(ref_path);
    if (rs.frame_count() < 3) throw Error(Errc::ShapeMismatch, "reference needs at least 3 frames");
    const ReferenceMotion ref(rs.frames, rs.dt);
    const ElasticModel model(mesh, mat);
    std::optional<double> single;
    if (!checkpoint.empty()) {
      if (constraints_path.empty()) throw CLI::ValidationError("--checkpoint needs --constraints");
      const LoadedEmulator em = load_emulator(checkpoint);
      RolloutOptions opts;
      opts.threads = threads;
      single = single_frame_rmse(em.model, mesh, mat, read_constraints_json(constraints_path), ref, g, opts);
    }
    EvalReport r = evaluate_sequence(p, g, model, ref, single);
    r.label = label;
    std::cout << EvalReport::csv_header() << '\n' << r.csv_row() << '\n';
    if (!csv.empty()) {
      std::ofstream out(csv);
      if (!out) throw Error(Errc::Io, "cannot write " + csv);
      out << EvalReport::csv_header() << '\n' << r.csv_row() << '\n';
    }
    if (!json.empty()) {
      std::ofstream out(json);
      if (!out) throw Error(Errc::Io, "cannot write " + json);
      out << r.to_json().dump(2) << '\n';
    }
    if (!frames_csv.empty()) write_frame_csv(frames_csv, p, g, energy_stats(p, model, ref));
    const std::string echo_base = !json.empty() ? json : !csv.empty() ? csv : frames_csv;
    if (!echo_base.empty()) cli::write_config_echo(app, echo_base + ".config.toml");
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secondary-dynamics simulation and neural emulation toolkit", "sdyn"};
  app.set_config("--config", "", "Read options from a TOML-style file");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  std::size_t threads = 1;
  app.add_option("--threads", threads, "Worker thread cap")->capture_default_str()->check(CLI::PositiveNumber);

  GenMesh gen_mesh;
  GenData gen_data;
  Train train;
  Simulate simulate;
  Emulate emulate;
  Eval eval;
  auto* c_mesh = app.add_subcommand("gen-mesh", "Voxelize a primitive or OBJ into a tet mesh");
  gen_mesh.add(*c_mesh);
  auto* c_data = app.add_subcommand("gen-data", "Generate a ground-truth training dataset");
  gen_data.add(*c_data);
  auto* c_train = app.add_subcommand("train", "Train the emulator on a dataset");
  train.add(*c_train);
  auto* c_sim = app.add_subcommand("simulate", "Run the implicit or explicit integrator");
  simulate.add(*c_sim);
  auto* c_emu = app.add_subcommand("emulate", "Roll out a trained emulator");
  emulate.add(*c_emu);
  auto* c_eval = app.add_subcommand("eval", "Compare a prediction with ground truth");
  eval.add(*c_eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*c_mesh) return gen_mesh.run(app);
    if (*c_data) return gen_data.run(app, threads);
    if (*c_train) return train.run(app, threads);
    if (*c_sim) return simulate.run(app);
    if (*c_emu) return emulate.run(app, threads);
    if (*c_eval) return eval.run(app, threads);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what();
    if (e.index()) std::cerr << " (index " << *e.index() << ")";
    std::cerr << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}
