#include <cmath>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "sdyn/datagen/dataset.hpp"
#include "sdyn/fem/elastic.hpp"
#include "sdyn/integrators/sim_sequence.hpp"
#include "sdyn/meshkit/mesh_io.hpp"
#include "test_support.hpp"

using namespace sdyn;
namespace fs = std::filesystem;

namespace {

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Every regular file under `root`, keyed by relative path.
std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = file_bytes(e.path());
  }
  return out;
}

DatasetSpec small_spec() {
  DatasetSpec spec;
  spec.sequence_count = 2;
  spec.frames_per_sequence = 14;
  spec.materials = {{1e4, 100.0}, {5e4, 100.0}};
  spec.primitive = Sphere{0.6};
  spec.rng_seed = 42;
  return spec;
}

}  // namespace

TEST_CASE("normal draws have unit variance and are reproducible") {
  Rng a(17), b(17);
  const int n = 200000;
  double sum = 0.0, sq = 0.0, tail = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x = a.normal();
    CHECK(std::isfinite(x));
    sum += x;
    sq += x * x;
    if (std::abs(x) > 1.96) tail += 1.0;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(tail / n == doctest::Approx(0.05).epsilon(0.05));
  Rng c(17);
  for (int k = 0; k < 10; ++k) CHECK(b.normal() == c.normal());
}

TEST_CASE("motion script structure") {
  const MotionScript s = random_motion_script(7, 60, kDefaultDt);
  REQUIRE(s.frame_count() == 60);
  CHECK(s.frames[0].rotation == Mat3::Identity());
  CHECK(s.frames[0].translation == Vec3::Zero());
  std::size_t counts[3] = {0, 0, 0};
  for (std::size_t f = 0; f < 60; ++f) {
    const Mat3& R = s.frames[f].rotation;
    CHECK((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(R.determinant() == doctest::Approx(1.0));
    ++counts[static_cast<int>(s.phases[f])];
  }
  CHECK(counts[0] == 24);
  CHECK(counts[1] == 24);
  CHECK(counts[2] == 12);
  CHECK(s.acceleration.norm() <= MotionLimits{}.max_accel);
  CHECK(s.angular_speed <= MotionLimits{}.max_angular_speed);
  CHECK(s.axis.norm() == doctest::Approx(1.0));
  // Settle frames hold the starting pose.
  for (std::size_t f = 48; f < 60; ++f) {
    CHECK(s.frames[f].translation.norm() < 1e-12);
    CHECK((s.frames[f].rotation - Mat3::Identity()).norm() < 1e-12);
  }
  CHECK_ERRC(random_motion_script(1, 11, kDefaultDt), Errc::InvalidArgument);
}

TEST_CASE("zero limits give the identity script; same seed gives the same script") {
  const MotionScript s = random_motion_script(3, 20, kDefaultDt, MotionLimits{0.0, 0.0});
  for (const auto& f : s.frames) {
    CHECK(f.rotation == Mat3::Identity());
    CHECK(f.translation.norm() == 0.0);
  }
  const MotionScript a = random_motion_script(99, 30, kDefaultDt), b = random_motion_script(99, 30, kDefaultDt);
  for (std::size_t f = 0; f < 30; ++f) {
    CHECK(a.frames[f].rotation == b.frames[f].rotation);
    CHECK(a.frames[f].translation == b.frames[f].translation);
  }
  const MotionScript c = random_motion_script(100, 30, kDefaultDt);
  CHECK(c.acceleration != a.acceleration);
}

TEST_CASE("translation integrates back to the start (kinematic oracle)") {
  // Integrate the piecewise-constant acceleration a, -a, -a, a with a fine
  // step and compare to the scripted positions.
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const std::size_t F = 50;
    const MotionScript s = random_motion_script(seed, F, kDefaultDt, MotionLimits{10.0, 0.0});
    const std::size_t P = (4 * F + 5) / 10;
    const double span = static_cast<double>(P) * kDefaultDt;
    const int fine = 2000;
    const double h = span / fine;
    Vec3 x = Vec3::Zero(), v = Vec3::Zero();
    std::vector<Vec3> path{x};
    for (int q = 0; q < 2 * fine; ++q) {
      const double t = (q + 0.5) * h;
      const double sign = t < 0.5 * span ? 1.0 : (t < 1.5 * span ? -1.0 : 1.0);
      v += sign * s.acceleration * h;
      x += v * h;
      path.push_back(x);
    }
    const double scale = 10.0 * span * span;
    for (std::size_t f = 0; f < 2 * P; ++f) {
      const Vec3 expect = path[f * fine / P];
      CHECK((s.frames[f].translation - expect).norm() < 1e-3 * scale);
    }
    CHECK(s.frames[F - 1].translation.norm() < 1e-6 * scale);
    CHECK(v.norm() < 1e-9 * scale);
  }
}

TEST_CASE("script_to_reference") {
  const TetMesh mesh = voxelize_primitive(Sphere{1.0}, 0.2);
  const ConstraintSet c = build_core_constraints(mesh, test::column_core());
  const ReferenceMotion still = script_to_reference(mesh, c, random_motion_script(1, 12, kDefaultDt, MotionLimits{0, 0}));
  for (std::size_t t = 0; t < still.frame_count(); ++t)
    for (std::size_t i = 0; i < mesh.size(); ++i) CHECK(still.frame(t)[i] == mesh.vertices()[i]);

  const ReferenceMotion translate =
      script_to_reference(mesh, c, random_motion_script(2, 20, kDefaultDt, MotionLimits{10.0, 0.0}));
  for (std::size_t t = 0; t < translate.frame_count(); ++t) {
    const Vec3 d = translate.frame(t)[0] - mesh.vertices()[0];
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      CHECK((translate.frame(t)[i] - mesh.vertices()[i] - d).norm() < 1e-12);
    }
  }

  const ReferenceMotion moving = script_to_reference(mesh, c, random_motion_script(3, 30, kDefaultDt));
  Rng rng(8);
  for (int k = 0; k < 300; ++k) {
    const std::size_t i = rng.below(mesh.size()), j = rng.below(mesh.size());
    const double d0 = (mesh.vertices()[i] - mesh.vertices()[j]).norm();
    for (std::size_t t = 0; t < moving.frame_count(); ++t) {
      CHECK(std::abs((moving.frame(t)[i] - moving.frame(t)[j]).norm() - d0) < 1e-9);
    }
  }
  CHECK_ERRC(script_to_reference(mesh, ConstraintSet({1, 0}), random_motion_script(3, 12, kDefaultDt)),
             Errc::LengthMismatch);
}

TEST_CASE("dataset spec counting") {
  DatasetSpec paper;
  paper.sequence_count = 80;
  paper.frames_per_sequence = 456;
  CHECK(paper.materials.size() == 7);
  CHECK(paper.entry_count() == 560);
  CHECK(paper.total_frames() == 255360);
  DatasetSpec bad = small_spec();
  bad.sequence_count = 0;
  CHECK_ERRC(bad.validate(), Errc::InvalidArgument);
  bad = small_spec();
  bad.materials.clear();
  CHECK_ERRC(bad.validate(), Errc::InvalidArgument);
  bad = small_spec();
  bad.frames_per_sequence = 5;
  CHECK_ERRC(bad.validate(), Errc::InvalidArgument);
  CHECK(sequence_seed(1, 0, 0) != sequence_seed(1, 0, 1));
  CHECK(sequence_seed(1, 0, 0) != sequence_seed(1, 1, 0));
}

TEST_CASE("generated dataset layout, content and byte-identical reruns") {
  const DatasetSpec spec = small_spec();
  const fs::path a = test::scratch_dir("datagen_a"), b = test::scratch_dir("datagen_b");
  std::vector<std::string> log;
  GenerateOptions opts;
  opts.log = [&](const std::string& line) { log.push_back(line); };
  const auto entries = generate_dataset(spec, a, opts);
  REQUIRE(entries.size() == 4);
  GenerateOptions threaded;
  threaded.threads = 3;
  generate_dataset(spec, b, threaded);
  CHECK(tree_bytes(a) == tree_bytes(b));

  const auto manifest = nlohmann::json::parse(file_bytes(a / "manifest.json"));
  CHECK(manifest["entries"].size() == 4);
  CHECK(manifest["total_frames"] == 56);

  const Dataset ds = load_dataset(a);
  REQUIRE(ds.entries.size() == 4);
  CHECK(ds.sequences() == std::vector<std::size_t>{0, 1});
  CHECK(ds.mesh.size() == dataset_mesh(spec).size());
  for (std::size_t e = 0; e < ds.entries.size(); ++e) {
    for (const char* name : {"ref.pdsq", "gt.pdsq", "material.json", "constraints.json"}) {
      CHECK(fs::exists(ds.entry_dir(e) / name));
    }
    const SimSequence ref = read_pdsq(ds.entry_dir(e) / "ref.pdsq");
    const SimSequence gt = read_pdsq(ds.entry_dir(e) / "gt.pdsq");
    REQUIRE(gt.frame_count() == 14);
    REQUIRE(ref.frame_count() == 14);
    for (std::size_t i = 0; i < ds.mesh.size(); ++i) CHECK(gt.frames[0][i] == ref.frames[0][i]);
    for (std::size_t t = 0; t < 14; ++t)
      for (std::uint32_t i : ds.constraints.constrained_indices()) REQUIRE(gt.frames[t][i] == ref.frames[t][i]);
    const MaterialField mat = read_material_json(ds.entry_dir(e) / "material.json");
    CHECK(mat.stiffness[0] == spec.materials[ds.entries[e].material].stiffness);
    const ElasticModel model(ds.mesh, mat);
    for (const Positions& frame : gt.frames) {
      CHECK(std::isfinite(model.elastic_energy(to_field(frame) - model.rest())));
    }
    // The same script drives every material of a sequence.
    CHECK(ds.entries[e].seed == sequence_seed(spec.rng_seed, ds.entries[e].sequence, ds.entries[e].regenerations));
  }
  // A different seed changes the data.
  DatasetSpec other = spec;
  other.rng_seed = 43;
  const fs::path c = test::scratch_dir("datagen_c");
  generate_dataset(other, c);
  CHECK(file_bytes(a / entries[0].id / "gt.pdsq") != file_bytes(c / entries[0].id / "gt.pdsq"));
}

TEST_CASE("loading rejects missing and empty datasets") {
  const fs::path dir = test::scratch_dir("datagen_empty");
  CHECK_ERRC(load_dataset(dir), Errc::EmptyDataset);
  const DatasetSpec spec = small_spec();
  const TetMesh mesh = dataset_mesh(spec);
  write_pdtm(dir / "mesh.pdtm", mesh);
  write_constraints_json(dir / "constraints.json", dataset_constraints(spec, mesh));
  std::ofstream(dir / "manifest.json") << R"({"format":"sdyn-dataset","version":1,"spec":{"voxel_size":0.2,"dt":0.041666666666666664},"entries":[]})";
  CHECK_ERRC(load_dataset(dir), Errc::EmptyDataset);
}

TEST_CASE("persistently divergent material fails generation") {
  DatasetSpec spec = small_spec();
  spec.sequence_count = 1;
  // Overflowing Lame parameters make every attempt non-finite.
  spec.materials = {{1e308, 100.0}};
  spec.poisson = 0.4999999;
  CHECK_ERRC(generate_dataset(spec, test::scratch_dir("datagen_fail")), Errc::GenerationFailed);
}
