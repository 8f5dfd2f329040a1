// Drives the sdyn executable end to end and checks exit codes, printed
// summaries and written files.

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "sdyn/integrators/sim_sequence.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

struct WorkDir {
  fs::path path;
  WorkDir() : path(fs::temp_directory_path() / ("sdyn_cli_test_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~WorkDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

const fs::path& work_dir() {
  static const WorkDir dir;
  return dir.path;
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

RunResult run(const std::string& args) {
  const std::string cmd = quote(SDYN_CLI_PATH) + " " + args + " 2>" + quote((work_dir() / "stderr.txt").string());
  RunResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Value following `key ` on the first line that starts with it.
std::string field(const std::string& out, const std::string& key) {
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + " ", 0) == 0) return line.substr(key.size() + 1);
  }
  return {};
}

std::string p(const fs::path& path) { return quote(path.string()); }

// Relative file path -> contents for every regular file under root.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return files;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

// Mesh, dataset and checkpoint shared by the later cases.
struct Fixture {
  fs::path mesh_dir = work_dir() / "mesh1";
  fs::path data_dir = work_dir() / "data";
  fs::path ckpt = work_dir() / "model.ckpt";

  Fixture() {
    if (!fs::exists(mesh_dir / "mesh.pdtm")) {
      REQUIRE(run("gen-mesh --sphere 1.0 --out " + p(mesh_dir / "mesh.pdtm") + " --surface-out " +
                  p(mesh_dir / "surface.obj"))
                  .code == 0);
    }
    if (!fs::exists(data_dir / "manifest.json")) {
      REQUIRE(run("gen-data --sphere 0.6 --sequences 3 --frames 12 --stiffness 1e4,5e4 --seed 7 --out " +
                  p(data_dir))
                  .code == 0);
    }
    if (!fs::exists(ckpt)) {
      REQUIRE(run("train --data " + p(data_dir) + " --out " + p(ckpt) +
                  " --epochs 2 --samples-per-epoch 400 --validation-samples 200")
                  .code == 0);
    }
  }
  std::string mesh_args() const {
    return "--mesh " + p(mesh_dir / "mesh.pdtm") + " --constraints " + p(mesh_dir / "constraints.json");
  }
};

}  // namespace

TEST_CASE("usage errors exit with 64") {
  CHECK(run("").code == 64);
  CHECK(run("gen-mesh --sphere 1.0").code == 64);                  // missing --out
  CHECK(run("frobnicate").code == 64);
  CHECK(run("gen-mesh --sphere 1 --box 1,1,1 --out x.pdtm").code == 64);  // two shapes
  CHECK(run("simulate --mesh a --constraints b --out c --method rk4").code == 64);
  CHECK(run("gen-mesh --sphere 1 --core-box 1,2,3 --out " + p(work_dir() / "bad" / "m.pdtm")).code == 64);

  const fs::path cfg = work_dir() / "bad.toml";
  std::ofstream(cfg) << "[gen-mesh]\nsphere = 1.0\nout = \"" << (work_dir() / "cfg" / "m.pdtm").string()
                     << "\"\nbogus_key = 3\n";
  CHECK(run("--config " + p(cfg) + " gen-mesh").code == 64);

  const RunResult help = run("simulate --help");
  CHECK(help.code == 0);
  for (const char* flag : {"--method", "--substeps", "--paint", "--timing-json", "--motion-seed"}) {
    CHECK_MESSAGE(help.out.find(flag) != std::string::npos, flag);
  }
}

TEST_CASE("domain errors exit with 2") {
  // A core box outside the body constrains nothing.
  CHECK(run("gen-mesh --sphere 1.0 --core-box 5,5,5,6,6,6 --out " + p(work_dir() / "nc" / "m.pdtm")).code == 2);
  // A voxel larger than the body leaves no tets.
  CHECK(run("gen-mesh --sphere 0.05 --voxel 0.2 --out " + p(work_dir() / "empty" / "m.pdtm")).code == 2);
  // A directory without a manifest is an empty dataset.
  fs::create_directories(work_dir() / "nodata");
  CHECK(run("train --data " + p(work_dir() / "nodata") + " --out " + p(work_dir() / "x.ckpt")).code == 2);
}

TEST_CASE("gen-mesh reports the sphere edge range and is reproducible") {
  const fs::path a = work_dir() / "s2a", b = work_dir() / "s2b";
  const RunResult ra = run("gen-mesh --sphere 2.0 --voxel 0.2 --out " + p(a / "mesh.pdtm"));
  REQUIRE(ra.code == 0);
  std::istringstream range(field(ra.out, "edge_range"));
  double lo = 0, hi = 0;
  range >> lo >> hi;
  CHECK(lo == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(hi == doctest::Approx(0.2 * std::sqrt(3.0)).epsilon(1e-9));
  CHECK(std::stoul(field(ra.out, "vertices")) > 0);
  CHECK(std::stoul(field(ra.out, "constrained")) > 0);
  CHECK(fs::exists(a / "constraints.json"));
  CHECK(fs::exists(a / "mesh.pdtm.config.toml"));

  REQUIRE(run("gen-mesh --sphere 2.0 --voxel 0.2 --out " + p(b / "mesh.pdtm")).code == 0);
  CHECK(slurp(a / "mesh.pdtm") == slurp(b / "mesh.pdtm"));
  CHECK(slurp(a / "constraints.json") == slurp(b / "constraints.json"));

  // The echoed config reproduces the run.
  const fs::path c = work_dir() / "s2c";
  std::string echo = slurp(a / "mesh.pdtm.config.toml");
  const std::string old_out = (a / "mesh.pdtm").string();
  echo.replace(echo.find(old_out), old_out.size(), (c / "mesh.pdtm").string());
  std::ofstream(work_dir() / "echo.toml") << echo;
  REQUIRE(run("--config " + p(work_dir() / "echo.toml") + " gen-mesh").code == 0);
  CHECK(slurp(a / "mesh.pdtm") == slurp(c / "mesh.pdtm"));
}

TEST_CASE("gen-data counts and reproducibility") {
  const RunResult dry = run("gen-data --sequences 80 --frames 456 --materials 7 --dry-run");
  REQUIRE(dry.code == 0);
  CHECK(field(dry.out, "frames") == "255360");
  CHECK(field(dry.out, "entries") == "560");

  const std::string args = "gen-data --sphere 0.6 --sequences 8 --frames 12 --materials 2 --seed 11 --out ";
  const fs::path a = work_dir() / "desk_a", b = work_dir() / "desk_b";
  const RunResult ra = run(args + p(a));
  REQUIRE(ra.code == 0);
  CHECK(field(ra.out, "entries") == "16");
  CHECK(field(ra.out, "frames") == "192");
  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(manifest.at("entries").size() == 16);
  CHECK(fs::exists(a / "config.toml"));

  REQUIRE(run("--threads 2 " + args + p(b)).code == 0);
  const auto ta = tree(a), tb = tree(b);
  CHECK(ta.size() == tb.size());
  for (const auto& [name, bytes] : ta) {
    if (name == "config.toml") continue;  // echoes the thread cap and output path
    CHECK_MESSAGE(tb.count(name) == 1, name);
    if (tb.count(name)) CHECK_MESSAGE(tb.at(name) == bytes, name);
  }

  CHECK(run("gen-data --sphere 0.6 --frames 12 --sequences 1 --stiffness 1e4,abc --dry-run").code == 64);
}

TEST_CASE("train logs the learning-rate schedule and the ablation variant") {
  Fixture fx;
  const fs::path out = work_dir() / "abl.ckpt";
  const RunResult r = run("train --no-ref-features --data " + p(fx.data_dir) + " --out " + p(out) +
                          " --epochs 3 --samples-per-epoch 300 --validation-samples 100");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("parameters ") != std::string::npos);
  CHECK(fs::exists(out));
  CHECK(fs::exists(out.string() + ".config.toml"));

  std::istringstream csv(slurp(out.string() + ".loss.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "epoch,lr,train_loss,validation_loss,seconds,best");
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    const auto cols = split(line, ',');
    REQUIRE(cols.size() == 6);
    CHECK(std::stoul(cols[0]) == rows);
    CHECK(std::stod(cols[1]) == doctest::Approx(1e-4 * std::pow(0.96, rows)).epsilon(1e-8));
    CHECK(std::isfinite(std::stod(cols[2])));
    CHECK(std::isfinite(std::stod(cols[3])));
    ++rows;
  }
  CHECK(rows == 3);

  // The checkpoint remembers the variant, so emulating with it works without flags.
  const RunResult e = run("emulate --checkpoint " + p(out) + " " + fx.mesh_args() + " --frames 12 --out " +
                          p(work_dir() / "abl.pdsq"));
  CHECK(e.code == 0);
}

TEST_CASE("simulate implicit and explicit") {
  Fixture fx;
  const fs::path imp = work_dir() / "imp.pdsq";
  const RunResult ri = run("simulate " + fx.mesh_args() + " --frames 30 --out " + p(imp) + " --ref-out " +
                           p(work_dir() / "imp_ref.pdsq") + " --timing-json " + p(work_dir() / "imp.json"));
  REQUIRE(ri.code == 0);
  CHECK(field(ri.out, "frames") == "30");
  CHECK(field(ri.out, "exploded_at") == "none");
  CHECK(ri.out.find("timing implicit: frames=29") != std::string::npos);
  const auto timing = nlohmann::json::parse(slurp(work_dir() / "imp.json"));
  CHECK(timing.at("frames") == 29);
  CHECK(timing.at("mean_seconds").get<double>() > 0.0);
  CHECK(sdyn::read_pdsq(imp).frame_count() == 30);

  const RunResult re = run("simulate " + fx.mesh_args() + " --method explicit --substeps 1 --frames 120 --out " +
                           p(work_dir() / "exp.pdsq"));
  REQUIRE(re.code == 0);
  const std::string at = field(re.out, "exploded_at");
  REQUIRE(at != "none");
  CHECK(std::stoul(at) <= 100);
}

TEST_CASE("emulate with paint and surface output") {
  Fixture fx;
  const fs::path out = work_dir() / "emu.pdsq", dir = work_dir() / "emu_surface";
  const RunResult r = run("emulate --checkpoint " + p(fx.ckpt) + " " + fx.mesh_args() +
                          " --frames 14 --paint 'region=-2,-2,0,2,2,2:k=5e4' --surface " +
                          p(fx.mesh_dir / "surface.obj") + " --surface-dir " + p(dir) + " --out " + p(out));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("painted ") != std::string::npos);
  CHECK(std::stoul(field(r.out, "painted")) > 0);
  CHECK(field(r.out, "frames") == "14");
  CHECK(sdyn::read_pdsq(out).frame_count() == 14);
  std::size_t objs = 0;
  for (const auto& e : fs::directory_iterator(dir)) objs += e.path().extension() == ".obj";
  CHECK(objs == 14);
  CHECK(fs::exists(out.string() + ".config.toml"));

  // A damaged checkpoint is a domain error.
  std::string bytes = slurp(fx.ckpt);
  bytes[bytes.size() / 2] ^= 0x5a;
  std::ofstream(work_dir() / "bad.ckpt", std::ios::binary) << bytes;
  CHECK(run("emulate --checkpoint " + p(work_dir() / "bad.ckpt") + " " + fx.mesh_args() + " --frames 12 --out " +
            p(work_dir() / "bad.pdsq"))
            .code == 2);

  // A mesh that does not match the constraints is a domain error.
  CHECK(run("emulate --checkpoint " + p(fx.ckpt) + " --mesh " + p(fx.data_dir / "mesh.pdtm") + " --constraints " +
            p(fx.mesh_dir / "constraints.json") + " --frames 12 --out " + p(work_dir() / "bad2.pdsq"))
            .code == 2);
}

TEST_CASE("eval reports zero error for identical sequences and agrees across formats") {
  Fixture fx;
  const fs::path entry = fx.data_dir / "s0000_m00";
  REQUIRE(fs::exists(entry / "gt.pdsq"));
  const std::string common = " --mesh " + p(fx.data_dir / "mesh.pdtm") + " --ref " + p(entry / "ref.pdsq") +
                             " --material " + p(entry / "material.json");
  const fs::path csv = work_dir() / "eval.csv", js = work_dir() / "eval.json";
  const RunResult r = run("eval --pred " + p(entry / "gt.pdsq") + " --gt " + p(entry / "gt.pdsq") + common +
                          " --label same --csv " + p(csv) + " --json " + p(js) + " --frames-csv " +
                          p(work_dir() / "frames.csv"));
  REQUIRE(r.code == 0);
  std::istringstream in(slurp(csv));
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header ==
        "label,single_frame_rmse,rollout_rmse_24,rollout_rmse_48,rollout_rmse_all,energy_min,energy_stdev,"
        "energy_max,exploded_at");
  const auto names = split(header, ','), values = split(row, ',');
  REQUIRE(names.size() == values.size());
  const auto j = nlohmann::json::parse(slurp(js));
  for (std::size_t c = 0; c < names.size(); ++c) {
    const auto& v = j.at(names[c]);
    if (v.is_null()) {
      CHECK_MESSAGE(values[c].empty(), names[c]);
    } else if (v.is_string()) {
      CHECK(values[c] == v.get<std::string>());
    } else {
      CHECK_MESSAGE(std::stod(values[c]) == v.get<double>(), names[c]);
    }
  }
  CHECK(j.at("label") == "same");
  CHECK(fs::exists(js.string() + ".config.toml"));
  for (const char* k : {"rollout_rmse_24", "rollout_rmse_48", "rollout_rmse_all"}) CHECK(j.at(k).get<double>() == 0.0);

  // With the checkpoint the single-frame column is filled in.
  const RunResult rs = run("eval --pred " + p(entry / "gt.pdsq") + " --gt " + p(entry / "gt.pdsq") + common +
                           " --checkpoint " + p(fx.ckpt) + " --constraints " + p(fx.data_dir / "constraints.json") +
                           " --json " + p(work_dir() / "eval2.json"));
  REQUIRE(rs.code == 0);
  const auto j2 = nlohmann::json::parse(slurp(work_dir() / "eval2.json"));
  CHECK(j2.at("single_frame_rmse").is_number());
  CHECK(j2.at("single_frame_rmse").get<double>() > 0.0);

  // Sequences of different shapes are a domain error.
  REQUIRE(run("simulate " + fx.mesh_args() + " --frames 12 --out " + p(work_dir() / "other.pdsq")).code == 0);
  CHECK(run("eval --pred " + p(work_dir() / "other.pdsq") + " --gt " + p(entry / "gt.pdsq") + common).code == 2);
}

TEST_CASE("simulate and emulate are byte-identical across runs") {
  Fixture fx;
  for (int i = 0; i < 2; ++i) {
    const std::string s = std::to_string(i);
    REQUIRE(run("simulate " + fx.mesh_args() + " --frames 12 --motion-seed 4 --out " + p(work_dir() / ("d" + s + ".pdsq")))
                .code == 0);
    REQUIRE(run("emulate --checkpoint " + p(fx.ckpt) + " " + fx.mesh_args() + " --frames 12 --motion-seed 4 --out " +
                p(work_dir() / ("e" + s + ".pdsq")))
                .code == 0);
  }
  CHECK(slurp(work_dir() / "d0.pdsq") == slurp(work_dir() / "d1.pdsq"));
  CHECK(slurp(work_dir() / "e0.pdsq") == slurp(work_dir() / "e1.pdsq"));
}
