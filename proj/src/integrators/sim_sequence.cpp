#include "sdyn/integrators/sim_sequence.hpp"

#include <fstream>
#include <iomanip>

#include "../util/binary_io.hpp"
#include "sdyn/error.hpp"

namespace sdyn {

namespace {
constexpr std::uint32_t kPdsqVersion = 1;
}

void write_pdsq(const std::filesystem::path& path, const SimSequence& seq) {
  const std::size_t n = seq.vertex_count();
  detail::BinaryWriter w;
  w.magic("PDSQ");
  w.pod(kPdsqVersion);
  w.pod(static_cast<std::uint32_t>(n));
  w.pod(static_cast<std::uint32_t>(seq.frame_count()));
  w.pod(seq.dt);
  std::vector<float> buf(3 * n);
  for (std::size_t f = 0; f < seq.frame_count(); ++f) {
    if (seq.frames[f].size() != n) throw Error(Errc::LengthMismatch, "ragged sequence", f);
    for (std::size_t i = 0; i < n; ++i) {
      for (int a = 0; a < 3; ++a) buf[3 * i + a] = static_cast<float>(seq.frames[f][i][a]);
    }
    w.array(std::span<const float>(buf));
  }
  w.save(path);
}

SimSequence read_pdsq(const std::filesystem::path& path) {
  detail::BinaryReader r(path, Errc::Io);
  if (!r.magic("PDSQ")) throw Error(Errc::Io, "not a PDSQ file: " + path.string());
  const auto version = r.pod<std::uint32_t>();
  if (version != kPdsqVersion) {
    throw Error(Errc::VersionMismatch, "unsupported PDSQ version " + std::to_string(version));
  }
  const auto n = r.pod<std::uint32_t>();
  const auto frames = r.pod<std::uint32_t>();
  SimSequence seq;
  seq.dt = r.pod<double>();
  seq.frames.resize(frames);
  for (auto& frame : seq.frames) {
    const auto buf = r.array<float>(3 * static_cast<std::size_t>(n));
    frame.resize(n);
    for (std::size_t i = 0; i < n; ++i) frame[i] = Vec3(buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]);
  }
  return seq;
}

void write_sequence_csv(const std::filesystem::path& path, const SimSequence& seq) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string());
  out << "frame,vertex,x,y,z\n" << std::setprecision(9);
  for (std::size_t f = 0; f < seq.frame_count(); ++f) {
    for (std::size_t i = 0; i < seq.frames[f].size(); ++i) {
      const Vec3& p = seq.frames[f][i];
      out << f << ',' << i << ',' << p[0] << ',' << p[1] << ',' << p[2] << '\n';
    }
  }
}

}  // namespace sdyn
