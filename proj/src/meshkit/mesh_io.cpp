#include "sdyn/meshkit/mesh_io.hpp"

#include <fstream>
#include <iomanip>
#include "json.hpp"
#include <sstream>

#include "../util/binary_io.hpp"
#include "sdyn/error.hpp"

namespace sdyn {

namespace {
constexpr std::uint32_t kPdtmVersion = 1;
}

void write_pdtm(const std::filesystem::path& path, const TetMesh& mesh) {
  detail::BinaryWriter w;
  w.magic("PDTM");
  w.pod(kPdtmVersion);
  w.pod(static_cast<std::uint32_t>(mesh.size()));
  w.pod(static_cast<std::uint32_t>(mesh.tet_count()));
  for (const Vec3& v : mesh.vertices()) {
    for (int a = 0; a < 3; ++a) w.pod(v[a]);
  }
  for (const Tet& t : mesh.tets()) {
    for (std::uint32_t id : t) w.pod(id);
  }
  w.save(path);
}

TetMesh read_pdtm(const std::filesystem::path& path) {
  detail::BinaryReader r(path, Errc::Io);
  if (!r.magic("PDTM")) throw Error(Errc::Io, "not a PDTM file: " + path.string());
  const auto version = r.pod<std::uint32_t>();
  if (version != kPdtmVersion) {
    throw Error(Errc::VersionMismatch, "unsupported PDTM version " + std::to_string(version));
  }
  const auto n = r.pod<std::uint32_t>();
  const auto m = r.pod<std::uint32_t>();
  const auto coords = r.array<double>(3 * static_cast<std::size_t>(n));
  const auto ids = r.array<std::uint32_t>(4 * static_cast<std::size_t>(m));
  Positions vertices(n);
  for (std::size_t i = 0; i < n; ++i) vertices[i] = Vec3(coords[3 * i], coords[3 * i + 1], coords[3 * i + 2]);
  std::vector<Tet> tets(m);
  for (std::size_t t = 0; t < m; ++t) tets[t] = {ids[4 * t], ids[4 * t + 1], ids[4 * t + 2], ids[4 * t + 3]};
  return TetMesh(std::move(vertices), std::move(tets));
}

void write_tet_text(const std::filesystem::path& path, const TetMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string());
  out << "pdtm-text 1\n" << mesh.size() << ' ' << mesh.tet_count() << '\n';
  out << std::setprecision(17);
  for (const Vec3& v : mesh.vertices()) out << "v " << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  for (const Tet& t : mesh.tets()) out << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
}

TetMesh read_tet_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::string tag;
  int version = 0;
  std::size_t n = 0, m = 0;
  if (!(in >> tag >> version) || tag != "pdtm-text") {
    throw Error(Errc::Io, "not a pdtm-text file: " + path.string());
  }
  if (version != 1) throw Error(Errc::VersionMismatch, "unsupported pdtm-text version");
  if (!(in >> n >> m)) throw Error(Errc::Io, "bad pdtm-text header");
  Positions vertices(n);
  for (auto& v : vertices) {
    if (!(in >> tag >> v[0] >> v[1] >> v[2]) || tag != "v") throw Error(Errc::Io, "bad vertex record");
  }
  std::vector<Tet> tets(m);
  for (auto& t : tets) {
    if (!(in >> tag >> t[0] >> t[1] >> t[2] >> t[3]) || tag != "t") throw Error(Errc::Io, "bad tet record");
  }
  return TetMesh(std::move(vertices), std::move(tets));
}

TetMesh read_tet_mesh(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  char head[4] = {};
  in.read(head, 4);
  if (in.gcount() == 4 && std::string_view(head, 4) == "PDTM") return read_pdtm(path);
  return read_tet_text(path);
}

SurfaceMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  SurfaceMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  auto resolve = [&](const std::string& token) -> std::uint32_t {
    const long idx = std::stol(token.substr(0, token.find('/')));
    const long n = static_cast<long>(mesh.vertices.size());
    const long zero_based = idx < 0 ? n + idx : idx - 1;
    if (idx == 0 || zero_based < 0 || zero_based >= n) {
      throw Error(Errc::Io, "face index out of range", line_no);
    }
    return static_cast<std::uint32_t>(zero_based);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string kind;
    ss >> kind;
    if (kind == "v") {
      Vec3 p;
      if (!(ss >> p[0] >> p[1] >> p[2])) throw Error(Errc::Io, "bad vertex record", line_no);
      mesh.vertices.push_back(p);
    } else if (kind == "f") {
      std::vector<std::uint32_t> ids;
      std::string token;
      while (ss >> token) ids.push_back(resolve(token));
      if (ids.size() != 3) throw Error(Errc::Io, "only triangular faces are supported", line_no);
      mesh.faces.push_back({ids[0], ids[1], ids[2]});
    }
  }
  return mesh;
}

void write_obj(const std::filesystem::path& path, const Positions& vertices,
               const std::vector<Triangle>& faces) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string());
  out << std::setprecision(9);
  for (const Vec3& v : vertices) out << "v " << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  for (const Triangle& f : faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

void write_constraints_json(const std::filesystem::path& path, const ConstraintSet& constraints) {
  nlohmann::json j;
  j["vertex_count"] = constraints.size();
  j["constrained"] = constraints.constrained_indices();
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string());
  out << j.dump(1) << '\n';
}

ConstraintSet read_constraints_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    const auto n = j.at("vertex_count").get<std::size_t>();
    std::vector<std::uint8_t> flags(n, 0);
    for (std::size_t i : j.at("constrained").get<std::vector<std::size_t>>()) {
      if (i >= n) throw Error(Errc::Io, "constrained index out of range", i);
      flags[i] = 1;
    }
    return ConstraintSet(std::move(flags));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Io, path.string() + ": " + e.what());
  }
}

}  // namespace sdyn
