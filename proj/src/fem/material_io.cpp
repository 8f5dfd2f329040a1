#include <fstream>

#include "json.hpp"
#include "sdyn/error.hpp"
#include "sdyn/fem/material.hpp"

namespace sdyn {

void write_material_json(const std::filesystem::path& path, const MaterialField& material) {
  nlohmann::json j;
  j["poisson"] = material.poisson;
  j["rayleigh_alpha"] = material.rayleigh_alpha;
  j["rayleigh_beta"] = material.rayleigh_beta;
  j["mass"] = material.mass;
  j["stiffness"] = material.stiffness;
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string());
  out << j.dump() << '\n';
}

MaterialField read_material_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    MaterialField m;
    m.poisson = j.at("poisson").get<double>();
    m.rayleigh_alpha = j.at("rayleigh_alpha").get<double>();
    m.rayleigh_beta = j.at("rayleigh_beta").get<double>();
    m.mass = j.at("mass").get<std::vector<double>>();
    m.stiffness = j.at("stiffness").get<std::vector<double>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Io, path.string() + ": " + e.what());
  }
}

}  // namespace sdyn
