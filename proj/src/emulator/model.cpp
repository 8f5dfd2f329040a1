#include "sdyn/emulator/model.hpp"

#include "sdyn/error.hpp"

namespace sdyn {

namespace {

std::vector<std::size_t> chain(std::size_t in, std::size_t width, std::size_t hidden,
                               std::size_t out) {
  std::vector<std::size_t> dims{in};
  for (std::size_t l = 0; l < hidden; ++l) dims.push_back(width);
  dims.push_back(out);
  return dims;
}

}  // namespace

std::vector<std::vector<std::size_t>> EmulatorModel::architecture(const EmulatorConfig& c) {
  return {chain(kInertiaWidth, c.inertia_width, c.hidden_layers, c.inertia_width),
          chain(kNeighborWidth, c.internal_width, c.hidden_layers, c.internal_width),
          chain(c.inertia_width + c.internal_width, c.head_width, c.hidden_layers, 3)};
}

EmulatorModel::EmulatorModel(const EmulatorConfig& c) : config(c) {
  const auto arch = architecture(c);
  inertia = Mlp(arch[0]);
  internal = Mlp(arch[1]);
  head = Mlp(arch[2]);
}

EmulatorModel EmulatorModel::initialized(const EmulatorConfig& c, std::uint64_t seed) {
  EmulatorModel m(c);
  const auto arch = architecture(c);
  Rng rng(seed);
  m.inertia = Mlp::xavier(arch[0], rng);
  m.internal = Mlp::xavier(arch[1], rng);
  m.head = Mlp::xavier(arch[2], rng);
  return m;
}

std::size_t EmulatorModel::parameter_count() const {
  return inertia.parameter_count() + internal.parameter_count() + head.parameter_count();
}

Eigen::VectorXd EmulatorModel::flat_parameters() const {
  Eigen::VectorXd p(static_cast<Eigen::Index>(parameter_count()));
  p << inertia.parameters(), internal.parameters(), head.parameters();
  return p;
}

void EmulatorModel::set_flat_parameters(const Eigen::VectorXd& p) {
  if (p.size() != static_cast<Eigen::Index>(parameter_count())) {
    throw Error(Errc::ShapeMismatch, "flat parameter vector has the wrong length");
  }
  const auto a = inertia.parameters().size(), b = internal.parameters().size();
  inertia.parameters() = p.head(a);
  internal.parameters() = p.segment(a, b);
  head.parameters() = p.tail(head.parameters().size());
}

Vec3 predict_vertex(const EmulatorModel& model, const PatchFeatures& patch) {
  if (patch.inertia_input.size() != static_cast<Eigen::Index>(model.inertia.input_size()) ||
      patch.neighbor_inputs.rows() != static_cast<Eigen::Index>(model.internal.input_size())) {
    throw Error(Errc::ShapeMismatch, "patch feature widths do not match the model");
  }
  const Eigen::VectorXd z_inertia = forward(model.inertia, patch.inertia_input).output;
  Eigen::VectorXd z_sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.internal.output_size()));
  if (patch.neighbor_inputs.cols() > 0) {
    z_sum = forward_batch(model.internal, patch.neighbor_inputs).output().rowwise().sum();
  }
  Eigen::VectorXd h(z_inertia.size() + z_sum.size());
  h << z_inertia, z_sum;
  return forward(model.head, h).output;
}

void save_emulator(const std::filesystem::path& path, const EmulatorModel& model,
                   const std::optional<AdamState>& optimizer, const nlohmann::json& extra) {
  Checkpoint ck;
  ck.networks = {model.inertia, model.internal, model.head};
  ck.optimizer = optimizer;
  const EmulatorConfig& c = model.config;
  ck.metadata = extra;
  ck.metadata["feature_layout"] = kFeatureLayout;
  ck.metadata["inertia_input_width"] = kInertiaWidth;
  ck.metadata["neighbor_input_width"] = kNeighborWidth;
  ck.metadata["use_reference_features"] = c.use_reference_features;
  ck.metadata["dt"] = c.dt;
  ck.metadata["voxel_size"] = c.voxel_size;
  ck.metadata["stiffness_scale"] = c.scales.stiffness;
  ck.metadata["mass_scale"] = c.scales.mass;
  ck.metadata["widths"] = {c.inertia_width, c.internal_width, c.head_width};
  ck.metadata["hidden_layers"] = c.hidden_layers;
  ck.metadata["parameter_count"] = model.parameter_count();
  save_checkpoint(path, ck);
}

LoadedEmulator load_emulator(const std::filesystem::path& path) {
  Checkpoint ck = load_checkpoint(path);
  const auto& meta = ck.metadata;
  if (meta.value("feature_layout", std::string()) != kFeatureLayout ||
      meta.value("inertia_input_width", 0u) != kInertiaWidth ||
      meta.value("neighbor_input_width", 0u) != kNeighborWidth) {
    throw Error(Errc::VersionMismatch, "checkpoint feature layout '" +
                                           meta.value("feature_layout", std::string("?")) +
                                           "' is not " + kFeatureLayout);
  }
  EmulatorConfig c;
  try {
    c.use_reference_features = meta.at("use_reference_features").get<bool>();
    c.dt = meta.at("dt").get<double>();
    c.voxel_size = meta.at("voxel_size").get<double>();
    c.scales.stiffness = meta.at("stiffness_scale").get<double>();
    c.scales.mass = meta.at("mass_scale").get<double>();
    const auto widths = meta.at("widths").get<std::vector<std::size_t>>();
    if (widths.size() != 3) throw Error(Errc::CorruptCheckpoint, "widths must list three values");
    c.inertia_width = widths[0];
    c.internal_width = widths[1];
    c.head_width = widths[2];
    c.hidden_layers = meta.at("hidden_layers").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptCheckpoint, std::string("emulator metadata: ") + e.what());
  }
  require_architecture(ck, EmulatorModel::architecture(c));
  EmulatorModel model(c);
  model.inertia = std::move(ck.networks[0]);
  model.internal = std::move(ck.networks[1]);
  model.head = std::move(ck.networks[2]);
  return {std::move(model), std::move(ck.optimizer), std::move(ck.metadata)};
}

}  // namespace sdyn
