#include "sdyn/emulator/features.hpp"

#include "sdyn/error.hpp"

namespace sdyn {

namespace {

template <typename S>
void write_material(const MaterialField& m, std::uint32_t v, const FeatureScales& sc, S* out) {
  const double k = m.stiffness[v] / sc.stiffness;
  const double mass = m.mass[v] / sc.mass;
  out[0] = static_cast<S>(k);
  out[1] = static_cast<S>(mass);
  out[2] = static_cast<S>(k / mass);
}

template <typename S>
void write_positions(const FrameWindow& w, std::uint32_t v, const Vec3& origin, bool use_ref,
                     S* out) {
  for (int s = 0; s < 3; ++s) {
    const Vec3 d = (*w.dynamic[s])[v] - origin;
    for (int a = 0; a < 3; ++a) out[3 * s + a] = static_cast<S>(d[a]);
  }
  for (int s = 0; s < 3; ++s) {
    const Vec3 d = use_ref ? Vec3((*w.reference[s])[v] - origin) : Vec3::Zero();
    for (int a = 0; a < 3; ++a) out[9 + 3 * s + a] = static_cast<S>(d[a]);
  }
}

}  // namespace

template <typename S>
void write_center_features(const FrameWindow& w, const MaterialField& material, std::uint32_t i,
                           const FeatureConfig& config, S* out) {
  const Vec3& origin = (*w.reference[1])[i];
  write_positions(w, i, origin, config.use_reference_features, out);
  write_material(material, i, config.scales, out + feature::kMaterial);
}

template <typename S>
void write_neighbor_features(const FrameWindow& w, const MaterialField& material,
                             const ConstraintSet& constraints, std::uint32_t i, std::uint32_t j,
                             const FeatureConfig& config, const S* center, S* out) {
  std::copy(center, center + kInertiaWidth, out);
  const Vec3& origin = (*w.reference[1])[i];
  write_positions(w, j, origin, config.use_reference_features, out + feature::kNeighborDynamic);
  write_material(material, j, config.scales, out + feature::kNeighborMaterial);
  out[feature::kNeighborConstraint] = constraints.constrained(j) ? S(1) : S(0);
}

template void write_center_features<double>(const FrameWindow&, const MaterialField&,
                                            std::uint32_t, const FeatureConfig&, double*);
template void write_center_features<float>(const FrameWindow&, const MaterialField&,
                                           std::uint32_t, const FeatureConfig&, float*);
template void write_neighbor_features<double>(const FrameWindow&, const MaterialField&,
                                              const ConstraintSet&, std::uint32_t, std::uint32_t,
                                              const FeatureConfig&, const double*, double*);
template void write_neighbor_features<float>(const FrameWindow&, const MaterialField&,
                                             const ConstraintSet&, std::uint32_t, std::uint32_t,
                                             const FeatureConfig&, const float*, float*);

PatchFeatures extract_patch_features(const TetMesh& mesh, const MaterialField& material,
                                     const ConstraintSet& constraints,
                                     const std::array<const Positions*, 3>& dynamic,
                                     const ReferenceMotion& ref, std::size_t t, std::uint32_t i,
                                     const FeatureConfig& config) {
  if (i >= mesh.size()) throw Error(Errc::InvalidArgument, "vertex index out of range", i);
  if (constraints.constrained(i)) throw Error(Errc::ConstrainedCenter, "center vertex is constrained", i);
  if (t < 2 || t + 1 >= ref.frame_count()) {
    throw Error(Errc::InvalidArgument, "frame needs two frames of history and one of lookahead", t);
  }
  const FrameWindow w{dynamic, {&ref.frame(t + 1), &ref.frame(t), &ref.frame(t - 1)}};
  PatchFeatures p;
  p.center_index = i;
  p.inertia_input.resize(kInertiaWidth);
  write_center_features(w, material, i, config, p.inertia_input.data());
  const auto nbrs = mesh.neighbors(i);
  p.neighbor_indices.assign(nbrs.begin(), nbrs.end());
  p.neighbor_inputs.resize(kNeighborWidth, static_cast<Eigen::Index>(nbrs.size()));
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    write_neighbor_features(w, material, constraints, i, nbrs[k], config, p.inertia_input.data(),
                            p.neighbor_inputs.col(static_cast<Eigen::Index>(k)).data());
  }
  return p;
}

}  // namespace sdyn
