#include "sdyn/fem/elastic.hpp"

#include <Eigen/LU>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "sdyn/error.hpp"

namespace sdyn {

namespace {

constexpr double kDegenerateDet = 1e-6;

struct TetStress {
  Mat3 rotation;
  Mat3 strain;  // sym(R^T F) - I
};

// Takes the displacement gradient H = F - I so small strains keep full
// precision and the rest state yields exactly zero stress.
TetStress corotated_strain(const Mat3& H) {
  if (H.isZero(0.0)) return {Mat3::Identity(), Mat3::Zero()};
  const Mat3 R = corotation(Mat3::Identity() + H);
  const Mat3 G = (R.transpose() - Mat3::Identity()) + R.transpose() * H;
  return {R, 0.5 * (G + G.transpose())};
}

Mat3 linear_stress(const Mat3& strain, const LameParameters& lame) {
  return 2.0 * lame.mu * strain + lame.lambda * strain.trace() * Mat3::Identity();
}

}  // namespace

Field to_field(const Positions& p) {
  Field f(static_cast<Eigen::Index>(3 * p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) f.segment<3>(3 * i) = p[i];
  return f;
}

Positions to_positions(const Field& f) {
  Positions p(static_cast<std::size_t>(f.size()) / 3);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = f.segment<3>(3 * i);
  return p;
}

Mat3 corotation(const Mat3& F) {
  if (!F.allFinite()) return Mat3::Identity();
  if (F.determinant() <= kDegenerateDet) return Mat3::Identity();
  // Closed-form symmetric eigensolve of F^T F = V diag(s^2) V^T, then
  // R = F V diag(1/s) V^T. Badly conditioned F goes through a full SVD.
  Eigen::SelfAdjointEigenSolver<Mat3> eig;
  eig.computeDirect(F.transpose() * F);
  const Vec3 s2 = eig.eigenvalues();
  if (s2.minCoeff() > 1e-8 * s2.maxCoeff()) {
    const Mat3& V = eig.eigenvectors();
    const Vec3 inv_s = s2.cwiseSqrt().cwiseInverse();
    return F * (V * inv_s.asDiagonal() * V.transpose());
  }
  Eigen::JacobiSVD<Mat3> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  Mat3 V = svd.matrixV();
  // Singular values are sorted descending; fold any reflection into the last.
  if (U.determinant() < 0.0) U.col(2) *= -1.0;
  if (V.determinant() < 0.0) V.col(2) *= -1.0;
  return U * V.transpose();
}

ElasticModel::ElasticModel(const TetMesh& mesh, const MaterialField& material)
    : mesh_(mesh), rest_(to_field(mesh.vertices())) {
  material.validate(mesh.size());
  const std::size_t m = mesh.tet_count();
  dm_inv_.resize(m);
  volume_.resize(m);
  young_.resize(m);
  lame_.resize(m);
  const auto& X = mesh.vertices();
  for (std::size_t t = 0; t < m; ++t) {
    const Tet& tet = mesh.tets()[t];
    Mat3 Dm;
    Dm.col(0) = X[tet[1]] - X[tet[0]];
    Dm.col(1) = X[tet[2]] - X[tet[0]];
    Dm.col(2) = X[tet[3]] - X[tet[0]];
    const double volume = Dm.determinant() / 6.0;
    if (!(volume > 0.0)) throw Error(Errc::DegenerateTet, "non-positive rest volume", t);
    dm_inv_[t] = Dm.inverse();
    volume_[t] = volume;
    young_[t] = 0.25 * (material.stiffness[tet[0]] + material.stiffness[tet[1]] +
                        material.stiffness[tet[2]] + material.stiffness[tet[3]]);
    lame_[t] = lame_from_young(young_[t], material.poisson);
  }

  pattern_ = BlockSparseMatrix::from_adjacency(mesh.all_neighbors());
  block_index_.resize(m);
  for (std::size_t t = 0; t < m; ++t) {
    const Tet& tet = mesh.tets()[t];
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        block_index_[t][4 * a + b] = static_cast<std::uint32_t>(*pattern_.find(tet[a], tet[b]));
      }
    }
  }
}

std::array<Vec3, 4> ElasticModel::shape_gradients(std::size_t tet) const {
  const Mat3& Dinv = dm_inv_[tet];
  std::array<Vec3, 4> g;
  g[1] = Dinv.row(0).transpose();
  g[2] = Dinv.row(1).transpose();
  g[3] = Dinv.row(2).transpose();
  g[0] = -(g[1] + g[2] + g[3]);
  return g;
}

Mat3 ElasticModel::deformation_gradient(std::size_t tet, const Field& u) const {
  const Tet& t = mesh_.tets()[tet];
  const auto& X = mesh_.vertices();
  const Vec3 x0 = X[t[0]] + u.segment<3>(3 * t[0]);
  Mat3 Ds;
  for (int k = 1; k < 4; ++k) Ds.col(k - 1) = X[t[k]] + u.segment<3>(3 * t[k]) - x0;
  return Ds * dm_inv_[tet];
}

Mat3 ElasticModel::displacement_gradient(std::size_t tet, const Field& u) const {
  const Tet& t = mesh_.tets()[tet];
  const Vec3 u0 = u.segment<3>(3 * t[0]);
  Mat3 Du;
  for (int k = 1; k < 4; ++k) Du.col(k - 1) = u.segment<3>(3 * t[k]) - u0;
  return Du * dm_inv_[tet];
}

Field ElasticModel::internal_forces(const Field& u) const {
  Field f = Field::Zero(rest_.size());
  for (std::size_t t = 0; t < mesh_.tet_count(); ++t) {
    const auto [R, strain] = corotated_strain(displacement_gradient(t, u));
    const Mat3 P = R * linear_stress(strain, lame_[t]);
    const Mat3 H = -volume_[t] * P * dm_inv_[t].transpose();
    const Tet& tet = mesh_.tets()[t];
    f.segment<3>(3 * tet[1]) += H.col(0);
    f.segment<3>(3 * tet[2]) += H.col(1);
    f.segment<3>(3 * tet[3]) += H.col(2);
    f.segment<3>(3 * tet[0]) -= H.col(0) + H.col(1) + H.col(2);
  }
  return f;
}

std::vector<double> ElasticModel::tet_energies(const Field& u) const {
  std::vector<double> e(mesh_.tet_count());
  for (std::size_t t = 0; t < e.size(); ++t) {
    const auto [R, strain] = corotated_strain(displacement_gradient(t, u));
    const double tr = strain.trace();
    e[t] = volume_[t] * (lame_[t].mu * strain.squaredNorm() + 0.5 * lame_[t].lambda * tr * tr);
  }
  return e;
}

double ElasticModel::elastic_energy(const Field& u) const {
  double total = 0.0;
  for (double e : tet_energies(u)) total += e;
  return total;
}

BlockSparseMatrix ElasticModel::stiffness_matrix(const Field& u) const {
  BlockSparseMatrix K = pattern_;
  for (std::size_t t = 0; t < mesh_.tet_count(); ++t) {
    const Mat3 R = corotation(deformation_gradient(t, u));
    const auto g = shape_gradients(t);
    const double V = volume_[t];
    const auto [mu, lambda] = lame_[t];
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        const Mat3 local = V * (mu * g[a].dot(g[b]) * Mat3::Identity() +
                                mu * g[b] * g[a].transpose() + lambda * g[a] * g[b].transpose());
        K.block(block_index_[t][4 * a + b]) += R * local * R.transpose();
      }
    }
  }
  return K;
}

Field ElasticModel::stiffness_product(const Field& u, const Field& v) const {
  Field y = Field::Zero(rest_.size());
  for (std::size_t t = 0; t < mesh_.tet_count(); ++t) {
    const Mat3 R = corotation(deformation_gradient(t, u));
    const Tet& tet = mesh_.tets()[t];
    Mat3 dDs;
    const Vec3 v0 = v.segment<3>(3 * tet[0]);
    for (int k = 1; k < 4; ++k) dDs.col(k - 1) = v.segment<3>(3 * tet[k]) - v0;
    const Mat3 dF = R.transpose() * dDs * dm_inv_[t];
    const Mat3 dstrain = 0.5 * (dF + dF.transpose());
    const Mat3 H = volume_[t] * R * linear_stress(dstrain, lame_[t]) * dm_inv_[t].transpose();
    y.segment<3>(3 * tet[1]) += H.col(0);
    y.segment<3>(3 * tet[2]) += H.col(1);
    y.segment<3>(3 * tet[3]) += H.col(2);
    y.segment<3>(3 * tet[0]) -= H.col(0) + H.col(1) + H.col(2);
  }
  return y;
}

ElasticModel build_elastic_model(const TetMesh& mesh, const MaterialField& material) {
  return ElasticModel(mesh, material);
}

Eigen::VectorXd lumped_mass_field(const MaterialField& material) {
  Eigen::VectorXd m(static_cast<Eigen::Index>(3 * material.mass.size()));
  for (std::size_t i = 0; i < material.mass.size(); ++i) m.segment<3>(3 * i).setConstant(material.mass[i]);
  return m;
}

MassDamping mass_and_damping(const TetMesh& mesh, const MaterialField& material,
                             const ElasticModel& model) {
  material.validate(mesh.size());
  if (model.size() != mesh.size()) throw Error(Errc::LengthMismatch, "model and mesh differ");
  MassDamping out;
  out.mass = BlockSparseMatrix::diagonal(lumped_mass_field(material));
  out.damping = model.stiffness_matrix(Field::Zero(3 * static_cast<Eigen::Index>(mesh.size())));
  out.damping.scale(material.rayleigh_beta);
  out.damping.add_scaled(material.rayleigh_alpha, out.mass);
  return out;
}

}  // namespace sdyn
