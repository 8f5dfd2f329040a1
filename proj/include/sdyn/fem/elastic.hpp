#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "sdyn/fem/block_sparse.hpp"
#include "sdyn/fem/material.hpp"
#include "sdyn/meshkit/tet_mesh.hpp"

namespace sdyn {

// Flat per-vertex 3D field, layout [x0 y0 z0 x1 y1 z1 ...].
using Field = Eigen::VectorXd;

Field to_field(const Positions& p);
Positions to_positions(const Field& f);

// Rotation factor of F's polar decomposition, with the reflection folded into
// the smallest singular value. Inverted or degenerate F (det <= 1e-6) and
// non-finite F yield the identity.
Mat3 corotation(const Mat3& F);

// Corotational linear tetrahedral elasticity on a fixed rest mesh.
//
// Per tet: F = Ds Dm^-1, R = corotation(F), eps = sym(R^T F) - I,
//   energy density psi = mu eps:eps + lambda/2 tr(eps)^2,
// which equals 1/2 (R^T x - X)^T K_lin (R^T x - X) for the linear-FEM element
// stiffness K_lin. Tet Lame parameters come from the mean of the four vertex
// Young's moduli and the global Poisson ratio.
class ElasticModel {
 public:
  // Throws Error(DegenerateTet, index) for a non-positive rest volume.
  ElasticModel(const TetMesh& mesh, const MaterialField& material);

  const TetMesh& mesh() const { return mesh_; }
  std::size_t size() const { return mesh_.size(); }
  const Field& rest() const { return rest_; }

  double rest_volume(std::size_t tet) const { return volume_[tet]; }
  const Mat3& rest_inverse(std::size_t tet) const { return dm_inv_[tet]; }
  double tet_stiffness(std::size_t tet) const { return young_[tet]; }
  LameParameters lame(std::size_t tet) const { return lame_[tet]; }

  Mat3 deformation_gradient(std::size_t tet, const Field& u) const;
  // F - I computed from displacement differences.
  Mat3 displacement_gradient(std::size_t tet, const Field& u) const;

  // Elastic force on each vertex, -dE/du.
  Field internal_forces(const Field& u) const;
  double elastic_energy(const Field& u) const;
  std::vector<double> tet_energies(const Field& u) const;

  // Tangent of the gradient dE/du with per-tet rotations frozen at u
  // (stiffness warping): blocks R K_ab R^T. Symmetric positive semidefinite.
  BlockSparseMatrix stiffness_matrix(const Field& u) const;
  // stiffness_matrix(u) * v without assembling.
  Field stiffness_product(const Field& u, const Field& v) const;

  // Zeroed matrix with the mesh's block pattern.
  const BlockSparseMatrix& pattern() const { return pattern_; }

 private:
  std::array<Vec3, 4> shape_gradients(std::size_t tet) const;

  TetMesh mesh_;
  Field rest_;
  std::vector<Mat3> dm_inv_;
  std::vector<double> volume_;
  std::vector<double> young_;
  std::vector<LameParameters> lame_;
  BlockSparseMatrix pattern_;
  std::vector<std::array<std::uint32_t, 16>> block_index_;
};

ElasticModel build_elastic_model(const TetMesh& mesh, const MaterialField& material);

struct MassDamping {
  BlockSparseMatrix mass;     // diag(m_i) per axis
  BlockSparseMatrix damping;  // alpha M + beta K(0), on the stiffness pattern
};

MassDamping mass_and_damping(const TetMesh& mesh, const MaterialField& material,
                             const ElasticModel& model);

// m_i repeated per axis.
Eigen::VectorXd lumped_mass_field(const MaterialField& material);

}  // namespace sdyn
