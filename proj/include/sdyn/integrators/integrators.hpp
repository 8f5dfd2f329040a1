#pragma once

#include <cstddef>

#include "sdyn/fem/elastic.hpp"
#include "sdyn/integrators/reference.hpp"
#include "sdyn/integrators/sim_sequence.hpp"
#include "sdyn/meshkit/constraints.hpp"

namespace sdyn {

inline constexpr double kDefaultDt = 1.0 / 24.0;

// u, velocity and acceleration are displacements from the rest mesh.
struct DynamicState {
  Field u;
  Field velocity;
  Field acceleration;
  std::size_t frame_index = 0;
  double dt = kDefaultDt;
  bool exploded = false;
};

struct LinearSolverConfig {
  std::size_t max_iters = 0;  // 0 selects 10 * vertex count
  double rel_tolerance = 1e-6;
  double regularization = 0.0;  // added to the system diagonal
};

// Stiffness used in the Rayleigh term beta K: the warped tangent at the
// current state, or the rest-state stiffness K(0).
enum class DampingBasis { Current, Rest };

// Everything the time steppers need about one deformable object.
class SimulationSystem {
 public:
  SimulationSystem(const TetMesh& mesh, const MaterialField& material, ConstraintSet constraints,
                   DampingBasis damping = DampingBasis::Current);

  const ElasticModel& model() const { return model_; }
  const MaterialField& material() const { return material_; }
  const ConstraintSet& constraints() const { return constraints_; }
  const Eigen::VectorXd& mass() const { return mass_; }
  DampingBasis damping_basis() const { return damping_; }
  std::size_t size() const { return model_.size(); }

  // D(u) v = alpha M v + beta K_d v.
  Field damping_product(const Field& u, const Field& v) const;

  // A = M + dt D + dt^2 K(u) (+ regularization on the diagonal).
  BlockSparseMatrix implicit_matrix(const Field& u, double dt, double regularization = 0.0) const;
  // Same, reusing an already assembled K(u).
  BlockSparseMatrix implicit_matrix(const BlockSparseMatrix& K, double dt,
                                    double regularization) const;

 private:
  ElasticModel model_;
  MaterialField material_;
  ConstraintSet constraints_;
  Eigen::VectorXd mass_;
  DampingBasis damping_;
  BlockSparseMatrix rest_stiffness_;
};

// State at frame 0 of the reference, at rest (zero velocity).
DynamicState initial_state(const SimulationSystem& system, const ReferenceMotion& ref);

// One linearized backward-Euler step from frame t to t + 1. Constrained
// vertices are set to x(t + 1); the free-DOF system is solved with
// Jacobi-preconditioned CG. Throws Error(SolveDiverged, frame) and
// Error(NonFiniteState, frame).
DynamicState step_implicit(const DynamicState& state, const SimulationSystem& system,
                           const ReferenceMotion& ref, const LinearSolverConfig& solver = {});

// One frame of central differences split into `substeps` sub-intervals.
// Never throws on blow-up: the returned state has exploded = true once any
// value is non-finite or a displacement exceeds the explosion limit.
DynamicState step_explicit(const DynamicState& state, const SimulationSystem& system,
                           const ReferenceMotion& ref, std::size_t substeps);

struct SimulationMethod {
  enum class Kind { Implicit, Explicit } kind = Kind::Implicit;
  std::size_t substeps = 1;

  static SimulationMethod implicit() { return {}; }
  static SimulationMethod explicit_with(std::size_t substeps) { return {Kind::Explicit, substeps}; }
};

struct SimulationResult {
  SimSequence sequence;
  std::optional<std::size_t> exploded_at;  // explicit only; later frames are NaN
  std::vector<double> frame_seconds;       // wall-clock per stepped frame
};

SimulationResult simulate_sequence(const SimulationSystem& system, const ReferenceMotion& ref,
                                   const SimulationMethod& method,
                                   const LinearSolverConfig& solver = {});

// Preconditioned CG on the rows where `free_mask` is 1; the other entries of
// x are zero. Returns the iteration count or throws Error(SolveDiverged).
struct CgResult {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};
CgResult solve_masked_pcg(const BlockSparseMatrix& A, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& free_mask, Eigen::VectorXd& x,
                          std::size_t max_iters, double rel_tolerance);

}  // namespace sdyn
