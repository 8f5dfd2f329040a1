#include "sdyn/integrators/integrators.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "sdyn/error.hpp"

namespace sdyn {

namespace {

// Displacements beyond this multiple of the mesh diagonal count as blow-up.
constexpr double kExplosionScale = 1e6;

Eigen::VectorXd free_mask(const ConstraintSet& c) {
  Eigen::VectorXd mask(static_cast<Eigen::Index>(3 * c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) mask.segment<3>(3 * i).setConstant(c.constrained(i) ? 0.0 : 1.0);
  return mask;
}

}  // namespace

SimulationSystem::SimulationSystem(const TetMesh& mesh, const MaterialField& material,
                                   ConstraintSet constraints, DampingBasis damping)
    : model_(mesh, material),
      material_(material),
      constraints_(std::move(constraints)),
      mass_(lumped_mass_field(material)),
      damping_(damping) {
  if (constraints_.size() != mesh.size()) {
    throw Error(Errc::LengthMismatch, "constraint flags do not match the mesh");
  }
  if (damping_ == DampingBasis::Rest) {
    rest_stiffness_ = model_.stiffness_matrix(Field::Zero(static_cast<Eigen::Index>(3 * mesh.size())));
  }
}

Field SimulationSystem::damping_product(const Field& u, const Field& v) const {
  Field out = material_.rayleigh_alpha * mass_.cwiseProduct(v);
  if (material_.rayleigh_beta != 0.0) {
    out += material_.rayleigh_beta *
           (damping_ == DampingBasis::Rest ? rest_stiffness_.multiply(v) : model_.stiffness_product(u, v));
  }
  return out;
}

BlockSparseMatrix SimulationSystem::implicit_matrix(const Field& u, double dt,
                                                    double regularization) const {
  return implicit_matrix(model_.stiffness_matrix(u), dt, regularization);
}

BlockSparseMatrix SimulationSystem::implicit_matrix(const BlockSparseMatrix& K, double dt,
                                                    double regularization) const {
  BlockSparseMatrix A = K;
  A.scale(dt * dt + (damping_ == DampingBasis::Current ? dt * material_.rayleigh_beta : 0.0));
  if (damping_ == DampingBasis::Rest) A.add_scaled(dt * material_.rayleigh_beta, rest_stiffness_);
  Eigen::VectorXd diag = (1.0 + dt * material_.rayleigh_alpha) * mass_;
  diag.array() += regularization;
  A.add_scaled(1.0, BlockSparseMatrix::diagonal(diag));
  return A;
}

DynamicState initial_state(const SimulationSystem& system, const ReferenceMotion& ref) {
  if (ref.vertex_count() != system.size()) {
    throw Error(Errc::LengthMismatch, "reference does not match the mesh");
  }
  DynamicState s;
  s.u = ref.field(0) - system.model().rest();
  s.velocity = Field::Zero(s.u.size());
  s.acceleration = Field::Zero(s.u.size());
  s.frame_index = 0;
  s.dt = ref.dt();
  return s;
}

CgResult solve_masked_pcg(const BlockSparseMatrix& A, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& mask, Eigen::VectorXd& x, std::size_t max_iters,
                          double rel_tolerance) {
  const Eigen::VectorXd rhs = b.cwiseProduct(mask);
  x = Eigen::VectorXd::Zero(b.size());
  const double b_norm = rhs.norm();
  if (b_norm == 0.0) return {0, 0.0};

  Eigen::VectorXd inv_diag = A.diagonal_entries();
  for (Eigen::Index k = 0; k < inv_diag.size(); ++k) {
    inv_diag[k] = (mask[k] != 0.0 && inv_diag[k] > 0.0) ? 1.0 / inv_diag[k] : 0.0;
  }
  Eigen::VectorXd r = rhs;
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  Eigen::VectorXd Ap(b.size());
  double rz = r.dot(z);
  for (std::size_t it = 1; it <= max_iters; ++it) {
    A.multiply(p, Ap);
    Ap.array() *= mask.array();
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) throw Error(Errc::SolveDiverged, "system matrix is not positive definite");
    const double alpha = rz / pAp;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * Ap;
    const double rel = r.norm() / b_norm;
    if (rel < rel_tolerance) return {it, rel};
    z = inv_diag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  throw Error(Errc::SolveDiverged,
              "CG did not converge in " + std::to_string(max_iters) + " iterations");
}

DynamicState step_implicit(const DynamicState& state, const SimulationSystem& system,
                           const ReferenceMotion& ref, const LinearSolverConfig& solver) {
  const std::size_t t = state.frame_index;
  if (t + 1 >= ref.frame_count()) throw Error(Errc::InvalidArgument, "no reference frame to step to", t);
  if (!state.u.allFinite() || !state.velocity.allFinite()) {
    throw Error(Errc::NonFiniteState, "implicit step started from a non-finite state", t);
  }
  const double dt = state.dt;
  const auto& constraints = system.constraints();
  const Field& rest = system.model().rest();
  const Field x_now = ref.field(t);
  const Field x_next = ref.field(t + 1);
  const Eigen::VectorXd mask = free_mask(constraints);

  const Field& u = state.u;
  const Field& v = state.velocity;
  const BlockSparseMatrix K = system.model().stiffness_matrix(u);
  const BlockSparseMatrix A = system.implicit_matrix(K, dt, solver.regularization);
  const Field gradient = -system.model().internal_forces(u);
  const double alpha = system.material().rayleigh_alpha;
  const double beta = system.material().rayleigh_beta;
  Field b;
  if (system.damping_basis() == DampingBasis::Current) {
    b = -dt * (gradient + alpha * system.mass().cwiseProduct(v) + (beta + dt) * K.multiply(v));
  } else {
    b = -dt * (gradient + system.damping_product(u, v) + dt * K.multiply(v));
  }

  // Prescribed velocity change of constrained DOFs moves to the right-hand side.
  Field dv_constrained = Field::Zero(u.size());
  for (std::uint32_t i : constraints.constrained_indices()) {
    const Vec3 v_next = (x_next.segment<3>(3 * i) - x_now.segment<3>(3 * i)) / dt;
    dv_constrained.segment<3>(3 * i) = v_next - v.segment<3>(3 * i);
  }
  const Field rhs = b - A.multiply(dv_constrained);

  Field dv_free;
  const std::size_t max_iters = solver.max_iters ? solver.max_iters : 10 * system.size();
  try {
    solve_masked_pcg(A, rhs, mask, dv_free, max_iters, solver.rel_tolerance);
  } catch (const Error& e) {
    throw Error(Errc::SolveDiverged, e.what(), t);
  }

  DynamicState next;
  next.dt = dt;
  next.frame_index = t + 1;
  const Field dv = dv_free + dv_constrained;
  next.velocity = v + dv;
  next.acceleration = dv / dt;
  next.u = u + dt * next.velocity;
  for (std::uint32_t i : constraints.constrained_indices()) {
    next.u.segment<3>(3 * i) = x_next.segment<3>(3 * i) - rest.segment<3>(3 * i);
  }
  if (!next.u.allFinite() || !next.velocity.allFinite()) {
    throw Error(Errc::NonFiniteState, "implicit step produced a non-finite state", t + 1);
  }
  return next;
}

DynamicState step_explicit(const DynamicState& state, const SimulationSystem& system,
                           const ReferenceMotion& ref, std::size_t substeps) {
  if (substeps == 0) throw Error(Errc::InvalidArgument, "substeps must be at least 1");
  const std::size_t t = state.frame_index;
  if (t + 1 >= ref.frame_count()) throw Error(Errc::InvalidArgument, "no reference frame to step to", t);

  DynamicState next = state;
  next.frame_index = t + 1;
  if (state.exploded) return next;

  const double dt = state.dt;
  const double h = dt / static_cast<double>(substeps);
  const auto& constraints = system.constraints();
  const Field& rest = system.model().rest();
  const Field x_now = ref.field(t);
  const Field x_next = ref.field(t + 1);
  const Eigen::VectorXd mask = free_mask(constraints);
  const Eigen::VectorXd inv_mass = system.mass().cwiseInverse().cwiseProduct(mask);
  const Aabb box = system.model().mesh().bounds();
  const double limit = kExplosionScale * (box.hi - box.lo).norm();

  auto acceleration = [&](const Field& u, const Field& v) -> Field {
    return inv_mass.cwiseProduct(system.model().internal_forces(u) - system.damping_product(u, v));
  };

  Field u = state.u;
  Field v = state.velocity;
  for (std::uint32_t i : constraints.constrained_indices()) {
    v.segment<3>(3 * i) = (x_next.segment<3>(3 * i) - x_now.segment<3>(3 * i)) / dt;
  }
  Field a0 = acceleration(u, v);
  for (std::size_t k = 0; k < substeps; ++k) {
    Field u_next = u + h * v + (0.5 * h * h) * a0;
    const double s = static_cast<double>(k + 1) / static_cast<double>(substeps);
    for (std::uint32_t i : constraints.constrained_indices()) {
      u_next.segment<3>(3 * i) = (x_now.segment<3>(3 * i) - rest.segment<3>(3 * i)) +
                                 s * (x_next.segment<3>(3 * i) - x_now.segment<3>(3 * i));
    }
    const Field v_predicted = v + h * a0.cwiseProduct(mask);
    const Field a1 = acceleration(u_next, v_predicted);
    v += (0.5 * h) * (a0 + a1);
    u = std::move(u_next);
    if (!u.allFinite() || !v.allFinite() || u.cwiseAbs().maxCoeff() > limit) {
      next.exploded = true;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      next.u.setConstant(nan);
      next.velocity.setConstant(nan);
      next.acceleration.setConstant(nan);
      return next;
    }
    // The next substep starts from the post-update state.
    a0 = k + 1 < substeps ? acceleration(u, v) : a1;
  }
  next.u = u;
  for (std::uint32_t i : constraints.constrained_indices()) {
    next.u.segment<3>(3 * i) = x_next.segment<3>(3 * i) - rest.segment<3>(3 * i);
  }
  next.velocity = v;
  next.acceleration = a0;
  return next;
}

SimulationResult simulate_sequence(const SimulationSystem& system, const ReferenceMotion& ref,
                                   const SimulationMethod& method,
                                   const LinearSolverConfig& solver) {
  using Clock = std::chrono::steady_clock;
  SimulationResult result;
  result.sequence.dt = ref.dt();
  result.sequence.frames.reserve(ref.frame_count());
  const Field& rest = system.model().rest();

  // Constrained vertices are copied from the reference so they match it
  // bit for bit rather than through rest + (x - rest).
  const auto& constrained = system.constraints().constrained_indices();
  auto frame_positions = [&](const DynamicState& s, std::size_t t) {
    Positions p = to_positions(rest + s.u);
    if (!s.exploded) {
      for (std::uint32_t i : constrained) p[i] = ref.frame(t)[i];
    }
    return p;
  };

  DynamicState state = initial_state(system, ref);
  result.sequence.frames.push_back(frame_positions(state, 0));
  for (std::size_t t = 0; t + 1 < ref.frame_count(); ++t) {
    const auto start = Clock::now();
    if (method.kind == SimulationMethod::Kind::Implicit) {
      state = step_implicit(state, system, ref, solver);
    } else {
      state = step_explicit(state, system, ref, method.substeps);
    }
    result.frame_seconds.push_back(std::chrono::duration<double>(Clock::now() - start).count());
    if (state.exploded && !result.exploded_at) result.exploded_at = t + 1;
    result.sequence.frames.push_back(frame_positions(state, t + 1));
  }
  return result;
}

}  // namespace sdyn
