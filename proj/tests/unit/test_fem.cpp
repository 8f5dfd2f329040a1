#include <cmath>

#include "sdyn/fem/elastic.hpp"
#include "test_support.hpp"

using namespace sdyn;

namespace {

// Voxel centers at x = 0 and x = 0.2.
TetMesh two_voxels() {
  auto inside = [](const Vec3& p) { return p.x() > -0.1 && p.x() < 0.3 && p.tail<2>().cwiseAbs().maxCoeff() < 0.1; };
  return voxelize(inside, Aabb{Vec3(-0.2, -0.2, -0.2), Vec3(0.4, 0.2, 0.2)}, 0.2);
}

Mat3 random_rotation(Rng& rng) {
  return Eigen::AngleAxisd(rng.uniform(-3.0, 3.0), rng.unit_vector()).toRotationMatrix();
}

Field random_field(Rng& rng, std::size_t n, double scale) {
  Field f(3 * n);
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = rng.uniform(-scale, scale);
  return f;
}

// Displacement that maps the rest mesh through x -> R x + t.
Field rigid_displacement(const ElasticModel& m, const Mat3& R, const Vec3& t) {
  Field u(m.rest().size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Vec3 X = m.rest().segment<3>(3 * i);
    u.segment<3>(3 * i) = R * X + t - X;
  }
  return u;
}

double rel_l2(const Field& a, const Field& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace

TEST_CASE("Lame parameters from Young's modulus and Poisson ratio") {
  const LameParameters p = lame_from_young(1e4, 0.45);
  CHECK(p.mu == doctest::Approx(1e4 / 2.9));
  CHECK(p.lambda == doctest::Approx(1e4 * 0.45 / (1.45 * 0.1)));
}

TEST_CASE("lumped mass sums to density times volume") {
  const TetMesh mesh = voxelize_primitive(Sphere{1.0}, 0.2);
  const auto m = lumped_mass(mesh, 100.0);
  double total = 0.0, volume = 0.0;
  for (double v : m) {
    CHECK(v > 0.0);
    total += v;
  }
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) volume += mesh.signed_volume(t);
  CHECK(total == doctest::Approx(100.0 * volume).epsilon(1e-12));
  // An interior vertex of the cube lattice touches 24 tets of volume h^3 / 6.
  const TetMesh box = voxelize_primitive(Box{Vec3(0.6, 0.6, 0.6)}, 0.2);
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (box.vertices()[i].cwiseAbs().maxCoeff() < 0.15) CHECK(lumped_mass(box, 1.0)[i] == doctest::Approx(0.008));
  }
}

TEST_CASE("material validation, painting and JSON round-trip") {
  const TetMesh mesh = two_voxels();
  MaterialField m = homogeneous_material(mesh, 1e4);
  CHECK_NOTHROW(m.validate(mesh.size()));
  CHECK_ERRC(m.validate(mesh.size() + 1), Errc::LengthMismatch);
  MaterialField bad = m;
  bad.stiffness[3] = 0.0;
  CHECK_ERRC(bad.validate(mesh.size()), Errc::InvalidArgument);
  bad = m;
  bad.poisson = 0.5;
  CHECK_ERRC(bad.validate(mesh.size()), Errc::InvalidArgument);

  const std::size_t painted = paint_material(m, mesh, [](const Vec3& p) { return p.x() > 0.05; }, 5e4, 2.0);
  std::size_t expect = 0;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const bool in = mesh.vertices()[i].x() > 0.05;
    expect += in;
    CHECK(m.stiffness[i] == (in ? 5e4 : 1e4));
    if (in) CHECK(m.mass[i] == 2.0);
  }
  CHECK(painted == expect);
  CHECK_ERRC(paint_material(m, mesh, [](const Vec3&) { return true; }, -1.0), Errc::InvalidArgument);

  const auto dir = test::scratch_dir("fem_material");
  write_material_json(dir / "m.json", m);
  const MaterialField back = read_material_json(dir / "m.json");
  CHECK(back.stiffness == m.stiffness);
  CHECK(back.mass == m.mass);
  CHECK(back.poisson == m.poisson);
  CHECK(back.rayleigh_alpha == m.rayleigh_alpha);
  CHECK(back.rayleigh_beta == m.rayleigh_beta);
}

TEST_CASE("corotation extracts the rotation of F = R S") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Mat3 R = random_rotation(rng);
    Mat3 A = Mat3::Random();
    const Mat3 S = A * A.transpose() + 0.5 * Mat3::Identity();
    const Mat3 got = corotation(R * S);
    CHECK((got - R).norm() < 1e-8);
  }
  // Reflections are folded into a proper rotation.
  const Mat3 reflect = Vec3(1.0, 1.0, -0.5).asDiagonal();
  CHECK(corotation(reflect).determinant() == doctest::Approx(1.0));
  CHECK(corotation(Mat3::Zero()) == Mat3::Identity());
  Mat3 nan = Mat3::Identity();
  nan(1, 2) = std::nan("");
  CHECK(corotation(nan) == Mat3::Identity());
}

TEST_CASE("rest and rigid states carry no energy or force") {
  const TetMesh mesh = voxelize_primitive(Sphere{0.6}, 0.2);
  const ElasticModel model(mesh, homogeneous_material(mesh, 1e4));
  Rng rng(5);
  const Field zero = Field::Zero(model.rest().size());
  CHECK(model.elastic_energy(zero) == 0.0);
  CHECK(model.internal_forces(zero).norm() == 0.0);
  for (int k = 0; k < 10; ++k) {
    const Field u = rigid_displacement(model, random_rotation(rng), test::random_vec(rng, 2.0));
    CHECK(model.elastic_energy(u) < 1e-18);
    CHECK(model.internal_forces(u).norm() < 1e-9);
  }
}

TEST_CASE("internal forces are the negative energy gradient (finite differences)") {
  const TetMesh mesh = two_voxels();
  REQUIRE(mesh.size() == 12);
  REQUIRE(mesh.tet_count() == 12);
  const ElasticModel model(mesh, homogeneous_material(mesh, 1e4));
  Rng rng(2024);
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    const Field u = random_field(rng, model.size(), 0.04);
    Field grad(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double h = 1e-6;
      Field up = u, um = u;
      up[i] += h;
      um[i] -= h;
      grad[i] = (model.elastic_energy(up) - model.elastic_energy(um)) / (2 * h);
    }
    worst = std::max(worst, rel_l2(model.internal_forces(u), -grad));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("energy is invariant under rigid motions and forces rotate with the body") {
  const TetMesh mesh = voxelize_primitive(Sphere{0.6}, 0.2);
  const ElasticModel model(mesh, homogeneous_material(mesh, 2e4));
  Rng rng(9);
  for (int k = 0; k < 10; ++k) {
    const Field u = random_field(rng, model.size(), 0.03);
    const Mat3 R = random_rotation(rng);
    const Vec3 t = test::random_vec(rng, 1.0);
    Field u2(u.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
      const Vec3 x = model.rest().segment<3>(3 * i) + u.segment<3>(3 * i);
      u2.segment<3>(3 * i) = R * x + t - model.rest().segment<3>(3 * i);
    }
    CHECK(model.elastic_energy(u2) == doctest::Approx(model.elastic_energy(u)).epsilon(1e-9));
    const Field f = model.internal_forces(u), f2 = model.internal_forces(u2);
    for (std::size_t i = 0; i < model.size(); ++i) {
      CHECK((f2.segment<3>(3 * i) - R * f.segment<3>(3 * i)).norm() < 1e-8 * std::max(1.0, f.norm()));
    }
  }
}

TEST_CASE("energy and forces scale linearly with stiffness") {
  const TetMesh mesh = two_voxels();
  const ElasticModel a(mesh, homogeneous_material(mesh, 1e4));
  const ElasticModel b(mesh, homogeneous_material(mesh, 3e4));
  Rng rng(1);
  const Field u = random_field(rng, a.size(), 0.03);
  CHECK(b.elastic_energy(u) == doctest::Approx(3.0 * a.elastic_energy(u)).epsilon(1e-12));
  CHECK(rel_l2(b.internal_forces(u), 3.0 * a.internal_forces(u)) < 1e-12);
}

TEST_CASE("uniform stretch of one cube matches the closed form") {
  const TetMesh cube = voxelize_primitive(Box{Vec3(0.2, 0.2, 0.2)}, 0.2);
  const double k = 1e4, nu = 0.45, s = 0.01;
  MaterialField mat = homogeneous_material(cube, k);
  mat.poisson = nu;
  const ElasticModel model(cube, mat);
  Field u = Field::Zero(3 * cube.size());
  for (std::size_t i = 0; i < cube.size(); ++i) u[3 * i] = s * cube.vertices()[i].x();
  const LameParameters p = lame_from_young(k, nu);
  CHECK(model.elastic_energy(u) == doctest::Approx(0.008 * (p.mu + 0.5 * p.lambda) * s * s).epsilon(1e-10));
  for (std::size_t t = 0; t < cube.tet_count(); ++t) {
    const Mat3 F = model.deformation_gradient(t, u);
    CHECK((F - Vec3(1 + s, 1, 1).asDiagonal().toDenseMatrix()).norm() < 1e-12);
  }
  // Force on the +x face is the traction (2 mu + lambda) s over the face area.
  const Field f = model.internal_forces(u);
  double fx = 0.0;
  for (std::size_t i = 0; i < cube.size(); ++i) {
    if (cube.vertices()[i].x() > 0) fx += f[3 * i];
  }
  CHECK(fx == doctest::Approx(-(2 * p.mu + p.lambda) * s * 0.04).epsilon(1e-10));
}

TEST_CASE("stiffness matrix is symmetric PSD and is the exact Hessian at rigid states") {
  const TetMesh mesh = two_voxels();
  const ElasticModel model(mesh, homogeneous_material(mesh, 1e4));
  Rng rng(77);
  const Field u_rigid = rigid_displacement(model, random_rotation(rng), Vec3(0.1, 0.2, 0.3));
  const Field u_rand = random_field(rng, model.size(), 0.03);
  for (const Field& u : {Field(Field::Zero(u_rand.size())), u_rigid, u_rand}) {
    const BlockSparseMatrix K = model.stiffness_matrix(u);
    CHECK(K.relative_asymmetry() < 1e-12);
    const Eigen::MatrixXd dense = K.to_dense();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (dense + dense.transpose()));
    CHECK(eig.eigenvalues().minCoeff() > -1e-8 * eig.eigenvalues().maxCoeff());
    // Six rigid modes at rest and rigid states.
    const Field v = random_field(rng, model.size(), 1.0);
    CHECK(rel_l2(model.stiffness_product(u, v), K.multiply(v)) < 1e-12);
  }
  for (const Field& u : {Field(Field::Zero(u_rand.size())), u_rigid}) {
    const BlockSparseMatrix K = model.stiffness_matrix(u);
    for (int k = 0; k < 5; ++k) {
      const Field v = random_field(rng, model.size(), 1.0);
      const double h = 1e-6;
      const Field fd = -(model.internal_forces(u + h * v) - model.internal_forces(u - h * v)) / (2 * h);
      CHECK(rel_l2(K.multiply(v), fd) < 1e-5);
    }
  }
}

TEST_CASE("block sparse pattern follows adjacency and matches dense algebra") {
  const TetMesh mesh = voxelize_primitive(Sphere{0.5}, 0.2);
  const BlockSparseMatrix P = BlockSparseMatrix::from_adjacency(mesh.all_neighbors());
  std::size_t expect = mesh.size();
  for (std::size_t i = 0; i < mesh.size(); ++i) expect += mesh.neighbors(i).size();
  CHECK(P.block_count() == expect);
  CHECK(P.find(0, 0).has_value());
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    for (std::size_t j = 0; j < mesh.size(); ++j) {
      const bool adj = i == j || std::binary_search(mesh.neighbors(i).begin(), mesh.neighbors(i).end(),
                                                    static_cast<std::uint32_t>(j));
      REQUIRE(P.find(i, j).has_value() == adj);
    }
  }
  const ElasticModel model(mesh, homogeneous_material(mesh, 1e4));
  Rng rng(3);
  const BlockSparseMatrix K = model.stiffness_matrix(random_field(rng, model.size(), 0.02));
  CHECK(K.same_pattern(model.pattern()));
  const Field x = random_field(rng, model.size(), 1.0);
  CHECK(rel_l2(K.multiply(x), K.to_dense() * x) < 1e-13);
  BlockSparseMatrix S = K;
  S.add_scaled(2.0, K);
  S.scale(0.5);
  CHECK(rel_l2(S.multiply(x), 1.5 * K.multiply(x)) < 1e-13);
  CHECK((K.diagonal_entries() - K.to_dense().diagonal()).norm() == 0.0);
}

TEST_CASE("Rayleigh damping is alpha M plus beta K at rest") {
  const TetMesh mesh = two_voxels();
  MaterialField mat = homogeneous_material(mesh, 1e4);
  mat.rayleigh_alpha = 0.3;
  mat.rayleigh_beta = 0.02;
  const ElasticModel model(mesh, mat);
  const MassDamping md = mass_and_damping(mesh, mat, model);
  const Eigen::MatrixXd M = md.mass.to_dense();
  const Eigen::MatrixXd K = model.stiffness_matrix(Field::Zero(3 * mesh.size())).to_dense();
  CHECK((md.damping.to_dense() - (0.3 * M + 0.02 * K)).norm() < 1e-10 * K.norm());
  CHECK((M.diagonal() - lumped_mass_field(mat)).norm() == 0.0);
  CHECK((M - Eigen::MatrixXd(M.diagonal().asDiagonal())).norm() == 0.0);
}

TEST_CASE("per-tet stiffness is the mean of its vertices") {
  const TetMesh mesh = two_voxels();
  MaterialField mat = homogeneous_material(mesh, 1e4);
  for (std::size_t i = 0; i < mesh.size(); ++i) mat.stiffness[i] = 1e4 * (1.0 + static_cast<double>(i));
  const ElasticModel model(mesh, mat);
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    double mean = 0.0;
    for (auto v : mesh.tets()[t]) mean += 0.25 * mat.stiffness[v];
    CHECK(model.tet_stiffness(t) == doctest::Approx(mean));
    CHECK(model.lame(t).mu == doctest::Approx(lame_from_young(mean, mat.poisson).mu));
  }
}
