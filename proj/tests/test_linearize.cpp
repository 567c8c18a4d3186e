/**
 * @file test_linearize.cpp
 * @brief Rescaling, per-piece rotation alignment, the gradient cutoff window,
 *        energy balance closed forms, the reflection extension, and the
 *        comparison report's validation.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "qsf/linearize.hpp"

using namespace qsf;

namespace {

GridSpec unit_grid() { return GridSpec{1.0, 1.0, 0.25, 4, 4}; }

int vid(int ix_left, int iy) { return iy * 3 + ix_left; }
int hid(int ix, int iy_low) { return 12 + iy_low * 4 + ix; }

Mat2 rotation(double theta) {
  Mat2 R;
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return R;
}

// Ring of interfaces encircling cell (1,1); breaking it detaches that cell.
CrackState island_state(const Mesh& mesh) {
  return CrackState::from_ids(mesh, {vid(0, 1), vid(1, 1), hid(1, 0), hid(1, 1)});
}

Problem make_problem(const Mesh& mesh, ModelKind model, double kappa, double epsilon) {
  Problem p;
  p.mesh = &mesh;
  p.model = model;
  p.density = Density{DensityKind::Dist2Rotations};
  p.tensor = linearized_tensor(p.density);
  p.params.kappa = kappa;
  p.params.epsilon = epsilon;
  return p;
}

}  // namespace

TEST_CASE("rescaling a dyadic deformation recovers the displacement bitwise") {
  const Mesh mesh = build_mesh(unit_grid());
  const auto dofs = build_dof_map(mesh, CrackState::empty(mesh));
  const double eps = 0.25;
  auto u_fn = [](const Vec2& x) {
    return Vec2(0.5 * x(0) - 0.25 * x(1) + 0.75, 1.5 * x(1) - 0.5);
  };
  const Field y = field_from_function(mesh, dofs, FieldKind::Deformation,
                                      [&](const Vec2& x) { return Vec2(x + eps * u_fn(x)); });
  const Field u = rescale(mesh, y, eps);
  CHECK(u.kind == FieldKind::Displacement);
  const Field expected = field_from_function(mesh, dofs, FieldKind::Displacement, u_fn);
  REQUIRE(u.values.size() == expected.values.size());
  for (size_t c = 0; c < u.values.size(); ++c) {
    CHECK(u.values[c](0) == expected.values[c](0));
    CHECK(u.values[c](1) == expected.values[c](1));
  }

  CHECK_THROWS_WITH_AS(rescale(mesh, y, 0.0), "rescale: eps must be positive",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(rescale(mesh, expected, eps), "rescale: expected a deformation field",
                       std::invalid_argument);
}

TEST_CASE("the detached piece's best-fit rotation is recovered and undone") {
  const Mesh mesh = build_mesh(unit_grid());
  const CrackState state = island_state(mesh);
  const DomainPartition partition = components(mesh, state);
  REQUIRE(partition.n_components == 2);
  const auto dofs = build_dof_map(mesh, state);
  const int cell = mesh.cell_id(1, 1);

  for (double theta : {-2.5, -1.0, 0.3, 2.9}) {
    const Mat2 R = rotation(theta);
    const Vec2 shift(0.3, -0.2);
    Field y = field_from_function(mesh, dofs, FieldKind::Deformation,
                                  [](const Vec2& x) { return x; });
    for (int corner = 0; corner < 4; ++corner) {
      const Vec2 x = mesh.nodes[mesh.cells[cell].corner_nodes[corner]];
      y.values[dofs->dof_of(cell, corner)] = R * x + shift;
    }

    const RotationAssignment fit = component_rotations(mesh, partition, y);
    const int j = partition.component_of_cell[cell];
    CHECK_FALSE(fit.frame_touching[j]);
    CHECK((fit.rotation[j] - R).norm() <= 1e-12);
    CHECK((fit.rotation[1 - j] - Mat2::Identity()).norm() == 0.0);
    CHECK(fit.strain_misfit_l2 <= 1e-12);
    CHECK(fit.gradient_misfit_l2 <= 1e-12);

    // Undoing the rotation turns the rigid motion into a pure translation.
    const Field aligned = apply_rotations(mesh, partition, fit, y);
    const Vec2 back = R.transpose() * shift;
    for (int corner = 0; corner < 4; ++corner) {
      const Vec2 x = mesh.nodes[mesh.cells[cell].corner_nodes[corner]];
      CHECK((aligned.corner_value(cell, corner) - (x + back)).norm() <= 1e-13);
    }
    // Frame classes pass through the identity rotation unchanged.
    const int other = mesh.cell_id(0, 0);
    for (int corner = 0; corner < 4; ++corner) {
      CHECK(aligned.corner_value(other, corner)(0) == y.corner_value(other, corner)(0));
      CHECK(aligned.corner_value(other, corner)(1) == y.corner_value(other, corner)(1));
    }
  }

  Field flat = field_from_function(mesh, dofs, FieldKind::Deformation,
                                   [](const Vec2& x) { return x; });
  for (int corner = 0; corner < 4; ++corner)
    flat.values[dofs->dof_of(cell, corner)] = Vec2(0.4, 0.4);
  CHECK_THROWS_WITH_AS(component_rotations(mesh, partition, flat),
                       "component_rotations: degenerate mean gradient", std::runtime_error);
}

TEST_CASE("cutoff window exponents and membership") {
  const Mesh mesh = build_mesh(unit_grid());
  ModelParams params;
  params.epsilon = 0.1;
  params.gamma = 0.7;
  const auto dofs = build_dof_map(mesh, CrackState::empty(mesh));
  const Field zero = field_from_function(mesh, dofs, FieldKind::Displacement,
                                         [](const Vec2&) { return Vec2::Zero(); });

  const CutoffRegion region = cutoff(mesh, params, zero);
  CHECK(region.theta_minus == std::pow(0.1, (9.0 * 0.7 - 10.0) / 12.0));
  CHECK(region.eta == std::pow(0.1, (3.0 * 0.7 - 4.0) / 6.0));
  CHECK(region.theta_plus == std::pow(0.1, (0.7 - 2.0) / 4.0));
  CHECK(region.theta_minus < region.eta);
  CHECK(region.eta < region.theta_plus);
  for (int cell = 0; cell < mesh.n_cells(); ++cell) CHECK(region.inside[cell]);

  // A steep gradient confined to one untied interior cell excises only it.
  Field spiky = untie(mesh, zero);
  const int cell = mesh.cell_id(2, 2);
  for (int corner = 0; corner < 4; ++corner) {
    const Vec2 x = mesh.nodes[mesh.cells[cell].corner_nodes[corner]];
    spiky.values[spiky.dofs->dof_of(cell, corner)] = Vec2(8.0 * x(0), 0.0);
  }
  const CutoffRegion spike_region = cutoff(mesh, params, spiky);
  for (int c = 0; c < mesh.n_cells(); ++c) CHECK(spike_region.inside[c] == (c != cell));

  const Field cut = apply_cutoff(mesh, spiky, spike_region);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    for (int corner = 0; corner < 4; ++corner) {
      const Vec2 got = cut.corner_value(c, corner);
      const Vec2 want = (c == cell) ? Vec2(Vec2::Zero()) : spiky.corner_value(c, corner);
      CHECK(got(0) == want(0));
      CHECK(got(1) == want(1));
    }
  }

  // A global steep gradient would excise frame cells, which is an error.
  const Field steep = field_from_function(
      mesh, dofs, FieldKind::Displacement,
      [&](const Vec2& x) { return Vec2(3.0 * region.eta * x(0), 0.0); });
  CHECK_THROWS_WITH_AS(cutoff(mesh, params, steep),
                       "cutoff: frame cell excised by the gradient window",
                       std::runtime_error);
}

TEST_CASE("modified displacement of the identity deformation vanishes") {
  const Mesh mesh = build_mesh(unit_grid());
  ModelParams params;
  params.epsilon = 0.1;
  const CrackState state = CrackState::empty(mesh);
  const DomainPartition partition = components(mesh, state);
  const Field y = field_from_function(mesh, build_dof_map(mesh, state),
                                      FieldKind::Deformation,
                                      [](const Vec2& x) { return x; });
  const ModifiedDisplacement mod = modified_displacement(mesh, params, partition, y);
  for (size_t c = 0; c < mod.u.values.size(); ++c) CHECK(mod.u.values[c].norm() == 0.0);
  for (const Mat2& strain : mod.strains) CHECK(strain.norm() == 0.0);
  for (int cellv = 0; cellv < mesh.n_cells(); ++cellv) CHECK(mod.region.inside[cellv]);
}

TEST_CASE("balance residuals of the crack-free ramp follow the quadrature defect") {
  const Mesh mesh = build_mesh(unit_grid());
  const Problem problem = make_problem(mesh, ModelKind::Linear, 10.0, 0.1);
  for (int level : {3, 4, 5}) {
    const Trajectory traj =
        run_evolution(problem, TimePartition{level}, CrackState::empty(mesh));
    std::vector<std::vector<Mat2>> strains;
    for (const StepRecord& rec : traj.steps)
      strains.push_back(cell_strains_of(mesh, rec.field));
    const BalanceSeries series =
        balance_residual(mesh, problem.tensor, problem.program, traj, strains);
    const int N = 1 << level;
    const double dt = 1.0 / N;
    REQUIRE(static_cast<int>(series.consecutive.size()) == N);
    REQUIRE(static_cast<int>(series.from_zero.size()) == N + 1);
    CHECK(series.from_zero[0] == 0.0);
    // E(t) = t^2 and left-endpoint work lag by exactly one rectangle: the
    // defect is t_n * dt cumulatively and dt^2 per step.
    for (int n = 0; n < N; ++n)
      CHECK(series.consecutive[n] == doctest::Approx(dt * dt).epsilon(1e-9));
    for (int n = 1; n <= N; ++n)
      CHECK(series.from_zero[n] == doctest::Approx(n * dt * dt).epsilon(1e-9));
    CHECK(series.from_zero.back() == doctest::Approx(dt).epsilon(1e-9));
  }

  Trajectory empty;
  empty.steps.clear();
  std::vector<std::vector<Mat2>> no_strains;
  CHECK_THROWS_WITH_AS(
      balance_residual(mesh, problem.tensor, problem.program, empty, no_strains),
      "balance_residual: empty trajectory", std::invalid_argument);
}

TEST_CASE("interior work vanishes without detached pieces") {
  const Mesh mesh = build_mesh(unit_grid());
  const Problem problem = make_problem(mesh, ModelKind::Linear, 10.0, 0.1);
  const Trajectory traj = run_evolution(problem, TimePartition{3}, CrackState::empty(mesh));
  std::vector<std::vector<Mat2>> strains;
  std::vector<RotationAssignment> rots;
  for (const StepRecord& rec : traj.steps) {
    strains.push_back(cell_strains_of(mesh, rec.field));
    RotationAssignment r;
    r.rotation.assign(rec.partition.n_components, Mat2::Identity());
    r.frame_touching = rec.partition.touches_frame;
    rots.push_back(r);
  }
  const std::vector<double> partial =
      interior_work(mesh, problem.tensor, problem.program, traj, strains, rots);
  REQUIRE(partial.size() == traj.steps.size());
  for (double w : partial) CHECK(w == 0.0);

  rots.pop_back();
  CHECK_THROWS_WITH_AS(
      interior_work(mesh, problem.tensor, problem.program, traj, strains, rots),
      "interior_work: per-step data size mismatch", std::invalid_argument);
}

TEST_CASE("reflection extension: geometry, trace, and exactness on low order data") {
  PatchSamples upper;
  upper.x0 = 0.5;
  upper.y0 = 1.0;
  upper.h = 0.25;
  upper.nx = 2;
  upper.ny = 4;
  upper.values.resize(static_cast<size_t>(upper.nx + 1) * (upper.ny + 1));
  std::mt19937_64 rng(99u);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (Vec2& v : upper.values) v = Vec2(unif(rng), unif(rng));

  const PatchSamples out = reflection_extend(upper);
  CHECK(out.x0 == upper.x0);
  CHECK(out.h == upper.h);
  CHECK(out.nx == upper.nx);
  CHECK(out.ny == upper.ny + 2);
  CHECK(out.y0 == upper.y0 - 2 * upper.h);
  REQUIRE(out.values.size() == static_cast<size_t>(3 * 7));
  // Rows above the seam are copied verbatim, so every trace there is exact.
  for (int j = 0; j <= upper.ny; ++j)
    for (int i = 0; i <= upper.nx; ++i) {
      CHECK(out.values[out.node(i, j + 2)](0) == upper.values[upper.node(i, j)](0));
      CHECK(out.values[out.node(i, j + 2)](1) == upper.values[upper.node(i, j)](1));
    }

  // Constants and fields linear in the extension direction are reproduced
  // exactly: 3 phi(-s) - 2 phi(-2s) has first-order consistency built in.
  for (Vec2& v : upper.values) v = Vec2(0.5, -0.25);
  const PatchSamples const_out = reflection_extend(upper);
  for (const Vec2& v : const_out.values) {
    CHECK(v(0) == 0.5);
    CHECK(v(1) == -0.25);
  }
  const double a = 0.75, b = -1.5;
  for (int j = 0; j <= upper.ny; ++j)
    for (int i = 0; i <= upper.nx; ++i)
      upper.values[upper.node(i, j)] = Vec2(a * (j * upper.h) + b, 0.0);
  const PatchSamples lin_out = reflection_extend(upper);
  for (int r = 0; r <= lin_out.ny; ++r) {
    const double s = (r - 2) * upper.h;
    for (int i = 0; i <= lin_out.nx; ++i) {
      CHECK(lin_out.values[lin_out.node(i, r)](0) == a * s + b);
      CHECK(lin_out.values[lin_out.node(i, r)](1) == 0.0);
    }
  }

  upper.ny = 3;
  upper.values.resize(static_cast<size_t>(upper.nx + 1) * (upper.ny + 1));
  CHECK_THROWS_WITH_AS(reflection_extend(upper),
                       "reflection_extend: need an even, positive number of sample rows",
                       std::invalid_argument);
}

TEST_CASE("comparison report validates its inputs and tabulates per rung and time") {
  const Mesh mesh = build_mesh(unit_grid());
  const Problem linear = make_problem(mesh, ModelKind::Linear, 1.0, 0.1);
  Problem nonlinear = make_problem(mesh, ModelKind::Nonlinear, 1.0, 0.2);
  nonlinear.program.amplitude = 0.2;
  Problem linear_match = make_problem(mesh, ModelKind::Linear, 1.0, 0.1);
  linear_match.program.amplitude = 0.2;

  const Trajectory ref = run_evolution(linear_match, TimePartition{0}, CrackState::empty(mesh));
  const Trajectory rung = run_evolution(nonlinear, TimePartition{0}, CrackState::empty(mesh));

  const std::vector<ConvergenceRow> rows = convergence_report(
      mesh, nonlinear.density, linear.tensor, linear_match.program, {rung}, ref, {0.0, 1.0});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].eps == 0.2);
  CHECK(rows[0].time == 0.0);
  CHECK(rows[1].time == 1.0);
  CHECK(rows[0].total_gap >= 0.0);
  CHECK(rows[1].hessian_value >= 0.0);
  CHECK(rows[1].measure_above_1e1 <= 1.0);
  CHECK(rows[1].disp_l2_error >= 0.0);

  CHECK_THROWS_WITH_AS(convergence_report(mesh, nonlinear.density, linear.tensor,
                                          linear_match.program, {rung}, rung, {0.0}),
                       "convergence_report: reference must be the linear model",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(convergence_report(mesh, nonlinear.density, linear.tensor,
                                          linear_match.program, {ref}, ref, {0.0}),
                       "convergence_report: ladder entries must be nonlinear",
                       std::invalid_argument);
  const Trajectory ref_l1 =
      run_evolution(linear_match, TimePartition{1}, CrackState::empty(mesh));
  CHECK_THROWS_WITH_AS(convergence_report(mesh, nonlinear.density, linear.tensor,
                                          linear_match.program, {rung}, ref_l1, {0.0}),
                       "convergence_report: mismatched time partitions",
                       std::invalid_argument);
  Trajectory rung_kappa = rung;
  rung_kappa.params.kappa = 2.0;
  CHECK_THROWS_WITH_AS(convergence_report(mesh, nonlinear.density, linear.tensor,
                                          linear_match.program, {rung_kappa}, ref, {0.0}),
                       "convergence_report: mismatched surface parameters",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(convergence_report(mesh, nonlinear.density, linear.tensor,
                                          linear_match.program, {rung}, ref, {0.3}),
                       "convergence_report: report time not on the partition",
                       std::invalid_argument);
}
