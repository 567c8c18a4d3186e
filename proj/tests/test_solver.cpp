/**
 * @file test_solver.cpp
 * @brief Time partitions, boundary programs, elastic solves against a dense
 *        sampled-quadratic oracle, the strip fracture closed form, greedy vs
 *        exhaustive search, and the loading work quadrature.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "qsf/solver.hpp"

using namespace qsf;

namespace {

GridSpec unit_grid() { return GridSpec{1.0, 1.0, 0.25, 4, 4}; }

int vid(int ix_left, int iy) { return iy * 3 + ix_left; }
int hid(int ix, int iy_low) { return 12 + iy_low * 4 + ix; }

// The six horizontal interfaces flanking the 2x2 interior block; with these
// broken the interior forms two strips pinned only at their left/right ends.
std::vector<int> strip_flanks() {
  return {hid(1, 0), hid(2, 0), hid(1, 1), hid(2, 1), hid(1, 2), hid(2, 2)};
}

Problem make_problem(const Mesh& mesh, ModelKind model, double kappa, double epsilon) {
  Problem p;
  p.mesh = &mesh;
  p.model = model;
  p.density = Density{DensityKind::Dist2Rotations};
  p.tensor = linearized_tensor(p.density);
  p.params.kappa = kappa;
  p.params.epsilon = epsilon;
  p.program.amplitude = 1.0;
  return p;
}

// Quadratic energy restricted to the free classes, sampled through the public
// energy evaluation; minimized densely as an independent oracle.
struct SampledQuadratic {
  const Mesh& mesh;
  const ElasticTensor& tensor;
  std::shared_ptr<const DofMap> dofs;
  CrackState ties;
  Field base;

  double eval(const Eigen::VectorXd& v) const {
    Field u = base;
    for (int k = 0; k < dofs->n_free; ++k)
      u.values[dofs->free_classes[k]] = Vec2(v(2 * k), v(2 * k + 1));
    return linear_energy(mesh, tensor, ModelParams{}, u, ties).elastic;
  }
};

}  // namespace

TEST_CASE("dyadic partitions are nested with exact times") {
  const TimePartition p3{3};
  const std::vector<double> t3 = p3.times();
  REQUIRE(static_cast<int>(t3.size()) == 9);
  for (int n = 0; n <= 8; ++n) CHECK(t3[n] == n / 8.0);

  const std::vector<double> t5 = TimePartition{5}.times();
  for (double t : t3) CHECK(std::find(t5.begin(), t5.end(), t) != t5.end());

  CHECK_THROWS_AS(TimePartition{-1}.validate(), std::invalid_argument);
  CHECK_THROWS_AS(TimePartition{25}.validate(), std::invalid_argument);
  CHECK_NOTHROW(TimePartition{0}.validate());
}

TEST_CASE("boundary program interpolates knots with right-sided rates") {
  BoundaryProgram prog;
  CHECK(prog.scale(0.3) == 0.3);  // no knots: scale(t) = t
  CHECK(prog.scale_rate(0.3) == 1.0);

  prog.knots = {{0.0, 0.0}, {0.5, 1.0}, {1.0, 0.5}};
  CHECK_NOTHROW(prog.validate());
  CHECK(prog.scale(0.25) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(prog.scale(0.75) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(prog.scale(1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(prog.scale(-0.2) == 0.0);   // clamped before the first knot
  CHECK(prog.scale(2.0) == 0.5);    // clamped after the last knot
  CHECK(prog.scale_rate(0.25) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(prog.scale_rate(0.5) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(prog.scale_rate(1.0) == 0.0);
  CHECK(prog.scale_rate(-0.2) == 0.0);

  prog.knots = {{0.0, 0.0}, {0.0, 1.0}};
  CHECK_THROWS_WITH_AS(prog.validate(), "BoundaryProgram: knot times must be strictly increasing",
                       std::invalid_argument);
  prog.knots.clear();
  prog.amplitude = std::nan("");
  CHECK_THROWS_AS(prog.validate(), std::invalid_argument);
}

TEST_CASE("boundary bases and model kinds round-trip through names") {
  BoundaryProgram stretch;
  CHECK(stretch.base_matrix()(0, 0) == 1.0);
  CHECK(stretch.value(0.5, Vec2(0.4, 0.8))(0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(stretch.value(0.5, Vec2(0.4, 0.8))(1) == 0.0);

  BoundaryProgram shear;
  shear.base = BoundaryProgram::Base::SimpleShear;
  CHECK(shear.base_matrix()(0, 1) == 1.0);
  CHECK(shear.value(0.5, Vec2(0.4, 0.8))(0) == doctest::Approx(0.4).epsilon(1e-15));

  CHECK(boundary_base_from_string("uniaxial_stretch") == BoundaryProgram::Base::UniaxialStretch);
  CHECK(to_string(BoundaryProgram::Base::SimpleShear) == "simple_shear");
  CHECK_THROWS_AS(boundary_base_from_string("torsion"), std::invalid_argument);
  CHECK(model_kind_from_string("nonlinear") == ModelKind::Nonlinear);
  CHECK(to_string(ModelKind::Linear) == "linear");
  CHECK_THROWS_AS(model_kind_from_string("plastic"), std::invalid_argument);
}

TEST_CASE("problem datum is the displacement or the scaled deformation") {
  const Mesh mesh = build_mesh(unit_grid());
  Problem p = make_problem(mesh, ModelKind::Linear, 1.0, 0.1);
  const Vec2 x(0.5, 0.75);
  CHECK((p.datum(0.5)(x) - Vec2(0.25, 0.0)).norm() <= 1e-15);
  p.model = ModelKind::Nonlinear;
  CHECK((p.datum(0.5)(x) - Vec2(0.5 + 0.1 * 0.25, 0.75)).norm() <= 1e-15);
}

TEST_CASE("linear elastic solve matches a dense sampled-quadratic minimizer") {
  const Mesh mesh = build_mesh(unit_grid());
  const ElasticTensor tensor = linearized_tensor(Density{});
  const double t = 0.7;
  auto datum = [t](const Vec2& x) { return Vec2(t * x(0), 0.0); };

  for (const std::vector<int>& ids :
       {std::vector<int>{}, std::vector<int>{vid(1, 1), vid(1, 2)}}) {
    const CrackState ties = CrackState::from_ids(mesh, ids);
    const BulkSolve solve = elastic_solve_linear(mesh, tensor, ties, datum, SolveOptions{});
    CHECK(solve.linear_residual_rel <= 1e-12);
    CHECK(solve.hessian == 0.0);
    CHECK(solve.bulk == doctest::Approx(solve.elastic).epsilon(1e-15));

    SampledQuadratic q{mesh, tensor, build_dof_map(mesh, ties), ties,
                       field_from_function(mesh, build_dof_map(mesh, ties),
                                           FieldKind::Displacement, datum)};
    const int n = 2 * q.dofs->n_free;
    REQUIRE(n > 0);
    const double e0 = q.eval(Eigen::VectorXd::Zero(n));
    Eigen::VectorXd b(n);
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd ep = Eigen::VectorXd::Zero(n), em = Eigen::VectorXd::Zero(n);
      ep(i) = 1.0;
      em(i) = -1.0;
      b(i) = 0.5 * (q.eval(ep) - q.eval(em));
      A(i, i) = q.eval(ep) + q.eval(em) - 2.0 * e0;
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        Eigen::VectorXd eij = Eigen::VectorXd::Zero(n);
        eij(i) = 1.0;
        eij(j) = 1.0;
        Eigen::VectorXd ei = Eigen::VectorXd::Zero(n), ej = Eigen::VectorXd::Zero(n);
        ei(i) = 1.0;
        ej(j) = 1.0;
        A(i, j) = A(j, i) = q.eval(eij) - q.eval(ei) - q.eval(ej) + e0;
      }
    const Eigen::VectorXd v_star = Eigen::LDLT<Eigen::MatrixXd>(A).solve(-b);

    for (int k = 0; k < q.dofs->n_free; ++k) {
      const Vec2 got = solve.field.values[q.dofs->free_classes[k]];
      CHECK(std::abs(got(0) - v_star(2 * k)) <= 1e-9);
      CHECK(std::abs(got(1) - v_star(2 * k + 1)) <= 1e-9);
    }
    CHECK(solve.elastic == doctest::Approx(q.eval(v_star)).epsilon(1e-11));
  }
}

TEST_CASE("components detached from the frame solve to exactly zero") {
  const Mesh mesh = build_mesh(unit_grid());
  const ElasticTensor tensor = linearized_tensor(Density{});
  const CrackState island =
      CrackState::from_ids(mesh, {vid(0, 1), vid(1, 1), hid(1, 0), hid(1, 1)});
  const BulkSolve solve = elastic_solve_linear(
      mesh, tensor, island, [](const Vec2& x) { return Vec2(x(0), 0.0); }, SolveOptions{});
  const int cell = 5;  // cell (1,1), encircled
  for (int corner = 0; corner < 4; ++corner) {
    const Vec2 v = solve.field.corner_value(cell, corner);
    CHECK(v(0) == 0.0);
    CHECK(v(1) == 0.0);
  }
}

TEST_CASE("nonlinear solve lands on a stationary point of the bulk energy") {
  const Mesh mesh = build_mesh(unit_grid());
  const Density density{DensityKind::Dist2Rotations};
  ModelParams params;
  params.epsilon = 0.1;
  const CrackState ties = CrackState::from_ids(mesh, {vid(1, 1), vid(1, 2)});
  const double t = 0.7;
  auto datum = [&](const Vec2& x) {
    return Vec2(x(0) + params.epsilon * t * x(0), x(1));
  };
  const BulkSolve solve = elastic_solve_nonlinear(mesh, density, params, ties, datum,
                                                  SolveOptions{}, nullptr, 42u, 3);
  CHECK(solve.bulk == doctest::Approx(solve.elastic + solve.hessian).epsilon(1e-12));
  CHECK(solve.linear_residual_rel <= 1e-6);

  const auto dofs = solve.field.dofs;
  auto bulk_at = [&](const Field& f) {
    return nonlinear_energy(mesh, density, params, f, ties).total;  // surface is zero
  };
  CHECK(bulk_at(solve.field) == doctest::Approx(solve.bulk).epsilon(1e-12));
  const double h = 1e-6;
  for (int k = 0; k < dofs->n_free; ++k) {
    for (int comp = 0; comp < 2; ++comp) {
      Field fp = solve.field, fm = solve.field;
      fp.values[dofs->free_classes[k]](comp) += h;
      fm.values[dofs->free_classes[k]](comp) -= h;
      CHECK(std::abs(bulk_at(fp) - bulk_at(fm)) / (2.0 * h) <= 1e-6);
    }
  }
}

TEST_CASE("strip evolution fractures at the first dyadic time past the threshold") {
  const Mesh mesh = build_mesh(unit_grid());
  // Surface cost of a column cut is 2 kappa dx = 0.075625; the elastic drop is
  // 0.25 t^2, so the cut pays exactly from t* = 0.55 onward.
  const double kappa = 0.15125;
  const Problem problem = make_problem(mesh, ModelKind::Linear, kappa, 0.1);
  const CrackState flanks = CrackState::from_ids(mesh, strip_flanks());

  const Trajectory traj = run_evolution(problem, TimePartition{3}, flanks);
  REQUIRE(static_cast<int>(traj.steps.size()) == 9);
  CHECK(traj.max_linear_residual_rel <= 1e-10);
  for (int n = 0; n < 9; ++n) {
    const StepRecord& rec = traj.steps[n];
    const double t = n / 8.0;
    CHECK(rec.time == t);
    if (t < 0.625) {
      CHECK(rec.cumulative.count() == 6);
      CHECK(std::abs(rec.energy.elastic - t * t) <= 1e-12);
    } else {
      CHECK(rec.cumulative.count() == 8);
      CHECK(std::abs(rec.energy.elastic - 0.75 * t * t) <= 1e-12);
    }
  }
  // The three column cuts tie in energy; lexicographic order picks the west one.
  const StepRecord& frac = traj.steps[5];
  CHECK(frac.increment.ids() == std::vector<int>{vid(0, 1), vid(0, 2)});
  CHECK(frac.energy.surface == doctest::Approx(kappa * 2.0 * mesh.dx).epsilon(1e-15));
  CHECK(traj.total_energy(mesh, 8) ==
        doctest::Approx(0.75 + kappa * 8.0 * mesh.dx).epsilon(1e-12));

  // A finer partition locates the threshold more tightly: 0.5625 is the first
  // dyadic level-4 time past 0.55.
  const Trajectory fine = run_evolution(problem, TimePartition{4}, flanks);
  CHECK(fine.steps[fine.index_of_time(0.5)].cumulative.count() == 6);
  CHECK(fine.steps[fine.index_of_time(0.5625)].cumulative.count() == 8);
}

TEST_CASE("greedy evolution is never better than the exhaustive one and matches here") {
  const Mesh mesh = build_mesh(unit_grid());
  const CrackState flanks = CrackState::from_ids(mesh, strip_flanks());
  for (double kappa : {0.05, 0.15125, 0.6}) {
    const Problem problem = make_problem(mesh, ModelKind::Linear, kappa, 0.1);
    const Trajectory greedy = run_evolution(problem, TimePartition{2}, flanks, false);
    const Trajectory brute = run_evolution(problem, TimePartition{2}, flanks, true);
    REQUIRE(greedy.steps.size() == brute.steps.size());
    for (size_t n = 0; n < greedy.steps.size(); ++n) {
      const double eg = greedy.total_energy(mesh, static_cast<int>(n));
      const double eb = brute.total_energy(mesh, static_cast<int>(n));
      CHECK(eb <= eg + 1e-9 * (1.0 + std::abs(eg)));  // brute is the global optimum
      CHECK(std::abs(eg - eb) <= 1e-9 * (1.0 + std::abs(eb)));
    }
  }
}

TEST_CASE("exhaustive search refuses more than 16 intact crackable interfaces") {
  const Mesh mesh = build_mesh(GridSpec{1.5, 1.0, 0.25, 6, 4});
  REQUIRE(crackable_interfaces(mesh).size() > 16);
  const Problem problem = make_problem(mesh, ModelKind::Linear, 1.0, 0.1);
  CHECK_THROWS_AS(brute_force_step(problem, CrackState::empty(mesh), 0.5, 1u),
                  std::invalid_argument);
}

TEST_CASE("evolutions are bitwise deterministic across reruns") {
  const Mesh mesh = build_mesh(unit_grid());
  const Problem problem = make_problem(mesh, ModelKind::Linear, 0.15125, 0.1);
  const CrackState flanks = CrackState::from_ids(mesh, strip_flanks());
  const Trajectory a = run_evolution(problem, TimePartition{3}, flanks);
  const Trajectory b = run_evolution(problem, TimePartition{3}, flanks);
  REQUIRE(a.steps.size() == b.steps.size());
  CHECK(a.max_linear_residual_rel == b.max_linear_residual_rel);
  for (size_t n = 0; n < a.steps.size(); ++n) {
    CHECK(a.steps[n].cumulative == b.steps[n].cumulative);
    REQUIRE(a.steps[n].field.values.size() == b.steps[n].field.values.size());
    for (size_t c = 0; c < a.steps[n].field.values.size(); ++c) {
      CHECK(a.steps[n].field.values[c](0) == b.steps[n].field.values[c](0));
      CHECK(a.steps[n].field.values[c](1) == b.steps[n].field.values[c](1));
    }
  }
}

TEST_CASE("invalid parameters are rejected before an evolution starts") {
  const Mesh mesh = build_mesh(unit_grid());
  Problem problem = make_problem(mesh, ModelKind::Linear, 1.0, 0.1);
  problem.params.gamma = 0.5;
  CHECK_THROWS_AS(run_evolution(problem, TimePartition{1}, CrackState::empty(mesh)),
                  std::invalid_argument);
}

TEST_CASE("left-endpoint work quadrature is exact for the crack-free ramp") {
  const Mesh mesh = build_mesh(unit_grid());
  const Problem problem = make_problem(mesh, ModelKind::Linear, 10.0, 0.1);
  const int level = 4, N = 1 << level;
  const Trajectory traj = run_evolution(problem, TimePartition{level}, CrackState::empty(mesh));
  std::vector<double> times;
  std::vector<std::vector<Mat2>> strains;
  for (const StepRecord& rec : traj.steps) {
    times.push_back(rec.time);
    strains.push_back(cell_strains_of(mesh, rec.field));
  }
  // Strain at t is exactly t e11, so work over [t_a, t_b] sums 2 t_n dt.
  const double dt = 1.0 / N;
  const double full = dt * dt * N * (N - 1);
  CHECK(work_integral(mesh, problem.tensor, problem.program, times, strains, 0, N) ==
        doctest::Approx(full).epsilon(1e-10));
  const double partial = dt * dt * (9.0 * 8.0 - 3.0 * 2.0);
  CHECK(work_integral(mesh, problem.tensor, problem.program, times, strains, 3, 9) ==
        doctest::Approx(partial).epsilon(1e-10));
  CHECK(work_integral(mesh, problem.tensor, problem.program, times, strains, 4, 4) == 0.0);

  CHECK_THROWS_AS(
      work_integral(mesh, problem.tensor, problem.program, times, strains, -1, 3),
      std::invalid_argument);
  CHECK_THROWS_AS(
      work_integral(mesh, problem.tensor, problem.program, times, strains, 0, N + 1),
      std::invalid_argument);
  strains.pop_back();
  CHECK_THROWS_AS(work_integral(mesh, problem.tensor, problem.program, times, strains, 0, 1),
                  std::invalid_argument);
}
