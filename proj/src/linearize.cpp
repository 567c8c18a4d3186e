/**
 * @file linearize.cpp
 * @brief Nonlinear-to-linear comparison pipeline: rescaling, per-piece
 *        rotation alignment, gradient cutoff, balance bookkeeping, boundary
 *        reflection, and the convergence report.
 */
#include "qsf/linearize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qsf {

Field rescale(const Mesh& mesh, const Field& y, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("rescale: eps must be positive");
  if (y.kind != FieldKind::Deformation)
    throw std::invalid_argument("rescale: expected a deformation field");
  Field u;
  u.kind = FieldKind::Displacement;
  u.dofs = y.dofs;
  u.values.resize(y.values.size());
  for (size_t c = 0; c < y.values.size(); ++c) {
    const Vec2 node = mesh.nodes[y.dofs->node_of_class[c]];
    u.values[c] = (y.values[c] - node) / eps;
  }
  return u;
}

namespace {

// Slots of one tie class all lie in one component, so classes inherit a
// well-defined component id.
std::vector<int> component_of_class(const Mesh& mesh, const DomainPartition& partition,
                                    const DofMap& dofs) {
  std::vector<int> comp(dofs.n_classes, -1);
  for (int cell = 0; cell < mesh.n_cells(); ++cell)
    for (int corner = 0; corner < 4; ++corner)
      comp[dofs.dof_of(cell, corner)] = partition.component_of_cell[cell];
  return comp;
}

Mat2 rotation_from_cs(double c, double s) {
  Mat2 R;
  R << c, -s, s, c;
  return R;
}

}  // namespace

RotationAssignment component_rotations(const Mesh& mesh, const DomainPartition& partition,
                                       const Field& y) {
  RotationAssignment out;
  out.rotation.assign(partition.n_components, Mat2::Identity());
  out.frame_touching = partition.touches_frame;
  for (int j = 0; j < partition.n_components; ++j) {
    if (partition.touches_frame[j]) continue;
    Mat2 M = Mat2::Zero();
    for (int cell : partition.component_cells[j]) M += y.cell_gradient(cell);
    M /= static_cast<double>(partition.component_cells[j].size());
    if (M.determinant() <= 0.0)
      throw std::runtime_error("component_rotations: degenerate mean gradient");
    const double c = M.trace();
    const double s = M(1, 0) - M(0, 1);
    const double norm = std::hypot(c, s);
    out.rotation[j] = rotation_from_cs(c / norm, s / norm);
  }
  const double area = mesh.cell_area();
  double strain_sq = 0.0, grad_sq = 0.0;
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    const Mat2& R = out.rotation[partition.component_of_cell[cell]];
    const Mat2 A = R.transpose() * y.cell_gradient(cell) - Mat2::Identity();
    grad_sq += area * A.squaredNorm();
    strain_sq += area * (0.5 * (A + A.transpose())).squaredNorm();
  }
  out.strain_misfit_l2 = std::sqrt(strain_sq);
  out.gradient_misfit_l2 = std::sqrt(grad_sq);
  return out;
}

Field apply_rotations(const Mesh& mesh, const DomainPartition& partition,
                      const RotationAssignment& rotations, const Field& y) {
  const std::vector<int> comp = component_of_class(mesh, partition, *y.dofs);
  Field out = y;
  for (size_t c = 0; c < out.values.size(); ++c)
    out.values[c] = rotations.rotation[comp[c]].transpose() * y.values[c];
  return out;
}

CutoffRegion cutoff(const Mesh& mesh, const ModelParams& params, const Field& u_aux) {
  CutoffRegion region;
  region.theta_minus = std::pow(params.epsilon, (9.0 * params.gamma - 10.0) / 12.0);
  region.theta_plus = std::pow(params.epsilon, (params.gamma - 2.0) / 4.0);
  region.eta = std::pow(params.epsilon, (3.0 * params.gamma - 4.0) / 6.0);
  region.inside.assign(mesh.n_cells(), false);
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    const Mat2 G = u_aux.cell_gradient(cell);
    const double maxnorm = G.cwiseAbs().maxCoeff();
    region.inside[cell] = maxnorm <= region.eta;
    if (!region.inside[cell] && mesh.cells[cell].in_frame)
      throw std::runtime_error("cutoff: frame cell excised by the gradient window");
  }
  return region;
}

Field apply_cutoff(const Mesh& mesh, const Field& u_aux, const CutoffRegion& region) {
  Field out = untie(mesh, u_aux);
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    if (region.inside[cell]) continue;
    for (int corner = 0; corner < 4; ++corner)
      out.values[out.dofs->dof_of(cell, corner)] = Vec2::Zero();
  }
  return out;
}

ModifiedDisplacement modified_displacement(const Mesh& mesh, const ModelParams& params,
                                           const DomainPartition& partition, const Field& y) {
  ModifiedDisplacement mod;
  mod.rotations = component_rotations(mesh, partition, y);
  const Field y_rot = apply_rotations(mesh, partition, mod.rotations, y);
  const Field u_aux = rescale(mesh, y_rot, params.epsilon);
  mod.region = cutoff(mesh, params, u_aux);
  mod.u = apply_cutoff(mesh, u_aux, mod.region);
  mod.strains = cell_strains_of(mesh, mod.u);
  return mod;
}

BalanceSeries balance_residual(const Mesh& mesh, const ElasticTensor& tensor,
                               const BoundaryProgram& program, const Trajectory& traj,
                               const std::vector<std::vector<Mat2>>& cell_strains) {
  const int n_steps = static_cast<int>(traj.steps.size()) - 1;
  if (n_steps < 0) throw std::invalid_argument("balance_residual: empty trajectory");
  std::vector<double> times(traj.steps.size());
  for (size_t n = 0; n < traj.steps.size(); ++n) times[n] = traj.steps[n].time;

  BalanceSeries series;
  series.consecutive.resize(n_steps);
  series.from_zero.assign(n_steps + 1, 0.0);
  for (int n = 0; n < n_steps; ++n) {
    const double dE = traj.total_energy(mesh, n + 1) - traj.total_energy(mesh, n);
    series.consecutive[n] = dE - work_integral(mesh, tensor, program, times, cell_strains, n, n + 1);
  }
  for (int n = 1; n <= n_steps; ++n) {
    series.from_zero[n] = traj.total_energy(mesh, n) - traj.total_energy(mesh, 0) -
                          work_integral(mesh, tensor, program, times, cell_strains, 0, n);
  }
  return series;
}

std::vector<double> interior_work(const Mesh& mesh, const ElasticTensor& tensor,
                                  const BoundaryProgram& program, const Trajectory& traj,
                                  const std::vector<std::vector<Mat2>>& cell_strains,
                                  const std::vector<RotationAssignment>& rotations) {
  if (cell_strains.size() != traj.steps.size() || rotations.size() != traj.steps.size())
    throw std::invalid_argument("interior_work: per-step data size mismatch");
  const double area = mesh.cell_area();
  std::vector<double> partial(traj.steps.size(), 0.0);
  for (size_t n = 0; n + 1 < traj.steps.size(); ++n) {
    const double dt = traj.steps[n + 1].time - traj.steps[n].time;
    const Mat2 rate = program.rate_gradient(traj.steps[n].time);
    const DomainPartition& part = traj.steps[n].partition;
    double sum = 0.0;
    for (int cell = 0; cell < mesh.n_cells(); ++cell) {
      const int j = part.component_of_cell[cell];
      if (part.touches_frame[j]) continue;
      const Mat2& R = rotations[n].rotation[j];
      sum += tensor.pairing(cell_strains[n][cell], R.transpose() * rate * R);
    }
    partial[n + 1] = partial[n] + dt * area * sum;
  }
  return partial;
}

PatchSamples reflection_extend(const PatchSamples& upper) {
  if (upper.ny <= 0 || upper.ny % 2 != 0)
    throw std::invalid_argument(
        "reflection_extend: need an even, positive number of sample rows");
  const int half = upper.ny / 2;
  PatchSamples out;
  out.x0 = upper.x0;
  out.y0 = upper.y0 - half * upper.h;
  out.h = upper.h;
  out.nx = upper.nx;
  out.ny = upper.ny + half;
  out.values.resize(static_cast<size_t>(out.nx + 1) * (out.ny + 1));
  for (int j = -half; j <= upper.ny; ++j) {
    for (int i = 0; i <= upper.nx; ++i) {
      Vec2 v;
      if (j >= 0) {
        v = upper.values[upper.node(i, j)];
      } else {
        // phi_hat(x1, x2) = 3 phi(x1, -x2) - 2 phi(x1, -2 x2), grid-aligned.
        v = 3.0 * upper.values[upper.node(i, -j)] - 2.0 * upper.values[upper.node(i, -2 * j)];
      }
      out.values[out.node(i, j + half)] = v;
    }
  }
  return out;
}

std::vector<ConvergenceRow> convergence_report(const Mesh& mesh, const Density& density,
                                               const ElasticTensor& tensor,
                                               const BoundaryProgram& program,
                                               const std::vector<Trajectory>& nonlinear_ladder,
                                               const Trajectory& linear_reference,
                                               const std::vector<double>& report_times) {
  if (linear_reference.model != ModelKind::Linear)
    throw std::invalid_argument("convergence_report: reference must be the linear model");
  for (const Trajectory& traj : nonlinear_ladder) {
    if (traj.model != ModelKind::Nonlinear)
      throw std::invalid_argument("convergence_report: ladder entries must be nonlinear");
    if (traj.partition.level != linear_reference.partition.level ||
        traj.steps.size() != linear_reference.steps.size())
      throw std::invalid_argument("convergence_report: mismatched time partitions");
    if (traj.params.kappa != linear_reference.params.kappa)
      throw std::invalid_argument("convergence_report: mismatched surface parameters");
  }

  std::vector<ConvergenceRow> rows;
  for (const Trajectory& traj : nonlinear_ladder) {
    const double eps = traj.params.epsilon;
    const double elastic_scale = mesh.cell_area() / (eps * eps);

    // Per-step modified displacements drive the balance and interior-work
    // series for this rung of the ladder.
    std::vector<ModifiedDisplacement> mods;
    std::vector<std::vector<Mat2>> strains;
    std::vector<RotationAssignment> rots;
    mods.reserve(traj.steps.size());
    for (const StepRecord& rec : traj.steps) {
      mods.push_back(modified_displacement(mesh, traj.params, rec.partition, rec.field));
      strains.push_back(mods.back().strains);
      rots.push_back(mods.back().rotations);
    }
    const BalanceSeries balance = balance_residual(mesh, tensor, program, traj, strains);
    const std::vector<double> inner = interior_work(mesh, tensor, program, traj, strains, rots);

    for (double t : report_times) {
      const int n = traj.index_of_time(t);
      const int n_ref = linear_reference.index_of_time(t);
      if (n < 0 || n_ref < 0)
        throw std::invalid_argument("convergence_report: report time not on the partition");
      const StepRecord& rec = traj.steps[n];
      const StepRecord& ref = linear_reference.steps[n_ref];
      const ModifiedDisplacement& mod = mods[n];

      ConvergenceRow row;
      row.eps = eps;
      row.time = rec.time;
      row.total_gap =
          std::abs(traj.total_energy(mesh, n) - linear_reference.total_energy(mesh, n_ref));
      row.elastic_gap = std::abs(rec.energy.elastic - ref.energy.elastic);
      row.hessian_value = rec.energy.hessian;

      const std::vector<bool> bad = bad_set(mesh, rec.partition);
      double err_sq = 0.0, above1 = 0.0, above2 = 0.0, bad_energy = 0.0;
      for (int cell = 0; cell < mesh.n_cells(); ++cell) {
        const double diff =
            (mod.u.centroid_value(cell) - ref.field.centroid_value(cell)).norm();
        if (diff > 1e-1) above1 += mesh.cell_area();
        if (diff > 1e-2) above2 += mesh.cell_area();
        if (bad[cell])
          bad_energy += elastic_scale * density.value(rec.field.cell_gradient(cell));
        else
          err_sq += mesh.cell_area() * diff * diff;
      }
      row.disp_l2_error = std::sqrt(err_sq);
      row.bad_set_energy = bad_energy;
      row.balance_sigma = balance.from_zero[n];
      row.interior_work = inner[n];
      row.measure_above_1e1 = above1;
      row.measure_above_1e2 = above2;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace qsf
