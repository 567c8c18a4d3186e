/**
 * @file linearize.hpp
 * @brief Comparison pipeline between nonlinear and linearized evolutions:
 *        rescaling, per-piece rotation alignment, gradient cutoff, energy
 *        balance bookkeeping, and the boundary reflection extension.
 */
#pragma once

#include "qsf/solver.hpp"

#include <vector>

namespace qsf {

/**
 * Rescaled displacement (y - id)/eps as a field on the same tie structure.
 * Throws std::invalid_argument if eps <= 0 or the field is not a deformation.
 */
Field rescale(const Mesh& mesh, const Field& y, double eps);

/// Best-fit rotation per connected piece.
struct RotationAssignment {
  std::vector<Mat2> rotation;       ///< per component; identity on frame-touching pieces
  std::vector<bool> frame_touching; ///< per component
  double strain_misfit_l2 = 0.0;    ///< ||sym(R^T grad y) - Id||_L2 after alignment
  double gradient_misfit_l2 = 0.0;  ///< ||R^T grad y - Id||_L2 after alignment
};

/**
 * For each non-frame component, the rotation minimizing |mean(grad y) - R|
 * over SO(2) (polar factor of the area-averaged gradient); identity on
 * frame-touching components. Throws std::runtime_error if a component's mean
 * gradient has non-positive determinant (degenerate mean gradient).
 */
RotationAssignment component_rotations(const Mesh& mesh, const DomainPartition& partition,
                                       const Field& y);

/// y_rot = R_j^T y on component j (so exact rigid motions align to id).
Field apply_rotations(const Mesh& mesh, const DomainPartition& partition,
                      const RotationAssignment& rotations, const Field& y);

/// Gradient cutoff window and the cells inside it.
struct CutoffRegion {
  double theta_minus = 0.0;  ///< eps^((9 gamma - 10)/12)
  double theta_plus = 0.0;   ///< eps^((gamma - 2)/4)
  double eta = 0.0;          ///< eps^((3 gamma - 4)/6), geometric midpoint
  std::vector<bool> inside;  ///< per cell: max-norm of grad u_aux below eta
};

/**
 * Cells whose gradient max-norm stays below eta. Throws std::runtime_error
 * if a frame cell falls outside the window (frame-excised).
 */
CutoffRegion cutoff(const Mesh& mesh, const ModelParams& params, const Field& u_aux);

/// Untied copy of u_aux zeroed outside the window.
Field apply_cutoff(const Mesh& mesh, const Field& u_aux, const CutoffRegion& region);

/// Modified displacement (rescale + rotations + cutoff) with its ingredients.
struct ModifiedDisplacement {
  Field u;                   ///< untied, zero outside the cutoff window
  RotationAssignment rotations;
  CutoffRegion region;
  std::vector<Mat2> strains; ///< per cell, zero outside the window
};

ModifiedDisplacement modified_displacement(const Mesh& mesh, const ModelParams& params,
                                           const DomainPartition& partition, const Field& y);

/// Balance residual series sigma(t', t) = E_tot(t) - E_tot(t') - work(t', t).
struct BalanceSeries {
  std::vector<double> consecutive;  ///< sigma(t_n, t_{n+1}), size n_steps
  std::vector<double> from_zero;    ///< sigma(t_0, t_n), size n_steps + 1 (leading 0)
};

/**
 * Balance residuals of a trajectory with the given per-step displacement
 * strains (for the nonlinear model pass modified-displacement strains).
 */
BalanceSeries balance_residual(const Mesh& mesh, const ElasticTensor& tensor,
                               const BoundaryProgram& program, const Trajectory& traj,
                               const std::vector<std::vector<Mat2>>& cell_strains);

/**
 * Time quadrature of the loading work restricted to non-frame components,
 * with the loading rate rotated back by each piece's fitted rotation.
 * Returns the partial sums over [0, t_n] for every step n (absolute values
 * are taken by callers).
 */
std::vector<double> interior_work(const Mesh& mesh, const ElasticTensor& tensor,
                                  const BoundaryProgram& program, const Trajectory& traj,
                                  const std::vector<std::vector<Mat2>>& cell_strains,
                                  const std::vector<RotationAssignment>& rotations);

/// Node samples of a vector field on an axis-aligned rectangle grid.
struct PatchSamples {
  double x0 = 0.0, y0 = 0.0;  ///< lower-left corner
  double h = 0.0;             ///< grid step (square)
  int nx = 0, ny = 0;         ///< cells per direction
  std::vector<Vec2> values;   ///< (nx+1)*(ny+1), row-major bottom-up

  int node(int i, int j) const { return j * (nx + 1) + i; }
};

/**
 * Reflection extension below the bottom edge of the upper patch: on the
 * strip of height y-extent/2 below y0,
 *   phi_hat(x1, x2) = 3 phi(x1, -x2) - 2 phi(x1, -2 x2)   (x2 < 0 relative to y0),
 * sampled exactly on the aligned grid. The value trace at the edge is exact
 * and the normal-derivative trace is second-order accurate. Requires ny
 * even; throws std::invalid_argument otherwise (insufficient samples).
 * Returns the combined patch covering (x0, x0+nx*h) x (y0-ny*h/2, y0+ny*h).
 */
PatchSamples reflection_extend(const PatchSamples& upper);

/// One row of the nonlinear-vs-linear comparison table.
struct ConvergenceRow {
  double eps = 0.0;
  double time = 0.0;
  double total_gap = 0.0;       ///< |E_eps_tot - E_tot|
  double elastic_gap = 0.0;     ///< |eps^-2 elastic - linear elastic|
  double hessian_value = 0.0;   ///< second-gradient term of the nonlinear run
  double disp_l2_error = 0.0;   ///< ||u_eps - u||_L2 over the good set
  double bad_set_energy = 0.0;  ///< eps^-2 elastic restricted to the bad set
  double balance_sigma = 0.0;   ///< sigma(0, t) of the nonlinear run
  double interior_work = 0.0;   ///< partial interior work over [0, t]
  double measure_above_1e1 = 0.0;  ///< area where |u_eps - u| > 0.1
  double measure_above_1e2 = 0.0;  ///< area where |u_eps - u| > 0.01
};

/**
 * Compare a ladder of nonlinear trajectories against a linear reference on
 * the same mesh, partition and program, at the requested times. Throws
 * std::invalid_argument on mismatched configurations.
 */
std::vector<ConvergenceRow> convergence_report(const Mesh& mesh, const Density& density,
                                               const ElasticTensor& tensor,
                                               const BoundaryProgram& program,
                                               const std::vector<Trajectory>& nonlinear_ladder,
                                               const Trajectory& linear_reference,
                                               const std::vector<double>& report_times);

}  // namespace qsf
