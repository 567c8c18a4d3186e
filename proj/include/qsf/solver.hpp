/**
 * @file solver.hpp
 * @brief Time-incremental global minimization: elastic solves, greedy and
 *        exhaustive crack search, evolutions, and the loading work integral.
 */
#pragma once

#include "qsf/energy.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace qsf {

/// Dyadic partition of [0,1]: times n / 2^level. Level-k grids are nested.
struct TimePartition {
  int level = 3;

  int n_steps() const { return 1 << level; }
  double time(int n) const { return static_cast<double>(n) / n_steps(); }
  std::vector<double> times() const;
  /// Throws std::invalid_argument if level < 0 or > 24.
  void validate() const;
};

/// Time-dependent boundary datum, affine in x.
struct BoundaryProgram {
  enum class Base { UniaxialStretch, SimpleShear };

  Base base = Base::UniaxialStretch;
  double amplitude = 1.0;
  /// Optional (time, scale) knots with piecewise-linear interpolation;
  /// empty means scale(t) = t. Knot times must be strictly increasing.
  std::vector<std::pair<double, double>> knots;

  double scale(double t) const;
  double scale_rate(double t) const;  ///< right derivative at knots
  Mat2 base_matrix() const;
  Vec2 value(double t, const Vec2& x) const { return scale(t) * amplitude * base_matrix() * x; }
  Mat2 gradient(double t) const { return scale(t) * amplitude * base_matrix(); }
  Vec2 rate(double t, const Vec2& x) const { return scale_rate(t) * amplitude * base_matrix() * x; }
  Mat2 rate_gradient(double t) const { return scale_rate(t) * amplitude * base_matrix(); }
  void validate() const;
};

BoundaryProgram::Base boundary_base_from_string(const std::string& name);
std::string to_string(BoundaryProgram::Base base);

struct SolveOptions {
  double elastic_tol = 1e-10;        ///< Newton gradient-norm stop
  int max_newton_iters = 100;
  int multistart = 3;                ///< candidates per nonlinear solve
  int greedy_passes = 10;            ///< accepted-break rounds per step
  double break_threshold_rel = 1e-12;  ///< strict-decrease threshold, scaled
  std::uint64_t rng_seed = 20260826;
  int chain_max = 0;                 ///< straight-run cap; 0 = max grid dimension
  bool block_rings = true;           ///< offer boundary rings of cell blocks
  int brute_force_multistart = 5;
  int workers = 1;
};

enum class ModelKind { Nonlinear, Linear };

ModelKind model_kind_from_string(const std::string& name);
std::string to_string(ModelKind kind);

/// Everything needed to pose one evolution.
struct Problem {
  const Mesh* mesh = nullptr;
  ModelKind model = ModelKind::Linear;
  Density density;
  ElasticTensor tensor;
  ModelParams params;
  BoundaryProgram program;
  SolveOptions options;

  /// Pinned-class datum at time t (displacement h, or deformation id + eps*h).
  std::function<Vec2(const Vec2&)> datum(double t) const;
};

/// Result of one elastic solve at fixed crack set.
struct BulkSolve {
  Field field;
  double elastic = 0.0;
  double hessian = 0.0;
  double bulk = 0.0;                  ///< elastic + hessian
  double linear_residual_rel = 0.0;   ///< stationarity residual / load norm
  int newton_iters = 0;
};

/**
 * Minimize the linearized elastic energy at fixed crack set with the given
 * pinned datum. Components detached from the frame have no stiffness path to
 * any pinned class, so their load vanishes identically; a small diagonal
 * shift restricted to their DOFs removes the rigid and checkerboard kernel
 * while keeping their solution exactly zero. Throws std::runtime_error if
 * the system is singular.
 */
BulkSolve elastic_solve_linear(const Mesh& mesh, const ElasticTensor& tensor,
                               const CrackState& ties,
                               const std::function<Vec2(const Vec2&)>& datum,
                               const SolveOptions& options);

/**
 * Minimize the nonlinear bulk energy (elastic + gradient-jump penalty) by
 * Newton iteration with backtracking line search and Levenberg fallback,
 * over `multistart` candidates: the warm start plus seeded perturbations of
 * amplitude eps. Returns the lowest-energy critical point. Throws
 * std::runtime_error if no candidate converges.
 */
BulkSolve elastic_solve_nonlinear(const Mesh& mesh, const Density& density,
                                  const ModelParams& params, const CrackState& ties,
                                  const std::function<Vec2(const Vec2&)>& datum,
                                  const SolveOptions& options, const Field* warm_start,
                                  std::uint64_t seed, int multistart);

/// Model-dispatching bulk solve.
BulkSolve solve_bulk(const Problem& problem, const CrackState& ties, double time,
                     const Field* warm_start, std::uint64_t seed);

/// One recorded step of an evolution.
struct StepRecord {
  double time = 0.0;
  Field field;
  CrackState increment;    ///< newly broken this step
  CrackState cumulative;   ///< total crack after the step
  EnergyBreakdown energy;  ///< surface part = charge for the increment only
  DomainPartition partition;
  double max_linear_residual_rel = 0.0;  ///< over base + candidate solves
};

/**
 * One time-incremental minimization step: elastic solve at the current
 * cumulative crack, then greedy rounds accepting the single best strictly
 * energy-decreasing break among single interfaces, straight contiguous runs,
 * and block boundary rings; ties resolved by lexicographic order on the
 * sorted new-interface ids. Candidates whose surface cost exceeds the
 * current bulk energy are pruned without a solve.
 */
StepRecord incremental_step(const Problem& problem, const CrackState& cumulative,
                            double time, const Field* warm_start, std::uint64_t seed);

/**
 * Exhaustive minimization over all subsets of intact crackable interfaces
 * (throws std::invalid_argument if more than 16). Nonlinear solves use at
 * least `brute_force_multistart` starts. Same tie-breaking as the greedy.
 */
StepRecord brute_force_step(const Problem& problem, const CrackState& cumulative,
                            double time, std::uint64_t seed);

/// A full evolution over a dyadic partition.
struct Trajectory {
  ModelKind model = ModelKind::Linear;
  ModelParams params;
  TimePartition partition;
  std::vector<StepRecord> steps;  ///< one per partition time, including t=0
  double max_linear_residual_rel = 0.0;

  int index_of_time(double t, double tol = 1e-12) const;  ///< -1 if absent
  /// Total energy at step n: elastic + hessian + kappa * cumulative length.
  double total_energy(const Mesh& mesh, int n) const;
};

/**
 * Run the scheme over the partition starting from an initial crack set
 * (present at t=0 and never charged). The nonlinear run warm-starts from
 * id + eps*h(0), the linear run from the t=0 minimizer; a minimization step
 * is performed at every partition time including t=0.
 */
Trajectory run_evolution(const Problem& problem, const TimePartition& partition,
                         const CrackState& initial_crack,
                         bool use_brute_force = false);

/**
 * Left-endpoint time quadrature of the loading work: for steps n in
 * [from, to) adds (t_{n+1} - t_n) * sum_cells area * C e_n : sym grad(dh/dt)
 * evaluated at t_n. `cell_strains[n]` holds per-cell strain matrices of the
 * displacement-scale field at step n.
 */
double work_integral(const Mesh& mesh, const ElasticTensor& tensor,
                     const BoundaryProgram& program, const std::vector<double>& times,
                     const std::vector<std::vector<Mat2>>& cell_strains, int from, int to);

/// Per-cell symmetrized gradients of a displacement field.
std::vector<Mat2> cell_strains_of(const Mesh& mesh, const Field& u);

}  // namespace qsf
