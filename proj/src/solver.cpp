/**
 * @file solver.cpp
 * @brief Elastic solves (sparse direct for the quadratic model, regularized
 *        Newton with multistart for the nonlinear one), greedy and exhaustive
 *        crack search, evolutions, and the loading work integral.
 */
#include "qsf/solver.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>

#include "qsf/crack.hpp"

namespace qsf {

std::vector<double> TimePartition::times() const {
  std::vector<double> out(n_steps() + 1);
  for (int n = 0; n <= n_steps(); ++n) out[n] = time(n);
  return out;
}

void TimePartition::validate() const {
  if (level < 0 || level > 24)
    throw std::invalid_argument("TimePartition: level must satisfy 0 <= level <= 24");
}

double BoundaryProgram::scale(double t) const {
  if (knots.empty()) return t;
  if (t <= knots.front().first) return knots.front().second;
  for (size_t k = 0; k + 1 < knots.size(); ++k) {
    if (t <= knots[k + 1].first) {
      const double t0 = knots[k].first, t1 = knots[k + 1].first;
      const double s0 = knots[k].second, s1 = knots[k + 1].second;
      return s0 + (s1 - s0) * (t - t0) / (t1 - t0);
    }
  }
  return knots.back().second;
}

double BoundaryProgram::scale_rate(double t) const {
  if (knots.empty()) return 1.0;
  if (t < knots.front().first || t >= knots.back().first) return 0.0;
  for (size_t k = 0; k + 1 < knots.size(); ++k)
    if (t < knots[k + 1].first)
      return (knots[k + 1].second - knots[k].second) /
             (knots[k + 1].first - knots[k].first);
  return 0.0;
}

Mat2 BoundaryProgram::base_matrix() const {
  Mat2 G = Mat2::Zero();
  if (base == Base::UniaxialStretch)
    G(0, 0) = 1.0;  // h(x) = (x1, 0)
  else
    G(0, 1) = 1.0;  // h(x) = (x2, 0)
  return G;
}

void BoundaryProgram::validate() const {
  if (!std::isfinite(amplitude))
    throw std::invalid_argument("BoundaryProgram: amplitude must be finite");
  for (size_t k = 0; k < knots.size(); ++k) {
    if (!std::isfinite(knots[k].first) || !std::isfinite(knots[k].second))
      throw std::invalid_argument("BoundaryProgram: knots must be finite");
    if (k > 0 && knots[k].first <= knots[k - 1].first)
      throw std::invalid_argument("BoundaryProgram: knot times must be strictly increasing");
  }
}

BoundaryProgram::Base boundary_base_from_string(const std::string& name) {
  if (name == "uniaxial_stretch") return BoundaryProgram::Base::UniaxialStretch;
  if (name == "simple_shear") return BoundaryProgram::Base::SimpleShear;
  throw std::invalid_argument("BoundaryProgram: unknown base '" + name +
                              "' (expected uniaxial_stretch or simple_shear)");
}

std::string to_string(BoundaryProgram::Base base) {
  return base == BoundaryProgram::Base::UniaxialStretch ? "uniaxial_stretch" : "simple_shear";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "nonlinear") return ModelKind::Nonlinear;
  if (name == "linear") return ModelKind::Linear;
  throw std::invalid_argument("ModelKind: unknown model '" + name +
                              "' (expected nonlinear or linear)");
}

std::string to_string(ModelKind kind) {
  return kind == ModelKind::Nonlinear ? "nonlinear" : "linear";
}

std::function<Vec2(const Vec2&)> Problem::datum(double t) const {
  const BoundaryProgram prog = program;
  if (model == ModelKind::Nonlinear) {
    const double eps = params.epsilon;
    return [prog, t, eps](const Vec2& x) { return Vec2(x + eps * prog.value(t, x)); };
  }
  return [prog, t](const Vec2& x) { return prog.value(t, x); };
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Centroid-gradient weights per corner, order SW SE NW NE; gradient column j
// of the bilinear interpolant is sum_k value_k * w_k(j).
struct CornerWeights {
  std::array<double, 4> wx{}, wy{};
};

CornerWeights corner_weights(double dx) {
  const double c = 1.0 / (2.0 * dx);
  return {{-c, c, -c, c}, {-c, -c, c, c}};
}

std::vector<int> intact_interfaces(const Mesh& mesh, const CrackState& ties) {
  std::vector<int> out;
  for (int i = 0; i < mesh.n_interfaces(); ++i)
    if (!ties.broken[i]) out.push_back(i);
  return out;
}

// Free DOF ids (2 per class) lying in components that do not touch the frame.
std::vector<int> floating_dofs(const Mesh& mesh, const CrackState& ties, const DofMap& dofs) {
  const DomainPartition part = components(mesh, ties);
  std::vector<bool> seen(dofs.n_classes, false);
  std::vector<int> out;
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    if (part.touches_frame[part.component_of_cell[cell]]) continue;
    for (int corner = 0; corner < 4; ++corner) {
      const int cls = dofs.dof_of(cell, corner);
      if (seen[cls]) continue;
      seen[cls] = true;
      const int f = dofs.free_index[cls];
      if (f >= 0) {
        out.push_back(2 * f);
        out.push_back(2 * f + 1);
      }
    }
  }
  return out;
}

Field field_from_dofs(const Mesh& mesh, std::shared_ptr<const DofMap> dofs, FieldKind kind,
                      const std::function<Vec2(const Vec2&)>& datum,
                      const Eigen::VectorXd& x) {
  Field f = field_from_function(mesh, dofs, kind, datum);
  for (int k = 0; k < dofs->n_free; ++k)
    f.values[dofs->free_classes[k]] = Vec2(x(2 * k), x(2 * k + 1));
  return f;
}

Eigen::VectorXd dofs_of_field(const Field& field) {
  const DofMap& dofs = *field.dofs;
  Eigen::VectorXd x(2 * dofs.n_free);
  for (int k = 0; k < dofs.n_free; ++k) {
    x(2 * k) = field.values[dofs.free_classes[k]](0);
    x(2 * k + 1) = field.values[dofs.free_classes[k]](1);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Quadratic (linearized) solve
// ---------------------------------------------------------------------------

// 3x2 map from a corner value to coords(sym grad) = (e11, e22, sqrt2 e12).
Eigen::Matrix<double, 3, 2> strain_map(const CornerWeights& w, int corner) {
  Eigen::Matrix<double, 3, 2> B = Eigen::Matrix<double, 3, 2>::Zero();
  B(0, 0) = w.wx[corner];
  B(1, 1) = w.wy[corner];
  B(2, 0) = w.wy[corner] / std::sqrt(2.0);
  B(2, 1) = w.wx[corner] / std::sqrt(2.0);
  return B;
}

}  // namespace

BulkSolve elastic_solve_linear(const Mesh& mesh, const ElasticTensor& tensor,
                               const CrackState& ties,
                               const std::function<Vec2(const Vec2&)>& datum,
                               const SolveOptions& options) {
  auto dofs = build_dof_map(mesh, ties);
  const CornerWeights w = corner_weights(mesh.dx);
  const double area = mesh.cell_area();
  const int n = 2 * dofs->n_free;

  std::array<Eigen::Matrix<double, 3, 2>, 4> B;
  for (int k = 0; k < 4; ++k) B[k] = strain_map(w, k);
  std::array<std::array<Mat2, 4>, 4> block;  // area * B_k^T rep B_l
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) block[k][l] = area * B[k].transpose() * tensor.rep * B[l];

  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(mesh.n_cells()) * 64);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    std::array<int, 4> free_id;
    std::array<Vec2, 4> pinned_val;
    for (int k = 0; k < 4; ++k) {
      const int cls = dofs->dof_of(cell, k);
      free_id[k] = dofs->free_index[cls];
      if (free_id[k] < 0) pinned_val[k] = datum(mesh.nodes[dofs->node_of_class[cls]]);
    }
    for (int k = 0; k < 4; ++k) {
      if (free_id[k] < 0) continue;
      for (int l = 0; l < 4; ++l) {
        const Mat2& blk = block[k][l];
        if (free_id[l] >= 0) {
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
              trips.emplace_back(2 * free_id[k] + i, 2 * free_id[l] + j, blk(i, j));
        } else {
          const Vec2 load = blk * pinned_val[l];
          b(2 * free_id[k]) -= load(0);
          b(2 * free_id[k] + 1) -= load(1);
        }
      }
    }
  }

  SpMat K(n, n);
  K.setFromTriplets(trips.begin(), trips.end());

  // Pieces detached from the frame carry exactly zero load (no stiffness path
  // to a pinned class), so a small diagonal shift there leaves their solution
  // exactly zero while removing the rigid and checkerboard kernel.
  const std::vector<int> floating = floating_dofs(mesh, ties, *dofs);
  if (!floating.empty() && n > 0) {
    double mean_diag = 0.0;
    for (int i = 0; i < n; ++i) mean_diag += K.coeff(i, i);
    mean_diag = std::max(mean_diag / n, 1e-30);
    const double rho = 1e-10 * mean_diag;
    for (int d : floating) K.coeffRef(d, d) += rho;
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (n > 0) {
    Eigen::SimplicialLDLT<SpMat> ldlt(K);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("elastic_solve_linear: stiffness factorization failed");
    x = ldlt.solve(b);
    if (!x.allFinite())
      throw std::runtime_error("elastic_solve_linear: singular stiffness system");
  }

  BulkSolve out;
  out.field = field_from_dofs(mesh, dofs, FieldKind::Displacement, datum, x);
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    const Mat2 grad = out.field.cell_gradient(cell);
    out.elastic += area * 0.5 * tensor.quadratic(grad);
  }
  out.hessian = 0.0;
  out.bulk = out.elastic;
  const double denom = std::max(1.0, b.norm());
  out.linear_residual_rel = (n > 0) ? (K * x - b).norm() / denom : 0.0;
  out.newton_iters = 0;
  (void)options;
  return out;
}

// ---------------------------------------------------------------------------
// Nonlinear solve
// ---------------------------------------------------------------------------

namespace {

struct NonlinearSystem {
  const Mesh* mesh = nullptr;
  const Density* density = nullptr;
  ModelParams params;
  std::shared_ptr<const DofMap> dofs;
  std::function<Vec2(const Vec2&)> datum;
  CornerWeights w;
  std::vector<int> intact;
  double elastic_scale = 0.0;  // eps^-2 * cell area
  double jump_scale = 0.0;     // eps^-2beta

  // Class values for the current x (pinned classes fixed at the datum).
  std::vector<Vec2> values(const Eigen::VectorXd& x) const {
    std::vector<Vec2> v(dofs->n_classes);
    for (int c = 0; c < dofs->n_classes; ++c) {
      const int f = dofs->free_index[c];
      if (f >= 0)
        v[c] = Vec2(x(2 * f), x(2 * f + 1));
      else
        v[c] = datum(mesh->nodes[dofs->node_of_class[c]]);
    }
    return v;
  }

  Mat2 gradient_of(const std::vector<Vec2>& v, int cell) const {
    Mat2 G = Mat2::Zero();
    for (int k = 0; k < 4; ++k) {
      const Vec2& u = v[dofs->dof_of(cell, k)];
      G.col(0) += u * w.wx[k];
      G.col(1) += u * w.wy[k];
    }
    return G;
  }

  double energy(const Eigen::VectorXd& x, double* elastic_out = nullptr,
                double* hessian_out = nullptr) const {
    const std::vector<Vec2> v = values(x);
    double elastic = 0.0;
    for (int cell = 0; cell < mesh->n_cells(); ++cell)
      elastic += elastic_scale * density->value(gradient_of(v, cell));
    double jump = 0.0;
    for (int i : intact) {
      const Interface& f = mesh->interfaces[i];
      const Mat2 diff = gradient_of(v, f.cell_a) - gradient_of(v, f.cell_b);
      jump += jump_scale * (f.length / mesh->dx) * diff.squaredNorm();
    }
    if (elastic_out) *elastic_out = elastic;
    if (hessian_out) *hessian_out = jump;
    return elastic + jump;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    const std::vector<Vec2> v = values(x);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * dofs->n_free);
    auto add = [&](int cell, int corner, const Vec2& contrib) {
      const int f = dofs->free_index[dofs->dof_of(cell, corner)];
      if (f < 0) return;
      g(2 * f) += contrib(0);
      g(2 * f + 1) += contrib(1);
    };
    for (int cell = 0; cell < mesh->n_cells(); ++cell) {
      const Mat2 M = elastic_scale * density->gradient(gradient_of(v, cell));
      for (int k = 0; k < 4; ++k) add(cell, k, M.col(0) * w.wx[k] + M.col(1) * w.wy[k]);
    }
    for (int i : intact) {
      const Interface& f = mesh->interfaces[i];
      const Mat2 D = gradient_of(v, f.cell_a) - gradient_of(v, f.cell_b);
      const Mat2 M = 2.0 * jump_scale * (f.length / mesh->dx) * D;
      for (int k = 0; k < 4; ++k) {
        const Vec2 c = M.col(0) * w.wx[k] + M.col(1) * w.wy[k];
        add(f.cell_a, k, c);
        add(f.cell_b, k, -c);
      }
    }
    return g;
  }

  SpMat hessian(const Eigen::VectorXd& x) const {
    const std::vector<Vec2> v = values(x);
    std::vector<Triplet> trips;
    trips.reserve(static_cast<size_t>(mesh->n_cells()) * 64 + intact.size() * 256);
    auto add_block = [&](int fk, int fl, const Mat2& blk) {
      if (fk < 0 || fl < 0) return;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          trips.emplace_back(2 * fk + i, 2 * fl + j, blk(i, j));
    };
    for (int cell = 0; cell < mesh->n_cells(); ++cell) {
      const Mat4 W2 = elastic_scale * density->second_derivative(gradient_of(v, cell));
      std::array<int, 4> fid;
      for (int k = 0; k < 4; ++k) fid[k] = dofs->free_index[dofs->dof_of(cell, k)];
      for (int k = 0; k < 4; ++k) {
        if (fid[k] < 0) continue;
        const double wk[2] = {w.wx[k], w.wy[k]};
        for (int l = 0; l < 4; ++l) {
          if (fid[l] < 0) continue;
          const double wl[2] = {w.wx[l], w.wy[l]};
          Mat2 blk;
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
              double s = 0.0;
              for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q) s += W2(2 * i + p, 2 * j + q) * wk[p] * wl[q];
              blk(i, j) = s;
            }
          add_block(fid[k], fid[l], blk);
        }
      }
    }
    for (int i : intact) {
      const Interface& f = mesh->interfaces[i];
      const double c = 2.0 * jump_scale * (f.length / mesh->dx);
      const int cells[2] = {f.cell_a, f.cell_b};
      const double sign[2] = {1.0, -1.0};
      for (int a = 0; a < 2; ++a)
        for (int k = 0; k < 4; ++k) {
          const int fk = dofs->free_index[dofs->dof_of(cells[a], k)];
          if (fk < 0) continue;
          for (int bside = 0; bside < 2; ++bside)
            for (int l = 0; l < 4; ++l) {
              const int fl = dofs->free_index[dofs->dof_of(cells[bside], l)];
              if (fl < 0) continue;
              const double dot = w.wx[k] * w.wx[l] + w.wy[k] * w.wy[l];
              const double val = c * sign[a] * sign[bside] * dot;
              trips.emplace_back(2 * fk, 2 * fl, val);
              trips.emplace_back(2 * fk + 1, 2 * fl + 1, val);
            }
        }
    }
    SpMat H(2 * dofs->n_free, 2 * dofs->n_free);
    H.setFromTriplets(trips.begin(), trips.end());
    return H;
  }
};

struct NewtonResult {
  bool converged = false;
  Eigen::VectorXd x;
  double energy = 0.0;
  double grad_norm = 0.0;
  int iters = 0;
};

NewtonResult newton_minimize(const NonlinearSystem& sys, Eigen::VectorXd x, double tol_abs,
                             int max_iters) {
  NewtonResult res;
  const int n = static_cast<int>(x.size());
  if (n == 0) {
    res.converged = true;
    res.x = x;
    res.energy = sys.energy(x);
    return res;
  }
  double E = sys.energy(x);
  Eigen::VectorXd g = sys.gradient(x);
  double lambda = 0.0;
  // Round-off floor for the achievable gradient norm: descent power per step
  // is ~ ||g||^2 / diag(H), and once that falls below the evaluation noise of
  // the energy (~ eps_mach * |E|) the line search cannot make real progress.
  // Stagnating there counts as converged, so stiff (eps^-2 * area) problems
  // do not fail on an unreachable absolute tolerance.
  double stagnation_floor = 0.0;
  int no_progress = 0;
  for (int iter = 0; iter < max_iters; ++iter) {
    if (g.norm() <= tol_abs) {
      res.converged = true;
      break;
    }
    const SpMat H = sys.hessian(x);
    double diag_scale = 0.0;
    for (int i = 0; i < n; ++i) diag_scale += std::abs(H.coeff(i, i));
    diag_scale = std::max(diag_scale / n, 1e-12);
    stagnation_floor =
        8.0 * std::sqrt(std::numeric_limits<double>::epsilon() * (1.0 + std::abs(E)) * diag_scale);

    bool accepted = false;
    double E_before = E;
    for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
      SpMat Hmod = H;
      if (lambda > 0.0) {
        for (int i = 0; i < n; ++i) Hmod.coeffRef(i, i) += lambda * diag_scale;
      }
      Eigen::SimplicialLDLT<SpMat> ldlt(Hmod);
      bool ok = (ldlt.info() == Eigen::Success);
      Eigen::VectorXd d;
      if (ok) {
        d = ldlt.solve(-g);
        ok = d.allFinite() && g.dot(d) < 0.0;
      }
      if (ok) {
        const double slope = g.dot(d);
        double alpha = 1.0;
        for (int halving = 0; halving < 40; ++halving) {
          const Eigen::VectorXd trial = x + alpha * d;
          const double Et = sys.energy(trial);
          if (std::isfinite(Et) && Et <= E + 1e-4 * alpha * slope) {
            x = trial;
            E = Et;
            accepted = true;
            break;
          }
          alpha *= 0.5;
        }
      }
      if (!accepted) lambda = (lambda == 0.0) ? 1e-8 : lambda * 10.0;
      if (lambda > 1e12) break;
    }
    if (!accepted) break;  // stuck: report best point found
    lambda *= 0.25;
    if (lambda < 1e-12) lambda = 0.0;
    g = sys.gradient(x);
    res.iters = iter + 1;
    // Accepted steps that no longer move the energy above evaluation noise
    // mean the iteration is only re-sampling round-off.
    if (E_before - E <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(E)))
      ++no_progress;
    else
      no_progress = 0;
    if (no_progress >= 8) break;
  }
  if (!res.converged)
    res.converged = g.norm() <= std::max(tol_abs, stagnation_floor);
  if (!res.converged && std::getenv("QSF_NEWTON_DEBUG") != nullptr)
    std::fprintf(stderr, "newton: gnorm=%.3e tol=%.3e floor=%.3e iters=%d E=%.6e\n", g.norm(),
                 tol_abs, stagnation_floor, res.iters, E);
  res.x = std::move(x);
  res.energy = E;
  res.grad_norm = g.norm();
  return res;
}

}  // namespace

BulkSolve elastic_solve_nonlinear(const Mesh& mesh, const Density& density,
                                  const ModelParams& params, const CrackState& ties,
                                  const std::function<Vec2(const Vec2&)>& datum,
                                  const SolveOptions& options, const Field* warm_start,
                                  std::uint64_t seed, int multistart) {
  NonlinearSystem sys;
  sys.mesh = &mesh;
  sys.density = &density;
  sys.params = params;
  sys.dofs = build_dof_map(mesh, ties);
  sys.datum = datum;
  sys.w = corner_weights(mesh.dx);
  CrackState tie_copy;
  tie_copy.broken = sys.dofs->broken;
  sys.intact = intact_interfaces(mesh, tie_copy);
  sys.elastic_scale = mesh.cell_area() / (params.epsilon * params.epsilon);
  sys.jump_scale = std::pow(params.epsilon, -2.0 * params.beta);

  const Field extension = field_from_function(mesh, sys.dofs, FieldKind::Deformation, datum);
  Eigen::VectorXd x0;
  if (warm_start != nullptr) {
    // Transfer: breaking only splits classes, so each class of the new map
    // inherits the value of the old class of any of its slots.
    Field carried = field_from_function(mesh, sys.dofs, FieldKind::Deformation, datum);
    for (int s = 0; s < 4 * mesh.n_cells(); ++s)
      carried.values[sys.dofs->class_of_slot[s]] =
          warm_start->values[warm_start->dofs->class_of_slot[s]];
    x0 = dofs_of_field(carried);
  } else {
    x0 = dofs_of_field(extension);
  }

  const double denom = std::max(1.0, sys.gradient(x0).norm());
  const double tol_abs = options.elastic_tol * denom;
  const int starts = std::max(1, multistart);

  NewtonResult best;
  bool have_best = false;
  for (int c = 0; c < starts; ++c) {
    Eigen::VectorXd start = x0;
    if (c > 0) {
      start = dofs_of_field(extension);
      std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(c)));
      std::uniform_real_distribution<double> unif(-params.epsilon, params.epsilon);
      for (int i = 0; i < start.size(); ++i) start(i) += unif(rng);
    }
    NewtonResult res = newton_minimize(sys, std::move(start), tol_abs,
                                       options.max_newton_iters);
    if (!res.converged) continue;
    if (!have_best || res.energy < best.energy) {
      best = std::move(res);
      have_best = true;
    }
  }
  if (!have_best)
    throw std::runtime_error("elastic_solve_nonlinear: Newton iteration did not converge");

  BulkSolve out;
  out.field = field_from_dofs(mesh, sys.dofs, FieldKind::Deformation, datum, best.x);
  out.bulk = sys.energy(best.x, &out.elastic, &out.hessian);
  out.linear_residual_rel = best.grad_norm / denom;
  out.newton_iters = best.iters;
  return out;
}

BulkSolve solve_bulk(const Problem& problem, const CrackState& ties, double time,
                     const Field* warm_start, std::uint64_t seed) {
  const auto datum = problem.datum(time);
  if (problem.model == ModelKind::Linear)
    return elastic_solve_linear(*problem.mesh, problem.tensor, ties, datum, problem.options);
  return elastic_solve_nonlinear(*problem.mesh, problem.density, problem.params, ties, datum,
                                 problem.options, warm_start, seed,
                                 problem.options.multistart);
}

// ---------------------------------------------------------------------------
// Crack search
// ---------------------------------------------------------------------------

namespace {

// Candidate break moves: single interfaces, straight contiguous runs of
// collinear interfaces, and boundary rings of rectangular interior blocks.
// Each candidate is the sorted list of its interface ids.
std::vector<std::vector<int>> candidate_moves(const Mesh& mesh, const CrackState& ties,
                                              const SolveOptions& options) {
  const int chain_max = options.chain_max > 0
                            ? options.chain_max
                            : std::max(mesh.spec.cells_x, mesh.spec.cells_y);
  std::vector<std::vector<int>> moves;
  auto crackable = [&](int id) {
    const Interface& f = mesh.interfaces[id];
    return !(mesh.cells[f.cell_a].in_frame && mesh.cells[f.cell_b].in_frame);
  };
  auto intact_crackable = [&](int id) { return id >= 0 && crackable(id) && !ties.broken[id]; };

  for (int id = 0; id < mesh.n_interfaces(); ++id)
    if (intact_crackable(id)) moves.push_back({id});

  // Straight runs along grid lines, via cell side lookups (E side = vertical
  // interface right of the cell, N side = horizontal interface above it).
  auto add_runs = [&](const std::vector<int>& line) {
    for (size_t start = 0; start < line.size(); ++start) {
      if (!intact_crackable(line[start])) continue;
      std::vector<int> run{line[start]};
      for (size_t next = start + 1; next < line.size(); ++next) {
        if (!intact_crackable(line[next])) break;
        run.push_back(line[next]);
        if (static_cast<int>(run.size()) > chain_max) break;
        moves.push_back(run);
      }
    }
  };
  for (int ix = 0; ix < mesh.spec.cells_x - 1; ++ix) {
    std::vector<int> line;
    for (int iy = 0; iy < mesh.spec.cells_y; ++iy)
      line.push_back(mesh.cells[mesh.cell_id(ix, iy)].side_interfaces[1]);
    add_runs(line);
  }
  for (int iy = 0; iy < mesh.spec.cells_y - 1; ++iy) {
    std::vector<int> line;
    for (int ix = 0; ix < mesh.spec.cells_x; ++ix)
      line.push_back(mesh.cells[mesh.cell_id(ix, iy)].side_interfaces[3]);
    add_runs(line);
  }

  if (options.block_rings) {
    const int r = mesh.frame_rings;
    const int ix_lo = r, ix_hi = mesh.spec.cells_x - 1 - r;
    const int iy_lo = r, iy_hi = mesh.spec.cells_y - 1 - r;
    for (int j0 = iy_lo; j0 <= iy_hi; ++j0)
      for (int j1 = j0; j1 <= iy_hi; ++j1)
        for (int i0 = ix_lo; i0 <= ix_hi; ++i0)
          for (int i1 = i0; i1 <= ix_hi; ++i1) {
            std::vector<int> ring;
            bool valid = true;
            auto take = [&](int id) {
              if (id < 0 || !crackable(id)) valid = false;
              else ring.push_back(id);
            };
            for (int i = i0; i <= i1 && valid; ++i) {
              take(mesh.cells[mesh.cell_id(i, j0)].side_interfaces[2]);
              take(mesh.cells[mesh.cell_id(i, j1)].side_interfaces[3]);
            }
            for (int j = j0; j <= j1 && valid; ++j) {
              take(mesh.cells[mesh.cell_id(i0, j)].side_interfaces[0]);
              take(mesh.cells[mesh.cell_id(i1, j)].side_interfaces[1]);
            }
            if (!valid) continue;
            std::sort(ring.begin(), ring.end());
            bool any_new = false;
            for (int id : ring) any_new |= !ties.broken[id];
            if (any_new) moves.push_back(std::move(ring));
          }
  }
  return moves;
}

struct Candidate {
  std::vector<int> new_ids;  // sorted
  double new_length = 0.0;
  double total = 0.0;  // bulk + kappa * new_length (within the step)
  BulkSolve solve;
};

bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

StepRecord make_record(const Problem& problem, const CrackState& cumulative_before,
                       const CrackState& ties, double time, BulkSolve&& solve,
                       double max_resid) {
  StepRecord rec;
  rec.time = time;
  rec.field = std::move(solve.field);
  rec.cumulative = ties;
  rec.increment = set_difference(ties, cumulative_before);
  rec.energy = EnergyBreakdown::make(
      solve.elastic, solve.hessian,
      problem.params.kappa * crack_measure(*problem.mesh, rec.increment));
  rec.partition = components(*problem.mesh, ties);
  rec.max_linear_residual_rel = std::max(max_resid, solve.linear_residual_rel);
  return rec;
}

}  // namespace

StepRecord incremental_step(const Problem& problem, const CrackState& cumulative,
                            double time, const Field* warm_start, std::uint64_t seed) {
  const Mesh& mesh = *problem.mesh;
  const double kappa = problem.params.kappa;
  CrackState ties = cumulative;
  BulkSolve current = solve_bulk(problem, ties, time, warm_start, seed);
  double max_resid = current.linear_residual_rel;

  for (int pass = 0; pass < problem.options.greedy_passes; ++pass) {
    const double scale = std::max(1.0, std::abs(current.bulk));
    const double min_decrease = problem.options.break_threshold_rel * scale;
    const double tie_window = 1e-12 * scale;

    std::optional<Candidate> best;
    std::set<std::vector<int>> seen;
    for (const std::vector<int>& move : candidate_moves(mesh, ties, problem.options)) {
      std::vector<int> new_ids;
      double new_length = 0.0;
      for (int id : move)
        if (!ties.broken[id]) {
          new_ids.push_back(id);
          new_length += mesh.interfaces[id].length;
        }
      if (new_ids.empty() || !seen.insert(new_ids).second) continue;
      // A break can only lower the bulk term, so its total cannot improve on
      // the current state when the surface charge alone exceeds the bulk.
      if (kappa * new_length >= current.bulk) continue;

      CrackState trial = ties;
      for (int id : new_ids) trial.broken[id] = true;
      BulkSolve solved = solve_bulk(problem, trial, time, &current.field, seed);
      max_resid = std::max(max_resid, solved.linear_residual_rel);
      const double total = solved.bulk + kappa * new_length;
      if (total >= current.bulk - min_decrease) continue;
      if (!best || total < best->total - tie_window ||
          (std::abs(total - best->total) <= tie_window && lex_less(new_ids, best->new_ids))) {
        best = Candidate{std::move(new_ids), new_length, total, std::move(solved)};
      }
    }
    if (!best) break;
    for (int id : best->new_ids) ties.broken[id] = true;
    current = std::move(best->solve);
  }
  return make_record(problem, cumulative, ties, time, std::move(current), max_resid);
}

StepRecord brute_force_step(const Problem& problem, const CrackState& cumulative,
                            double time, std::uint64_t seed) {
  const Mesh& mesh = *problem.mesh;
  const double kappa = problem.params.kappa;
  std::vector<int> open;
  for (int id : crackable_interfaces(mesh))
    if (!cumulative.broken[id]) open.push_back(id);
  if (open.size() > 16)
    throw std::invalid_argument(
        "brute_force_step: more than 16 intact crackable interfaces");

  const int starts = std::max(problem.options.multistart, problem.options.brute_force_multistart);
  auto solve_state = [&](const CrackState& ties) {
    const auto datum = problem.datum(time);
    if (problem.model == ModelKind::Linear)
      return elastic_solve_linear(mesh, problem.tensor, ties, datum, problem.options);
    return elastic_solve_nonlinear(mesh, problem.density, problem.params, ties, datum,
                                   problem.options, nullptr, seed, starts);
  };

  std::optional<Candidate> best;
  double max_resid = 0.0;
  double best_scale = 1.0;
  for (std::uint32_t mask = 0; mask < (1u << open.size()); ++mask) {
    std::vector<int> new_ids;
    double new_length = 0.0;
    for (size_t k = 0; k < open.size(); ++k)
      if (mask & (1u << k)) {
        new_ids.push_back(open[k]);
        new_length += mesh.interfaces[open[k]].length;
      }
    CrackState trial = cumulative;
    for (int id : new_ids) trial.broken[id] = true;
    BulkSolve solved = solve_state(trial);
    max_resid = std::max(max_resid, solved.linear_residual_rel);
    const double total = solved.bulk + kappa * new_length;
    const double tie_window = 1e-12 * best_scale;
    if (!best || total < best->total - tie_window ||
        (std::abs(total - best->total) <= tie_window && lex_less(new_ids, best->new_ids))) {
      best = Candidate{std::move(new_ids), new_length, total, std::move(solved)};
      best_scale = std::max(1.0, std::abs(best->total));
    }
  }
  CrackState ties = cumulative;
  for (int id : best->new_ids) ties.broken[id] = true;
  return make_record(problem, cumulative, ties, time, std::move(best->solve), max_resid);
}

// ---------------------------------------------------------------------------
// Evolutions
// ---------------------------------------------------------------------------

int Trajectory::index_of_time(double t, double tol) const {
  for (size_t n = 0; n < steps.size(); ++n)
    if (std::abs(steps[n].time - t) <= tol) return static_cast<int>(n);
  return -1;
}

double Trajectory::total_energy(const Mesh& mesh, int n) const {
  const StepRecord& s = steps.at(n);
  return s.energy.elastic + s.energy.hessian + params.kappa * crack_measure(mesh, s.cumulative);
}

Trajectory run_evolution(const Problem& problem, const TimePartition& partition,
                         const CrackState& initial_crack, bool use_brute_force) {
  partition.validate();
  problem.params.validate();
  problem.program.validate();
  Trajectory traj;
  traj.model = problem.model;
  traj.params = problem.params;
  traj.partition = partition;

  CrackState cumulative = initial_crack;
  const Field* warm = nullptr;
  for (int n = 0; n <= partition.n_steps(); ++n) {
    const double t = partition.time(n);
    const std::uint64_t seed = problem.options.rng_seed + 7919ull * static_cast<std::uint64_t>(n);
    StepRecord rec = use_brute_force
                         ? brute_force_step(problem, cumulative, t, seed)
                         : incremental_step(problem, cumulative, t, warm, seed);
    cumulative = rec.cumulative;
    traj.max_linear_residual_rel =
        std::max(traj.max_linear_residual_rel, rec.max_linear_residual_rel);
    traj.steps.push_back(std::move(rec));
    warm = &traj.steps.back().field;
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Loading work
// ---------------------------------------------------------------------------

double work_integral(const Mesh& mesh, const ElasticTensor& tensor,
                     const BoundaryProgram& program, const std::vector<double>& times,
                     const std::vector<std::vector<Mat2>>& cell_strains, int from, int to) {
  if (times.size() != cell_strains.size())
    throw std::invalid_argument("work_integral: times/strains size mismatch");
  if (from < 0 || to < from || to >= static_cast<int>(times.size()))
    throw std::invalid_argument("work_integral: step range out of bounds");
  const double area = mesh.cell_area();
  double work = 0.0;
  for (int n = from; n < to; ++n) {
    const double dt = times[n + 1] - times[n];
    const Mat2 rate = program.rate_gradient(times[n]);
    double density_sum = 0.0;
    for (int cell = 0; cell < mesh.n_cells(); ++cell)
      density_sum += tensor.pairing(cell_strains[n][cell], rate);
    work += dt * area * density_sum;
  }
  return work;
}

std::vector<Mat2> cell_strains_of(const Mesh& mesh, const Field& u) {
  std::vector<Mat2> strains(mesh.n_cells());
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    const Mat2 grad = u.cell_gradient(cell);
    strains[cell] = 0.5 * (grad + grad.transpose());
  }
  return strains;
}

}  // namespace qsf
