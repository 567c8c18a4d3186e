/**
 * @file energy.hpp
 * @brief Discrete bulk, gradient-jump and surface energies.
 *
 * Bulk terms use one-point centroid quadrature per cell. The gradient-jump
 * term sums (length/dx) * |grad_a - grad_b|^2 over intact interfaces, a
 * consistent quadrature of the squared-second-gradient integral; broken
 * interfaces contribute nothing. Surface energy charges only interfaces
 * newly broken relative to the cumulative crack.
 */
#pragma once

#include "qsf/crack.hpp"
#include "qsf/field.hpp"
#include "qsf/material.hpp"

namespace qsf {

/// Additive decomposition of an energy value.
struct EnergyBreakdown {
  double elastic = 0.0;
  double hessian = 0.0;  ///< gradient-jump penalty contribution
  double surface = 0.0;
  double total = 0.0;

  static EnergyBreakdown make(double elastic, double hessian, double surface) {
    return {elastic, hessian, surface, elastic + hessian + surface};
  }
};

/**
 * Sum over intact interfaces of (length/dx) * |grad(cell_a) - grad(cell_b)|^2
 * with centroid gradients. For smooth fields this converges to the integral
 * of the squared second gradient over the box.
 */
double discrete_hessian_term(const Mesh& mesh, const CrackState& state, const Field& field);

/**
 * Nonlinear incremental energy of a deformation:
 *   elastic = eps^-2 * sum(area * W(grad y)),
 *   hessian = eps^-2beta * discrete_hessian_term,
 *   surface = kappa * length(ties \ cumulative).
 * The field's tie structure must contain `cumulative`; otherwise throws
 * std::invalid_argument (inconsistent tie structure).
 */
EnergyBreakdown nonlinear_energy(const Mesh& mesh, const Density& density,
                                 const ModelParams& params, const Field& y,
                                 const CrackState& cumulative);

/**
 * Linearized incremental energy of a displacement:
 *   elastic = sum(area * 0.5 * Q(sym grad u)), hessian = 0,
 *   surface as in nonlinear_energy.
 */
EnergyBreakdown linear_energy(const Mesh& mesh, const ElasticTensor& tensor,
                              const ModelParams& params, const Field& u,
                              const CrackState& cumulative);

}  // namespace qsf
