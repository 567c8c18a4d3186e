/**
 * @file energy.cpp
 * @brief Discrete energy evaluation: bulk density term, gradient-jump term,
 *        and surface charge for newly opened interfaces.
 */
#include "qsf/energy.hpp"

#include <stdexcept>

#include "qsf/crack.hpp"
#include "qsf/field.hpp"
#include "qsf/geometry.hpp"
#include "qsf/material.hpp"

namespace qsf {

double discrete_hessian_term(const Mesh& mesh, const CrackState& state, const Field& field) {
  double total = 0.0;
  for (int i = 0; i < mesh.n_interfaces(); ++i) {
    if (state.broken[i]) continue;
    const Interface& f = mesh.interfaces[i];
    const Mat2 diff = field.cell_gradient(f.cell_a) - field.cell_gradient(f.cell_b);
    total += (f.length / mesh.dx) * diff.squaredNorm();
  }
  return total;
}

namespace {

// The field's tie structure must not bridge any interface recorded as open.
void require_compatible(const Field& field, const CrackState& cumulative, const char* where) {
  const std::vector<bool>& field_broken = field.dofs->broken;
  if (field_broken.size() != cumulative.broken.size())
    throw std::invalid_argument(std::string(where) + ": crack state size mismatch");
  for (size_t i = 0; i < field_broken.size(); ++i)
    if (cumulative.broken[i] && !field_broken[i])
      throw std::invalid_argument(std::string(where) +
                                  ": field ties bridge an interface already open");
}

}  // namespace

EnergyBreakdown nonlinear_energy(const Mesh& mesh, const Density& density,
                                 const ModelParams& params, const Field& y,
                                 const CrackState& cumulative) {
  if (y.kind != FieldKind::Deformation)
    throw std::invalid_argument("nonlinear_energy: expected a deformation field");
  require_compatible(y, cumulative, "nonlinear_energy");
  const double area = mesh.cell_area();
  double elastic = 0.0;
  for (int cell = 0; cell < mesh.n_cells(); ++cell)
    elastic += area * density.value(y.cell_gradient(cell));
  elastic /= params.epsilon * params.epsilon;

  CrackState field_state;
  field_state.broken = y.dofs->broken;
  const double hessian =
      std::pow(params.epsilon, -2.0 * params.beta) * discrete_hessian_term(mesh, field_state, y);
  const double surface =
      params.kappa * crack_measure(mesh, set_difference(field_state, cumulative));
  return EnergyBreakdown::make(elastic, hessian, surface);
}

EnergyBreakdown linear_energy(const Mesh& mesh, const ElasticTensor& tensor,
                              const ModelParams& params, const Field& u,
                              const CrackState& cumulative) {
  if (u.kind != FieldKind::Displacement)
    throw std::invalid_argument("linear_energy: expected a displacement field");
  require_compatible(u, cumulative, "linear_energy");
  const double area = mesh.cell_area();
  double elastic = 0.0;
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    const Mat2 grad = u.cell_gradient(cell);
    const Mat2 strain = 0.5 * (grad + grad.transpose());
    elastic += area * 0.5 * tensor.quadratic(strain);
  }
  CrackState field_state;
  field_state.broken = u.dofs->broken;
  const double surface =
      params.kappa * crack_measure(mesh, set_difference(field_state, cumulative));
  return EnergyBreakdown::make(elastic, 0.0, surface);
}

}  // namespace qsf
