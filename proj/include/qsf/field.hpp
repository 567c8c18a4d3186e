/**
 * @file field.hpp
 * @brief Piecewise-bilinear vector fields with per-cell-corner degrees of
 *        freedom tied across intact interfaces and duplicated across broken
 *        ones.
 *
 * Corner slots of two adjacent cells are united at each shared endpoint of
 * every intact interface; transitivity around a node splits the corner fan
 * exactly where a crack passes. Classes containing a frame-cell slot are
 * pinned to the boundary datum.
 */
#pragma once

#include "qsf/crack.hpp"
#include "qsf/geometry.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace qsf {

enum class FieldKind { Deformation, Displacement };

/// Tie structure mapping (cell, corner) slots to DOF classes.
struct DofMap {
  const Mesh* mesh = nullptr;
  std::vector<bool> broken;        ///< crack state this map was built for
  std::vector<int> class_of_slot;  ///< size 4*n_cells, slot = 4*cell + corner
  int n_classes = 0;
  std::vector<int> node_of_class;  ///< geometric node id per class
  std::vector<bool> class_pinned;  ///< contains a frame-cell slot
  std::vector<int> free_index;     ///< per class, -1 if pinned
  std::vector<int> free_classes;   ///< class id per free index
  int n_free = 0;

  int slot(int cell, int corner) const { return 4 * cell + corner; }
  int dof_of(int cell, int corner) const { return class_of_slot[slot(cell, corner)]; }
};

/// Build the tie structure for a crack state.
std::shared_ptr<const DofMap> build_dof_map(const Mesh& mesh, const CrackState& state);

/// Field values per DOF class.
struct Field {
  FieldKind kind = FieldKind::Displacement;
  std::shared_ptr<const DofMap> dofs;
  std::vector<Vec2> values;  ///< per class

  Vec2 corner_value(int cell, int corner) const {
    return values[dofs->dof_of(cell, corner)];
  }
  /// Mean of the four corner values (bilinear value at the centroid).
  Vec2 centroid_value(int cell) const;
  /// Gradient of the bilinear interpolant at the cell centroid,
  /// (i,j) = d(component i)/d(x_j). Exact on affine fields.
  Mat2 cell_gradient(int cell) const;
};

/// Gradient of the bilinear interpolant at the centroid of one cell.
Mat2 cell_gradient(const Mesh& mesh, const Field& field, int cell);

/**
 * Field whose classes are set from a nodal function; pinned and free classes
 * alike receive datum(node position). Used for boundary data extension and
 * warm starts.
 */
Field field_from_function(const Mesh& mesh, std::shared_ptr<const DofMap> dofs,
                          FieldKind kind, const std::function<Vec2(const Vec2&)>& datum);

/**
 * Copy with every slot made independent (one class per cell corner) so cells
 * can be zeroed independently of tie structure; used by the cutoff.
 */
Field untie(const Mesh& mesh, const Field& field);

}  // namespace qsf
