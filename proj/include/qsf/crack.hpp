/**
 * @file crack.hpp
 * @brief Crack sets on mesh interfaces, their monotone history, and the
 *        partition of the body into connected pieces.
 */
#pragma once

#include "qsf/geometry.hpp"

#include <vector>

namespace qsf {

/// Set of broken interfaces. Only crackable interfaces may be broken.
struct CrackState {
  std::vector<bool> broken;  ///< per interface id

  static CrackState empty(const Mesh& mesh);
  /// Throws std::invalid_argument if any id is not crackable.
  static CrackState from_ids(const Mesh& mesh, const std::vector<int>& ids);
  std::vector<int> ids() const;
  int count() const;
  bool subset_of(const CrackState& other) const;
  bool operator==(const CrackState& other) const { return broken == other.broken; }
};

/// Total length of the broken interfaces.
double crack_measure(const Mesh& mesh, const CrackState& state);

/// Union of two crack states (idempotent, commutative).
CrackState accumulate(const CrackState& a, const CrackState& b);

/// Interfaces in `state` but not in `base`.
CrackState set_difference(const CrackState& state, const CrackState& base);

/// Monotone time-indexed record of cumulative crack sets.
struct CrackHistory {
  std::vector<double> times;
  std::vector<CrackState> cumulative;

  /**
   * Append the cumulative state at a time. Throws std::invalid_argument if
   * the time is earlier than the last one or the state does not contain the
   * previous cumulative set (irreversibility).
   */
  void record(double time, const CrackState& state);
  const CrackState& latest() const;
};

/// Connected pieces of the body when broken interfaces are removed as edges.
struct DomainPartition {
  std::vector<int> component_of_cell;          ///< per cell id
  int n_components = 0;
  std::vector<bool> touches_frame;             ///< per component
  std::vector<std::vector<int>> component_cells;      ///< sorted cell ids
  std::vector<std::vector<int>> boundary_interfaces;  ///< sorted, interfaces with exactly one side in the component
};

/// BFS over cells joined by intact interfaces. Deterministic component ids
/// (ordered by smallest cell id).
DomainPartition components(const Mesh& mesh, const CrackState& state);

/**
 * Cells disconnected from the frame: the union of cells of components that
 * do not touch the frame. Their reduced boundary lies in the broken set, and
 * the result is the largest such union (verified exhaustively in tests).
 */
std::vector<bool> bad_set(const Mesh& mesh, const DomainPartition& partition);

/// Total area of the bad-set cells.
double bad_set_area(const Mesh& mesh, const std::vector<bool>& bad);

}  // namespace qsf
