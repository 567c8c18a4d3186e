/**
 * @file crack.cpp
 * @brief Crack set bookkeeping, irreversible history, connected components,
 *        and detached-region (bad set) extraction.
 */
#include "qsf/crack.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

#include "qsf/geometry.hpp"

namespace qsf {

CrackState CrackState::empty(const Mesh& mesh) {
  CrackState s;
  s.broken.assign(mesh.n_interfaces(), false);
  return s;
}

CrackState CrackState::from_ids(const Mesh& mesh, const std::vector<int>& ids) {
  CrackState s = empty(mesh);
  for (int id : ids) {
    if (id < 0 || id >= mesh.n_interfaces())
      throw std::invalid_argument("CrackState: interface id out of range");
    const Interface& f = mesh.interfaces[id];
    if (mesh.cells[f.cell_a].in_frame && mesh.cells[f.cell_b].in_frame)
      throw std::invalid_argument("CrackState: interface is not crackable (both sides in frame)");
    s.broken[id] = true;
  }
  return s;
}

std::vector<int> CrackState::ids() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(broken.size()); ++i)
    if (broken[i]) out.push_back(i);
  return out;
}

int CrackState::count() const {
  return static_cast<int>(std::count(broken.begin(), broken.end(), true));
}

bool CrackState::subset_of(const CrackState& other) const {
  if (broken.size() != other.broken.size()) return false;
  for (size_t i = 0; i < broken.size(); ++i)
    if (broken[i] && !other.broken[i]) return false;
  return true;
}

double crack_measure(const Mesh& mesh, const CrackState& state) {
  double total = 0.0;
  for (int i = 0; i < mesh.n_interfaces(); ++i)
    if (state.broken[i]) total += mesh.interfaces[i].length;
  return total;
}

CrackState accumulate(const CrackState& a, const CrackState& b) {
  if (a.broken.size() != b.broken.size())
    throw std::invalid_argument("accumulate: crack state size mismatch");
  CrackState out = a;
  for (size_t i = 0; i < out.broken.size(); ++i)
    if (b.broken[i]) out.broken[i] = true;
  return out;
}

CrackState set_difference(const CrackState& a, const CrackState& b) {
  if (a.broken.size() != b.broken.size())
    throw std::invalid_argument("set_difference: crack state size mismatch");
  CrackState out = a;
  for (size_t i = 0; i < out.broken.size(); ++i)
    if (b.broken[i]) out.broken[i] = false;
  return out;
}

void CrackHistory::record(double time, const CrackState& state) {
  if (!times.empty()) {
    if (time <= times.back())
      throw std::invalid_argument("CrackHistory: times must be strictly increasing");
    if (!cumulative.back().subset_of(state))
      throw std::invalid_argument("CrackHistory: crack sets must grow monotonically");
  }
  times.push_back(time);
  cumulative.push_back(state);
}

const CrackState& CrackHistory::latest() const {
  if (cumulative.empty()) throw std::runtime_error("CrackHistory: empty history");
  return cumulative.back();
}

DomainPartition components(const Mesh& mesh, const CrackState& state) {
  if (static_cast<int>(state.broken.size()) != mesh.n_interfaces())
    throw std::invalid_argument("components: crack state size mismatch");
  DomainPartition part;
  part.component_of_cell.assign(mesh.n_cells(), -1);
  // BFS from lowest unvisited cell id keeps component numbering deterministic.
  for (int seed = 0; seed < mesh.n_cells(); ++seed) {
    if (part.component_of_cell[seed] >= 0) continue;
    const int comp = part.n_components++;
    part.touches_frame.push_back(false);
    part.component_cells.emplace_back();
    std::deque<int> queue{seed};
    part.component_of_cell[seed] = comp;
    while (!queue.empty()) {
      const int cell = queue.front();
      queue.pop_front();
      part.component_cells[comp].push_back(cell);
      if (mesh.cells[cell].in_frame) part.touches_frame[comp] = true;
      for (int side = 0; side < 4; ++side) {
        const int face = mesh.cells[cell].side_interfaces[side];
        if (face < 0 || state.broken[face]) continue;
        const Interface& f = mesh.interfaces[face];
        const int other = (f.cell_a == cell) ? f.cell_b : f.cell_a;
        if (part.component_of_cell[other] < 0) {
          part.component_of_cell[other] = comp;
          queue.push_back(other);
        }
      }
    }
    std::sort(part.component_cells[comp].begin(), part.component_cells[comp].end());
  }
  part.boundary_interfaces.assign(part.n_components, {});
  for (int i = 0; i < mesh.n_interfaces(); ++i) {
    const Interface& f = mesh.interfaces[i];
    const int ca = part.component_of_cell[f.cell_a];
    const int cb = part.component_of_cell[f.cell_b];
    if (ca != cb) {
      part.boundary_interfaces[ca].push_back(i);
      part.boundary_interfaces[cb].push_back(i);
    }
  }
  return part;
}

std::vector<bool> bad_set(const Mesh& mesh, const DomainPartition& partition) {
  std::vector<bool> bad(mesh.n_cells(), false);
  for (int cell = 0; cell < mesh.n_cells(); ++cell)
    bad[cell] = !partition.touches_frame[partition.component_of_cell[cell]];
  return bad;
}

double bad_set_area(const Mesh& mesh, const std::vector<bool>& bad) {
  double area = 0.0;
  for (int cell = 0; cell < mesh.n_cells(); ++cell)
    if (bad[cell]) area += mesh.cell_area();
  return area;
}

}  // namespace qsf
