/**
 * @file field.cpp
 * @brief Tie-structure construction (union-find over cell-corner slots) and
 *        bilinear evaluation.
 */
#include "qsf/field.hpp"

#include <numeric>
#include <stdexcept>

namespace qsf {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Corner index (SW=0, SE=1, NW=2, NE=3) of a node within a cell, -1 if absent.
int corner_of_node(const Mesh& mesh, int cell, int node) {
  for (int k = 0; k < 4; ++k)
    if (mesh.cells[cell].corner_nodes[k] == node) return k;
  return -1;
}

}  // namespace

std::shared_ptr<const DofMap> build_dof_map(const Mesh& mesh, const CrackState& state) {
  if (static_cast<int>(state.broken.size()) != mesh.n_interfaces())
    throw std::invalid_argument("build_dof_map: crack state size mismatch");
  const int n_slots = 4 * mesh.n_cells();
  UnionFind uf(n_slots);
  for (int i = 0; i < mesh.n_interfaces(); ++i) {
    if (state.broken[i]) continue;
    const Interface& f = mesh.interfaces[i];
    for (int node : {f.node_a, f.node_b}) {
      const int ka = corner_of_node(mesh, f.cell_a, node);
      const int kb = corner_of_node(mesh, f.cell_b, node);
      uf.unite(4 * f.cell_a + ka, 4 * f.cell_b + kb);
    }
  }

  auto map = std::make_shared<DofMap>();
  map->mesh = &mesh;
  map->broken = state.broken;
  map->class_of_slot.assign(n_slots, -1);
  std::vector<int> class_of_root(n_slots, -1);
  for (int s = 0; s < n_slots; ++s) {
    const int root = uf.find(s);
    if (class_of_root[root] < 0) {
      class_of_root[root] = map->n_classes++;
      map->node_of_class.push_back(mesh.cells[s / 4].corner_nodes[s % 4]);
      map->class_pinned.push_back(false);
    }
    const int cls = class_of_root[root];
    map->class_of_slot[s] = cls;
    if (mesh.cells[s / 4].in_frame) map->class_pinned[cls] = true;
  }
  map->free_index.assign(map->n_classes, -1);
  for (int c = 0; c < map->n_classes; ++c) {
    if (!map->class_pinned[c]) {
      map->free_index[c] = map->n_free++;
      map->free_classes.push_back(c);
    }
  }
  return map;
}

Vec2 Field::centroid_value(int cell) const {
  Vec2 v = Vec2::Zero();
  for (int k = 0; k < 4; ++k) v += corner_value(cell, k);
  return 0.25 * v;
}

Mat2 Field::cell_gradient(int cell) const { return qsf::cell_gradient(*dofs->mesh, *this, cell); }

Mat2 cell_gradient(const Mesh& mesh, const Field& field, int cell) {
  const Vec2 sw = field.corner_value(cell, 0);
  const Vec2 se = field.corner_value(cell, 1);
  const Vec2 nw = field.corner_value(cell, 2);
  const Vec2 ne = field.corner_value(cell, 3);
  const double inv = 1.0 / (2.0 * mesh.dx);
  Mat2 G;
  G.col(0) = (se + ne - sw - nw) * inv;
  G.col(1) = (nw + ne - sw - se) * inv;
  return G;
}

Field field_from_function(const Mesh& mesh, std::shared_ptr<const DofMap> dofs,
                          FieldKind kind, const std::function<Vec2(const Vec2&)>& datum) {
  Field f;
  f.kind = kind;
  f.dofs = std::move(dofs);
  f.values.resize(f.dofs->n_classes);
  for (int c = 0; c < f.dofs->n_classes; ++c)
    f.values[c] = datum(mesh.nodes[f.dofs->node_of_class[c]]);
  return f;
}

Field untie(const Mesh& mesh, const Field& field) {
  auto map = std::make_shared<DofMap>();
  map->mesh = &mesh;
  map->broken.assign(mesh.n_interfaces(), true);  // evaluation-only structure
  const int n_slots = 4 * mesh.n_cells();
  map->class_of_slot.resize(n_slots);
  map->n_classes = n_slots;
  map->node_of_class.resize(n_slots);
  map->class_pinned.assign(n_slots, false);
  Field out;
  out.kind = field.kind;
  out.values.resize(n_slots);
  for (int s = 0; s < n_slots; ++s) {
    map->class_of_slot[s] = s;
    map->node_of_class[s] = mesh.cells[s / 4].corner_nodes[s % 4];
    out.values[s] = field.values[field.dofs->class_of_slot[s]];
  }
  map->free_index.resize(n_slots);
  map->free_classes.resize(n_slots);
  std::iota(map->free_index.begin(), map->free_index.end(), 0);
  std::iota(map->free_classes.begin(), map->free_classes.end(), 0);
  map->n_free = n_slots;
  out.dofs = map;
  return out;
}

}  // namespace qsf
