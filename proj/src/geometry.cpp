/**
 * @file geometry.cpp
 * @brief Grid construction and crackable-interface selection.
 */
#include "qsf/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace qsf {

double Mesh::interior_area() const {
  double a = 0.0;
  for (const Cell& c : cells)
    if (!c.in_frame) a += cell_area();
  return a;
}

double Mesh::frame_area() const {
  double a = 0.0;
  for (const Cell& c : cells)
    if (c.in_frame) a += cell_area();
  return a;
}

Mesh build_mesh(const GridSpec& spec) {
  if (spec.cells_x < 4 || spec.cells_y < 4)
    throw std::invalid_argument("GridSpec: cells_x and cells_y must be at least 4 (got " +
                                std::to_string(spec.cells_x) + "x" +
                                std::to_string(spec.cells_y) + ")");
  if (!(spec.extent_x > 0.0) || !(spec.extent_y > 0.0))
    throw std::invalid_argument("GridSpec: extents must be positive");
  const double dx = spec.extent_x / spec.cells_x;
  const double dy = spec.extent_y / spec.cells_y;
  if (std::abs(dx - dy) > 1e-9 * dx)
    throw std::invalid_argument("GridSpec: cells must be square (extent_x/cells_x == extent_y/cells_y)");
  if (!(spec.margin > 0.0))
    throw std::invalid_argument("GridSpec: margin must be positive");
  const int rings = static_cast<int>(std::lround(spec.margin / dx));
  if (rings < 1 || std::abs(spec.margin - rings * dx) > 1e-9 * dx)
    throw std::invalid_argument(
        "GridSpec: margin must be a whole number of cell rings, at least one per side");
  if (spec.cells_x - 2 * rings < 1 || spec.cells_y - 2 * rings < 1)
    throw std::invalid_argument("GridSpec: frame rings leave no interior cells");

  Mesh mesh;
  mesh.spec = spec;
  mesh.dx = dx;
  mesh.frame_rings = rings;

  mesh.nodes.reserve((spec.cells_x + 1) * (spec.cells_y + 1));
  for (int iy = 0; iy <= spec.cells_y; ++iy)
    for (int ix = 0; ix <= spec.cells_x; ++ix)
      mesh.nodes.emplace_back(ix * dx, iy * dx);

  mesh.cells.reserve(spec.cells_x * spec.cells_y);
  for (int iy = 0; iy < spec.cells_y; ++iy)
    for (int ix = 0; ix < spec.cells_x; ++ix) {
      Cell c;
      c.ix = ix;
      c.iy = iy;
      c.centroid = Vec2((ix + 0.5) * dx, (iy + 0.5) * dx);
      c.in_frame = ix < rings || ix >= spec.cells_x - rings || iy < rings ||
                   iy >= spec.cells_y - rings;
      c.corner_nodes = {mesh.node_id(ix, iy), mesh.node_id(ix + 1, iy),
                        mesh.node_id(ix, iy + 1), mesh.node_id(ix + 1, iy + 1)};
      mesh.cells.push_back(c);
    }

  // Vertical interfaces first (row-major), then horizontal (row-major).
  auto add_interface = [&mesh](int a, int b, bool vertical, int na, int nb) {
    Interface f;
    f.cell_a = a;
    f.cell_b = b;
    f.length = mesh.dx;
    f.vertical = vertical;
    f.normal = vertical ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0);
    f.frame_adjacent = mesh.cells[a].in_frame || mesh.cells[b].in_frame;
    f.node_a = na;
    f.node_b = nb;
    const int id = mesh.n_interfaces();
    mesh.interfaces.push_back(f);
    // Side order in Cell: W E S N. Vertical interface is E of a, W of b;
    // horizontal is N of a, S of b.
    if (vertical) {
      mesh.cells[a].side_interfaces[1] = id;
      mesh.cells[b].side_interfaces[0] = id;
    } else {
      mesh.cells[a].side_interfaces[3] = id;
      mesh.cells[b].side_interfaces[2] = id;
    }
  };
  for (int iy = 0; iy < spec.cells_y; ++iy)
    for (int ix = 0; ix + 1 < spec.cells_x; ++ix)
      add_interface(mesh.cell_id(ix, iy), mesh.cell_id(ix + 1, iy), true,
                    mesh.node_id(ix + 1, iy), mesh.node_id(ix + 1, iy + 1));
  for (int iy = 0; iy + 1 < spec.cells_y; ++iy)
    for (int ix = 0; ix < spec.cells_x; ++ix)
      add_interface(mesh.cell_id(ix, iy), mesh.cell_id(ix, iy + 1), false,
                    mesh.node_id(ix, iy + 1), mesh.node_id(ix + 1, iy + 1));

  return mesh;
}

std::vector<int> crackable_interfaces(const Mesh& mesh) {
  std::vector<int> out;
  for (int i = 0; i < mesh.n_interfaces(); ++i) {
    const Interface& f = mesh.interfaces[i];
    if (!(mesh.cells[f.cell_a].in_frame && mesh.cells[f.cell_b].in_frame)) out.push_back(i);
  }
  return out;
}

}  // namespace qsf
