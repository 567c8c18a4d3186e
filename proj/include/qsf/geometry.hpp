/**
 * @file geometry.hpp
 * @brief Structured square-cell grid over the outer box with a Dirichlet
 *        frame ring around the interior region.
 *
 * The outer box is split into cells_x * cells_y square cells of size dx.
 * Cells within `margin` of the outer boundary form the frame; the rest is
 * the interior region where cracks may open. All indexing is deterministic
 * and row-major so repeated builds are bit-identical.
 */
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace qsf {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Parameters describing the grid. Validated by build_mesh.
struct GridSpec {
  double extent_x = 1.0;  ///< width of the outer box
  double extent_y = 1.0;  ///< height of the outer box
  double margin = 0.25;   ///< frame thickness per side (whole cell rings)
  int cells_x = 4;
  int cells_y = 4;

  double dx() const { return extent_x / cells_x; }
};

/// One square cell. Corner order: 0=SW, 1=SE, 2=NW, 3=NE.
struct Cell {
  int ix = 0, iy = 0;
  Vec2 centroid = Vec2::Zero();
  bool in_frame = false;
  std::array<int, 4> corner_nodes{};  ///< node ids, SW SE NW NE
  std::array<int, 4> side_interfaces{{-1, -1, -1, -1}};  ///< W E S N, -1 at box edge
};

/// Interface between two side-adjacent cells (a < b in cell id).
struct Interface {
  int cell_a = -1, cell_b = -1;
  double length = 0.0;
  Vec2 normal = Vec2::Zero();      ///< (1,0) vertical interface, (0,1) horizontal
  bool frame_adjacent = false;     ///< touches at least one frame cell
  bool vertical = false;           ///< separates horizontally adjacent cells
  int node_a = -1, node_b = -1;    ///< endpoint node ids
};

/// Immutable mesh: cells, nodes, interfaces and adjacency.
struct Mesh {
  GridSpec spec;
  double dx = 0.0;
  int frame_rings = 1;             ///< frame thickness in cells per side
  std::vector<Cell> cells;         ///< row-major, id = iy*cells_x + ix
  std::vector<Vec2> nodes;         ///< row-major, id = iy*(cells_x+1) + ix
  std::vector<Interface> interfaces;  ///< all vertical then all horizontal, row-major

  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_interfaces() const { return static_cast<int>(interfaces.size()); }
  int cell_id(int ix, int iy) const { return iy * spec.cells_x + ix; }
  int node_id(int ix, int iy) const { return iy * (spec.cells_x + 1) + ix; }
  bool cell_in_interior(int c) const { return !cells[c].in_frame; }
  double cell_area() const { return dx * dx; }
  double interior_area() const;
  double frame_area() const;
};

/**
 * Build the mesh for a grid spec.
 *
 * Throws std::invalid_argument naming the violated constraint if
 * cells_x/y < 4, cells are not square, the margin is not a positive whole
 * number of cell rings, or the interior region is empty.
 */
Mesh build_mesh(const GridSpec& spec);

/**
 * Ids of interfaces on which a crack may open: at least one adjacent cell is
 * an interior cell (frame-frame interfaces are never crackable). Sorted
 * ascending; deterministic.
 */
std::vector<int> crackable_interfaces(const Mesh& mesh);

}  // namespace qsf
