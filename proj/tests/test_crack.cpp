/**
 * @file test_crack.cpp
 * @brief Crack-set algebra against std::set oracles, history irreversibility,
 *        and detached-set extraction checked exhaustively with an independent
 *        frame flood fill.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "qsf/crack.hpp"

using namespace qsf;

namespace {

GridSpec unit_grid() { return GridSpec{1.0, 1.0, 0.25, 4, 4}; }

int vid(int ix_left, int iy) { return iy * 3 + ix_left; }
int hid(int ix, int iy_low) { return 12 + iy_low * 4 + ix; }

CrackState from_set(const Mesh& mesh, const std::set<int>& ids) {
  return CrackState::from_ids(mesh, std::vector<int>(ids.begin(), ids.end()));
}

// Independent detached-set oracle: flood from every frame cell across intact
// interfaces; interior cells never reached are detached.
std::vector<bool> flood_bad_set(const Mesh& mesh, const CrackState& state) {
  std::vector<bool> reached(mesh.n_cells(), false);
  std::vector<int> stack;
  for (int c = 0; c < mesh.n_cells(); ++c)
    if (mesh.cells[c].in_frame) {
      reached[c] = true;
      stack.push_back(c);
    }
  while (!stack.empty()) {
    const int cell = stack.back();
    stack.pop_back();
    for (int side = 0; side < 4; ++side) {
      const int face = mesh.cells[cell].side_interfaces[side];
      if (face < 0 || state.broken[face]) continue;
      const Interface& f = mesh.interfaces[face];
      const int other = (f.cell_a == cell) ? f.cell_b : f.cell_a;
      if (!reached[other]) {
        reached[other] = true;
        stack.push_back(other);
      }
    }
  }
  std::vector<bool> bad(mesh.n_cells(), false);
  for (int c = 0; c < mesh.n_cells(); ++c) bad[c] = !reached[c];
  return bad;
}

}  // namespace

TEST_CASE("crack states validate ids and round-trip through ids()") {
  const Mesh mesh = build_mesh(unit_grid());
  const CrackState s = CrackState::from_ids(mesh, {vid(1, 1), hid(1, 0)});
  CHECK(s.count() == 2);
  CHECK(s.ids() == std::vector<int>{vid(1, 1), hid(1, 0)});
  CHECK(crack_measure(mesh, s) == doctest::Approx(2.0 * mesh.dx).epsilon(1e-15));

  CHECK_THROWS_WITH_AS(CrackState::from_ids(mesh, {-1}),
                       "CrackState: interface id out of range", std::invalid_argument);
  CHECK_THROWS_AS(CrackState::from_ids(mesh, {mesh.n_interfaces()}), std::invalid_argument);
  // Interface 0 joins two frame cells and may not break.
  CHECK_THROWS_WITH_AS(CrackState::from_ids(mesh, {0}),
                       "CrackState: interface is not crackable (both sides in frame)",
                       std::invalid_argument);
}

TEST_CASE("set algebra agrees with std::set on random crackable subsets") {
  const Mesh mesh = build_mesh(unit_grid());
  const std::vector<int> crackable = crackable_interfaces(mesh);
  std::mt19937_64 rng(20260826u);
  std::bernoulli_distribution coin(0.5);
  for (int round = 0; round < 50; ++round) {
    std::set<int> sa, sb;
    for (int id : crackable) {
      if (coin(rng)) sa.insert(id);
      if (coin(rng)) sb.insert(id);
    }
    const CrackState a = from_set(mesh, sa);
    const CrackState b = from_set(mesh, sb);

    std::set<int> u = sa;
    u.insert(sb.begin(), sb.end());
    CHECK(accumulate(a, b).ids() == std::vector<int>(u.begin(), u.end()));
    CHECK(accumulate(a, b) == accumulate(b, a));
    CHECK(accumulate(a, a) == a);

    std::set<int> d;
    std::set_difference(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(d, d.end()));
    CHECK(set_difference(a, b).ids() == std::vector<int>(d.begin(), d.end()));

    const bool subset = std::includes(sb.begin(), sb.end(), sa.begin(), sa.end());
    CHECK(a.subset_of(b) == subset);
    CHECK(a.subset_of(accumulate(a, b)));
  }
}

TEST_CASE("size-mismatched states are rejected") {
  const Mesh mesh = build_mesh(unit_grid());
  const CrackState a = CrackState::empty(mesh);
  CrackState b;
  b.broken.assign(3, false);
  CHECK_THROWS_AS(accumulate(a, b), std::invalid_argument);
  CHECK_THROWS_AS(set_difference(a, b), std::invalid_argument);
  CHECK_THROWS_AS(components(mesh, b), std::invalid_argument);
  CHECK_FALSE(a.subset_of(b));
}

TEST_CASE("history rejects time reversal and crack shrinkage") {
  const Mesh mesh = build_mesh(unit_grid());
  CrackHistory history;
  CHECK_THROWS_AS(history.latest(), std::runtime_error);

  history.record(0.0, CrackState::from_ids(mesh, {vid(1, 1)}));
  history.record(0.5, CrackState::from_ids(mesh, {vid(1, 1), vid(1, 2)}));
  CHECK(history.latest().count() == 2);

  CHECK_THROWS_WITH_AS(history.record(0.5, history.latest()),
                       "CrackHistory: times must be strictly increasing", std::invalid_argument);
  CHECK_THROWS_WITH_AS(history.record(0.75, CrackState::from_ids(mesh, {vid(1, 2)})),
                       "CrackHistory: crack sets must grow monotonically", std::invalid_argument);
  // A superset at a later time is fine.
  CHECK_NOTHROW(history.record(0.75, CrackState::from_ids(mesh, {vid(1, 1), vid(1, 2), hid(1, 0)})));
}

TEST_CASE("crack-free body is a single frame-touching component") {
  const Mesh mesh = build_mesh(unit_grid());
  const DomainPartition part = components(mesh, CrackState::empty(mesh));
  CHECK(part.n_components == 1);
  CHECK(part.touches_frame[0]);
  CHECK(static_cast<int>(part.component_cells[0].size()) == mesh.n_cells());
  CHECK(part.boundary_interfaces[0].empty());
  CHECK(bad_set_area(mesh, bad_set(mesh, part)) == 0.0);
}

TEST_CASE("an encircled cell forms a detached component with its ring boundary") {
  const Mesh mesh = build_mesh(unit_grid());
  // Ring around interior cell (1,1).
  const std::vector<int> ring{vid(0, 1), vid(1, 1), hid(1, 0), hid(1, 1)};
  const CrackState state = CrackState::from_ids(mesh, ring);
  const DomainPartition part = components(mesh, state);
  REQUIRE(part.n_components == 2);
  CHECK(part.touches_frame[0]);
  CHECK_FALSE(part.touches_frame[1]);
  CHECK(part.component_cells[1] == std::vector<int>{mesh.cell_id(1, 1)});
  std::vector<int> sorted_ring = ring;
  std::sort(sorted_ring.begin(), sorted_ring.end());
  CHECK(part.boundary_interfaces[1] == sorted_ring);

  const std::vector<bool> bad = bad_set(mesh, part);
  for (int c = 0; c < mesh.n_cells(); ++c) CHECK(bad[c] == (c == mesh.cell_id(1, 1)));
  CHECK(bad_set_area(mesh, bad) == doctest::Approx(mesh.dx * mesh.dx).epsilon(1e-15));
}

TEST_CASE("a straight cut does not detach anything") {
  const Mesh mesh = build_mesh(unit_grid());
  const DomainPartition part =
      components(mesh, CrackState::from_ids(mesh, {vid(1, 1), vid(1, 2)}));
  CHECK(part.n_components == 1);
  CHECK(bad_set_area(mesh, bad_set(mesh, part)) == 0.0);
}

TEST_CASE("component numbering is deterministic by smallest cell id") {
  const Mesh mesh = build_mesh(unit_grid());
  const std::vector<int> two_islands{vid(0, 1), vid(1, 1), hid(1, 0), hid(1, 1),
                                     vid(1, 2), vid(2, 2), hid(2, 1), hid(2, 2)};
  const DomainPartition part = components(mesh, CrackState::from_ids(mesh, two_islands));
  REQUIRE(part.n_components == 3);
  int prev_min = -1;
  for (int j = 0; j < part.n_components; ++j) {
    const int mn = *std::min_element(part.component_cells[j].begin(),
                                     part.component_cells[j].end());
    CHECK(mn > prev_min);
    prev_min = mn;
    CHECK(std::is_sorted(part.component_cells[j].begin(), part.component_cells[j].end()));
  }
  CHECK(part.component_of_cell[0] == 0);
}

TEST_CASE("detached set matches an independent flood fill on every crack set") {
  const Mesh mesh = build_mesh(unit_grid());
  const std::vector<int> crackable = crackable_interfaces(mesh);
  REQUIRE(crackable.size() == 12);
  // All 4096 subsets of the crackable interfaces.
  for (unsigned mask = 0; mask < (1u << 12); ++mask) {
    CrackState state = CrackState::empty(mesh);
    for (int k = 0; k < 12; ++k)
      if (mask & (1u << k)) state.broken[crackable[k]] = true;
    const DomainPartition part = components(mesh, state);
    const std::vector<bool> bad = bad_set(mesh, part);
    CHECK(bad == flood_bad_set(mesh, state));
    // Every component not touching the frame is fully flagged (maximality).
    for (int j = 0; j < part.n_components; ++j)
      if (!part.touches_frame[j])
        for (int cell : part.component_cells[j]) CHECK(bad[cell]);
  }
}
