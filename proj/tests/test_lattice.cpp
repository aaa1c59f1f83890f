#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "toric/error.hpp"
#include "toric/lattice.hpp"

using namespace toric;

namespace {

bool connected(const Lattice& lat) {
  std::vector<int> parent(lat.n_vertices());
  for (int i = 0; i < lat.n_vertices(); ++i) parent[i] = i;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Link& l : lat.links) parent[find(l.tail)] = find(l.head);
  std::set<int> roots;
  for (int i = 0; i < lat.n_vertices(); ++i) roots.insert(find(i));
  return roots.size() == 1;
}

// every vertex touched by the plaquette meets exactly two of its links
bool closed_cycle(const Lattice& lat, const std::vector<int>& links) {
  std::map<int, int> degree;
  for (int l : links) {
    ++degree[lat.links[l].tail];
    ++degree[lat.links[l].head];
  }
  return std::all_of(degree.begin(), degree.end(), [](auto& kv) { return kv.second == 2; });
}

void check_invariants(const Lattice& lat) {
  std::vector<int> in_stars(lat.n_links(), 0);
  std::size_t star_sum = 0;
  for (const auto& s : lat.stars) {
    star_sum += s.size();
    for (int l : s) ++in_stars[l];
  }
  CHECK(star_sum == 2 * lat.links.size());
  for (int c : in_stars) CHECK(c == 2);
  for (const auto& p : lat.plaquettes) CHECK(closed_cycle(lat, p));
  CHECK(connected(lat));
  for (int i = 0; i < lat.n_links(); ++i) CHECK(lat.links[i].id == i);
  for (int i = 0; i < lat.n_vertices(); ++i) CHECK(lat.vertices[i].id == i);
}

}  // namespace

TEST_CASE("periodic geometries have the documented counts") {
  struct Case {
    LatticeType t;
    int L;
    int nv, nl, np;
    std::size_t star, plaq;
  };
  const Case cases[] = {
      {LatticeType::square, 4, 16, 32, 16, 4, 4},
      {LatticeType::cubic, 2, 8, 24, 24, 6, 4},
      {LatticeType::honeycomb, 3, 18, 27, 9, 3, 6},
      {LatticeType::triangular, 3, 9, 27, 18, 6, 3},
  };
  for (const auto& c : cases) {
    CAPTURE(to_string(c.t));
    Lattice lat = build_lattice(c.t, c.L, Boundaries::periodic);
    CHECK(lat.n_vertices() == c.nv);
    CHECK(lat.n_links() == c.nl);
    CHECK(lat.n_plaquettes() == c.np);
    for (const auto& s : lat.stars) CHECK(s.size() == c.star);
    for (const auto& p : lat.plaquettes) CHECK(p.size() == c.plaq);
    CHECK(lat.winding_directions.size() == static_cast<std::size_t>(lat.dim));
    check_invariants(lat);
  }
}

TEST_CASE("general counts for several sizes") {
  for (int L : {2, 3, 5}) {
    Lattice sq = build_lattice(LatticeType::square, L, Boundaries::periodic);
    CHECK(sq.n_links() == 2 * L * L);
    Lattice tr = build_lattice(LatticeType::triangular, L, Boundaries::periodic);
    CHECK(tr.n_plaquettes() == 2 * L * L);
    Lattice hc = build_lattice(LatticeType::honeycomb, L, Boundaries::periodic);
    CHECK(hc.n_vertices() == 2 * L * L);
    CHECK(hc.n_plaquettes() == L * L);
    Lattice cu = build_lattice(LatticeType::cubic, L, Boundaries::periodic);
    CHECK(cu.n_plaquettes() == 3 * L * L * L);
    for (const Lattice* lat : {&sq, &tr, &hc, &cu}) check_invariants(*lat);
  }
}

TEST_CASE("open boundaries truncate stars and keep complete plaquettes") {
  for (auto t : {LatticeType::square, LatticeType::triangular, LatticeType::honeycomb,
                 LatticeType::cubic}) {
    Lattice lat = build_lattice(t, 3, Boundaries::open);
    CAPTURE(to_string(t));
    CHECK(lat.winding_directions.empty());
    check_invariants(lat);
  }
  Lattice sq = build_lattice(LatticeType::square, 4, Boundaries::open);
  CHECK(sq.n_links() == 2 * 4 * 3);
  CHECK(sq.n_plaquettes() == 9);
  std::size_t smallest = 99;
  for (const auto& s : sq.stars) smallest = std::min(smallest, s.size());
  CHECK(smallest == 2);
  // boundary links belong to one plaquette, bulk links to two
  int boundary = 0;
  for (const auto& lp : sq.link_plaquettes) {
    CHECK((lp.size() == 1 || lp.size() == 2));
    boundary += lp.size() == 1;
  }
  CHECK(boundary == 12);
}

TEST_CASE("periodic square links belong to two plaquettes") {
  Lattice lat = build_lattice(LatticeType::square, 4, Boundaries::periodic);
  for (const auto& lp : lat.link_plaquettes) CHECK(lp.size() == 2);
}

TEST_CASE("construction is deterministic") {
  Lattice a = build_lattice(LatticeType::honeycomb, 4, Boundaries::periodic);
  Lattice b = build_lattice(LatticeType::honeycomb, 4, Boundaries::periodic);
  CHECK(a.stars == b.stars);
  CHECK(a.plaquettes == b.plaquettes);
  for (int i = 0; i < a.n_links(); ++i) {
    CHECK(a.links[i].tail == b.links[i].tail);
    CHECK(a.links[i].head == b.links[i].head);
  }
}

TEST_CASE("invalid lattice requests are configuration errors") {
  CHECK_THROWS_AS(build_lattice(LatticeType::square, 1, Boundaries::periodic), ConfigError);
  CHECK_THROWS_AS(parse_lattice_type("kagome"), ConfigError);
  CHECK_THROWS_AS(parse_boundaries("twisted"), ConfigError);
  CHECK(parse_lattice_type("cubic") == LatticeType::cubic);
  CHECK(parse_boundaries("open") == Boundaries::open);
}

TEST_CASE("Fredenhagen-Marcu loops") {
  SUBCASE("2x2 block on L=8") {
    Lattice lat = build_lattice(LatticeType::square, 8, Boundaries::periodic);
    FmLoopPair fm = build_fm_loops(lat, 2);
    CHECK(fm.full_loop.size() == 8);
    CHECK(fm.half_loop.size() == 4);
    CHECK(fm.perimeter == 8);
    CHECK(closed_cycle(lat, fm.full_loop));
    // the half loop is a connected prefix of the ordered full loop
    CHECK(std::equal(fm.half_loop.begin(), fm.half_loop.end(), fm.full_loop.begin()));
  }
  SUBCASE("single plaquette on L=4") {
    Lattice lat = build_lattice(LatticeType::square, 4, Boundaries::periodic);
    FmLoopPair fm = build_fm_loops(lat, 1);
    CHECK(fm.full_loop.size() == 4);
    CHECK(fm.half_loop.size() == 2);
    std::vector<int> a = fm.full_loop, b = lat.plaquettes[0];
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
  SUBCASE("too large") {
    Lattice lat = build_lattice(LatticeType::square, 4, Boundaries::periodic);
    CHECK_THROWS_AS(build_fm_loops(lat, 3), ConfigError);
  }
  SUBCASE("other lattices give closed loops") {
    for (auto t : {LatticeType::triangular, LatticeType::honeycomb, LatticeType::cubic}) {
      Lattice lat = build_lattice(t, 4, Boundaries::periodic);
      FmLoopPair fm = build_fm_loops(lat, 2);
      CAPTURE(to_string(t));
      CHECK(closed_cycle(lat, fm.full_loop));
      CHECK(fm.half_loop.size() == (fm.full_loop.size() + 1) / 2);
    }
  }
}

TEST_CASE("winding cycles and layer cuts") {
  for (auto t : {LatticeType::square, LatticeType::triangular, LatticeType::honeycomb,
                 LatticeType::cubic}) {
    Lattice lat = build_lattice(t, 3, Boundaries::periodic);
    CAPTURE(to_string(t));
    auto cycles = winding_cycles(lat);
    CHECK(cycles.size() == static_cast<std::size_t>(lat.dim));
    for (const auto& c : cycles) {
      CHECK(closed_cycle(lat, c));
      CHECK(c.size() >= 3);
    }
    // a cut meets every plaquette an even number of times
    for (const auto& cut : layer_cuts(lat)) {
      CHECK(!cut.empty());
      std::set<int> in(cut.begin(), cut.end());
      for (const auto& p : lat.plaquettes) {
        int n = 0;
        for (int l : p) n += in.count(l);
        CHECK(n % 2 == 0);
      }
    }
  }
  CHECK(winding_cycles(build_lattice(LatticeType::square, 3, Boundaries::open)).empty());
}
