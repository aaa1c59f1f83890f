#include <cmath>
#include <random>

#include "doctest.h"
#include "toric/error.hpp"
#include "toric/lattice.hpp"
#include "toric/updates.hpp"
#include "toric/worldline.hpp"

using namespace toric;

namespace {

Couplings make(double mu, double h, double J, double lmbda) {
  Couplings c;
  c.mu = mu;
  c.h = h;
  c.J = J;
  c.lmbda = lmbda;
  return c;
}

// bitwise snapshot of everything a move may touch
struct State {
  std::vector<int> base;
  std::vector<std::vector<double>> flips;
  std::size_t kinks;
  double action;
  bool operator==(const State& o) const {
    return base == o.base && flips == o.flips && kinks == o.kinks && action == o.action;
  }
};

State capture(const Worldline& w) {
  State s;
  for (int l = 0; l < w.lattice().n_links(); ++l) {
    s.base.push_back(w.base_spin(l));
    s.flips.push_back(w.flips(l));
  }
  s.kinks = w.n_kinks();
  s.action = w.action();
  return s;
}

}  // namespace

TEST_CASE("exact sum reverts bit for bit") {
  ExactSum s;
  s.reset(-3.25);
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> u(-10, 10);
  std::vector<double> d(1000);
  for (double& x : d) {
    x = u(eng);
    s.add(x);
  }
  for (auto it = d.rbegin(); it != d.rend(); ++it) s.add(-*it);
  CHECK(s.value() == -3.25);
}

TEST_CASE("uniform state action") {
  Lattice lat = build_lattice(LatticeType::square, 2, Boundaries::periodic);
  Worldline w(lat, Basis::x, 1.0, make(1, 0, 1, 0));
  CHECK(w.action() == doctest::Approx(-4.0));
  Worldline w2(lat, Basis::x, 1.0, make(1, 1, 1, 0));
  // 4 stars and 8 links, all +1
  CHECK(w2.action() == doctest::Approx(-12.0));
  Worldline wz(lat, Basis::z, 2.0, make(1, 0, 1, 0));
  CHECK(wz.action() == doctest::Approx(-8.0));
}

TEST_CASE("negative couplings are rejected") {
  Lattice lat = build_lattice(LatticeType::square, 2, Boundaries::periodic);
  CHECK_THROWS_AS(Worldline(lat, Basis::x, 1.0, make(1, 0, 1, -0.1)), ConfigError);
  CHECK_THROWS_AS(Worldline(lat, Basis::z, 1.0, make(1, -0.1, 1, 0)), ConfigError);
  CHECK_THROWS_AS(Worldline(lat, Basis::x, 1.0, make(1, 0, -1, 0)), ConfigError);
  // the diagonal field may have either sign
  CHECK_NOTHROW(Worldline(lat, Basis::x, 1.0, make(1, -0.5, 1, 0)));
  CHECK_THROWS_AS(Worldline(lat, Basis::x, 0.0, make(1, 0, 1, 0)), ConfigError);
}

TEST_CASE("spin_at follows the flip convention") {
  Lattice lat = build_lattice(LatticeType::square, 2, Boundaries::periodic);
  const double beta = 2.0;
  Worldline w(lat, Basis::x, beta, make(0, 1, 1, 1));
  REQUIRE(w.apply_kink_pair(Species::field, 3, 0.3 * beta, 0.6 * beta).has_value());
  CHECK(w.spin_at(3, 0.4 * beta) == -1);
  CHECK(w.spin_at(3, 0.7 * beta) == 1);
  CHECK(w.spin_at(3, 0.3 * beta) == -1);
  CHECK(w.spin_at(3, 0.6 * beta) == 1);
  CHECK(w.spin_at(2, 0.4 * beta) == 1);

  // plaquette kink at 0.5 beta, field kink at 0.25 beta on one of its links:
  // the link flips twice, so it is back to +1 at 0.75 beta
  Worldline v(lat, Basis::x, beta, make(0, 1, 1, 1));
  const int p = 0;
  const int l = lat.plaquettes[p][0];
  std::vector<double> times(4, 0.0);
  for (std::size_t i = 0; i < 4; ++i) times[i] = (i == 0) ? 0.25 * beta : (0.8 + 0.05 * i) * beta;
  REQUIRE(v.apply_conversion(p, 0.5 * beta, times).has_value());
  CHECK(v.spin_at(l, 0.75 * beta) == -1);
  CHECK(v.spin_at(l, 0.4 * beta) == 1);
  CHECK(v.spin_at(lat.plaquettes[p][1], 0.75 * beta) == -1);
  CHECK(v.spin_at(lat.plaquettes[p][1], 0.95 * beta) == 1);
}

TEST_CASE("wrapping arcs flip the base spin") {
  Lattice lat = build_lattice(LatticeType::square, 2, Boundaries::periodic);
  Worldline w(lat, Basis::x, 1.0, make(0, 1, 1, 1));
  REQUIRE(w.apply_kink_pair(Species::field, 0, 0.8, 0.2).has_value());
  CHECK(w.base_spin(0) == -1);
  CHECK(w.spin_at(0, 0.1) == -1);
  CHECK(w.spin_at(0, 0.5) == 1);
  CHECK(w.spin_at(0, 0.9) == -1);
  CHECK(w.action() == doctest::Approx(w.recompute_action()).epsilon(1e-12));
}

TEST_CASE("pair insertion action changes") {
  Lattice lat = build_lattice(LatticeType::square, 2, Boundaries::periodic);
  const double beta = 3.0;
  SUBCASE("field pair") {
    Worldline w(lat, Basis::x, beta, make(0, 1, 1, 1));
    auto du = w.apply_kink_pair(Species::field, 1, 0.2 * beta, 0.4 * beta);
    REQUIRE(du.has_value());
    CHECK(*du == doctest::Approx(0.4 * beta));
  }
  SUBCASE("plaquette pair with stars only") {
    Worldline w(lat, Basis::x, beta, make(1, 0, 1, 0));
    auto du = w.apply_kink_pair(Species::interaction, 2, 0.1 * beta, 0.3 * beta);
    REQUIRE(du.has_value());
    CHECK(*du == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("plaquette pair with a field") {
    Worldline w(lat, Basis::x, beta, make(1, 0.5, 1, 0));
    auto du = w.apply_kink_pair(Species::interaction, 2, 0.1 * beta, 0.3 * beta);
    REQUIRE(du.has_value());
    CHECK(*du == doctest::Approx(0.8 * beta));
    CHECK(w.action() == doctest::Approx(w.recompute_action()));
  }
  SUBCASE("time collision") {
    Worldline w(lat, Basis::x, beta, make(1, 0.5, 1, 0.3));
    REQUIRE(w.apply_kink_pair(Species::field, 0, 0.5, 1.0).has_value());
    CHECK_FALSE(w.pair_delta(Species::field, 0, 0.5, 2.0).has_value());
  }
}

TEST_CASE("whole-line flip action changes") {
  Lattice lat = build_lattice(LatticeType::square, 2, Boundaries::periodic);
  const double beta = 1.5;
  Worldline a(lat, Basis::x, beta, make(1, 0, 1, 0));
  CHECK(a.flip_whole_line(FlipScope::single_link, 0) == doctest::Approx(4 * beta));
  Worldline b(lat, Basis::x, beta, make(1, 0, 1, 0));
  CHECK(b.flip_whole_line(FlipScope::interaction_cell, 0) == doctest::Approx(0.0));
  Worldline c(lat, Basis::x, beta, make(0, 1, 1, 0));
  CHECK(c.flip_whole_line(FlipScope::interaction_cell, 0) == doctest::Approx(8 * beta));
  CHECK(c.action() == doctest::Approx(c.recompute_action()));
  // flipping the same line twice restores the state exactly
  State before = capture(b);
  b.flip_whole_line(FlipScope::single_link, 3);
  b.flip_whole_line(FlipScope::single_link, 3);
  CHECK(capture(b) == before);
}

TEST_CASE("sector sets commute with every diagonal cell") {
  for (Basis basis : {Basis::x, Basis::z}) {
    for (auto t : {LatticeType::square, LatticeType::triangular, LatticeType::honeycomb,
                   LatticeType::cubic}) {
      Lattice lat = build_lattice(t, 3, Boundaries::periodic);
      Worldline w(lat, basis, 1.0, make(1, 0, 1, 0));
      CAPTURE(to_string(t));
      CAPTURE(to_char(basis));
      const int n = w.n_flip_sets(FlipScope::interaction_cell);
      CHECK(n >= w.n_targets(Species::interaction));
      for (int id = 0; id < n; ++id)
        CHECK(w.flip_delta(FlipScope::interaction_cell, id) == doctest::Approx(0.0));
    }
  }
}

TEST_CASE("insert then remove is bit-exact") {
  Lattice lat = build_lattice(LatticeType::triangular, 3, Boundaries::periodic);
  Worldline w(lat, Basis::z, 2.7, make(0.9, 0.4, 1.1, 0.35));
  ChainRng rng(3);
  for (int i = 0; i < 2000; ++i) mc_step(w, rng);
  State before = capture(w);

  SUBCASE("pairs") {
    for (Species s : {Species::field, Species::interaction}) {
      const int target = 1;
      auto du = w.apply_kink_pair(s, target, 2.5, 0.4);
      REQUIRE(du.has_value());
      double back = w.remove_kink_pair(s, target, 2.5, 0.4);
      CHECK(back == -*du);
      CHECK(capture(w) == before);
    }
  }
  SUBCASE("conversion") {
    const int target = 4;
    const auto& links = w.target_links(Species::interaction, target);
    std::vector<double> times;
    for (std::size_t i = 0; i < links.size(); ++i) times.push_back(std::fmod(0.137 + 0.71 * i, 2.7));
    auto du = w.apply_conversion(target, 1.9, times);
    REQUIRE(du.has_value());
    CHECK(w.action() == doctest::Approx(w.recompute_action()).epsilon(1e-10));
    double back = w.remove_conversion(target, 1.9, times);
    CHECK(back == doctest::Approx(-*du).epsilon(1e-12));
    CHECK(capture(w) == before);
  }
  SUBCASE("relation") {
    REQUIRE(w.n_relations() > 0);
    const std::size_t r = 0;
    std::vector<double> times;
    for (std::size_t k = 0; k < w.relation_targets(r).size(); ++k)
      times.push_back(std::fmod(0.0931 * (k + 1) + 0.017 * k * k, 2.7));
    auto du = w.apply_relation(r, times);
    REQUIRE(du.has_value());
    CHECK(w.action() == doctest::Approx(w.recompute_action()).epsilon(1e-10));
    w.check_invariants();
    double back = w.remove_relation(r, times);
    CHECK(back == doctest::Approx(-*du).epsilon(1e-12));
    CHECK(capture(w) == before);
  }
}

TEST_CASE("relations multiply to the identity") {
  for (Basis basis : {Basis::x, Basis::z}) {
    Lattice lat = build_lattice(LatticeType::cubic, 2, Boundaries::periodic);
    Worldline w(lat, basis, 1.0, make(1, 0, 1, 0));
    for (std::size_t r = 0; r < w.n_relations(); ++r) {
      std::vector<int> parity(lat.n_links(), 0);
      for (int t : w.relation_targets(r))
        for (int l : w.target_links(Species::interaction, t)) parity[l] ^= 1;
      for (int p : parity) CHECK(p == 0);
    }
  }
}

TEST_CASE("cached action tracks a long random walk") {
  for (Basis basis : {Basis::x, Basis::z}) {
    Lattice lat = build_lattice(LatticeType::square, 3, Boundaries::periodic);
    Worldline w(lat, basis, 4.0, make(1, 0.3, 1, 0.25));
    ChainRng rng(17);
    for (int i = 0; i < 10000; ++i) mc_step(w, rng);
    CHECK(w.action_deviation() < 1e-8);
    CHECK_NOTHROW(w.check_invariants());
    // even flip count per link: the line closes on itself
    for (int l = 0; l < lat.n_links(); ++l) {
      CHECK(w.flips(l).size() % 2 == 0);
      CHECK(w.spin_at(l, std::nextafter(4.0, 0.0)) == w.base_spin(l));
    }
  }
}

TEST_CASE("line integrals stay consistent along a walk") {
  // incremental prefix updates against a rebuild, cell lines against their links
  for (LatticeType type : {LatticeType::triangular, LatticeType::honeycomb, LatticeType::cubic})
    for (Basis basis : {Basis::x, Basis::z}) {
      Lattice lat = build_lattice(type, type == LatticeType::cubic ? 2 : 3, Boundaries::periodic);
      Worldline w(lat, basis, 3.0, make(1, 0.4, 1, 0.3));
      ChainRng rng(23);
      for (int i = 1; i <= 4000; ++i) {
        mc_step(w, rng);
        if (i % 200 == 0) REQUIRE_NOTHROW(w.check_invariants());
      }
      CHECK(w.action_deviation() < 1e-8);
    }
}

TEST_CASE("shift window keeps ordering") {
  Lattice lat = build_lattice(LatticeType::square, 2, Boundaries::periodic);
  Worldline w(lat, Basis::x, 1.0, make(1, 0.2, 1, 0.2));
  REQUIRE(w.apply_kink_pair(Species::field, 0, 0.2, 0.6).has_value());
  for (std::size_t slot = 0; slot < w.n_kinks(); ++slot) {
    auto win = w.shift_window(slot);
    CHECK(win.length > 0);
    CHECK(win.length <= 1.0);
  }
  State before = capture(w);
  std::size_t slot = 0;
  const double t0 = w.kink(slot).time;
  auto win = w.shift_window(slot);
  const double du = w.shift_kink(slot, win.lo + 0.5 * win.length);
  CHECK(w.action() == doctest::Approx(w.recompute_action()));
  std::size_t back = 0;
  for (std::size_t i = 0; i < w.n_kinks(); ++i)
    if (w.kink(i).species == Species::field && w.kink(i).time != 0.6 && w.kink(i).time != 0.2)
      back = i;
  auto win2 = w.shift_window(back);
  double target = t0;
  if (target < win2.lo) target += 1.0;
  const double du2 = w.shift_kink(back, target);
  CHECK(du2 == doctest::Approx(-du).epsilon(1e-12));
  CHECK(capture(w).flips == before.flips);
}
