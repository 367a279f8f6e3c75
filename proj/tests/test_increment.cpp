#include "doctest.h"

#include <cmath>

#include "boxcorner/error.hpp"
#include "boxcorner/increment.hpp"
#include "boxcorner/measure.hpp"
#include "gen.hpp"

using namespace bc;
using bc::testgen::Gen;

TEST_CASE("Paley-Zygmund on two values") {
  double s = 0.6;
  std::vector<double> Z{s, -s, s, -s};
  auto w = pz_witness(Z, 0.5);
  CHECK(w.probability == doctest::Approx(0.5));
  CHECK(w.second_moment == doctest::Approx(s * s));
  CHECK(w.holds);
}

TEST_CASE("Paley-Zygmund on zero is vacuous") {
  auto w = pz_witness(std::vector<double>(10, 0.0), 0.25);
  CHECK(w.event.none());
  CHECK(w.second_moment == 0.0);
  CHECK(w.holds);
}

TEST_CASE("Paley-Zygmund at c = 1/4 on random mean-zero Z") {
  Gen g(1);
  double worst = 1e9;
  for (int t = 0; t < 1000; ++t) {
    std::size_t n = g.range(2, 200);
    auto Z = g.values(n, -1, 1);
    double m = mean(Z);
    double top = 0;
    for (auto& z : Z) top = std::max(top, std::abs(z -= m));
    for (auto& z : Z) z *= 0.999 / top;
    auto w = pz_witness(Z, 0.25);
    CHECK(w.holds);
    worst = std::min(worst, w.probability / (0.25 * w.second_moment));
  }
  MESSAGE("least P(event) / (c E Z^2): " << worst);
}

TEST_CASE("Paley-Zygmund preconditions") {
  CHECK_THROWS_AS(pz_witness({0.5, 0.5}, 0.25), PreconditionError);
  CHECK_THROWS_AS(pz_witness({1.5, -1.5}, 0.25), PreconditionError);
}

TEST_CASE("box Paley-Zygmund finds a planted product") {
  Gen g(2);
  auto pp = testgen::planted_product(16, 16, 0.0, g);
  auto r = box_pz_2d(pp.A, 16, 16);
  CHECK(r.size_ok);
  CHECK(r.gain_ok);
  CHECK(r.density == doctest::Approx(1.0));
  CHECK(r.delta == doctest::Approx(0.25));
  CHECK(r.X1.subset_of(pp.X1));
  CHECK(r.X2.subset_of(pp.X2));
  CHECK(r.p1 == doctest::Approx(0.5));
  CHECK(r.p2 == doctest::Approx(0.5));
}

TEST_CASE("box Paley-Zygmund refuses balanced sets") {
  CHECK_THROWS_AS(box_pz_2d(Bits(256, true), 16, 16), PreconditionError);
  CHECK_THROWS_AS(box_pz_2d(Bits(256), 16, 16), PreconditionError);
}

TEST_CASE("box Paley-Zygmund on product plus noise") {
  for (int s = 0; s < 100; ++s) {
    Gen g(s + 1);
    int nx = g.range(12, 20), ny = g.range(12, 20);
    auto pp = testgen::planted_product(nx, ny, g.uniform(0, 0.15), g);
    auto r = box_pz_2d(pp.A, nx, ny);
    CHECK(r.size_ok);
    CHECK(r.gain_ok);
    CHECK(r.density > r.delta);
  }
}

namespace {
struct Planted {
  TSystem sys = TSystem::trivial(Group::field(2, 4));
};
}  // namespace

TEST_CASE("planted obstructions fire their branch") {
  Planted P;
  const TSystem& sys = P.sys;
  for (int kind = 1; kind <= 3; ++kind)
    for (int s = 0; s < (kind == 3 ? 2 : 4); ++s) {
      Bits U = testgen::planted_obstruction(*sys.cube, kind, s + 1);
      auto r = weighted_tbox_increment(sys, U, sys.T, 0.01);
      CHECK(r.branch == kind);
      CHECK(r.density_after > r.density_before);
      CHECK(r.V.subset_of(sys.T));
      CHECK(r.sys.T.subset_of(sys.T));
      r.sys.validate();
      if (kind == 1) {
        CHECK(r.fiber_variance <= r.fiber_variance_bound);
        MESSAGE("fiber variance " << r.fiber_variance << " bound " << r.fiber_variance_bound);
      }
      for (auto& c : r.claims) CHECK(std::isfinite(c.value));
    }
}

TEST_CASE("U = V leaves nothing to increment") {
  auto sys = TSystem::trivial(Group::field(2, 2));
  CHECK_THROWS_AS(weighted_tbox_increment(sys, sys.T, sys.T, 0.01), PreconditionError);
}

TEST_CASE("increment config validation") {
  IncrementConfig c;
  c.validate();
  c.t1 = 10;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
}

TEST_CASE("density increment on a planted set") {
  auto sys = TSystem::trivial(Group::field(5, 1));
  const Cube& c = *sys.cube;
  Bits A(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto x = c.coords(i);
    if (x[0] < 3 && x[1] < 3) A.set(i);
  }
  CornerSystem cs{sys, A};
  auto di = density_increment(cs, 1.0);
  CHECK(di.delta == doctest::Approx(9.0 / 25));
  CHECK(di.delta_after > di.delta);
  CHECK(di.next.A.subset_of(A));
  di.next.validate();
  CHECK(di.inc.branch >= 1);
  // a second call keeps climbing
  if (di.delta_after < 1.0) {
    try {
      auto d2 = density_increment(di.next, 1.0);
      CHECK(d2.delta_after > di.delta_after);
    } catch (const PreconditionError& e) {
      MESSAGE("second increment unavailable: " << e.what());
    }
  }
}

TEST_CASE("density increment needs a non-uniform set") {
  auto sys = TSystem::trivial(Group::field(5, 1));
  CHECK_THROWS_AS(density_increment({sys, sys.T}, 1.0), PreconditionError);
}
