#include "doctest.h"

#include <algorithm>

#include "boxcorner/error.hpp"
#include "boxcorner/measure.hpp"
#include "boxcorner/pipeline.hpp"
#include "boxcorner/uniformize.hpp"
#include "gen.hpp"

using namespace bc;
using bc::testgen::Gen;

namespace {

Bits coset_set(const AffineSubspace& W, int N) {
  Bits S(N);
  for (int c : W.points()) S.set(c);
  return S;
}

std::array<Bits, 5> full_S(int N) {
  std::array<Bits, 5> S;
  for (int i = 1; i <= 4; ++i) S[i] = Bits(N, true);
  return S;
}

std::array<Bits, 6> full_R(int N) {
  std::array<Bits, 6> R;
  for (auto& r : R) r = Bits(static_cast<std::size_t>(N) * N, true);
  return R;
}

void monitors_within_caps(const UniformizeReport& r) {
  for (auto& m : r.monitors) {
    INFO(m.name);
    CHECK(m.count <= m.cap);
  }
}

// T depends on coordinates 2 and 3 only, through a random product set
TSystem planted_t_obstruction(std::shared_ptr<const Cube> cube, Gen& g) {
  int N = static_cast<int>(cube->H().size());
  testgen::planted_product(N, N, 0.0, g);  // skip to the pinned instance
  auto pp = testgen::planted_product(N, N, 0.0, g);
  Bits T(cube->size());
  for (std::size_t x = 0; x < T.size(); ++x) {
    auto c = cube->coords(x);
    if (pp.A[static_cast<std::size_t>(c[1]) * N + c[2]]) T.set(x);
  }
  return TSystem::build(cube, full_S(N), full_R(N), &T);
}

}  // namespace

TEST_CASE("linear directions are counted by the Gaussian binomial") {
  CHECK(linear_directions(5, 3, 1).size() == 31);
  CHECK(linear_directions(5, 3, 2).size() == 31);
  CHECK(linear_directions(5, 2, 1).size() == 6);
  CHECK(linear_directions(2, 4, 2).size() == 35);
  CHECK(linear_directions(3, 3, 0).size() == 1);
}

TEST_CASE("inverse search finds an affine obstruction") {
  auto H = Group::field(5, 3);
  int N = static_cast<int>(H->size());
  auto W = AffineSubspace::from_equations(5, 3, {{1, 1, 0}}, {2});
  Bits S = coset_set(W, N);
  auto r = inverse_u3_search(S, 5, 3, 0.1, 1);
  REQUIRE(r.has_value());
  CHECK(r->codim == 1);
  CHECK(r->density == doctest::Approx(1.0));
  CHECK(r->density_before == doctest::Approx(0.2));
  CHECK(r->best.same_direction(W));
  CHECK(r->gain > 0);

  CHECK_THROWS_AS(inverse_u3_search(Bits(N, true), 5, 3, 0.1, 1), PreconditionError);
}

TEST_CASE("inverse search survives noise on a coset") {
  auto H = Group::field(5, 3);
  int N = static_cast<int>(H->size());
  auto W = AffineSubspace::from_equations(5, 3, {{1, 1, 0}}, {2});
  Bits S = coset_set(W, N);
  for (int s = 1; s <= 5; ++s) {
    Gen g(s);
    Bits T = S;
    for (int i = 0; i < N; ++i)
      if (g.coin(0.05)) T.set(i, !T[i]);
    auto r = inverse_u3_search(T, 5, 3, 0.1, 1);
    REQUIRE(r.has_value());
    CHECK(r->codim == 1);
    CHECK(r->best.same_direction(W));
    CHECK(r->density > 0.8);
  }
}

TEST_CASE("affine uniformization") {
  auto H = Group::field(5, 3);
  int N = static_cast<int>(H->size());
  auto full = affine_uniformize({Bits(N, true), Bits(N, true)}, *H, 0.2, 0.1, 1, 3);
  CHECK(full.V.codim() == 0);
  CHECK(full.rounds == 0);
  CHECK(full.bad_probability == 0);

  auto W = AffineSubspace::from_equations(5, 3, {{1, 1, 0}}, {2});
  auto r = affine_uniformize({coset_set(W, N), Bits(N, true)}, *H, 0.2, 0.1, 1, 3);
  CHECK(r.V.codim() == 1);
  CHECK(r.V.same_direction(W));
  CHECK(r.bad_probability <= 0.1);
  CHECK_FALSE(r.partial);
  CHECK(r.monitor_count <= r.monitor_cap);
  CHECK(std::is_sorted(r.energy.begin(), r.energy.end()));
  // every coset of the final direction sees the set as constant
  for (int h = 0; h < N; ++h) CHECK(coset_u3(coset_set(W, N), *H, r.V, h) < 1e-12);
}

TEST_CASE("box step on a planted product") {
  UniformizeConfig cfg;
  int N = 16;
  Gen g(3);
  auto pp = testgen::planted_product(N, N, 0.0, g);
  std::vector<int> Z(N * N);
  for (int i = 0; i < N * N; ++i) Z[i] = pp.A[i] ? 0 : 1;
  std::vector<int> PX(N, 0), PY(N, 0);
  auto b = box_pz_partition_step(Z, N, PX, PY, 0.2, 0.1, cfg);
  CHECK(b.bad_cells == 1);
  CHECK(b.bad_probability >= 0.1);
  CHECK(b.energy_after > b.energy_before);
  CHECK(b.energy_after - b.energy_before >= b.jump_floor - 1e-12);
  CHECK(b.jump_reference_ok);
  CHECK(b.multi_X <= 2);
  CHECK(b.multi_Y <= 2);
  CHECK(b.max_bad_per_X <= 1);
  CHECK(b.max_bad_per_Y <= 1);
  // refined labels separate the planted halves
  for (int x = 0; x < N; ++x)
    for (int y = 0; y < N; ++y) {
      if (pp.X1[x] != pp.X1[y]) CHECK(b.PX[x] != b.PX[y]);
      if (pp.X2[x] != pp.X2[y]) CHECK(b.PY[x] != b.PY[y]);
    }

  std::vector<int> flat(N * N, 0);
  CHECK_THROWS_AS(box_pz_partition_step(flat, N, PX, PY, 0.2, 0.1, cfg), PreconditionError);
}

TEST_CASE("two-box uniformizer on trivial and planted systems") {
  UniformizeConfig cfg;
  auto cube = testgen::cube(5, 2);
  int N = 25;
  auto triv = two_box_uniformize(PartitionSystem::trivial(TSystem::trivial(cube)), cfg);
  CHECK(triv.rounds == 0);
  CHECK(triv.codim == 0);
  CHECK(triv.counters_after == std::array<int, 3>{4, 6, 1});
  for (double e : triv.p_E2) CHECK(e == 0);
  monitors_within_caps(triv);

  auto R = full_R(N);
  R[0] = Bits(static_cast<std::size_t>(N) * N);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      if (a % 5 < 2 && b / 5 < 3) R[0].set(static_cast<std::size_t>(a) * N + b);
  auto sys = TSystem::build(cube, full_S(N), R);
  auto r = two_box_uniformize(PartitionSystem::trivial(sys), cfg);
  CHECK(r.rounds >= 1);
  CHECK(r.codim >= 1);
  for (double e : r.p_E2) CHECK(e <= cfg.tau);
  CHECK(r.events_ok);
  CHECK(r.pair_multi_ok);
  monitors_within_caps(r);
  r.ps.validate();
}

TEST_CASE("T uniformizer") {
  UniformizeConfig cfg;
  auto cube = testgen::cube(5, 2);
  auto triv = t_uniformize(TSystem::trivial(cube), 0.5, 0.1, cfg);
  CHECK(triv.rounds == 0);
  CHECK(triv.increments == 0);
  CHECK(triv.p_E == 0);
  monitors_within_caps(triv);

  Gen g(7);
  auto sys = planted_t_obstruction(cube, g);
  CHECK_FALSE(is_admissible(sys, 0.5, cfg.admiss_C, cfg.admiss_kappa).admissible);
  auto r = t_uniformize(sys, 0.5, 0.1, cfg);
  CHECK(r.increments >= 1);
  CHECK(r.p_E <= 0.1);
  CHECK(r.events_ok);
  CHECK_FALSE(r.partial);
  monitors_within_caps(r);

  CHECK_THROWS_AS(t_uniformize(sys, 0, 0.1, cfg), PreconditionError);
}

TEST_CASE("the atom of a trivial partition system is the system itself") {
  auto cube = testgen::cube(3, 2);
  Gen g(4);
  auto sys = testgen::random_system(cube, g, 0.7, 0.8);
  auto ps = PartitionSystem::trivial(sys);
  Bits A(cube->size());
  sys.T.for_each([&](std::size_t x) {
    if (g.coin(0.5)) A.set(x);
  });
  auto at = atom_system(ps, 0, &A);
  CHECK(at.cs.sys.cube->size() == cube->size());
  for (int i = 1; i <= 4; ++i) CHECK(at.cs.sys.S[i] == sys.S[i]);
  for (int s = 0; s < 6; ++s) CHECK(at.cs.sys.R[s] == sys.R[s]);
  CHECK(at.cs.sys.T == sys.T);
  CHECK(at.cs.A == A);
  for (std::size_t x = 0; x < cube->size(); ++x) CHECK(at.embed_point(*cube, x) == x);
}

TEST_CASE("T atoms partition T") {
  UniformizeConfig cfg;
  auto cube = testgen::cube(5, 2);
  Gen g(7);
  auto r = t_uniformize(planted_t_obstruction(cube, g), 0.5, 0.1, cfg);
  const auto& ps = r.ps;
  for (std::size_t x = 0; x < cube->size(); ++x) CHECK((ps.PT[x] >= 0) == ps.sys.T[x]);
}

TEST_CASE("uniformizing lemma") {
  UniformizeConfig cfg;
  auto cube = testgen::cube(5, 2);

  SUBCASE("a dense set in the trivial system keeps the system") {
    Bits A = random_set(cube->size(), 0.8, 3);
    CornerSystem cs{TSystem::trivial(cube), A};
    double d = cond_prob(A, cs.sys.T);
    auto r = uniformizing_lemma(cs, d - 0.1, 0.1, cfg);
    CHECK(r.report.codim == 0);
    CHECK(r.dim_after == r.dim_before);
    CHECK(r.density == doctest::Approx(d));
    CHECK(r.admissible);
    CHECK(r.next.cs.A == A);
  }

  SUBCASE("a planted T obstruction") {
    Gen g(7);
    auto sys = planted_t_obstruction(cube, g);
    CornerSystem cs{sys, Bits(cube->size())};
    sys.T.for_each([&](std::size_t x) {
      if (g.coin(0.7)) cs.A.set(x);
    });
    double delta = 0.5, v = 0.1;
    auto r = uniformizing_lemma(cs, delta, v, cfg);
    CHECK(r.report.increments >= 1);
    CHECK(r.density >= r.density_floor);
    CHECK(r.density_floor == doctest::Approx(delta + v / 4));
    CHECK(r.admissible);
    CHECK_FALSE(r.relaxed);
    CHECK(r.dim_after < r.dim_before);
    // A' sits inside A through the affine embedding
    r.next.cs.A.for_each([&](std::size_t y) { CHECK(cs.A[r.next.embed_point(*cube, y)]); });
    monitors_within_caps(r.report);
  }
}
