#include "doctest.h"

#include <cmath>
#include <functional>

#include "boxcorner/error.hpp"
#include "boxcorner/measure.hpp"
#include "boxcorner/norms.hpp"
#include "boxcorner/partition.hpp"
#include "boxcorner/systems.hpp"
#include "gen.hpp"

using namespace bc;
using bc::testgen::Gen;

namespace {
Bits pair_set(int N, const std::function<bool(int, int)>& in) {
  Bits R(static_cast<std::size_t>(N) * N);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      if (in(a, b)) R.set(static_cast<std::size_t>(a) * N + b);
  return R;
}

TSystem with_r12(int p, const std::function<bool(int, int)>& in) {
  auto c = testgen::cube(p, 1);
  int N = c->N();
  std::array<Bits, 5> S;
  std::array<Bits, 6> R;
  for (int i = 1; i <= 4; ++i) S[i] = Bits(N, true);
  for (int s = 0; s < 6; ++s) R[s] = Bits(static_cast<std::size_t>(N) * N, true);
  R[pair_slot(1, 2)] = pair_set(N, in);
  return TSystem::build(c, S, R);
}
}  // namespace

TEST_CASE("pair slots") {
  CHECK(pair_slot(1, 2) == 0);
  CHECK(pair_slot(3, 4) == 5);
  CHECK(pair_slot(4, 3) == 5);
  for (int s = 0; s < 6; ++s) {
    auto [j, k] = slot_pair(s);
    CHECK(pair_slot(j, k) == s);
  }
}

TEST_CASE("frame sets of the trivial system") {
  auto sys = TSystem::trivial(Group::field(3, 1));
  for (int l = 1; l <= 4; ++l) CHECK(sys.t_ell(l).all());
  CHECK(sys.T.all());
  sys.validate();
}

TEST_CASE("with full R the frame set is the lift of S_l") {
  Gen g(1);
  auto c = testgen::cube(5, 1);
  std::array<Bits, 5> S;
  std::array<Bits, 6> R;
  for (int i = 1; i <= 4; ++i) S[i] = g.nonempty_subset(5, 0.6);
  for (int s = 0; s < 6; ++s) {
    auto [j, k] = slot_pair(s);
    R[s] = pair_set(5, [&](int a, int b) { return S[j][a] && S[k][b]; });
  }
  auto sys = TSystem::build(c, S, R);
  for (int l = 1; l <= 4; ++l) {
    std::size_t count = 0;
    for (std::size_t x = 0; x < c->size(); ++x) {
      bool in = true;
      for (int i = 1; i <= 4; ++i) in = in && S[i][c->dot(x, i)];
      count += in;
    }
    CHECK(sys.t_ell(l).count() == count);
    CHECK(sys.t_ell(l).subset_of(sys.t_tilde(l)));
  }
}

TEST_CASE("one nontrivial R_23 on F_5") {
  auto c = testgen::cube(5, 1);
  std::array<Bits, 5> S;
  std::array<Bits, 6> R;
  for (int i = 1; i <= 4; ++i) S[i] = Bits(5, true);
  for (int s = 0; s < 6; ++s) R[s] = Bits(25, true);
  R[pair_slot(2, 3)] = pair_set(5, [](int a, int b) { return (a + 2 * b) % 5 < 2; });
  auto sys = TSystem::build(c, S, R);
  Bits want(c->size());
  for (std::size_t x = 0; x < c->size(); ++x)
    if ((c->dot(x, 2) + 2 * c->dot(x, 3)) % 5 < 2) want.set(x);
  CHECK(sys.t_ell(1) == want);
  CHECK(sys.t_ell(4) == want);
  CHECK(sys.t_ell(2).all());
  CHECK(sys.T == want);
}

TEST_CASE("T lies inside every frame set") {
  Gen g(2);
  for (int t = 0; t < 40; ++t) {
    auto sys = testgen::random_system(testgen::cube(g.below(2) ? 3 : 5, 1), g, 0.8, 0.7);
    for (int l = 1; l <= 4; ++l) CHECK(sys.T.subset_of(sys.t_ell(l)));
    CHECK(sys.T == sys.all_R());
  }
}

TEST_CASE("construction checks every containment") {
  auto c = testgen::cube(3, 1);
  std::array<Bits, 5> S;
  std::array<Bits, 6> R;
  for (int i = 1; i <= 4; ++i) S[i] = Bits(3, true);
  for (int s = 0; s < 6; ++s) R[s] = Bits(9, true);
  S[2].reset(0);
  CHECK_THROWS_AS(TSystem::build(c, S, R), PreconditionError);
  for (int s = 0; s < 6; ++s) {
    auto [j, k] = slot_pair(s);
    R[s] = pair_set(3, [&](int a, int b) { return S[j][a] && S[k][b]; });
  }
  auto sys = TSystem::build(c, S, R);
  Bits T = c->full();
  CHECK_THROWS_AS(TSystem::build(c, S, R, &T), PreconditionError);
  CornerSystem cs{sys, c->full()};
  CHECK_THROWS_AS(cs.validate(), PreconditionError);
}

TEST_CASE("densities recompute from the sets") {
  Gen g(3);
  auto sys = testgen::random_system(testgen::cube(5, 1), g, 0.7, 0.6);
  auto d = densities(sys);
  for (int i = 1; i <= 4; ++i) CHECK(d.d[i] == static_cast<double>(sys.S[i].count()) / 5);
  for (int s = 0; s < 6; ++s) {
    auto [j, k] = slot_pair(s);
    CHECK(d.djk[s] ==
          static_cast<double>(sys.R[s].count()) / (sys.S[j].count() * sys.S[k].count()));
  }
  for (int l = 1; l <= 4; ++l) CHECK(d.dT[l] == cond_prob(sys.T, sys.t_ell(l)));
  CHECK(d.pT == static_cast<double>(sys.T.count()) / 125);
  CHECK(densities(sys).dT == d.dT);
}

TEST_CASE("the trivial system is admissible for any eps") {
  auto sys = TSystem::trivial(Group::field(5, 1));
  for (double eps : {0.9, 0.1, 1e-3}) {
    auto r = is_admissible(sys, eps);
    CHECK(r.admissible);
    CHECK(r.clauses.size() == 14);
    for (auto& cl : r.clauses) CHECK(cl.ratio < 1e-12);
  }
  std::vector<double> zero(sys.cube->size(), 0.0);
  for (int l = 1; l <= 4; ++l)
    CHECK(frame_box_norm(*sys.cube, balanced(sys.T, sys.t_ell(l)), l) == 0.0);
}

TEST_CASE("a planted product R_12 breaks the pair clause") {
  auto sys = with_r12(5, [](int a, int b) { return a < 2 && b < 3; });
  auto r = is_admissible(sys, 0.5, 1.0, 0.5);
  CHECK_FALSE(r.admissible);
  bool pair_failed = false;
  for (auto& cl : r.clauses)
    if (cl.name == "pair[1,2]") {
      pair_failed = !cl.pass;
      CHECK(cl.ratio > 0);
    }
  CHECK(pair_failed);
}

TEST_CASE("a dense random system reports all 14 clauses") {
  Gen g(4);
  auto sys = testgen::random_system(testgen::cube(5, 1), g, 0.9, 0.9);
  auto r = is_admissible(sys, 0.5, 1.0, 0.9);
  REQUIRE(r.clauses.size() == 14);
  int frames = 0, pairs = 0, singles = 0;
  for (auto& cl : r.clauses) {
    CHECK(std::isfinite(cl.ratio));
    CHECK(cl.bound > 0);
    frames += cl.name.rfind("frame", 0) == 0;
    pairs += cl.name.rfind("pair", 0) == 0;
    singles += cl.name.rfind("single", 0) == 0;
  }
  CHECK(frames == 4);
  CHECK(pairs == 6);
  CHECK(singles == 4);
}

TEST_CASE("Q of the trivial system") {
  auto sys = TSystem::trivial(Group::field(3, 1));
  auto T = sys.T.as_function();
  CHECK(q_form(*sys.cube, {nullptr, &T, &T, &T, &T}) == doctest::Approx(1.0));
  CornerSystem cs{sys, sys.T};
  for (auto& c : check_qtttt(cs)) CHECK(c.lhs == doctest::Approx(c.rhs));
  for (auto& c : check_qt(sys)) CHECK(c.ratio() == doctest::Approx(1.0));
  auto t4 = check_t4_box(sys);
  CHECK(t4.lhs == doctest::Approx(t4.rhs));
}

TEST_CASE("check routines on a dense random system") {
  Gen g(5);
  auto sys = testgen::random_system(testgen::cube(5, 1), g, 0.95, 0.95);
  for (auto& c : check_qt(sys)) {
    CHECK(std::isfinite(c.ratio()));
    CHECK(c.ratio() > 0.5);
    CHECK(c.ratio() < 2.0);
    MESSAGE(c.name << " ratio " << c.ratio());
  }
  for (auto& c : check_qtj(sys)) CHECK(std::isfinite(c.ratio()));
  for (auto& c : check_z(sys)) CHECK(std::isfinite(c.ratio()));
}

TEST_CASE("the Q chain is monotone") {
  Gen g(6);
  for (int t = 0; t < 10; ++t) {
    auto sys = testgen::random_system(testgen::cube(3, 1), g, 0.9, 0.8);
    std::array<std::vector<double>, 5> f;
    std::array<Bits, 5> Tb;
    for (int j = 1; j <= 4; ++j) {
      Tb[j] = sys.t_ell(j);
      f[j] = g.values(sys.cube->size());
      for (std::size_t x = 0; x < f[j].size(); ++x)
        if (!Tb[j][x]) f[j][x] = 0;
    }
    auto q = q_chain(*sys.cube, {nullptr, &f[1], &f[2], &f[3], &f[4]},
                     {nullptr, &Tb[1], &Tb[2], &Tb[3], &Tb[4]});
    CHECK(std::abs(q.Q) <= q.bound + 1e-9);
  }
}

TEST_CASE("partition systems") {
  auto sys = TSystem::trivial(Group::field(3, 1));
  auto ps = PartitionSystem::trivial(sys);
  ps.validate();
  CHECK(ps.counter_P1() == 4);
  CHECK(ps.counter_P2() == 6);
  CHECK(ps.counter_PT() == 1);
  // split S_1 into two atoms
  ps.Q[1] = {0, 0, 1};
  ps.derive();
  ps.validate();
  CHECK(ps.counter_P1() == 5);
  CHECK(ps.counter_P2() == 6);
  CHECK(ps.counter_PT() == 2);
  // and R_23 into two
  for (std::size_t i = 0; i < 9; ++i) ps.Qjk[pair_slot(2, 3)][i] = i < 4 ? 0 : 1;
  ps.derive();
  ps.validate();
  CHECK(ps.counter_P2() == 7);
  CHECK(ps.counter_PT() == 4);
  // an affine cell structure of codim 1
  auto ps2 = PartitionSystem::trivial(sys);
  ps2.V = AffineSubspace::from_equations(3, 1, {{1}}, {0});
  ps2.derive();
  ps2.validate();
  CHECK(ps2.codim() == 1);
  CHECK(Partition{ps2.PH}.atom_count() == 27);
  CHECK(ps2.counter_PT() == 1);
}
