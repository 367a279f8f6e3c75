#include "doctest.h"

#include <cmath>
#include <limits>

#include "boxcorner/corners.hpp"
#include "boxcorner/error.hpp"
#include "boxcorner/norms.hpp"
#include "boxcorner/oracle.hpp"
#include "gen.hpp"

using namespace bc;
using bc::testgen::Gen;

namespace {

// no x, x + h e_1, .., x + h e_d with h != 0 inside the set; base N, coordinate 0 slowest
bool cornerfree_2d(const Bits& W, int N) {
  for (int x = 0; x < N; ++x)
    for (int y = 0; y < N; ++y)
      for (int h = 1; h < N; ++h)
        if (W[x * N + y] && W[((x + h) % N) * N + y] && W[x * N + (y + h) % N]) return false;
  return true;
}

}  // namespace

TEST_CASE("indicator sums are exact rationals") {
  Gen g(1);
  std::vector<int> dims{3, 4, 2};
  Bits A(24);
  for (int i = 0; i < 24; ++i)
    if (g.coin(0.5)) A.set(i);
  auto e = oracle::box_pow_def(A.as_function(), dims);
  CHECK(e.exact);
  CHECK(e.den64() == 3 * 3 * 4 * 4 * 2 * 2);
  CHECK(static_cast<double>(e.num64()) / e.den64() == doctest::Approx(e.value));
  CHECK(e.str().find('/') != std::string::npos);

  auto real = oracle::box_pow_def(g.values(24), dims);
  CHECK_FALSE(real.exact);
}

TEST_CASE("forward and reverse loop orders agree") {
  Gen g(2);
  for (int t = 0; t < 50; ++t) {
    auto dims = g.dims(3, 1, 5);
    auto f = g.values(testgen::volume(dims));
    auto a = oracle::box_pow_def(f, dims, oracle::Order::Forward);
    auto b = oracle::box_pow_def(f, dims, oracle::Order::Reverse);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
  }
  auto cube = testgen::cube(3, 1);
  Bits A(cube->size());
  for (std::size_t i = 0; i < A.size(); ++i)
    if (g.coin(0.6)) A.set(i);
  auto fa = A.as_function();
  auto a = oracle::q_def(*cube, {nullptr, &fa, &fa, &fa, &fa}, oracle::Order::Forward);
  auto b = oracle::q_def(*cube, {nullptr, &fa, &fa, &fa, &fa}, oracle::Order::Reverse);
  CHECK(a.num64() == b.num64());
  CHECK(a.den64() == b.den64());
}

TEST_CASE("Q on indicators counts corners with trivial ones") {
  auto H = Group::field(5, 1);
  auto cube = std::make_shared<const Cube>(H);
  Gen g(3);
  for (int t = 0; t < 10; ++t) {
    Bits A(cube->size());
    for (std::size_t i = 0; i < A.size(); ++i)
      if (g.coin(0.5)) A.set(i);
    auto fa = A.as_function();
    auto q = oracle::q_def(*cube, {nullptr, &fa, &fa, &fa, &fa});
    REQUIRE(q.exact);
    CHECK(q.den64() == 625);
    CHECK(q.num64() == static_cast<std::int64_t>(count_corners(A, *H, 3, true)));
    CHECK(q_form(*cube, {nullptr, &fa, &fa, &fa, &fa}) == doctest::Approx(q.value));
  }
}

TEST_CASE("fast norms match the definitions") {
  Gen g(4);
  for (int t = 0; t < 40; ++t) {
    auto dims = g.dims(g.range(2, 3), 1, 5);
    auto f = g.values(testgen::volume(dims));
    CHECK(box_pow(f, dims) == doctest::Approx(oracle::box_pow_def(f, dims).value).epsilon(1e-10));
  }
  auto H = Group::field(3, 2);
  for (int t = 0; t < 10; ++t) {
    auto f = g.values(H->size());
    double n = u3_norm(f, *H);
    CHECK(std::pow(n, 8) == doctest::Approx(oracle::u3_pow_def(f, *H).value).epsilon(1e-10));
  }
}

TEST_CASE("largest corner-free sets of small cyclic squares") {
  struct Known {
    int N, size;
  };
  for (auto k : {Known{2, 2}, Known{3, 6}, Known{4, 8}}) {
    auto r = oracle::max_cornerfree(k.N, 2);
    INFO("N = " << k.N);
    CHECK(r.exact);
    CHECK(r.size == k.size);
    CHECK(r.witness_verified);
    CHECK(static_cast<int>(r.witness.count()) == k.size);
    CHECK(cornerfree_2d(r.witness, k.N));
  }
  CHECK(oracle::max_cornerfree(2, 2).nodes == 11);
}

TEST_CASE("random set statistics") {
  auto zero = oracle::random_set_stats({8, 8}, 0.0, 5, 1);
  auto one = oracle::random_set_stats({8, 8}, 1.0, 5, 1);
  for (double v : zero.norms) CHECK(v == doctest::Approx(0.0));
  for (double v : one.norms) CHECK(v == doctest::Approx(0.0));

  // frozen from a seeded run
  auto st = oracle::random_set_stats({32, 32}, 0.5, 200, 1);
  CHECK(st.trials == 200);
  CHECK(std::is_sorted(st.norms.begin(), st.norms.end()));
  std::vector<std::pair<double, double>> pinned{{0, 0.244316},    {0.1, 0.246478}, {0.25, 0.24771},
                                                {0.5, 0.248832},  {0.75, 0.250152}, {0.9, 0.251302},
                                                {1, 0.257163}};
  REQUIRE(st.quantiles.size() == pinned.size());
  for (std::size_t i = 0; i < pinned.size(); ++i) {
    CHECK(st.quantiles[i].first == pinned[i].first);
    CHECK(st.quantiles[i].second == doctest::Approx(pinned[i].second).epsilon(1e-5));
  }
}

TEST_CASE("checked arithmetic refuses to overflow") {
  __int128 big = static_cast<__int128>(1) << 100;
  CHECK(oracle::checked_mul(3, 5) == 15);
  CHECK_THROWS(oracle::checked_mul(big, big));
  __int128 top = std::numeric_limits<__int128>::max();
  CHECK_THROWS(oracle::checked_add(top, 1));
  CHECK(oracle::checked_add(top - 1, 1) == top);
}
