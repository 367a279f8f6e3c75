#include "doctest.h"

#include <cmath>

#include "boxcorner/measure.hpp"
#include "gen.hpp"

using namespace bc;
using bc::testgen::Gen;

TEST_CASE("expectations") {
  auto P = ProductSpace::uniform(2, 3);
  CHECK(expect(TableFunction::constant(P, 0.7)) == doctest::Approx(0.7));
  Bits one(5);
  one.set(0);
  CHECK(expect(TableFunction::from_bits(ProductSpace::uniform(1, 5), one)) == doctest::Approx(0.2));
}

TEST_CASE("partial expectation matches the nested sum") {
  // f(x, y) = x * y on Z_3 x Z_3; averaging y leaves x * 1
  auto P = ProductSpace::uniform(2, 3);
  std::vector<double> v(9);
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y) v[x * 3 + y] = x * y;
  auto g = expect_over(TableFunction(P, v), {1});
  REQUIRE(g.size() == 3);
  for (int x = 0; x < 3; ++x) CHECK(g[x] == doctest::Approx(x * 1.0));
  auto h = expect_over(TableFunction(P, v), {0});
  for (int y = 0; y < 3; ++y) CHECK(h[y] == doctest::Approx(y * 1.0));
}

TEST_CASE("conditional probability") {
  Gen g(1);
  Bits A = g.nonempty_subset(125, 0.4);
  CHECK(cond_prob(A, A) == 1.0);
  CHECK(cond_prob(Bits(125), A) == 0.0);
  CHECK(cond_prob(A, Bits(125, true)) == static_cast<double>(A.count()) / 125);
}

TEST_CASE("balanced functions") {
  Gen g(2);
  Bits W = g.nonempty_subset(64, 0.6);
  for (double v : balanced(W, W)) CHECK(v == 0.0);
  for (double v : balanced(Bits(64), W)) CHECK(v == 0.0);
  for (int t = 0; t < 50; ++t) {
    Bits A = g.subset(125, g.uniform());
    auto f = balanced(A, Bits(125, true));
    CHECK(std::abs(mean(f)) < 1e-14);
  }
}

TEST_CASE("conditional variance") {
  Bits Y(8);
  for (int i = 0; i < 4; ++i) Y.set(i);
  std::vector<double> W(8, 0.0);
  for (int i = 0; i < 4; ++i) W[i] = 0.3;
  CHECK(std::abs(cond_variance(W, Y)) < 1e-15);
  for (int i = 0; i < 4; ++i) W[i] = i % 2 ? 1 : -1;
  CHECK(cond_variance(W, Y) == doctest::Approx(1.0));

  Gen g(3);
  for (int t = 0; t < 100; ++t) {
    auto w = g.values(40);
    Bits y = g.nonempty_subset(40, 0.5);
    for (std::size_t i = 0; i < 40; ++i)
      if (!y[i]) w[i] = 0;
    // two pass variance over the points of y
    double m = 0;
    y.for_each([&](std::size_t i) { m += w[i]; });
    m /= y.count();
    double s = 0;
    y.for_each([&](std::size_t i) { s += (w[i] - m) * (w[i] - m); });
    s /= y.count();
    CHECK(std::abs(cond_variance(w, y) - s) < 1e-12);
  }
}

TEST_CASE("approximate equality") {
  CHECK(approx_eq_u(1.0, 1.0, {0.3}).holds);
  CHECK_FALSE(approx_eq_u(1.0, 1.5, {0.1}).holds);
  // weak transitivity: a ~ b and b ~ c give |a - c| < 3 upsilon a
  Gen g(4);
  int seen = 0;
  for (int t = 0; t < 5000; ++t) {
    double u = g.uniform(0.01, 0.3);
    double a = g.uniform(0.1, 2), b = a * g.uniform(1 - u, 1 + u), c = b * g.uniform(1 - u, 1 + u);
    UTolerance tol{u};
    if (!approx_eq_u(a, b, tol).holds || !approx_eq_u(b, c, tol).holds) continue;
    ++seen;
    CHECK(std::abs(a - c) < 3 * u * a);
  }
  CHECK(seen > 1000);
}
