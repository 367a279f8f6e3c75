#include "doctest.h"

#include "boxcorner/error.hpp"
#include "boxcorner/space.hpp"
#include "gen.hpp"

using namespace bc;
using bc::testgen::Gen;

TEST_CASE("field arithmetic is digitwise mod p") {
  auto H = Group::field(3, 2);
  CHECK(H->size() == 9);
  CHECK(H->is_field());
  // (2,1) + (2,2) = (1,0)
  int a = H->encode({2, 1}), b = H->encode({2, 2});
  CHECK(H->digits(H->add(a, b)) == std::vector<int>{1, 0});
  CHECK(H->add(a, H->neg(a)) == 0);
  CHECK(H->scale(2, a) == H->add(a, a));
  for (int x = 0; x < 9; ++x) CHECK(H->encode(H->digits(x)) == x);
}

TEST_CASE("cyclic group") {
  auto Z = Group::cyclic(6);
  CHECK_FALSE(Z->is_field());
  CHECK(Z->add(4, 5) == 3);
  CHECK(Z->sub(1, 4) == 3);
  CHECK(Z->scale(3, 5) == 3);
}

TEST_CASE("bad groups are refused") {
  CHECK_THROWS_AS(Group::field(4, 1), PreconditionError);
  CHECK_THROWS_AS(Group::field(5, -1), PreconditionError);
  CHECK(Group::field(5, 0)->size() == 1);  // atoms can shrink to a point
  CHECK_THROWS_AS(parse_space("6^1"), PreconditionError);
  CHECK_THROWS_AS(parse_space("5"), PreconditionError);
  CHECK(parse_space("5^2") == std::pair<int, int>{5, 2});
}

TEST_CASE("field vectors") {
  auto v = FieldVector::decode(5, 2, 7);  // 7 = 2 + 1*5
  CHECK(v.coords == std::vector<int>{2, 1});
  CHECK(v.encode() == 7);
  auto w = FieldVector::decode(5, 2, 13);
  CHECK((v + w - w) == v);
  CHECK(v.scaled(3).coords == std::vector<int>{1, 3});
  CHECK(v.dot(w) == (2 * 3 + 1 * 2) % 5);
}

TEST_CASE("e_4 is the diagonal direction") {
  CHECK(e4() == std::array<int, 3>{1, 1, 1});
  Cube c(Group::field(2, 1));
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto x = c.coords(i);
    CHECK(c.dot(i, 4) == (x[0] + x[1] + x[2]) % 2);
  }
}

TEST_CASE("x.e_4 is the coordinate sum on F_5^3") {
  Cube c(Group::field(5, 1));
  Gen g(1);
  for (int t = 0; t < 100; ++t) {
    std::size_t i = g.below(static_cast<int>(c.size()));
    auto x = c.coords(i);
    CHECK(c.dot(i, 4) == (x[0] + x[1] + x[2]) % 5);
  }
}

TEST_CASE("lambda_j matches every functional but e_j") {
  Cube c(Group::field(5, 1));
  CHECK(c.lambda(4, {1, 2, 3, 0}) == c.index(1, 2, 3));
  CHECK(c.lambda(4, {1, 2, 3, 4}) == c.index(1, 2, 3));
  // only x.e_4 = h is prescribed besides x_2 = x_3 = 0
  CHECK(c.lambda(1, {0, 0, 0, 3}) == c.index(3, 0, 0));
  Gen g(2);
  for (int t = 0; t < 1000; ++t) {
    int j = g.range(1, 4);
    std::array<int, 4> x{g.below(5), g.below(5), g.below(5), g.below(5)};
    auto p = c.lambda(j, x);
    for (int k = 1; k <= 4; ++k)
      if (k != j) CHECK(c.dot(p, k) == x[k - 1]);
    auto y = x;
    y[j - 1] = g.below(5);
    CHECK(c.lambda(j, y) == p);
  }
  CHECK_THROWS_AS(c.lambda(5, {0, 0, 0, 0}), PreconditionError);
}

TEST_CASE("frames are bijections") {
  Cube c(Group::field(3, 1));
  for (int ell = 1; ell <= 4; ++ell) {
    Bits seen(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
      auto abc = c.coords(k);
      auto i = c.from_frame(ell, abc[0], abc[1], abc[2]);
      seen.set(i);
      CHECK(c.to_frame(ell, i) == abc);
    }
    CHECK(seen.all());
    Gen g(ell);
    Bits s = g.subset(c.size(), 0.4);
    CHECK(c.from_frame_set(c.to_frame_set(s, ell), ell) == s);
  }
}

TEST_CASE("lifts of single-axis sets") {
  Cube c(Group::field(2, 1));
  CHECK(c.lift_single(Bits(2, true), 1).all());
  Bits z(2);
  z.set(0);
  Bits L = c.lift_single(z, 4);
  CHECK(L.count() == 4);
  L.for_each([&](std::size_t i) {
    auto x = c.coords(i);
    CHECK((x[0] + x[1] + x[2]) % 2 == 0);
  });
  Cube c5(Group::field(5, 1));
  Gen g(3);
  for (int t = 0; t < 20; ++t) {
    Bits S = g.subset(5, 0.5);
    int i = g.range(1, 4);
    CHECK(c5.lift_single(S, i).count() * 5 == S.count() * c5.size());
  }
}

TEST_CASE("lift of a pair set") {
  Cube c(Group::field(3, 1));
  Gen g(4);
  Bits R = g.subset(9, 0.5);
  Bits L = c.lift_pair(R, 2, 4);
  CHECK(L.count() == R.count() * 3);
  for (std::size_t i = 0; i < c.size(); ++i)
    CHECK(L[i] == R[static_cast<std::size_t>(c.dot(i, 2)) * 3 + c.dot(i, 4)]);
  CHECK_THROWS_AS(c.lift_pair(R, 2, 2), PreconditionError);
}

TEST_CASE("product spaces") {
  auto P = ProductSpace::uniform(3, 4);
  CHECK(P.size() == 64);
  CHECK(P.strides() == std::vector<std::size_t>{16, 4, 1});
  CHECK(P.face({0, 2}).size() == 16);
  CHECK_THROWS_AS(P.face({3}), PreconditionError);
}

TEST_CASE("linear algebra over F_p") {
  std::vector<std::vector<int>> A{{1, 2, 0}, {2, 4, 1}};
  auto ns = linalg::nullspace(A, 3, 5);
  REQUIRE(ns.size() == 1);
  for (auto& r : A) {
    int s = 0;
    for (int i = 0; i < 3; ++i) s += r[i] * ns[0][i];
    CHECK(s % 5 == 0);
  }
  auto x = linalg::solve(A, {1, 3}, 3, 5);
  REQUIRE(x.has_value());
  CHECK(((*x)[0] + 2 * (*x)[1]) % 5 == 1);
  CHECK(!linalg::solve({{1, 1}, {1, 1}}, {0, 1}, 2, 5).has_value());
  CHECK(linalg::modinv(3, 7) * 3 % 7 == 1);
}

TEST_CASE("affine subspaces") {
  auto W = AffineSubspace::from_equations(5, 2, {{1, 1}}, {2});
  CHECK(W.dim() == 1);
  CHECK(W.points().size() == 5);
  for (int code : W.points()) {
    auto d = FieldVector::decode(5, 2, code).coords;
    CHECK((d[0] + d[1]) % 5 == 2);
    CHECK(W.contains_code(code));
    CHECK(W.point_at(W.coordinates(d)) == d);
  }
  auto U = AffineSubspace::from_equations(5, 2, {{1, 4}}, {0});
  auto M = W.meet(U);
  REQUIRE(M.has_value());
  CHECK(M->dim() == 0);
  auto Wt = W.translate({1, 0});
  CHECK(Wt.same_direction(W));
  CHECK_FALSE(Wt.meet(W).has_value());
  CHECK(AffineSubspace::whole(3, 2).points().size() == 9);
}

TEST_CASE("affine meet codimension is subadditive") {
  Gen g(5);
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    auto rnd = [&] {
      int r = g.range(0, 2);
      std::vector<std::vector<int>> A(r, std::vector<int>(3));
      std::vector<int> b(r);
      for (auto& row : A)
        for (auto& v : row) v = g.below(3);
      for (auto& v : b) v = g.below(3);
      return std::make_pair(A, b);
    };
    auto [A1, b1] = rnd();
    auto [A2, b2] = rnd();
    if (!linalg::solve(A1, b1, 3, 3) || !linalg::solve(A2, b2, 3, 3)) continue;
    auto X = AffineSubspace::from_equations(3, 3, A1, b1);
    auto Y = AffineSubspace::from_equations(3, 3, A2, b2);
    auto M = X.meet(Y);
    if (!M) continue;
    ++checked;
    CHECK(M->codim() <= X.codim() + Y.codim());
    for (int code : M->points()) CHECK((X.contains_code(code) && Y.contains_code(code)));
  }
  CHECK(checked > 50);
}
