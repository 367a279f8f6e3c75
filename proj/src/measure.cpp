#include "boxcorner/measure.hpp"

#include <cmath>

#include "boxcorner/error.hpp"

namespace bc {

TableFunction::TableFunction(ProductSpace d, std::vector<double> v, bool is_indicator)
    : domain(std::move(d)), values(std::move(v)), indicator(is_indicator) {
  require(values.size() == domain.size(), "table length does not match its domain");
  if (indicator)
    for (double x : values) require(x == 0.0 || x == 1.0, "indicator table must be 0/1 valued");
}

TableFunction TableFunction::constant(ProductSpace d, double c) {
  std::size_t n = d.size();
  return TableFunction(std::move(d), std::vector<double>(n, c));
}

TableFunction TableFunction::from_bits(ProductSpace d, const Bits& b) {
  require(b.size() == d.size(), "bitset size does not match domain");
  return TableFunction(std::move(d), b.as_function(), true);
}

std::vector<int> TableFunction::dims() const {
  std::vector<int> r;
  for (auto& a : domain.axes) r.push_back(a.size);
  return r;
}

double mean(const std::vector<double>& v) {
  require(!v.empty(), "expectation over an empty domain");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double expect(const TableFunction& f) { return mean(f.values); }

TableFunction expect_over(const TableFunction& f, const std::vector<int>& axes) {
  const auto& D = f.domain;
  int k = static_cast<int>(D.arity());
  std::vector<bool> drop(k, false);
  for (int a : axes) {
    require(a >= 0 && a < k, "expectation axis out of range");
    require(D.axes[a].size > 0, "empty face axis");
    drop[a] = true;
  }
  std::vector<int> keep;
  for (int i = 0; i < k; ++i)
    if (!drop[i]) keep.push_back(i);
  ProductSpace out = D.face(keep);
  auto ost = out.strides();
  std::vector<double> acc(out.size(), 0.0);
  std::vector<int> idx(k, 0);
  for (std::size_t q = 0; q < f.size(); ++q) {
    std::size_t o = 0;
    for (std::size_t t = 0; t < keep.size(); ++t) o += ost[t] * static_cast<std::size_t>(idx[keep[t]]);
    acc[o] += f.values[q];
    for (int i = k - 1; i >= 0; --i) {
      if (++idx[i] < D.axes[i].size) break;
      idx[i] = 0;
    }
  }
  double w = static_cast<double>(f.size()) / static_cast<double>(out.size());
  for (auto& v : acc) v /= w;
  return TableFunction(out, std::move(acc));
}

double cond_prob(const Bits& A, const Bits& B) {
  require(A.size() == B.size(), "sets live in different universes");
  std::size_t b = B.count();
  require(b > 0, "conditioning on an empty set");
  return static_cast<double>(A.and_count(B)) / static_cast<double>(b);
}

std::vector<double> balanced(const Bits& A, const Bits& W) {
  require(A.subset_of(W), "balanced function needs A inside W");
  double d = cond_prob(A, W);
  std::vector<double> r(A.size(), 0.0);
  W.for_each([&](std::size_t i) { r[i] = (A.test(i) ? 1.0 : 0.0) - d; });
  return r;
}

std::vector<double> balanced(const Bits& A, double delta) {
  std::vector<double> r(A.size(), -delta);
  A.for_each([&](std::size_t i) { r[i] = 1.0 - delta; });
  return r;
}

double cond_variance(const std::vector<double>& W, const Bits& Y) {
  require(W.size() == Y.size(), "weight and event in different universes");
  double py = static_cast<double>(Y.count()) / static_cast<double>(Y.size());
  require(py > 0, "conditioning event has probability zero");
  double e1 = 0, e2 = 0;
  for (std::size_t i = 0; i < W.size(); ++i) {
    e1 += W[i];
    e2 += W[i] * W[i];
  }
  e1 /= static_cast<double>(W.size());
  e2 /= static_cast<double>(W.size());
  double m = e1 / py;
  return e2 / py - m * m;
}

ApproxCheck approx_eq_u(double a, double b, UTolerance tol, bool strict) {
  require(tol.upsilon > 0 && tol.upsilon < 1, "upsilon must lie in (0,1)");
  if (strict) require(a > 0, "approximate equality needs a > 0");
  ApproxCheck r;
  r.rel_err = a != 0 ? std::abs(a - b) / std::abs(a) : (b == 0 ? 0.0 : INFINITY);
  r.holds = std::abs(a - b) < tol.upsilon * std::abs(a);
  return r;
}

}  // namespace bc
