#pragma once

#include <string>
#include <vector>

#include "boxcorner/bits.hpp"
#include "boxcorner/space.hpp"

namespace bc {

// Real function on a ProductSpace, stored row major (axis 0 slowest).
struct TableFunction {
  ProductSpace domain;
  std::vector<double> values;
  bool indicator = false;

  TableFunction() = default;
  TableFunction(ProductSpace d, std::vector<double> v, bool is_indicator = false);
  static TableFunction constant(ProductSpace d, double c);
  static TableFunction from_bits(ProductSpace d, const Bits& b);

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  std::vector<int> dims() const;
};

double mean(const std::vector<double>& v);
double expect(const TableFunction& f);
// Averages out the listed axes; the result lives on the remaining axes.
TableFunction expect_over(const TableFunction& f, const std::vector<int>& axes);

// |A n B| / |B|
double cond_prob(const Bits& A, const Bits& B);
// A - P(A:W) W
std::vector<double> balanced(const Bits& A, const Bits& W);
// A - delta
std::vector<double> balanced(const Bits& A, double delta);
// P(Y)^-1 E W^2 - (P(Y)^-1 E W)^2 with expectations over the whole domain
double cond_variance(const std::vector<double>& W, const Bits& Y);

struct UTolerance {
  double upsilon = 0.25;
};

struct ApproxCheck {
  bool holds = false;
  double rel_err = 0.0;
};

// a ~ b iff |a - b| < upsilon a
ApproxCheck approx_eq_u(double a, double b, UTolerance tol, bool strict = true);

}  // namespace bc
