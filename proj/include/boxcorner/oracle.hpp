#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "boxcorner/bits.hpp"
#include "boxcorner/norms.hpp"
#include "boxcorner/space.hpp"

// Definitional reference implementations. Slow on purpose: every sum is the
// plain nested loop over the variables as written.
namespace bc::oracle {

// num / den with den the number of terms. exact holds when every input value
// was an integer; otherwise value carries a long double sum.
struct Exact {
  __int128 num = 0;
  __int128 den = 1;
  bool exact = false;
  double value = 0;
  std::string str() const;  // "num/den" or the decimal value
  std::int64_t num64() const;
  std::int64_t den64() const;
};

enum class Order { Forward, Reverse };

// guard on the number of loop iterations
inline constexpr double kLoopBudget = 1e9;

// E over the replica cube of prod_omega f(x^omega); ||f||^(2^k), k = dims.size()
Exact box_pow_def(const std::vector<double>& f, const std::vector<int>& dims,
                  Order order = Order::Forward);
double box_norm_def(const std::vector<double>& f, const std::vector<int>& dims);
// E_{x,h1,h2,h3} prod_omega f(x + omega.h)
Exact u3_pow_def(const std::vector<double>& f, const Group& H);
// E_{x in H^4} prod_j f_j(lambda_j(x)), f[1..4] on H^3
Exact q_def(const Cube& cube, const std::array<const std::vector<double>*, 5>& f,
            Order order = Order::Forward);
// replica forms over the context's S sets
Exact L_def(const FormContext& ctx, const OmegaSet& om,
            const std::vector<const std::vector<double>*>& f);
Exact Lambda_def(const FormContext& ctx, const OmegaSet& om, const std::vector<int>& ell,
                 const std::vector<const std::vector<double>*>& F);

// r(a, b) as int128, refusing on overflow
__int128 checked_mul(__int128 a, __int128 b);
__int128 checked_add(__int128 a, __int128 b);

// ---- extremal search ------------------------------------------------------------

struct MaxCornerFree {
  int N = 0, d = 0;
  int size = 0;
  Bits witness;              // over Z_N^d, base N, coordinate 0 slowest
  bool exact = false;        // false when the node budget ran out
  std::uint64_t nodes = 0;
  bool witness_verified = false;
};
// R(Z_N, d) by branch and bound
MaxCornerFree max_cornerfree(int N, int d, std::uint64_t node_budget = 2000000000ULL);

// ---- random sets -------------------------------------------------------------------

struct RandomSetStats {
  std::vector<int> dims;
  double density = 0;
  int trials = 0;
  std::vector<double> norms;  // sorted
  double mean = 0;
  // quantile levels and values
  std::vector<std::pair<double, double>> quantiles;
};
// uniform random sets of exactly round(density * size) points
RandomSetStats random_set_stats(const std::vector<int>& dims, double density, int trials,
                                std::uint64_t seed);

}  // namespace bc::oracle
