#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "boxcorner/bits.hpp"
#include "boxcorner/space.hpp"
#include "boxcorner/systems.hpp"

namespace bc {

// E_{x,y} f4(x) f3(x + y e3) f2(x + y e2) f1(x + y e1), evaluated in that order.
// Agrees with q_form (the lambda parametrisation) up to rounding.
double q_form_direct(const Cube& cube, const std::array<const std::vector<double>*, 5>& f);

// A corner in G^d: g, g + h e_1, ..., g + h e_d, all in A. Points are encoded
// base N with coordinate 0 slowest.
struct CornerWitness {
  std::vector<int> g;
  int h = 0;
  std::vector<std::vector<int>> points(const Group& G) const;
};

// Number of pairs (g, h) with every corner point in A; h = 0 only when
// include_trivial is set.
std::size_t count_corners(const Bits& A, const Group& G, int d, bool include_trivial = false);
// First nontrivial corner in index order of g, then h.
std::optional<CornerWitness> find_corner(const Bits& A, const Group& G, int d);
bool is_corner(const Bits& A, const Group& G, const CornerWitness& w);

enum class Outcome { Corner, FailsSize, NotUniform, NoCornerFound };
std::string outcome_name(Outcome o);

struct DecideOptions {
  double kappa = 0x1p-32;
  // admissibility is checked at eps = P(A:T) with these constants
  double admiss_C = 64.0;
  double admiss_kappa = 0.01;
  // when set a failed clause is recorded instead of thrown
  bool soft_admissibility = false;
};

struct Decision {
  Outcome outcome = Outcome::NoCornerFound;
  std::optional<CornerWitness> corner;   // in H^3 coordinates (d = 3)
  int ell = 0;                           // failing frame for NotUniform
  std::array<double, 5> ratio{};         // ratio[l] of the uniform condition
  double uniform_bound = 0;              // kappa delta^4
  double size_lhs = 0, size_rhs = 0;     // delta prod ... |H|^4 against 4|A|
  bool admissible = true;
  std::string admiss_failure;
  // NoCornerFound only happens with kappa above the proven range
  bool theorem_regime = false;
};

// Corner, or the condition that fails. Admissibility is a precondition.
Decision von_neumann_decide(const CornerSystem& cs, const DecideOptions& opt = {});

}  // namespace bc

namespace bc {

// |E f o lambda_4 prod_{j<=3} A o lambda_j| against ||f||_{box 123}, f = A - P(A)
struct OverBoxCheck {
  double lhs = 0, rhs = 0;
  bool holds(double slack = 1e-9) const { return lhs <= rhs + slack; }
};
OverBoxCheck overbox_check(const Cube& cube, const Bits& A);

}  // namespace bc
