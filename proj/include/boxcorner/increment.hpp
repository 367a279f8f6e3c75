#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "boxcorner/bits.hpp"
#include "boxcorner/systems.hpp"

namespace bc {

// ---- Paley-Zygmund ----------------------------------------------------------

struct PzWitness {
  Bits event;              // {Z > c E Z^2}
  double probability = 0;
  double second_moment = 0;
  double c = 0;
  bool holds = false;      // probability >= c E Z^2
};
// Z uniform on its index set, |Z| < 1, E Z = 0
PzWitness pz_witness(const std::vector<double>& Z, double c);

// ---- two-dimensional box Paley-Zygmund -----------------------------------------

struct BpzConstants {
  double c = 0.25;
  double t = 2.0;
};

struct BpzResult {
  Bits X1, X2;            // subsets of the two axes
  double delta = 0;       // P(A)
  double sigma = 0;       // ||A - P(A)||_box
  double p1 = 0, p2 = 0;  // P(X'_i)
  double density = 0;     // P(A : X'_1 x X'_2)
  double floor = 0;       // c (sigma delta)^t
  bool size_ok = false;   // p1, p2 >= floor
  bool gain_ok = false;   // density >= delta + floor
  std::array<int, 2> anchor{-1, -1};
  BpzConstants constants;
};
// A on nx x ny, index x * ny + y. Anchors are exhaustive up to anchor_limit,
// seeded samples beyond.
BpzResult box_pz_2d(const Bits& A, int nx, int ny, BpzConstants k = {},
                    std::size_t anchor_limit = 10000, std::uint64_t seed = 1);

// ---- weighted T-box increment ------------------------------------------------------

struct IncrementConfig {
  // exponents in the proof; they only feed the logged reference thresholds
  double c1 = 0.5, t1 = 66.0, c2 = 0.5, t2 = 31.0;
  double c = 1.0, p = 4.0;          // gain c (tau delta)^p of the conclusion
  double K = 4.0, C = 1.0;          // variance bound K tau^C for the fiber means
  // branch tests actually used; see README for the calibration
  double theta1 = 0.05;             // 1D statistic over E|E V|^2
  double theta2 = 0.70;             // 2D statistic over tau^4 B4(V)
  double min_fraction = 0.0;        // least P(T' : V) accepted from a 2D/3D anchor
  double kappa_prime = 0.1;         // exponent 1/kappa' of the density increment checks
  bool enforce_uniform_V = false;
  double uniform_theta = 0.5;       // loosened theta for the (4,theta,4) check
  std::size_t anchor_limit = 10000;
  std::size_t anchor_samples = 256;
  std::uint64_t seed = 1;

  void validate() const;  // t1 > 2 t2 + 3, t2 >= 31, positivity
};

// diagnostics of the B4 and B8 claims; value and the reference bound
struct ClaimCheck {
  std::string name;
  double value = 0, bound = 0;
  bool holds = false;
};

struct IncrementResult {
  int branch = 0;               // 1, 2 or 3
  int axis = 0;                 // frame label the branch singled out
  int ell = 4;                  // frame in which the work happened
  TSystem sys;                  // the new T-system
  Bits V;                       // V'
  double tau = 0;               // measured box ratio of U - P(U:V) V
  double tau_required = 0;
  double density_before = 0;    // P(U : V)
  double density_after = 0;     // P(U : T' n V)
  double gain_bound = 0;        // c (tau delta)^p
  bool gain_ok = false;
  double p_system = 0;          // P(T'_l : T_l) or P(T' : T)
  double p_bound = 0;           // (tau P(U:T_l))^p
  bool p_ok = false;
  std::array<double, 4> s1{};   // 1D statistics by axis label 1..3
  std::array<double, 4> s2{};   // 2D statistics
  double theta1 = 0, theta2 = 0;
  double paper_theta1 = 0, paper_theta2 = 0;
  double fiber_variance = 0, fiber_variance_bound = 0;  // branch 1
  double new_fraction = 0, new_fraction_bound = 0;      // branch 1, P(R':R)
  std::vector<ClaimCheck> claims;
  double uniform_V_ratio = 0;   // worst ratio of the (4,theta,4) test on V
  std::vector<std::string> notes;
};

// U inside V inside T_ell, V equal to T_ell or T. tau is the level required of
// the box ratio of U - P(U:V) V over the frame coordinates.
IncrementResult weighted_tbox_increment(const TSystem& sys, const Bits& U, const Bits& V,
                                        double tau, const IncrementConfig& cfg = {},
                                        int ell = 4);

struct DensityIncrement {
  IncrementResult inc;
  CornerSystem next;
  double delta = 0;             // P(A : T)
  double delta_after = 0;       // P(A : T')
  double kappa = 0;
  double floor = 0;             // delta^(1/kappa')
  bool p_ok = false;            // P(T':T) >= floor
  bool gain_ok = false;         // P(A:T') >= delta + floor
};
// needs the uniform condition to fail in some frame; works in the worst one
DensityIncrement density_increment(const CornerSystem& cs, double kappa,
                                   const IncrementConfig& cfg = {});

}  // namespace bc
