#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "boxcorner/bits.hpp"
#include "boxcorner/measure.hpp"
#include "boxcorner/space.hpp"

namespace bc {

// ---- box norms on dense row-major tables -------------------------------

// E over the replica cube of prod_eps f(x^eps), i.e. ||f||^(2^k) for k = dims.size().
double box_pow(const std::vector<double>& f, const std::vector<int>& dims);
double box_norm(const std::vector<double>& f, const std::vector<int>& dims);
double box_norm(const TableFunction& f);
// Box norm in the listed axes, power 2^|axes|, averaged over the other axes.
// With all axes listed this is box_pow.
double box_pow_partial(const std::vector<double>& f, const std::vector<int>& dims,
                       const std::vector<int>& axes);
double box_norm(const TableFunction& f, const std::vector<int>& axes);

double box_pow_2d(const double* f, int X, int Y);
double box_pow_3d(const double* f, int X, int Y, int Z);
double box_norm_3d(const std::vector<double>& f, int X, int Y, int Z);

// ||f||_{U(3)} for f on a group H, via E_{h1,h2} (E_s D_{h1,h2} f(s))^2.
double u3_pow(const std::vector<double>& f, const Group& H);
double u3_norm(const std::vector<double>& f, const Group& H);
// the table (x,y,z) -> f(x+y+z), whose 3D box norm is the U(3) norm
std::vector<double> u3_table(const std::vector<double>& f, const Group& H);

// E prod_{omega in {0,1}^k} f_omega(x^omega); family[omega] with bit i of
// omega selecting the replica on axis i.
double gcs_form(const std::vector<std::vector<double>>& family, const std::vector<int>& dims);

// Restriction of a table to the sub-grid idx[0] x idx[1] x ...
std::vector<double> restrict_grid(const std::vector<double>& f, const std::vector<int>& dims,
                                  const std::vector<std::vector<int>>& idx);
// Moves axes into the given order.
std::vector<double> permute_axes(const std::vector<double>& f, const std::vector<int>& dims,
                                 const std::vector<int>& order);

// ---- replica forms -------------------------------------------------------

struct OmegaMap {
  std::array<int, 4> v{0, 0, 0, 0};  // v[j-1] = omega(j)
  int operator()(int j) const { return v[j - 1]; }
  bool operator==(const OmegaMap& o) const = default;
  bool operator<(const OmegaMap& o) const { return v < o.v; }
};

struct OmegaSet {
  int arity = 3;
  int lambda = 2;
  std::vector<OmegaMap> maps;

  void validate() const;
  std::size_t size() const { return maps.size(); }
  // |{omega|_{j,k}}|
  int restriction_count(int j, int k) const;
  // all of {0..lambda-1}^arity, lexicographic
  static OmegaSet cube(int arity, int lambda);
  std::string str() const;
};

// Pairs 12,13,14,23,24,34 in that order.
int pair_slot(int j, int k);
std::array<int, 2> slot_pair(int s);

// Which set plays the role of F_omega in a Lambda form.
enum class FrameSet { T, TTilde };

struct FormExponents {
  int omega_count = 0;
  std::array<int, 5> phi{};           // phi[l] = #{omega : F_omega = T_l}
  std::array<int, 6> psi{};           // distinct restrictions, all omega
  std::array<int, 6> psi_present{};   // same, only omega whose F involves R_jk
  bool operator==(const FormExponents& o) const = default;
};

// Exponents of the density prediction for L (arity 3).
FormExponents exponents_L(const OmegaSet& om);
// Exponents for Lambda, with F_omega = (choice[i], ell[i]).
FormExponents exponents_Lambda(const OmegaSet& om, const std::vector<int>& ell,
                               const std::vector<FrameSet>& choice);

// The Cauchy-Schwarz rewrite in coordinate 1: omega with omega(1) = 0 are
// doubled by a copy sending 1 to the fresh replica lambda.
struct OmegaSplit {
  OmegaSet kept;     // omega(1) != 0
  OmegaSet doubled;  // kept + {omega, omega-bar}
  std::vector<int> to_zero;  // positions in the input with omega(1) = 0
};
OmegaSplit split_coordinate1(const OmegaSet& om, const std::vector<bool>& eligible = {});

struct ConservationReport {
  FormExponents lhs, kept, doubled;
  bool exact = false;         // 2 lhs == kept + doubled componentwise
  bool containment = false;   // pair restrictions of the doubled part already present
};
ConservationReport conservation_L(const OmegaSet& om);
ConservationReport conservation_Lambda(const OmegaSet& om, const std::vector<int>& ell,
                                       const std::vector<FrameSet>& choice);

// One factor of a replica form: table on H^3 read at lambda_ell(x^omega).
struct FormFactor {
  OmegaMap omega;
  int ell = 4;
  const std::vector<double>* table = nullptr;
};

// Replica variables x_j^r range over S[j-1], r < lambda, j <= arity.
struct FormContext {
  const Cube* cube = nullptr;
  int arity = 3;
  int lambda = 2;
  std::array<std::vector<int>, 4> S;
};

// Fast evaluator: factors the innermost coordinate's replicas.
double replica_form(const FormContext& ctx, const std::vector<FormFactor>& factors);

struct TSystem;

// E over x_j^r in S_j of prod_omega f_omega(x^omega), f on H^3.
double linear_form_L(const FormContext& ctx, const OmegaSet& om,
                     const std::vector<const std::vector<double>*>& f);
// (delta_4 delta_{V:4})^|Omega| prod delta_jk^{restriction count}
double expected_L(const OmegaSet& om, double delta4, double deltaV4,
                  const std::array<double, 6>& djk);

double linear_form_Lambda(const FormContext& ctx, const OmegaSet& om,
                          const std::vector<int>& ell,
                          const std::vector<const std::vector<double>*>& F);
// prod delta_l^Phi prod delta_jk^Psi. paper_psi counts every omega for every
// pair; otherwise only omega whose F_omega carries R_jk.
double expected_Lambda(const FormExponents& e, const std::array<double, 5>& dl,
                       const std::array<double, 6>& djk, bool paper_psi = false);

FormContext form_context(const TSystem& sys, int arity, int lambda);

struct UniformityReport {
  int checked = 0;
  int failures = 0;
  double worst_ratio = 0.0;  // max |L - expected| / expected
  OmegaSet worst;
  bool exhaustive = false;
};

// (lambda, theta, 4)-uniformity of V inside T_4, over nonempty Omega in
// {0..lambda-1}^3. Exhaustive for lambda <= 2, sampled otherwise.
UniformityReport is_uniform(const Bits& V, int lambda, double theta, const TSystem& sys,
                            int samples = 256, std::uint64_t seed = 1);

struct ZStatistics {
  double p_event = 0;      // P(prod_{kept} V)
  double mean = 0;         // E(Z : event)
  double variance = 0;     // Var(Z : event)
  double predicted_mean = 0;
};
// Z = E_{x_1^0 in S_1} prod_{omega(1) = 0} V(x^omega), conditioned on the
// product over the remaining omega.
ZStatistics z_statistics(const FormContext& ctx, const OmegaSet& om, const Bits& V,
                         const TSystem& sys);
// Lambda version; eligible[i] false keeps omega i out of the x_1^0 average
// (the T-tilde_1 factors)
ZStatistics z_statistics_Lambda(const FormContext& ctx, const OmegaSet& om,
                                const std::vector<int>& ell,
                                const std::vector<const std::vector<double>*>& F,
                                const std::vector<bool>& eligible);

struct LocalBoxCheck {
  double lhs = 0;     // |L(f_omega)|
  double form_V = 0;  // L(V : Omega)
  double ratio = 0;   // local box power of f over that of V
  double bound = 0;   // factor * L(V) * (slack + ratio)^(1/2^level)
  bool holds = false;
};
// level 1, 2 or 3: the one, two and three dimensional local box bounds.
// use_f[i] selects f for omega i (V otherwise). omega0 is the distinguished map.
LocalBoxCheck local_box_check(const FormContext& ctx, const OmegaSet& om,
                              const std::vector<bool>& use_f, int omega0,
                              const std::vector<double>& f, const Bits& V, int level,
                              double slack);

// arity-4 analogue in frame 1 for F_omega in {T_1..T_4}
LocalBoxCheck lambda_box_check(const FormContext& ctx, const OmegaSet& om,
                               const std::vector<int>& ell, int omega0,
                               const std::vector<double>& f0, const TSystem& sys, double slack);

// ---- inequality suite helpers -----------------------------------------------

// Faces of X_U are named by bitmasks over the axes; a face table lists the
// face coordinates in increasing axis order.
std::vector<int> face_dims(const std::vector<int>& dims, unsigned mask);
// g on X_V viewed as a function on X_U
std::vector<double> lift_face(const std::vector<double>& g, unsigned mask,
                              const std::vector<int>& dims);

struct FamilyBound {
  double lhs = 0, rhs = 0;
  double tau = 0;
};
using FaceFamily = std::vector<std::pair<unsigned, std::vector<double>>>;

// |E prod S_V - prod E S_V| against 2^|U| max ||S_V - E S_V||_{box V}
FamilyBound set_family_bound(const FaceFamily& S, const std::vector<int>& dims);
// sets S_V mixed with bounded f_W:
// |E prod S_V prod f_W - prod E S_V * E prod f_W| against the same right side
FamilyBound mixed_family_bound(const FaceFamily& S, const FaceFamily& f,
                               const std::vector<int>& dims);
// E_{x0} |delta^|F| - E_{x1} prod_{V in F} S_U(x^V)| against |F| tau, where
// tau = max_V E_{x0 off V} ||S_U(x^V) - delta||_{box V}
FamilyBound conditional_family_bound(const std::vector<double>& SU, const std::vector<int>& dims,
                                     const std::vector<unsigned>& family);

}  // namespace bc
