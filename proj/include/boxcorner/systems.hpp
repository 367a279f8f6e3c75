#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "boxcorner/bits.hpp"
#include "boxcorner/space.hpp"

namespace bc {

// H, S_1..S_4 inside H, R_jk inside S_j x S_k (j < k), T inside every lifted R_jk.
// R sets are indexed a*N + b with a the e_j value; R(k,j) is an alias of R(j,k).
struct TSystem {
  std::shared_ptr<const Cube> cube;
  std::array<Bits, 5> S;  // S[1..4]
  std::array<Bits, 6> R;  // by pair_slot
  Bits T;

  static TSystem trivial(GroupPtr H);
  static TSystem trivial(std::shared_ptr<const Cube> cube);
  // T defaults to the intersection of all lifted R_jk when omitted
  static TSystem build(std::shared_ptr<const Cube> cube, std::array<Bits, 5> S,
                       std::array<Bits, 6> R, const Bits* T = nullptr);

  int N() const { return cube->N(); }
  void validate() const;  // throws PreconditionError naming the broken containment
  bool in_R(int j, int k, int a, int b) const;
  Bits lift_S(int i) const { return cube->lift_single(S[i], i); }
  Bits lift_R(int j, int k) const;
  // S-bar_l and every lifted R_jk with j, k != l
  Bits t_ell(int ell) const;
  // the same without the S_l fiber
  Bits t_tilde(int ell) const;
  // intersection of all six lifted R_jk
  Bits all_R() const;
};

struct CornerSystem {
  TSystem sys;
  Bits A;
  void validate() const;
};

struct Densities {
  std::array<double, 5> d{};    // d[i] = P(S_i : H)
  std::array<double, 6> djk{};  // P(R_jk : S_j x S_k)
  std::array<double, 5> dT{};   // dT[l] = P(T : T_l)
  double dA = 0;                // P(A : T)
  double pT = 0;                // P(T : H^3)
};
Densities densities(const TSystem& sys);
Densities densities(const CornerSystem& cs);

// Box norm over the frame-l coordinates of a function on H^3.
double frame_box_norm(const Cube& cube, const std::vector<double>& g, int ell);
// ||g||_{box 123} relative to the grid S_1 x S_2 x S_3 (frame 4 coordinates)
double relative_box_norm(const TSystem& sys, const std::vector<double>& g);

struct AdmissClause {
  std::string name;  // e.g. "frame[2]", "pair[1,3]", "single[4]"
  double ratio = 0;  // measured quantity
  double bound = 0;  // kappa eps^C P^C
  bool degenerate = false;
  bool pass = false;
};

struct AdmissReport {
  std::vector<AdmissClause> clauses;  // 4 frame, 6 pair, 4 single
  bool admissible = false;
  std::string first_failure;
  double worst_excess = 0;  // max ratio / bound
};

AdmissReport is_admissible(const TSystem& sys, double eps, double C = 64.0,
                           double kappa = 0.01);

// E_{x_1..x_4} prod f_j o lambda_j, f[1..4] on H^3
double q_form(const Cube& cube, const std::array<const std::vector<double>*, 5>& f);

// Q chain. G_j = Tbar_j o lambda_j, g_j = f_j o lambda_j.
struct QChain {
  double Q = 0, U1 = 0, U2 = 0, U3 = 0, U4 = 0, U4_alt = 0, bound = 0;
};
QChain q_chain(const Cube& cube, const std::array<const std::vector<double>*, 5>& f,
               const std::array<const Bits*, 5>& Tbar);

struct CheckPair {
  std::string name;
  double lhs = 0, rhs = 0;
  double ratio() const;
};
std::vector<CheckPair> check_qtttt(const CornerSystem& cs);
std::vector<CheckPair> check_qt(const TSystem& sys);
std::vector<CheckPair> check_qtj(const TSystem& sys);
// mean of Z(T,T,T) on the event U against prod delta_{T:j}^4 times the T_j version,
// and the conditional variance
std::vector<CheckPair> check_z(const TSystem& sys);
// ||T_4||^8 on H against prod delta_j^2 delta_4^8 prod delta_jk^4
CheckPair check_t4_box(const TSystem& sys);

// Partition system. The generators are a linear subspace V of H (cells are
// triples of V-cosets; none means a single cell), partitions Q_i of S_i inside H
// and Q_jk of R_jk inside H x H. The label vectors over H^3 are derived from them.
struct PartitionSystem {
  TSystem sys;
  std::optional<AffineSubspace> V;
  std::array<std::vector<int>, 5> Q;    // over H, -1 outside S_i
  std::array<std::vector<int>, 6> Qjk;  // over H x H, -1 outside R_jk

  std::vector<int> PH;                  // over H^3 (affine cells)
  std::array<std::vector<int>, 5> Pi;   // over H^3, partitions of lift(S_i)
  std::array<std::vector<int>, 6> Pjk;  // over H^3, partitions of lift(R_jk)
  std::vector<int> PT;                  // over H^3, partition of T

  static PartitionSystem trivial(const TSystem& sys);
  // recomputes the H^3 labels from the generators
  void derive();
  void validate() const;
  int counter_P1() const;
  int counter_P2() const;
  int counter_PT() const;
  int codim() const { return V ? V->codim() : 0; }
};

}  // namespace bc
