#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "boxcorner/bits.hpp"
#include "boxcorner/increment.hpp"
#include "boxcorner/partition.hpp"
#include "boxcorner/space.hpp"
#include "boxcorner/systems.hpp"

namespace bc {

struct UniformizeConfig {
  double u2 = 0.3;            // 2D box threshold before the P_T counter factor
  double u3 = 0.3;            // U(3) threshold before the counter factor
  double tau = 0.25;          // admissible bad probability
  double C1 = 1.0;
  double C2 = 4.0;            // energy jump tau u^C2 of a box step, logged
  int codim_budget = 1;       // per inverse U(3) search
  int max_codim = 3;          // total codimension the affine partition may use
  int max_rounds = 12;
  BpzConstants bpz;
  double admiss_C = 1.0;      // admissibility constants used on atoms
  double admiss_kappa = 0.5;
  double cT = 1.0, CT = 1.0;  // tau_T = cT v^CT P(T : H^3)
  IncrementConfig inc;
};

// ---- inverse U(3) substitute -------------------------------------------------------

struct U3Search {
  std::vector<std::vector<int>> equations;  // the direction, as E x = 0
  AffineSubspace best;                      // densest coset of the direction
  double density_before = 0;                // P(S)
  double density = 0;                       // P(S : best)
  double gain = 0;                          // energy gain of splitting by the direction
  int codim = 0;
  std::size_t searched = 0;
};
// S inside F_p^d. Exhaustive over linear directions of codim <= budget.
std::optional<U3Search> inverse_u3_search(const Bits& S, int p, int d, double u,
                                          int codim_budget);

// every RREF equation matrix of rank c on F_p^d
std::vector<std::vector<std::vector<int>>> linear_directions(int p, int d, int c);

// ---- affine uniformization ----------------------------------------------------------

struct AffineUniformResult {
  AffineSubspace V;            // linear; cells are its cosets
  double bad_probability = 0;  // cosets where some set has relative U(3) norm > u
  int rounds = 0;
  int monitor_count = 0, monitor_cap = 0;
  bool partial = false;
  std::vector<double> energy;  // sum over sets of E[E(S : cosets)^2], per round
};
// start is a linear subspace to refine (whole H if omitted)
AffineUniformResult affine_uniformize(const std::vector<Bits>& sets, const Group& H, double u,
                                      double tau, int codim_budget, int max_codim,
                                      std::optional<AffineSubspace> start = std::nullopt);
// ||S - P(S:W)||_{U(3)} on the coset W of V through h, in coset coordinates
double coset_u3(const Bits& S, const Group& H, const AffineSubspace& V, int h);

// ---- 2D box step --------------------------------------------------------------------------

struct BoxStep {
  std::vector<int> PX, PY;     // refined labels over the two axes
  double bad_probability = 0;  // of bad cells inside X x Y
  int bad_cells = 0;
  double energy_before = 0, energy_after = 0;
  double jump_floor = 0;       // sum of P(cell) beta nu^2 / (1 - beta) over bad cells
  double jump_reference = 0;   // tau u^C2
  bool jump_reference_ok = false;
  int multi_X = 0, multi_Y = 0;
  int max_bad_per_X = 0, max_bad_per_Y = 0;
};
// Z labels over X x Y (index x * N + y): atoms, each inside one cell of
// PX x PY. A cell is bad when one of its Z atoms has relative box norm >= u.
BoxStep box_pz_partition_step(const std::vector<int>& Z, int N, const std::vector<int>& PX,
                              const std::vector<int>& PY, double u, double tau,
                              const UniformizeConfig& cfg);

// ---- partition-system uniformizers --------------------------------------------------------

struct MonitorLog {
  std::string name;
  int count = 0, cap = 0;
};

struct UniformizeReport {
  PartitionSystem ps;
  int codim = 0;
  std::array<int, 3> counters_before{}, counters_after{};  // P1, P2, PT
  std::array<double, 6> p_E2{};    // bad 2D box event per pair, inside S_j x S_k
  std::array<double, 5> p_E3{};    // bad U(3) event per axis, inside S_j
  double p_E = 0;                  // atoms of P_T whose system is not admissible
  double p_B = 0;                  // same, failing a pair or single clause
  std::array<double, 5> p_F{};     // same, failing only frame clauses, by frame
  int rounds = 0;
  int increments = 0;
  std::vector<MonitorLog> monitors;
  bool partial = false;
  bool pair_multi_ok = true;       // multi(P'_jk : P'_j ^ P'_k) not increased
  bool pt_counter_kept = true;
  bool events_ok = true;           // every bad event within its bound
  std::vector<std::string> notes;
};

UniformizeReport two_box_uniformize(const PartitionSystem& ps, const UniformizeConfig& cfg);
UniformizeReport t_uniformize(const TSystem& sys, double uT, double tauT,
                              const UniformizeConfig& cfg);

// ---- atom systems ------------------------------------------------------------------------

// The trivial system of one atom t of P_T, transported to H' = F_p^dim(V):
// coordinate i of a point is shift[i] + basis . digits.
struct AtomSystem {
  CornerSystem cs;
  std::array<int, 5> shift{};   // coset representatives, shift[4] = shift[1]+shift[2]+shift[3]
  std::vector<std::vector<int>> basis;
  GroupPtr H;                   // the ambient group
  int embed(int i, int e) const;
  std::size_t embed_point(const Cube& ambient, std::size_t x) const;
};
// A may be empty (then cs.A is empty)
AtomSystem atom_system(const PartitionSystem& ps, int atom, const Bits* A = nullptr);

struct UniLemmaResult {
  AtomSystem next;
  UniformizeReport report;
  int atom = -1;
  double density = 0;           // P(A' : T')
  double density_floor = 0;     // delta + v/4
  bool admissible = false;
  std::string admiss_failure;
  double pT = 0;                // P(T' : H'^3)
  int dim_before = 0, dim_after = 0;
  double excluded_mass = 0;     // of the excluded atoms inside T
  bool relaxed = false;         // non-admissible atoms were not excluded
};
// strict: the non-admissible atoms must fit under the pigeonhole allowance
UniLemmaResult uniformizing_lemma(const CornerSystem& cs, double delta, double v,
                                  const UniformizeConfig& cfg, bool strict = false);

}  // namespace bc
