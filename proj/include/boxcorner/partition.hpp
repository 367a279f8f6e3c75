#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "boxcorner/bits.hpp"
#include "boxcorner/space.hpp"

namespace bc {

// Atoms as labels over a finite universe; -1 marks points outside the ground set.
// Labels are kept normalised: atoms numbered 0.. in order of first appearance.
struct Partition {
  std::vector<int> label;

  static Partition trivial(const Bits& ground);
  static Partition points(const Bits& ground);
  static Partition from_labels(std::vector<int> labels);

  std::size_t universe() const { return label.size(); }
  int atom_count() const;
  Bits ground() const;
  Bits atom(int a) const;
  std::vector<std::size_t> atom_sizes() const;
  void normalize();
  bool operator==(const Partition& o) const { return label == o.label; }
};

Partition meet(const Partition& P, const Partition& Q);
// the restriction of P to the points of S
Partition restrict_to(const Partition& P, const Bits& S);
// every atom of Pp lies inside one atom of P
bool subordinate(const Partition& Pp, const Partition& P);
// max number of Pp atoms meeting one atom of P
int multi(const Partition& Pp, const Partition& P);

// E[E(Z : P)^2], points outside the ground contributing zero
double energy(const std::vector<double>& Z, const Partition& P);
// E(Z : P) as a function
std::vector<double> cond_expectation(const std::vector<double>& Z, const Partition& P);

struct MdsReport {
  bool refining = false;
  double max_cross = 0;     // max |E dZ_m dZ_n| over m < n
  double telescope_err = 0; // |energy(last) - sum E dZ_m^2|
};
MdsReport mds_check(const std::vector<double>& Z, const std::vector<Partition>& chain);

// alpha^2 + (1 - beta)^-1 nu^2 beta
double energy_increment(double alpha, double beta, double nu);
struct RationalValue {
  std::int64_t num = 0, den = 1;
  bool operator==(const RationalValue& o) const { return num == o.num && den == o.den; }
};
RationalValue energy_increment_exact(RationalValue alpha, RationalValue beta, RationalValue nu);
// the common refinement of P with each improvement, checked to gain at least
// min_gain in energy of Z
Partition refine_for_energy(const std::vector<double>& Z, const Partition& P,
                            const std::vector<Partition>& improvements, double min_gain);
// energy(S, Pp) >= energy(S, P) + Delta; Pp must refine P
bool is_good(const Partition& Pp, const std::vector<double>& S, double Delta, const Partition& P);

// ---- stopping monitors --------------------------------------------------------

enum class MonitorKind { Simple, Conditional, Weighted };

class StoppingMonitor {
 public:
  StoppingMonitor(MonitorKind kind, double u, double tau = 1.0, double C = 1.0,
                  std::string name = "");
  // Records one energy jump. Jumps below the threshold are ignored. Throws
  // InvariantViolation when the count would pass the cap.
  bool record(double jump);
  int count() const { return count_; }
  int cap() const { return cap_; }
  MonitorKind kind() const { return kind_; }
  double threshold() const { return threshold_; }
  const std::string& name() const { return name_; }

  // every monitor ever constructed reports here; acceptance reads the maxima
  struct Ledger {
    int monitors = 0;
    int violations = 0;
    double max_fill = 0;  // max count / cap seen
  };
  static Ledger ledger();

 private:
  MonitorKind kind_;
  double threshold_;
  int cap_;
  int count_ = 0;
  std::string name_;
};

// ceil(1/u) and ceil(u^-2 tau^-C)
int simple_cap(double u);
int weighted_cap(double u, double tau, double C);

// ---- pigeonhole ---------------------------------------------------------------

struct PigeonholeResult {
  int atom = -1;
  double p_T = 0;    // P(T : p)
  double p_A = 0;    // P(A : T n p)
};
// atom p not in excluded with P(T:p) >= (v/4) P(T:X) and P(A : T n p) >= delta + v/2
PigeonholeResult pigeonhole_select(const Bits& A, const Bits& T, const Bits& X, const Partition& P,
                                   const std::vector<int>& excluded, double v, double delta);

// ---- affine partitions ----------------------------------------------------------

// Atoms (a+V) x (b+V) x (c+V) of H^3 for a linear subspace V of H = F_p^n.
struct AffinePartition {
  AffineSubspace V;
  Partition P;
  int codim() const { return V.codim(); }
};
AffinePartition affine_partition(const Cube& cube, const AffineSubspace& V);
// canonical coset representative code of h modulo V
int coset_code(const Group& H, const AffineSubspace& V, int h);
bool check_affine(const Cube& cube, const AffinePartition& ap);

// ---- towers ---------------------------------------------------------------------

// 2^^height with the top exponent replaced: value = 2^(2^(...^(top))) with
// `height` twos below top. height 0 means the plain number top.
struct TowerValue {
  int height = 0;
  double top = 1;  // kept below 2^64 by normalisation

  static TowerValue of(double x);
  static TowerValue tower2(int n);  // 2^^n
  TowerValue pow2() const;          // 2^x
  TowerValue times(double u) const; // u * x, u >= 1
  // log2 applied once (exact within the representation)
  TowerValue log2() const;
  std::optional<double> materialize() const;  // when below 2^64
  int compare(const TowerValue& o) const;
  bool operator<=(const TowerValue& o) const { return compare(o) <= 0; }
  std::string str() const;
};

// psi(0,u,v) = uv, psi(l+1) = 2^(u psi(l))
TowerValue tower(int ell, int u, int v);
// least h with 2^^h >= x
int log_star(double x);
int log_star(const TowerValue& x);
// psi(l,u,v) <= 2^^(l + log*(2 u^u_power v)). The telescoped exponent in the
// proof ends at (1 + eps) u psi(0) = (1 + eps) u^2 v, so u_power = 2 always
// holds; u_power = 1 fails e.g. at (1, 3, 2) where psi = 2^18 > 2^^4.
bool tower_bound_holds(int ell, int u, int v, int u_power = 1);

}  // namespace bc
