#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "boxcorner/bits.hpp"
#include "boxcorner/corners.hpp"
#include "boxcorner/increment.hpp"
#include "boxcorner/space.hpp"
#include "boxcorner/systems.hpp"
#include "boxcorner/uniformize.hpp"

namespace bc {

struct PipelineConfig {
  int p = 5, n = 1;
  // Desk value. Random sets of density 0.9 on F_5 reach 0.89 delta^4 at most,
  // planted product sets sit near 4 delta^4.
  double kappa = 1.0;
  double admiss_C = 64.0, admiss_kappa = 0.01;
  double upsilon = 0.25;
  IncrementConfig inc;
  UniformizeConfig uni;
  int max_iterations = 16;
  bool uniformize = true;   // run the uniformizing lemma after each increment
  std::uint64_t seed = 1;

  void validate() const;
};

struct IterationRecord {
  int m = 0;
  int dim = 0;                       // dim of the current H (0 for cyclic groups)
  double dA = 0, pT = 0;             // P(A:T), P(T:H^3)
  std::size_t A_size = 0;
  std::array<double, 5> d{};
  std::array<double, 6> djk{};
  bool admissible = false;
  std::string admiss_failure;
  std::array<double, 5> ratio{};
  double uniform_bound = 0;
  double size_lhs = 0, size_rhs = 0;
  std::string outcome;               // decision outcome name
  int ell = 0;
  int branch = 0;                    // increment branch, 0 when none ran
  double dA_increment = 0;           // P(A:T) after the increment
  double dA_uniformize = 0;          // after the uniformizing lemma (0 when skipped)
  int codim = 0;                     // codimension consumed by the uniformizer
  std::vector<MonitorLog> monitors;
  std::vector<std::string> relaxations;
};

struct PipelineTrace {
  PipelineConfig config;
  std::string space;                 // "p^n"
  std::size_t A_size = 0;
  double density = 0;
  std::vector<IterationRecord> iterations;
  std::string terminal = "exhausted";  // "corner" or "exhausted"
  std::optional<CornerWitness> corner;  // in the original coordinates
  bool corner_verified = false;
  bool subset_ok = true;             // A(m) inside A at every step
  bool density_monotone = true;
  std::string diagnostic;
  int iteration_cap = 0;
};

// Bernoulli(density) subset of n points
Bits random_set(std::size_t n, double density, std::uint64_t seed);

PipelineTrace run_pipeline(std::shared_ptr<const Cube> cube, const Bits& A,
                           const PipelineConfig& cfg);

}  // namespace bc
