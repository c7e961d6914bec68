#pragma once

// Shared machinery of the rate and energy-efficiency solvers. Both run the
// same dual iteration (water-level power, per-layer metric, greedy
// assignment, projected subgradient step); they differ in the power and
// metric expressions and in the primal objective used to rank recovered
// points.
//
// Everything in here works on a normalized instance: rates in bits/s/Hz
// (physical rate / W), the budget multiplier mu for the constraint
// P^tot / P^max <= 1, and the energy price q in bits/s/Hz per Watt.

#include "scma/model.hpp"
#include "scma/se_solver.hpp"

#include <map>
#include <optional>
#include <vector>

namespace scma::detail {

struct NormalizedInstance {
  Matrix cnr;      // K x M effective gain over noise, 1/W
  Vector weights;  // K
  Vector req;      // K, bits/s/Hz
  double p_max = 0.0;
  double bandwidth = 1.0;
  double amp_factor = 1.0;
  double circuit_power = 0.0;
  std::size_t unusable_pairs = 0;

  std::size_t n_users() const { return static_cast<std::size_t>(cnr.rows()); }
  std::size_t n_layers() const { return static_cast<std::size_t>(cnr.cols()); }
};

NormalizedInstance normalize(const FactorGraph& graph, const ChannelState& chan,
                             const SystemParams& params, bool unit_weights);

// [numer / (price ln 2) - 1 / cnr]^+, zero for unusable pairs.
double water_level_power(double cnr, double numer, double price);

// numer log2(1 + cnr p) - price p.
double layer_value(double cnr, double p, double numer, double price);

// numer [log2(1 + z) - z / ((1 + z) ln 2)], z = cnr p.
double energy_layer_metric(double cnr, double p, double numer);

enum class Objective { kWeightedRate, kDinkelbach };

struct LoopProblem {
  Objective objective = Objective::kWeightedRate;
  double q = 0.0;  // normalized energy price; zero for the rate problem
};

struct Candidate {
  BinaryMatrix assign;
  Matrix power;
  Vector rates;  // bits/s/Hz
  double p_tot = 0.0;
  bool feasible = false;
  double violation = 0.0;
  double value = 0.0;
};

Candidate evaluate(const NormalizedInstance& inst, const LoopProblem& problem,
                   BinaryMatrix assign, Matrix power);

struct LoopResult {
  std::optional<Candidate> best_feasible;
  Candidate best_effort;  // least constraint violation
  Candidate last;         // primal point of the final dual iterate
  DualState state;
  std::vector<IterationRecord> records;  // physical units
  bool converged = false;
  double best_dual = 0.0;                // normalized units
};

LoopResult run_dual_loop(const NormalizedInstance& inst, const LoopProblem& problem,
                         DualState seed, const DualOptions& options,
                         const Candidate* incumbent = nullptr);

}  // namespace scma::detail
