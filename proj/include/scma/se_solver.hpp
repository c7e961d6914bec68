#pragma once

// Weighted sum-rate maximization under per-user rate floors and a total power
// budget, by Lagrange dual decomposition:
//
//   1. closed-form water-level power for every (user, layer) pair,
//   2. per-layer metric H(k, m) and greedy argmax assignment,
//   3. projected subgradient step on the rate-floor multipliers lambda and the
//      power-budget multiplier mu,
//
// repeated until the multipliers settle or the iteration budget runs out.

#include "scma/model.hpp"

#include <cstddef>
#include <vector>

namespace scma {

// Lower bound applied to mu after every update; keeps the water level finite.
inline constexpr double kMuFloor = 1e-12;

struct DualState {
  Vector lambda;              // >= 0, one per user
  double mu = 1.0;            // >= kMuFloor
  double step = 0.1;          // beta; the solver decays it as beta / sqrt(l + 1)
  std::size_t iteration = 0;  // l
  double tolerance = 1e-6;    // epsilon
  std::size_t max_iters = 100;

  // lambda = 0, mu = 1, default step and tolerance.
  static DualState initial(std::size_t n_users);
};

struct IterationRecord {
  double objective = 0.0;    // objective of the dual iterate's primal point
  double total_power = 0.0;  // W
  Vector rate_slack;         // R_k - R_k^req, bits/s
  Vector lambda;
  double mu = 0.0;
  double max_metric = 0.0;   // max over (k, m) of H(k, m)
  double dual_value = 0.0;   // Lagrangian dual function at (lambda, mu)
  bool feasible = false;     // best recovered candidate of this iteration
};

struct SolveTrace {
  std::vector<IterationRecord> records;
  std::size_t iterations = 0;
  bool converged = false;
  bool feasible = false;
  // (user, layer) pairs whose effective gain is zero; they never carry power.
  std::size_t unusable_pairs = 0;
  // Smallest dual value seen; an upper bound on the optimum when the inner
  // maximization is exact.
  double best_dual_bound = 0.0;
};

// Multipliers in the solver are kept for the budget-normalized problem
// (power measured in units of P^max, rates in bits/s/Hz); these options tune
// how the loop is started and how primal points are recovered.
struct DualOptions {
  // Seed lambda and mu from the exact fixed-assignment multipliers of the
  // first assignment instead of the raw seed values.
  bool warm_start = true;
  // Repair rate-floor violations in each iterate's assignment and re-solve
  // its powers exactly before testing feasibility.
  bool primal_recovery = true;
  // Passes of the owner-change / swap search run on the best recovered
  // point once the dual loop stops (only with primal_recovery).
  int local_search_passes = 8;
};

// Water-level power for one (user, layer) pair:
//   [ (w + lambda) / (mu ln 2) - sigma^2 / sum_n alpha(n, m) h(k, n) ]^+.
// Returns 0 when the layer has zero effective gain for the user. Requires
// mu > 0.
double optimal_power_se(const FactorGraph& graph, const ChannelState& chan, std::size_t user,
                        std::size_t layer, double weight, double lambda, double mu);

// Partial derivative of the relaxed Lagrangian in s(k, m) at power p_hat:
//   (w + lambda) log2(1 + SNR(p_hat)) - mu p_hat.
double layer_metric_se(const FactorGraph& graph, const ChannelState& chan, std::size_t user,
                       std::size_t layer, double p_hat, double weight, double lambda,
                       double mu);

// Column-wise argmax with lowest-index tie-break. Columns whose best value is
// not positive stay unassigned.
BinaryMatrix assign_layers(const Matrix& metric);

// lambda_k <- [lambda_k - step (R_k - R_k^req)]^+,
// mu       <- max(kMuFloor, mu - step (P^max - P^tot)),
// iteration <- iteration + 1.
DualState update_multipliers_se(DualState state, const Vector& rates, const Vector& rate_req,
                                double p_tot, double p_max);

struct SeResult {
  Allocation allocation;  // objective = sum_k w_k R_k, bits/s
  SolveTrace trace;
};

// Throws InputError for inconsistent or non-finite inputs.
SeResult solve_se(const FactorGraph& graph, const ChannelState& chan, const SystemParams& params,
                  const DualState& seed, const DualOptions& options = {});

SeResult solve_se(const FactorGraph& graph, const ChannelState& chan, const SystemParams& params);

}  // namespace scma
