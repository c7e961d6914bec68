#pragma once

// Energy-efficiency maximization. The ratio objective
//
//   eta = sum_k R_k / (eps0 P^tot + P0)
//
// is handled by Dinkelbach's parametric transform: for a price q the
// subproblem max sum_k R_k - q (eps0 P^tot + P0) keeps the rate floors and
// the power budget and is solved by the same dual decomposition as the rate
// maximizer, with an energy-priced water level. q is then replaced by the
// efficiency of the subproblem's solution until the parametric value F
// reaches zero.

#include "scma/model.hpp"
#include "scma/se_solver.hpp"

#include <vector>

namespace scma {

struct DinkelbachState {
  double q = 0.0;  // bits/Joule
  DualState inner;
  std::size_t outer_iteration = 0;
  std::vector<double> q_history;  // starts at q(0) = 0
  double final_residual = 0.0;    // F(q, S, X) when the loop stopped, bits/s
};

struct EeOptions {
  double tolerance = 1e-6;  // on |F|, bits/s
  std::size_t max_outer = 30;
  // Update q after every dual iteration instead of running the inner dual
  // loop to convergence first.
  bool interleaved = false;
  DualOptions inner;
};

// W sum_k sum_m s(k,m) log2(1 + SNR(k,m)) - q (eps0 sum x(k,m) + P0), with
// x = s p.
double dinkelbach_value(const FactorGraph& graph, const ChannelState& chan,
                        const SystemParams& params, const Allocation& alloc, double q);

// [ (1 + lambda) / ((mu + q eps0) ln 2) - sigma^2 / sum_n alpha(n, m) h(k, n) ]^+.
// q here is in the same rate units as the multipliers (bits/s/Hz per Watt
// inside the solver). Requires mu + q eps0 > 0.
double optimal_power_ee(const FactorGraph& graph, const ChannelState& chan, std::size_t user,
                        std::size_t layer, double lambda, double mu, double q, double amp_factor);

// Derivative of the energy Lagrangian in s(k, m) with x = s p held fixed:
//   (1 + lambda) [ log2(1 + SNR) - SNR / ((1 + SNR) ln 2) ],  SNR = SNR(p_hat).
// The price terms drop out; at the water-level power this equals
// (1 + lambda) log2(1 + SNR) - (mu + q eps0) p_hat.
double layer_metric_ee(const FactorGraph& graph, const ChannelState& chan, std::size_t user,
                       std::size_t layer, double p_hat, double lambda);

struct EeResult {
  Allocation allocation;  // objective = energy efficiency, bits/Joule
  DinkelbachState state;
  SolveTrace trace;
};

EeResult solve_ee(const FactorGraph& graph, const ChannelState& chan, const SystemParams& params,
                  const DualState& inner_seed, const EeOptions& options = {});

EeResult solve_ee(const FactorGraph& graph, const ChannelState& chan, const SystemParams& params);

}  // namespace scma
