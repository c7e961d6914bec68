#include "scma/se_solver.hpp"

#include "dual_loop.hpp"
#include "scma/errors.hpp"

#include <algorithm>
#include <cmath>

namespace scma {

DualState DualState::initial(std::size_t n_users) {
  DualState state;
  state.lambda = Vector::Zero(static_cast<Eigen::Index>(n_users));
  return state;
}

double optimal_power_se(const FactorGraph& graph, const ChannelState& chan, std::size_t user,
                        std::size_t layer, double weight, double lambda, double mu) {
  if (!(mu > 0.0)) throw ParameterError("optimal_power_se: mu must be positive");
  const double gain = effective_gain(graph, chan, user, layer);
  const double cnr = gain / chan.noise()(static_cast<Eigen::Index>(user));
  return detail::water_level_power(cnr, weight + lambda, mu);
}

double layer_metric_se(const FactorGraph& graph, const ChannelState& chan, std::size_t user,
                       std::size_t layer, double p_hat, double weight, double lambda, double mu) {
  return (weight + lambda) * std::log2(1.0 + snr(graph, chan, user, layer, p_hat)) - mu * p_hat;
}

BinaryMatrix assign_layers(const Matrix& metric) {
  BinaryMatrix assign = BinaryMatrix::Zero(metric.rows(), metric.cols());
  for (Eigen::Index m = 0; m < metric.cols(); ++m) {
    Eigen::Index best = -1;
    double best_value = 0.0;
    for (Eigen::Index k = 0; k < metric.rows(); ++k) {
      // strict comparison keeps the lowest index on ties
      if (metric(k, m) > best_value) {
        best_value = metric(k, m);
        best = k;
      }
    }
    if (best >= 0) assign(best, m) = 1;
  }
  return assign;
}

DualState update_multipliers_se(DualState state, const Vector& rates, const Vector& rate_req,
                                double p_tot, double p_max) {
  if (rates.size() != state.lambda.size() || rate_req.size() != state.lambda.size()) {
    throw ParameterError("update_multipliers_se: one rate and requirement per user");
  }
  state.lambda = (state.lambda - state.step * (rates - rate_req)).cwiseMax(0.0);
  state.mu = std::max(kMuFloor, state.mu - state.step * (p_max - p_tot));
  ++state.iteration;
  return state;
}

SeResult solve_se(const FactorGraph& graph, const ChannelState& chan, const SystemParams& params,
                  const DualState& seed, const DualOptions& options) {
  const auto inst = detail::normalize(graph, chan, params, /*unit_weights=*/false);
  const auto loop = detail::run_dual_loop(inst, detail::LoopProblem{}, seed, options);

  SeResult result;
  result.trace.records = loop.records;
  result.trace.iterations = loop.records.size();
  result.trace.converged = loop.converged;
  result.trace.unusable_pairs = inst.unusable_pairs;
  result.trace.best_dual_bound = loop.best_dual * inst.bandwidth;
  result.trace.feasible = loop.best_feasible.has_value();

  const detail::Candidate& chosen = loop.best_feasible ? *loop.best_feasible : loop.last;
  result.allocation = make_allocation(graph, chan, params, chosen.assign, chosen.power);
  result.allocation.objective = weighted_sum_rate(params, result.allocation);
  return result;
}

SeResult solve_se(const FactorGraph& graph, const ChannelState& chan, const SystemParams& params) {
  return solve_se(graph, chan, params, DualState::initial(params.n_users));
}

}  // namespace scma
