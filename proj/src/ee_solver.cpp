#include "scma/ee_solver.hpp"

#include "dual_loop.hpp"
#include "scma/errors.hpp"

#include <cmath>
#include <optional>

namespace scma {

double dinkelbach_value(const FactorGraph& graph, const ChannelState& chan,
                        const SystemParams& params, const Allocation& alloc, double q) {
  double sum_rate = 0.0;
  for (std::size_t k = 0; k < chan.n_users(); ++k) {
    sum_rate += user_rate(graph, chan, params, alloc, k);
  }
  return sum_rate - q * consumed_power(params, alloc);
}

double optimal_power_ee(const FactorGraph& graph, const ChannelState& chan, std::size_t user,
                        std::size_t layer, double lambda, double mu, double q, double amp_factor) {
  const double price = mu + q * amp_factor;
  if (!(price > 0.0)) throw ParameterError("optimal_power_ee: mu + q * amp_factor must be positive");
  const double cnr =
      effective_gain(graph, chan, user, layer) / chan.noise()(static_cast<Eigen::Index>(user));
  return detail::water_level_power(cnr, 1.0 + lambda, price);
}

double layer_metric_ee(const FactorGraph& graph, const ChannelState& chan, std::size_t user,
                       std::size_t layer, double p_hat, double lambda) {
  const double cnr =
      effective_gain(graph, chan, user, layer) / chan.noise()(static_cast<Eigen::Index>(user));
  return detail::energy_layer_metric(cnr, p_hat, 1.0 + lambda);
}

namespace {

double efficiency(const detail::NormalizedInstance& inst, const detail::Candidate& c) {
  const double denom = inst.amp_factor * c.p_tot + inst.circuit_power;
  if (!(denom > 0.0)) return 0.0;
  return inst.bandwidth * c.rates.sum() / denom;
}

}  // namespace

EeResult solve_ee(const FactorGraph& graph, const ChannelState& chan, const SystemParams& params,
                  const DualState& inner_seed, const EeOptions& options) {
  if (!(options.tolerance > 0.0)) throw ParameterError("solve_ee: tolerance must be positive");
  const auto inst = detail::normalize(graph, chan, params, /*unit_weights=*/true);

  EeResult result;
  auto& dk = result.state;
  auto& trace = result.trace;
  trace.unusable_pairs = inst.unusable_pairs;
  trace.best_dual_bound = 0.0;

  double q = 0.0;
  dk.q_history.push_back(q);
  std::optional<detail::Candidate> incumbent;
  DualState carried = inner_seed;
  DualOptions inner_options = options.inner;
  const std::size_t max_outer = options.interleaved ? inner_seed.max_iters : options.max_outer;
  bool feasible = true;

  for (std::size_t t = 0; t < max_outer; ++t) {
    detail::LoopProblem problem{detail::Objective::kDinkelbach, q / inst.bandwidth};
    DualState seed = options.interleaved ? carried : inner_seed;
    if (options.interleaved) seed.max_iters = 1;
    const auto loop = detail::run_dual_loop(inst, problem, seed, inner_options,
                                            incumbent ? &*incumbent : nullptr);
    trace.records.insert(trace.records.end(), loop.records.begin(), loop.records.end());
    dk.inner = loop.state;
    dk.outer_iteration = t + 1;
    if (options.interleaved) {
      carried = loop.state;
      carried.max_iters = inner_seed.max_iters;
      inner_options.warm_start = false;
    }

    if (!loop.best_feasible) {
      // Only possible before any feasible point exists: the rate floors cannot
      // be met within the budget.
      feasible = false;
      incumbent = loop.best_effort;
      dk.final_residual = loop.best_effort.value * inst.bandwidth;
      q = efficiency(inst, loop.best_effort);
      dk.q_history.push_back(q);
      break;
    }

    const detail::Candidate& cand = *loop.best_feasible;
    const double f_value = cand.value * inst.bandwidth;
    const double q_next = efficiency(inst, cand);
    incumbent = cand;
    dk.final_residual = f_value;
    dk.q_history.push_back(q_next);
    q = q_next;

    const bool inner_settled = !options.interleaved || loop.converged;
    if (std::abs(f_value) <= options.tolerance && inner_settled) {
      trace.converged = true;
      break;
    }
  }

  trace.iterations = trace.records.size();
  trace.feasible = feasible;
  result.allocation = make_allocation(graph, chan, params, incumbent->assign, incumbent->power);
  const double consumed = consumed_power(params, result.allocation);
  result.allocation.objective =
      consumed > 0.0 ? energy_efficiency(graph, chan, params, result.allocation) : 0.0;
  dk.q = result.allocation.objective;
  return result;
}

EeResult solve_ee(const FactorGraph& graph, const ChannelState& chan, const SystemParams& params) {
  return solve_ee(graph, chan, params, DualState::initial(params.n_users));
}

}  // namespace scma
