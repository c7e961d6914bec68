#include "dual_loop.hpp"

#include "scma/errors.hpp"
#include "scma/waterfill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace scma::detail {

namespace {

constexpr double kInternalTol = 1e-9;

std::vector<int> assignment_key(const BinaryMatrix& assign) {
  // owner per layer, -1 when unassigned
  std::vector<int> key(static_cast<std::size_t>(assign.cols()), -1);
  for (Eigen::Index m = 0; m < assign.cols(); ++m) {
    for (Eigen::Index k = 0; k < assign.rows(); ++k) {
      if (assign(k, m) != 0) {
        key[static_cast<std::size_t>(m)] = static_cast<int>(k);
        break;
      }
    }
  }
  return key;
}

bool better(const Candidate& a, const Candidate& b) { return a.value > b.value; }

// Gives every user with an unmet positive rate floor a usable layer, taking
// unassigned layers first and otherwise the layer whose current owner loses
// the least metric, never stripping a donor of its last layer. Remaining
// unassigned layers go to the user with the largest weighted gain.
BinaryMatrix repair_assignment(const NormalizedInstance& inst, const BinaryMatrix& assign,
                               const Matrix& metric, const Vector& lambda) {
  const auto n_users = static_cast<Eigen::Index>(inst.n_users());
  const auto n_layers = static_cast<Eigen::Index>(inst.n_layers());
  std::vector<int> owner = assignment_key(assign);
  std::vector<int> usable_count(static_cast<std::size_t>(n_users), 0);
  for (Eigen::Index m = 0; m < n_layers; ++m) {
    const int k = owner[static_cast<std::size_t>(m)];
    if (k >= 0 && inst.cnr(k, m) > 0.0) ++usable_count[static_cast<std::size_t>(k)];
  }

  std::vector<Eigen::Index> needy;
  for (Eigen::Index k = 0; k < n_users; ++k) {
    if (inst.req(k) > 0.0 && usable_count[static_cast<std::size_t>(k)] == 0) needy.push_back(k);
  }
  std::stable_sort(needy.begin(), needy.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return lambda(a) > lambda(b); });

  for (Eigen::Index k : needy) {
    Eigen::Index best_layer = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    double best_gain = 0.0;
    for (Eigen::Index m = 0; m < n_layers; ++m) {
      if (!(inst.cnr(k, m) > 0.0)) continue;
      const int current = owner[static_cast<std::size_t>(m)];
      double loss = 0.0;
      if (current >= 0) {
        const auto cu = static_cast<std::size_t>(current);
        const bool donor_needs_it = inst.cnr(current, m) > 0.0 && usable_count[cu] < 2 &&
                                    inst.req(current) > 0.0;
        if (donor_needs_it) continue;
        loss = metric(current, m);
      }
      const double score = metric(k, m) - loss;
      if (score > best_score || (score == best_score && inst.cnr(k, m) > best_gain)) {
        best_score = score;
        best_layer = m;
        best_gain = inst.cnr(k, m);
      }
    }
    if (best_layer < 0) continue;
    const int previous = owner[static_cast<std::size_t>(best_layer)];
    if (previous >= 0 && inst.cnr(previous, best_layer) > 0.0) {
      --usable_count[static_cast<std::size_t>(previous)];
    }
    owner[static_cast<std::size_t>(best_layer)] = static_cast<int>(k);
    ++usable_count[static_cast<std::size_t>(k)];
  }

  for (Eigen::Index m = 0; m < n_layers; ++m) {
    if (owner[static_cast<std::size_t>(m)] >= 0) continue;
    Eigen::Index best = -1;
    double best_score = 0.0;
    for (Eigen::Index k = 0; k < n_users; ++k) {
      const double score = (inst.weights(k) + lambda(k)) * inst.cnr(k, m);
      if (score > best_score) {
        best_score = score;
        best = k;
      }
    }
    if (best >= 0) owner[static_cast<std::size_t>(m)] = static_cast<int>(best);
  }

  BinaryMatrix repaired = BinaryMatrix::Zero(n_users, n_layers);
  for (Eigen::Index m = 0; m < n_layers; ++m) {
    const int k = owner[static_cast<std::size_t>(m)];
    if (k >= 0) repaired(k, m) = 1;
  }
  return repaired;
}

}  // namespace

NormalizedInstance normalize(const FactorGraph& graph, const ChannelState& chan,
                             const SystemParams& params, bool unit_weights) {
  validate_instance(graph, chan, params);
  NormalizedInstance inst;
  const auto n_users = static_cast<Eigen::Index>(chan.n_users());
  const auto n_layers = static_cast<Eigen::Index>(graph.n_layers());
  inst.cnr = chan.gains() * graph.alpha();  // K x M
  for (Eigen::Index k = 0; k < n_users; ++k) inst.cnr.row(k) /= chan.noise()(k);
  if (!inst.cnr.allFinite()) throw InputError("effective channel-to-noise ratios are not finite");
  inst.weights = Vector::Ones(n_users);
  inst.req = Vector::Zero(n_users);
  for (Eigen::Index k = 0; k < n_users; ++k) {
    if (!unit_weights) inst.weights(k) = params.weights[static_cast<std::size_t>(k)];
    inst.req(k) = params.rate_req[static_cast<std::size_t>(k)] / params.subcarrier_bw;
  }
  inst.p_max = params.p_max;
  inst.bandwidth = params.subcarrier_bw;
  inst.amp_factor = params.amp_factor;
  inst.circuit_power = params.circuit_power;
  for (Eigen::Index k = 0; k < n_users; ++k) {
    for (Eigen::Index m = 0; m < n_layers; ++m) {
      if (!(inst.cnr(k, m) > 0.0)) ++inst.unusable_pairs;
    }
  }
  return inst;
}

double water_level_power(double cnr, double numer, double price) {
  if (!(cnr > 0.0)) return 0.0;
  return std::max(0.0, numer / (price * std::numbers::ln2) - 1.0 / cnr);
}

double layer_value(double cnr, double p, double numer, double price) {
  return numer * std::log2(1.0 + cnr * p) - price * p;
}

double energy_layer_metric(double cnr, double p, double numer) {
  const double z = cnr * p;
  return numer * (std::log2(1.0 + z) - z / ((1.0 + z) * std::numbers::ln2));
}

Candidate evaluate(const NormalizedInstance& inst, const LoopProblem& problem, BinaryMatrix assign,
                   Matrix power) {
  Candidate c;
  c.power = (assign.cast<double>().array() * power.array()).matrix();
  c.assign = std::move(assign);
  const auto n_users = static_cast<Eigen::Index>(inst.n_users());
  c.rates = Vector::Zero(n_users);
  for (Eigen::Index k = 0; k < n_users; ++k) {
    for (Eigen::Index m = 0; m < c.assign.cols(); ++m) {
      if (c.assign(k, m) != 0) c.rates(k) += std::log2(1.0 + inst.cnr(k, m) * c.power(k, m));
    }
  }
  c.p_tot = c.power.sum();

  double violation = std::max(0.0, c.p_tot / inst.p_max - 1.0);
  for (Eigen::Index k = 0; k < n_users; ++k) {
    if (inst.req(k) > 0.0) violation += std::max(0.0, (inst.req(k) - c.rates(k)) / inst.req(k));
  }
  c.violation = violation;
  c.feasible = violation <= kInternalTol;

  if (problem.objective == Objective::kWeightedRate) {
    c.value = inst.weights.dot(c.rates);
  } else {
    c.value = c.rates.sum() - problem.q * (inst.amp_factor * c.p_tot + inst.circuit_power);
  }
  return c;
}

LoopResult run_dual_loop(const NormalizedInstance& inst, const LoopProblem& problem, DualState seed,
                         const DualOptions& options, const Candidate* incumbent) {
  const auto n_users = static_cast<Eigen::Index>(inst.n_users());
  const auto n_layers = static_cast<Eigen::Index>(inst.n_layers());
  if (seed.lambda.size() != n_users) throw ParameterError("dual seed has the wrong lambda size");
  if (!(seed.tolerance > 0.0)) throw ParameterError("dual tolerance must be positive");
  if (!(seed.step > 0.0)) throw ParameterError("dual step must be positive");
  if ((seed.lambda.array() < 0.0).any() || !(seed.mu >= 0.0)) {
    throw ParameterError("dual seed must be non-negative");
  }
  seed.mu = std::max(seed.mu, kMuFloor);

  const double energy_price = problem.q * inst.amp_factor;
  const bool ee = problem.objective == Objective::kDinkelbach;

  LoopResult out;
  out.best_dual = std::numeric_limits<double>::infinity();
  bool have_effort = false;
  std::map<std::vector<int>, Candidate> recovered;

  auto offer = [&](const Candidate& c) {
    if (c.feasible && (!out.best_feasible || better(c, *out.best_feasible))) out.best_feasible = c;
    if (!have_effort || c.violation < out.best_effort.violation) {
      out.best_effort = c;
      have_effort = true;
    }
  };
  if (incumbent != nullptr) {
    offer(evaluate(inst, problem, incumbent->assign, incumbent->power));
  }

  Matrix power(n_users, n_layers);
  Matrix metric(n_users, n_layers);
  Matrix value(n_users, n_layers);

  auto primal_step = [&](const DualState& state) {
    const double price = state.mu / inst.p_max + energy_price;
    for (Eigen::Index k = 0; k < n_users; ++k) {
      const double numer = inst.weights(k) + state.lambda(k);
      for (Eigen::Index m = 0; m < n_layers; ++m) {
        const double c = inst.cnr(k, m);
        const double p = water_level_power(c, numer, price);
        power(k, m) = p;
        value(k, m) = c > 0.0 ? layer_value(c, p, numer, price) : 0.0;
        metric(k, m) = ee ? (c > 0.0 ? energy_layer_metric(c, p, numer) : 0.0) : value(k, m);
      }
    }
  };

  // Exact powers for a fixed assignment, cached by owner vector.
  auto solve_fixed = [&](const BinaryMatrix& assign) -> const Candidate& {
    auto key = assignment_key(assign);
    auto it = recovered.find(key);
    if (it == recovered.end()) {
      const auto wf =
          qos_waterfill(inst.cnr, assign, inst.weights, inst.req, inst.p_max, energy_price);
      it = recovered.emplace(std::move(key), evaluate(inst, problem, assign, wf.power)).first;
      if (!wf.feasible) it->second.feasible = false;
    }
    return it->second;
  };

  auto recover = [&](const BinaryMatrix& assign, const DualState& state) -> const Candidate& {
    return solve_fixed(repair_assignment(inst, assign, metric, state.lambda));
  };

  // First-improvement search over single-layer owner changes and owner swaps
  // between two layers, starting from the best feasible point. Closes most of
  // the duality gap left by the greedy per-layer assignment.
  auto local_search = [&]() {
    if (!out.best_feasible) return;
    Candidate current = *out.best_feasible;
    auto try_move = [&](BinaryMatrix trial) {
      const Candidate& c = solve_fixed(trial);
      if (c.feasible && c.value > current.value + 1e-12 * std::max(1.0, std::abs(current.value))) {
        current = c;
        return true;
      }
      return false;
    };
    for (int pass = 0; pass < options.local_search_passes; ++pass) {
      bool improved = false;
      for (Eigen::Index m = 0; m < n_layers; ++m) {
        for (Eigen::Index k = 0; k < n_users; ++k) {
          if (current.assign(k, m) != 0 || !(inst.cnr(k, m) > 0.0)) continue;
          BinaryMatrix trial = current.assign;
          Eigen::Index previous = -1;
          trial.col(m).maxCoeff(&previous);
          if (trial(previous, m) == 0) previous = -1;
          trial.col(m).setZero();
          trial(k, m) = 1;
          const bool stranded = previous >= 0 && inst.req(previous) > 0.0 &&
                                (trial.row(previous).cast<double>().array() *
                                 inst.cnr.row(previous).array()).maxCoeff() <= 0.0;
          if (!stranded) {
            improved = try_move(std::move(trial)) || improved;
            continue;
          }
          // chained move: re-house the displaced floor user on another layer
          for (Eigen::Index b = 0; b < n_layers; ++b) {
            if (b == m || !(inst.cnr(previous, b) > 0.0)) continue;
            BinaryMatrix chained = trial;
            chained.col(b).setZero();
            chained(previous, b) = 1;
            if (try_move(std::move(chained))) {
              improved = true;
              break;
            }
          }
        }
      }
      for (Eigen::Index a = 0; a < n_layers; ++a) {
        for (Eigen::Index b = a + 1; b < n_layers; ++b) {
          if (current.assign.col(a) == current.assign.col(b)) continue;
          BinaryMatrix trial = current.assign;
          trial.col(a).swap(trial.col(b));
          improved = try_move(std::move(trial)) || improved;
        }
      }
      if (!improved) break;
    }
    offer(current);
  };

  DualState state = seed;
  if (options.warm_start) {
    primal_step(state);
    const BinaryMatrix start = repair_assignment(inst, assign_layers(metric), metric, state.lambda);
    const auto wf = qos_waterfill(inst.cnr, start, inst.weights, inst.req, inst.p_max, energy_price);
    if (wf.feasible && std::isfinite(wf.price) && wf.lambda.allFinite()) {
      state.lambda = wf.lambda;
      state.mu = std::max(kMuFloor, (wf.price - energy_price) * inst.p_max);
    }
  }

  for (std::size_t l = 0; l < seed.max_iters; ++l) {
    primal_step(state);
    BinaryMatrix assign = assign_layers(metric);

    Candidate iterate = evaluate(inst, problem, assign, power);
    offer(iterate);
    bool any_feasible = iterate.feasible;
    if (options.primal_recovery) {
      const Candidate& fixed = recover(assign, state);
      offer(fixed);
      any_feasible = any_feasible || fixed.feasible;
    }

    // mu is the multiplier of P^tot / P^max <= 1, so its constant term is mu itself.
    double dual = state.mu - state.lambda.dot(inst.req);
    if (ee) dual -= problem.q * inst.circuit_power;
    for (Eigen::Index m = 0; m < n_layers; ++m) dual += std::max(0.0, value.col(m).maxCoeff());
    out.best_dual = std::min(out.best_dual, dual);

    IterationRecord rec;
    rec.objective = iterate.value * inst.bandwidth;
    rec.total_power = iterate.p_tot;
    rec.rate_slack = (iterate.rates - inst.req) * inst.bandwidth;
    rec.lambda = state.lambda;
    rec.mu = state.mu;
    rec.max_metric = metric.maxCoeff();
    rec.dual_value = dual * inst.bandwidth;
    rec.feasible = any_feasible;
    out.records.push_back(std::move(rec));
    out.last = std::move(iterate);

    DualState next = state;
    next.step = seed.step / std::sqrt(static_cast<double>(l) + 1.0);
    next = update_multipliers_se(std::move(next), out.last.rates, inst.req, out.last.p_tot / inst.p_max,
                                 1.0);
    next.step = seed.step;

    const double movement = std::max((next.lambda - state.lambda).cwiseAbs().maxCoeff(),
                                     std::abs(next.mu - state.mu));
    state = std::move(next);
    if (movement < seed.tolerance && out.last.violation < seed.tolerance) {
      out.converged = true;
      break;
    }
  }
  if (options.primal_recovery) local_search();
  out.state = std::move(state);
  return out;
}

}  // namespace scma::detail
