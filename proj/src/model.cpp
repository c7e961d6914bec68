#include "scma/model.hpp"

#include "scma/errors.hpp"

#include <cmath>
#include <string>

namespace scma {

namespace {

constexpr double kAlphaSumTol = 1e-12;

}  // namespace

FactorGraph::FactorGraph(BinaryMatrix mapping, Matrix alpha)
    : mapping_(std::move(mapping)), alpha_(std::move(alpha)) {
  const auto n = mapping_.rows();
  const auto m = mapping_.cols();
  if (n < 2 || m < 1) {
    throw ParameterError("factor graph needs at least 2 subcarriers and 1 layer");
  }
  if (alpha_.rows() != n || alpha_.cols() != m) {
    throw ParameterError("alpha must have the same shape as the mapping");
  }
  for (Eigen::Index col = 0; col < m; ++col) {
    long ones = 0;
    double alpha_sum = 0.0;
    for (Eigen::Index row = 0; row < n; ++row) {
      const int c = mapping_(row, col);
      const double a = alpha_(row, col);
      if (c != 0 && c != 1) throw ParameterError("mapping entries must be 0 or 1");
      if (!std::isfinite(a) || a < 0.0 || a > 1.0) {
        throw ParameterError("alpha entries must lie in [0, 1]");
      }
      if (c == 0 && a > 0.0) {
        throw ParameterError("alpha is positive on a subcarrier the layer does not occupy");
      }
      ones += c;
      alpha_sum += a;
    }
    if (col == 0) degree_ = static_cast<std::size_t>(ones);
    if (static_cast<std::size_t>(ones) != degree_) {
      throw ParameterError("every layer must occupy the same number of subcarriers");
    }
    if (std::abs(alpha_sum - 1.0) > kAlphaSumTol) {
      throw ParameterError("alpha column " + std::to_string(col) + " does not sum to 1");
    }
  }
  if (degree_ < 1 || degree_ >= static_cast<std::size_t>(n)) {
    throw ParameterError("layer degree d must satisfy 1 <= d < N");
  }
}

FactorGraph FactorGraph::uniform(BinaryMatrix mapping) {
  Matrix alpha = mapping.cast<double>();
  for (Eigen::Index col = 0; col < alpha.cols(); ++col) {
    const double d = alpha.col(col).sum();
    if (d > 0.0) alpha.col(col) /= d;
  }
  return FactorGraph(std::move(mapping), std::move(alpha));
}

FactorGraph canonical_factor_graph(std::size_t n_subcarriers, std::size_t d,
                                   std::size_t replicas) {
  if (d < 1 || d >= n_subcarriers) {
    throw ParameterError("canonical_factor_graph: need 1 <= d < n_subcarriers");
  }
  if (replicas < 1) throw ParameterError("canonical_factor_graph: replicas must be >= 1");

  // Lexicographic d-subsets of {0, ..., N-1}.
  std::vector<std::vector<std::size_t>> subsets;
  std::vector<std::size_t> idx(d);
  for (std::size_t i = 0; i < d; ++i) idx[i] = i;
  while (true) {
    subsets.push_back(idx);
    std::size_t pos = d;
    while (pos > 0 && idx[pos - 1] == n_subcarriers - d + (pos - 1)) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t j = pos; j < d; ++j) idx[j] = idx[j - 1] + 1;
  }

  const auto block_layers = subsets.size();
  BinaryMatrix mapping = BinaryMatrix::Zero(static_cast<Eigen::Index>(n_subcarriers * replicas),
                                            static_cast<Eigen::Index>(block_layers * replicas));
  for (std::size_t r = 0; r < replicas; ++r) {
    for (std::size_t layer = 0; layer < block_layers; ++layer) {
      for (auto sc : subsets[layer]) {
        mapping(static_cast<Eigen::Index>(r * n_subcarriers + sc),
                static_cast<Eigen::Index>(r * block_layers + layer)) = 1;
      }
    }
  }
  return FactorGraph::uniform(std::move(mapping));
}

ChannelState::ChannelState(Matrix gains, Vector noise)
    : gains_(std::move(gains)), noise_(std::move(noise)) {
  if (gains_.rows() < 1 || gains_.cols() < 1) throw InputError("channel gains are empty");
  if (noise_.size() != gains_.rows()) {
    throw InputError("one noise power per user is required");
  }
  if (!gains_.allFinite() || (gains_.array() < 0.0).any()) {
    throw InputError("channel gains must be finite and non-negative");
  }
  if (!noise_.allFinite() || (noise_.array() <= 0.0).any()) {
    throw InputError("noise powers must be finite and strictly positive");
  }
}

SystemParams SystemParams::uniform(std::size_t n_users, double weight, double rate_req) {
  SystemParams p;
  p.n_users = n_users;
  p.weights.assign(n_users, weight);
  p.rate_req.assign(n_users, rate_req);
  return p;
}

void SystemParams::validate() const {
  if (n_users == 0) throw ParameterError("n_users must be positive");
  if (weights.size() != n_users) throw ParameterError("weights: expected one per user");
  if (rate_req.size() != n_users) throw ParameterError("rate_req: expected one per user");
  if (!(p_max > 0.0) || !std::isfinite(p_max)) throw ParameterError("p_max must be positive");
  if (!(circuit_power >= 0.0) || !std::isfinite(circuit_power)) {
    throw ParameterError("circuit_power must be non-negative");
  }
  if (!(amp_factor > 0.0) || !std::isfinite(amp_factor)) {
    throw ParameterError("amp_factor must be positive");
  }
  if (!(subcarrier_bw > 0.0) || !std::isfinite(subcarrier_bw)) {
    throw ParameterError("subcarrier_bw must be positive");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ParameterError("weights must be positive");
  }
  for (double r : rate_req) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ParameterError("rate_req must be non-negative");
  }
}

double effective_gain(const FactorGraph& graph, const ChannelState& chan, std::size_t user,
                      std::size_t layer) {
  const auto k = static_cast<Eigen::Index>(user);
  const auto m = static_cast<Eigen::Index>(layer);
  return graph.alpha().col(m).dot(chan.gains().row(k).transpose());
}

double snr(const FactorGraph& graph, const ChannelState& chan, std::size_t user,
           std::size_t layer, double power) {
  return power * effective_gain(graph, chan, user, layer) /
         chan.noise()(static_cast<Eigen::Index>(user));
}

double user_rate(const FactorGraph& graph, const ChannelState& chan, const SystemParams& params,
                 const Allocation& alloc, std::size_t user) {
  const auto k = static_cast<Eigen::Index>(user);
  double bits = 0.0;
  for (Eigen::Index m = 0; m < alloc.assign.cols(); ++m) {
    if (alloc.assign(k, m) == 0) continue;
    bits += std::log2(1.0 + snr(graph, chan, user, static_cast<std::size_t>(m), alloc.power(k, m)));
  }
  return params.subcarrier_bw * bits;
}

double total_tx_power(const Allocation& alloc) {
  return (alloc.assign.cast<double>().array() * alloc.power.array()).sum();
}

double consumed_power(const SystemParams& params, double tx_power) {
  return params.amp_factor * tx_power + params.circuit_power;
}

double consumed_power(const SystemParams& params, const Allocation& alloc) {
  return consumed_power(params, total_tx_power(alloc));
}

double energy_efficiency(const FactorGraph& graph, const ChannelState& chan,
                         const SystemParams& params, const Allocation& alloc) {
  const double denom = consumed_power(params, alloc);
  if (!(denom > 0.0)) {
    throw DivisionGuardError("energy efficiency undefined: consumed power is zero");
  }
  double sum_rate = 0.0;
  for (std::size_t k = 0; k < chan.n_users(); ++k) {
    sum_rate += user_rate(graph, chan, params, alloc, k);
  }
  return sum_rate / denom;
}

Allocation make_allocation(const FactorGraph& graph, const ChannelState& chan,
                           const SystemParams& params, BinaryMatrix assign, Matrix power) {
  Allocation alloc;
  alloc.power = (assign.cast<double>().array() * power.array()).matrix();
  alloc.assign = std::move(assign);
  alloc.rates = Vector::Zero(static_cast<Eigen::Index>(chan.n_users()));
  for (std::size_t k = 0; k < chan.n_users(); ++k) {
    alloc.rates(static_cast<Eigen::Index>(k)) = user_rate(graph, chan, params, alloc, k);
  }
  alloc.total_tx_power = total_tx_power(alloc);
  return alloc;
}

double weighted_sum_rate(const SystemParams& params, const Allocation& alloc) {
  double total = 0.0;
  for (std::size_t k = 0; k < params.n_users; ++k) {
    total += params.weights[k] * alloc.rates(static_cast<Eigen::Index>(k));
  }
  return total;
}

bool ConstraintReport::rates_ok() const {
  for (bool ok : rate_ok) {
    if (!ok) return false;
  }
  return true;
}

bool ConstraintReport::all_satisfied() const {
  return rates_ok() && power_ok && exclusive_ok && binary_ok && nonnegative_ok;
}

ConstraintReport check_feasibility(const FactorGraph& graph, const ChannelState& chan,
                                   const SystemParams& params, const Allocation& alloc) {
  ConstraintReport report;
  const auto users = chan.n_users();
  report.rate_ok.resize(users);
  report.rate_slack.resize(users);
  for (std::size_t k = 0; k < users; ++k) {
    const double rate = user_rate(graph, chan, params, alloc, k);
    const double req = params.rate_req[k];
    report.rate_slack[k] = rate - req;
    report.rate_ok[k] = rate >= req * (1.0 - kFeasibilityRelTol);
  }

  const double p_tot = total_tx_power(alloc);
  report.power_slack = params.p_max - p_tot;
  report.power_ok = p_tot <= params.p_max * (1.0 + kFeasibilityRelTol);

  for (Eigen::Index m = 0; m < alloc.assign.cols(); ++m) {
    int col_sum = 0;
    for (Eigen::Index k = 0; k < alloc.assign.rows(); ++k) {
      const int s = alloc.assign(k, m);
      if (s != 0 && s != 1) report.binary_ok = false;
      col_sum += s;
    }
    if (col_sum > 1) report.exclusive_ok = false;
  }
  report.nonnegative_ok = alloc.power.allFinite() && (alloc.power.array() >= 0.0).all();
  return report;
}

void validate_instance(const FactorGraph& graph, const ChannelState& chan,
                       const SystemParams& params) {
  params.validate();
  if (chan.n_users() != params.n_users) {
    throw InputError("channel has " + std::to_string(chan.n_users()) + " users, params " +
                     std::to_string(params.n_users));
  }
  if (chan.n_subcarriers() != graph.n_subcarriers()) {
    throw InputError("channel and factor graph disagree on the number of subcarriers");
  }
}

}  // namespace scma
