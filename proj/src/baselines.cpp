#include "scma/baselines.hpp"

#include "scma/errors.hpp"
#include "scma/waterfill.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scma {

std::string_view to_string(BaselineScheme scheme) {
  switch (scheme) {
    case BaselineScheme::kOfdma:
      return "OFDMA";
    case BaselineScheme::kCdma:
      return "CDMA";
  }
  return "?";
}

std::string_view to_string(OfdmaAssignment rule) {
  switch (rule) {
    case OfdmaAssignment::kQosFirst:
      return "qos_first";
    case OfdmaAssignment::kMaxGain:
      return "max_gain";
  }
  return "?";
}

namespace {

void check_inputs(const ChannelState& chan, const SystemParams& params) {
  params.validate();
  if (chan.n_users() != params.n_users) {
    throw InputError("channel and params disagree on the number of users");
  }
}

void finish(BaselineResult& out, const ChannelState& chan, const SystemParams& params) {
  const double sum_rate = out.rates.sum();
  const auto bandwidth = static_cast<double>(chan.n_subcarriers()) * params.subcarrier_bw;
  out.spectral_efficiency = sum_rate / bandwidth;
  const double consumed = consumed_power(params, out.total_tx_power);
  out.energy_efficiency = consumed > 0.0 ? sum_rate / consumed : 0.0;
  out.feasible = true;
  for (std::size_t k = 0; k < params.n_users; ++k) {
    const double req = params.rate_req[k];
    if (out.rates(static_cast<Eigen::Index>(k)) < req * (1.0 - kFeasibilityRelTol)) {
      out.feasible = false;
    }
  }
}

}  // namespace

BaselineResult ofdma_allocate(const ChannelState& chan, const SystemParams& params,
                              const OfdmaOptions& options) {
  check_inputs(chan, params);
  const auto n_users = static_cast<Eigen::Index>(chan.n_users());
  const auto n_sub = static_cast<Eigen::Index>(chan.n_subcarriers());

  Matrix cnr = chan.gains();
  for (Eigen::Index k = 0; k < n_users; ++k) cnr.row(k) /= chan.noise()(k);

  std::vector<int> owner(static_cast<std::size_t>(n_sub), -1);
  std::vector<int> held(static_cast<std::size_t>(n_users), 0);

  // Rate-floor pass, weakest user first.
  const bool qos_first = options.assignment == OfdmaAssignment::kQosFirst;
  std::vector<Eigen::Index> order;
  for (Eigen::Index k = 0; k < n_users && qos_first; ++k) {
    if (params.rate_req[static_cast<std::size_t>(k)] > 0.0) order.push_back(k);
  }
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return cnr.row(a).maxCoeff() < cnr.row(b).maxCoeff();
  });
  for (Eigen::Index k : order) {
    Eigen::Index best = -1;
    for (Eigen::Index n = 0; n < n_sub; ++n) {
      if (owner[static_cast<std::size_t>(n)] >= 0 || !(cnr(k, n) > 0.0)) continue;
      if (best < 0 || cnr(k, n) > cnr(k, best)) best = n;
    }
    if (best < 0) continue;
    owner[static_cast<std::size_t>(best)] = static_cast<int>(k);
    ++held[static_cast<std::size_t>(k)];
  }

  // Leftover subcarriers by gain.
  for (Eigen::Index n = 0; n < n_sub; ++n) {
    if (owner[static_cast<std::size_t>(n)] >= 0) continue;
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < n_users; ++k) {
      const double c = cnr(k, n);
      const double b = cnr(best, n);
      const bool fewer = held[static_cast<std::size_t>(k)] < held[static_cast<std::size_t>(best)];
      if (c > b || (c == b && qos_first && fewer)) {
        best = k;
      }
    }
    owner[static_cast<std::size_t>(n)] = static_cast<int>(best);
    ++held[static_cast<std::size_t>(best)];
  }

  BinaryMatrix assign = BinaryMatrix::Zero(n_users, n_sub);
  for (Eigen::Index n = 0; n < n_sub; ++n) assign(owner[static_cast<std::size_t>(n)], n) = 1;

  Vector weights(n_users);
  Vector req(n_users);
  for (Eigen::Index k = 0; k < n_users; ++k) {
    weights(k) = params.weights[static_cast<std::size_t>(k)];
    req(k) = params.rate_req[static_cast<std::size_t>(k)] / params.subcarrier_bw;
  }
  auto wf = qos_waterfill(cnr, assign, weights, req, params.p_max);
  if (!wf.feasible) {
    for (Eigen::Index k = 0; k < n_users; ++k) {
      if (held[static_cast<std::size_t>(k)] == 0) req(k) = 0.0;
    }
    wf = qos_waterfill(cnr, assign, weights, req, params.p_max);
  }
  if (!wf.feasible) wf = qos_waterfill(cnr, assign, weights, Vector::Zero(n_users), params.p_max);

  BaselineResult out;
  out.scheme = BaselineScheme::kOfdma;
  out.subcarrier_owner = owner;
  out.rates = Vector::Zero(n_users);
  out.power = Vector::Zero(n_sub);
  for (Eigen::Index n = 0; n < n_sub; ++n) {
    const int k = owner[static_cast<std::size_t>(n)];
    const double p = wf.power(k, n);
    out.power(n) = p;
    out.rates(k) += params.subcarrier_bw * std::log2(1.0 + cnr(k, n) * p);
  }
  out.total_tx_power = out.power.sum();
  finish(out, chan, params);
  return out;
}

BaselineResult cdma_allocate(const ChannelState& chan, const SystemParams& params,
                             const CdmaOptions& options) {
  check_inputs(chan, params);
  if (options.spreading_gain < 0.0) throw ParameterError("spreading_gain must be >= 0");
  const auto n_users = static_cast<Eigen::Index>(chan.n_users());
  const auto n_sub = static_cast<double>(chan.n_subcarriers());
  const double gain = options.spreading_gain > 0.0 ? options.spreading_gain : n_sub;

  const double p = params.p_max / static_cast<double>(n_users);
  const Vector avg_gain = chan.gains().rowwise().mean();
  const double received_total = p * avg_gain.sum();

  BaselineResult out;
  out.scheme = BaselineScheme::kCdma;
  out.rates = Vector::Zero(n_users);
  out.power = Vector::Constant(n_users, p);
  for (Eigen::Index k = 0; k < n_users; ++k) {
    const double own = p * avg_gain(k);
    const double interference = (received_total - own) / gain;
    const double sinr = own / (chan.noise()(k) + interference);
    out.rates(k) = params.subcarrier_bw * n_sub * std::log2(1.0 + sinr) / gain;
  }
  out.total_tx_power = p * static_cast<double>(n_users);
  finish(out, chan, params);
  return out;
}

}  // namespace scma
