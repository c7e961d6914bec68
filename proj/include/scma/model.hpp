#pragma once

// Uplink SCMA system model: the layer-to-subcarrier factor graph, channel
// state, system parameters and the closed-form quantities derived from them
// (per-layer SNR, user rates, transmit and consumed power, energy efficiency).
//
// Notation used throughout the library:
//   K users (index k), N subcarriers (index n), M layers (index m).
//   c(n, m)     1 when layer m occupies subcarrier n.
//   alpha(n, m) share of a layer's power placed on subcarrier n.
//   h(k, n)     linear power gain from user k on subcarrier n.
//   s(k, m)     1 when layer m is assigned to user k.
//   p(k, m)     transmit power of user k on layer m, Watts.
//
// Rates are reported in bits/s: the per-layer spectral efficiency
// log2(1 + SNR) is scaled by the subcarrier bandwidth W so that it can be
// compared with rate requirements given in bits/s.

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace scma {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BinaryMatrix = Eigen::MatrixXi;

class FactorGraph {
 public:
  // Validates that every column of `mapping` holds the same number d of ones
  // with 1 <= d < N, and that every column of `alpha` is a distribution
  // supported on the layer's subcarriers.
  FactorGraph(BinaryMatrix mapping, Matrix alpha);

  // Uniform power split: alpha = c / d.
  static FactorGraph uniform(BinaryMatrix mapping);

  std::size_t n_subcarriers() const { return static_cast<std::size_t>(mapping_.rows()); }
  std::size_t n_layers() const { return static_cast<std::size_t>(mapping_.cols()); }
  std::size_t degree() const { return degree_; }

  const BinaryMatrix& mapping() const { return mapping_; }
  const Matrix& alpha() const { return alpha_; }

 private:
  BinaryMatrix mapping_;
  Matrix alpha_;
  std::size_t degree_ = 0;
};

// One replica enumerates every d-subset of the subcarriers in lexicographic
// order (C(N, d) layers). Additional replicas are stacked block-diagonally as
// independent time-frequency resources.
FactorGraph canonical_factor_graph(std::size_t n_subcarriers, std::size_t d,
                                   std::size_t replicas = 1);

class ChannelState {
 public:
  // gains: K x N linear power gains, noise: K noise powers in Watts.
  ChannelState(Matrix gains, Vector noise);

  std::size_t n_users() const { return static_cast<std::size_t>(gains_.rows()); }
  std::size_t n_subcarriers() const { return static_cast<std::size_t>(gains_.cols()); }

  const Matrix& gains() const { return gains_; }
  const Vector& noise() const { return noise_; }

 private:
  Matrix gains_;
  Vector noise_;
};

struct SystemParams {
  std::size_t n_users = 0;
  std::vector<double> weights;
  std::vector<double> rate_req;  // bits/s
  double p_max = 100.0;          // W
  double amp_factor = 1.0 / 0.37;
  double circuit_power = 1.0;    // W
  double subcarrier_bw = 156e3;  // Hz

  // Equal weights and requirements for every user.
  static SystemParams uniform(std::size_t n_users, double weight, double rate_req);

  // Throws ParameterError naming the first offending field.
  void validate() const;
};

struct Allocation {
  BinaryMatrix assign;   // K x M
  Matrix power;          // K x M, Watts
  Vector rates;          // K, bits/s
  double total_tx_power = 0.0;
  double objective = 0.0;
};

// Sum over n of alpha(n, m) * h(k, n).
double effective_gain(const FactorGraph& graph, const ChannelState& chan,
                      std::size_t user, std::size_t layer);

double snr(const FactorGraph& graph, const ChannelState& chan, std::size_t user,
           std::size_t layer, double power);

double user_rate(const FactorGraph& graph, const ChannelState& chan,
                 const SystemParams& params, const Allocation& alloc, std::size_t user);

double total_tx_power(const Allocation& alloc);

double consumed_power(const SystemParams& params, double tx_power);
double consumed_power(const SystemParams& params, const Allocation& alloc);

// Sum rate over consumed power, bits/Joule. Throws DivisionGuardError when the
// consumed power is zero.
double energy_efficiency(const FactorGraph& graph, const ChannelState& chan,
                         const SystemParams& params, const Allocation& alloc);

// Builds an allocation from an assignment and a power matrix. Powers are masked
// by the assignment; rates and total power are recomputed. `objective` is left
// at zero for the caller to fill.
Allocation make_allocation(const FactorGraph& graph, const ChannelState& chan,
                           const SystemParams& params, BinaryMatrix assign, Matrix power);

// Sum over k of w_k R_k.
double weighted_sum_rate(const SystemParams& params, const Allocation& alloc);

struct ConstraintReport {
  std::vector<bool> rate_ok;       // rate floor per user
  std::vector<double> rate_slack;  // R_k - R_k^req, bits/s
  bool power_ok = true;            // total power within budget
  double power_slack = 0.0;        // P^max - P^tot, W
  bool exclusive_ok = true;        // column sums of S <= 1
  bool binary_ok = true;           // S entries are 0 or 1
  bool nonnegative_ok = true;      // powers >= 0

  bool rates_ok() const;
  bool all_satisfied() const;
};

inline constexpr double kFeasibilityRelTol = 1e-6;

ConstraintReport check_feasibility(const FactorGraph& graph, const ChannelState& chan,
                                   const SystemParams& params, const Allocation& alloc);

// Throws InputError unless the channel, graph and parameters agree in shape.
void validate_instance(const FactorGraph& graph, const ChannelState& chan,
                       const SystemParams& params);

}  // namespace scma
