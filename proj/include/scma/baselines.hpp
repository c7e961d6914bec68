#pragma once

// Orthogonal (OFDMA) and spread-spectrum (CDMA) comparison allocators. Both
// use the same channel, budget and power-consumption model as the SCMA
// solvers so that spectral and energy efficiency are directly comparable.

#include "scma/model.hpp"

#include <string_view>
#include <vector>

namespace scma {

enum class BaselineScheme { kOfdma, kCdma };

std::string_view to_string(BaselineScheme scheme);

struct BaselineResult {
  BaselineScheme scheme = BaselineScheme::kOfdma;
  Vector rates;                   // bits/s
  double total_tx_power = 0.0;    // W
  double spectral_efficiency = 0.0;  // sum rate / (N W), bits/s/Hz
  double energy_efficiency = 0.0;    // bits/J
  bool feasible = false;          // every rate floor met
  std::vector<int> subcarrier_owner;  // OFDMA only; -1 when unused
  Vector power;                   // per subcarrier (OFDMA) or per user (CDMA)
};

enum class OfdmaAssignment {
  kQosFirst,  // rate-floor users pick first, then highest gain
  kMaxGain,   // highest gain on every subcarrier, ties to the lower index
};

std::string_view to_string(OfdmaAssignment rule);

struct OfdmaOptions {
  OfdmaAssignment assignment = OfdmaAssignment::kQosFirst;
};

// Exclusive subcarrier assignment followed by water-filling under P^max.
//
// kQosFirst: users with a positive rate floor are served first, weakest best-subcarrier
// gain first, each taking its strongest free subcarrier. Remaining
// subcarriers go to the user with the highest gain on them; exact gain ties
// go to the user holding fewer subcarriers, then the lower index.
// kMaxGain skips the floor pass and breaks ties by index only. Powers come
// from the rate-floor-aware water level (same multiplier structure as the
// SCMA solver). When the floors cannot all be met, users without a subcarrier
// are dropped from the floor set and the result is flagged infeasible.
BaselineResult ofdma_allocate(const ChannelState& chan, const SystemParams& params,
                              const OfdmaOptions& options = {});

struct CdmaOptions {
  // Processing gain G; zero selects G = N.
  double spreading_gain = 0.0;
};

// Every user spreads over the whole band with equal power P^max / K:
//   SINR_k = p g_k / (sigma_k^2 + (1/G) sum_{j != k} p g_j),
//   R_k = W N log2(1 + SINR_k) / G,
// with g_k the gain averaged over subcarriers.
BaselineResult cdma_allocate(const ChannelState& chan, const SystemParams& params,
                             const CdmaOptions& options = {});

}  // namespace scma
