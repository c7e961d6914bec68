#pragma once

// Seeded single-cell drops: users uniform over a disk around the base
// station, log-distance path loss on the 3-D distance, and independent
// unit-mean Rayleigh (exponential power) fading per subcarrier.

#include "scma/model.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace scma {

enum class Fading { kRayleigh, kNone };

std::string_view to_string(Fading fading);

struct ScenarioConfig {
  double cell_radius = 500.0;  // m
  double bs_height = 30.0;     // m
  double noise_dbm = -112.0;
  std::size_t n_users = 6;
  std::uint64_t seed = 1;
  double pathloss_intercept_db = 128.1;  // at 1 km
  double pathloss_exponent = 3.76;       // 10 * exponent dB per decade
  double min_distance = 10.0;            // m, horizontal
  Fading fading = Fading::kRayleigh;

  // Throws ParameterError naming the field.
  void validate() const;
  double noise_watts() const;
};

double dbm_to_watts(double dbm);

// Linear gain 10^(-PL/10), PL = intercept + 10 exponent log10(d / 1 km).
double path_gain(const ScenarioConfig& config, double distance_m);

struct Drop {
  ChannelState channel;
  std::vector<double> distances;  // 3-D, m
};

// Users are drawn one after another (distance, then one fading draw per
// subcarrier), so a drop with more users extends the drop with fewer.
Drop generate_drop(const ScenarioConfig& config, std::size_t n_subcarriers);

ChannelState generate(const ScenarioConfig& config, const FactorGraph& graph);

// Stream-splitting helper for per-trial seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace scma
