#include "scma/scenario.hpp"

#include "scma/errors.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace scma {

std::string_view to_string(Fading fading) {
  return fading == Fading::kRayleigh ? "rayleigh" : "none";
}

void ScenarioConfig::validate() const {
  if (!(cell_radius > 0.0) || !std::isfinite(cell_radius)) {
    throw ParameterError("cell_radius must be positive");
  }
  if (!(bs_height >= 0.0) || !std::isfinite(bs_height)) {
    throw ParameterError("bs_height must be non-negative");
  }
  if (!std::isfinite(noise_dbm)) throw ParameterError("noise_dbm must be finite");
  if (n_users == 0) throw ParameterError("n_users must be positive");
  if (!(min_distance >= 0.0) || min_distance >= cell_radius) {
    throw ParameterError("min_distance must lie in [0, cell_radius)");
  }
  if (!(pathloss_exponent > 0.0) || !std::isfinite(pathloss_exponent)) {
    throw ParameterError("pathloss_exponent must be positive");
  }
  if (!std::isfinite(pathloss_intercept_db)) {
    throw ParameterError("pathloss_intercept_db must be finite");
  }
}

double ScenarioConfig::noise_watts() const { return dbm_to_watts(noise_dbm); }

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double path_gain(const ScenarioConfig& config, double distance_m) {
  const double loss_db =
      config.pathloss_intercept_db + 10.0 * config.pathloss_exponent * std::log10(distance_m / 1000.0);
  return std::pow(10.0, -loss_db / 10.0);
}

namespace {

// 53-bit uniform in [0, 1); avoids implementation-defined std distributions
// so drops are reproducible across standard libraries.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

Drop generate_drop(const ScenarioConfig& config, std::size_t n_subcarriers) {
  config.validate();
  if (n_subcarriers == 0) throw ParameterError("n_subcarriers must be positive");
  std::mt19937_64 rng(config.seed);

  const auto n_users = static_cast<Eigen::Index>(config.n_users);
  const auto n_sub = static_cast<Eigen::Index>(n_subcarriers);
  Matrix gains(n_users, n_sub);
  std::vector<double> distances;
  distances.reserve(config.n_users);

  const double r_min2 = config.min_distance * config.min_distance;
  const double r_max2 = config.cell_radius * config.cell_radius;
  for (Eigen::Index k = 0; k < n_users; ++k) {
    // Uniform over the annulus: r^2 is uniform on [r_min^2, R^2].
    const double r = std::sqrt(r_min2 + uniform01(rng) * (r_max2 - r_min2));
    const double d = std::hypot(r, config.bs_height);
    distances.push_back(d);
    const double base = path_gain(config, d);
    for (Eigen::Index n = 0; n < n_sub; ++n) {
      double fade = 1.0;
      if (config.fading == Fading::kRayleigh) {
        // 1 - u lies in (0, 1], so the log is finite.
        fade = -std::log(1.0 - uniform01(rng));
      }
      gains(k, n) = base * fade;
    }
  }
  // Exponential draws can be exactly zero only when u == 0; nudge them so
  // every gain stays strictly positive.
  gains = gains.cwiseMax(std::numeric_limits<double>::min());

  Vector noise = Vector::Constant(n_users, config.noise_watts());
  return Drop{ChannelState(std::move(gains), std::move(noise)), std::move(distances)};
}

ChannelState generate(const ScenarioConfig& config, const FactorGraph& graph) {
  return generate_drop(config, graph.n_subcarriers()).channel;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finalizer over base + golden-ratio stride
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace scma
