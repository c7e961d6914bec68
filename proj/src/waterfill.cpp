#include "scma/waterfill.hpp"

#include "scma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

namespace scma {

double water_level_for_rate(std::span<const double> cnr, double target_bits) {
  if (!(target_bits > 0.0)) return 0.0;
  std::vector<double> usable;
  usable.reserve(cnr.size());
  for (double c : cnr) {
    if (c > 0.0) usable.push_back(c);
  }
  if (usable.empty()) return std::numeric_limits<double>::infinity();
  std::sort(usable.begin(), usable.end(), std::greater<>());

  // With the n strongest entries active: n log2 L + sum log2 c_i = target.
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= usable.size(); ++n) {
    log_sum += std::log2(usable[n - 1]);
    const double level = std::exp2((target_bits - log_sum) / static_cast<double>(n));
    if (n == usable.size() || level * usable[n] <= 1.0) return level;
  }
  return std::numeric_limits<double>::infinity();  // unreachable
}

namespace {

struct UserLayers {
  std::vector<Eigen::Index> layers;
  std::vector<double> inv_cnr;  // 1 / cnr for usable layers, +inf otherwise
  double weight = 1.0;
  double floor_level = 0.0;
};

double power_at(const std::vector<UserLayers>& users, double t) {
  double total = 0.0;
  for (const auto& u : users) {
    const double level = std::max(u.weight * t, u.floor_level);
    for (double inv : u.inv_cnr) total += std::max(0.0, level - inv);
  }
  return total;
}

}  // namespace

WaterfillResult qos_waterfill(const Matrix& cnr, const BinaryMatrix& assign, const Vector& weights,
                              const Vector& req, double p_max, double base_price) {
  const auto n_users = cnr.rows();
  const auto n_layers = cnr.cols();
  if (assign.rows() != n_users || assign.cols() != n_layers || weights.size() != n_users ||
      req.size() != n_users) {
    throw ParameterError("qos_waterfill: inconsistent shapes");
  }
  if (!(p_max > 0.0)) throw ParameterError("qos_waterfill: p_max must be positive");
  if (!(base_price >= 0.0)) throw ParameterError("qos_waterfill: base_price must be >= 0");

  WaterfillResult out;
  out.power = Matrix::Zero(n_users, n_layers);
  out.lambda = Vector::Zero(n_users);
  out.price = base_price;

  std::vector<UserLayers> users(static_cast<std::size_t>(n_users));
  bool any_usable = false;
  bool floors_reachable = true;
  for (Eigen::Index k = 0; k < n_users; ++k) {
    auto& u = users[static_cast<std::size_t>(k)];
    u.weight = weights(k);
    std::vector<double> gains;
    for (Eigen::Index m = 0; m < n_layers; ++m) {
      if (assign(k, m) == 0) continue;
      const double c = cnr(k, m);
      u.layers.push_back(m);
      u.inv_cnr.push_back(c > 0.0 ? 1.0 / c : std::numeric_limits<double>::infinity());
      gains.push_back(c);
      if (c > 0.0) any_usable = true;
    }
    u.floor_level = water_level_for_rate(gains, req(k));
    if (!std::isfinite(u.floor_level)) floors_reachable = false;
  }
  if (!floors_reachable) return out;
  if (!any_usable) {
    out.feasible = true;
    return out;
  }

  // t = 1 / (price ln 2); total power is nondecreasing in t.
  const double min_power = power_at(users, 0.0);
  double t = 0.0;
  if (min_power > p_max * (1.0 + 1e-12)) {
    out.feasible = false;
  } else {
    out.feasible = true;
    double t_hi = 0.0;
    bool bracketed = false;
    if (base_price > 0.0) {
      t_hi = 1.0 / (base_price * std::numbers::ln2);
      if (power_at(users, t_hi) <= p_max) {
        t = t_hi;
      } else {
        bracketed = true;
      }
    } else {
      t_hi = 1.0;
      for (int i = 0; i < 4096 && power_at(users, t_hi) < p_max; ++i) t_hi *= 2.0;
      bracketed = true;
    }
    if (bracketed) {
      double t_lo = 0.0;
      for (int i = 0; i < 200 && t_hi - t_lo > 1e-15 * t_hi; ++i) {
        const double mid = 0.5 * (t_lo + t_hi);
        if (power_at(users, mid) <= p_max) {
          t_lo = mid;
        } else {
          t_hi = mid;
        }
      }
      t = t_lo;
    }
  }

  for (Eigen::Index k = 0; k < n_users; ++k) {
    const auto& u = users[static_cast<std::size_t>(k)];
    const double level = std::max(u.weight * t, u.floor_level);
    for (std::size_t j = 0; j < u.layers.size(); ++j) {
      out.power(k, u.layers[j]) = std::max(0.0, level - u.inv_cnr[j]);
    }
    if (t > 0.0) out.lambda(k) = std::max(0.0, level / t - u.weight);
  }
  out.price = t > 0.0 ? 1.0 / (t * std::numbers::ln2) : std::numeric_limits<double>::infinity();
  if (t > 0.0 && base_price > 0.0) out.price = std::max(out.price, base_price);
  return out;
}

}  // namespace scma
