#pragma once

// Seeded generators and independent numeric references shared by the unit
// tests and the acceptance runner. Nothing here calls the closed-form power
// or metric code it is used to check.

#include "scma/model.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <utility>

namespace scma::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

 private:
  std::mt19937_64 gen_;
};

// Dense scan followed by golden-section refinement around the best sample.
inline double grid_golden_argmax(const std::function<double(double)>& f, double lo, double hi,
                                 std::size_t samples) {
  double best_x = lo;
  double best_f = f(lo);
  const double h = (hi - lo) / static_cast<double>(samples);
  for (std::size_t i = 1; i <= samples; ++i) {
    const double x = lo + h * static_cast<double>(i);
    const double v = f(x);
    if (v > best_f) {
      best_f = v;
      best_x = x;
    }
  }
  double a = std::max(lo, best_x - h);
  double b = std::min(hi, best_x + h);
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && b - a > 1e-13 * std::max(1.0, b); ++it) {
    if (fc < fd) {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    } else {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    }
  }
  return 0.5 * (a + b);
}

// Plain fixed-step scan; returns (argmax, max).
inline std::pair<double, double> grid_argmax(const std::function<double(double)>& f, double lo,
                                             double hi, double step) {
  double best_x = lo;
  double best_f = f(lo);
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step));
  for (std::size_t i = 1; i <= n; ++i) {
    const double x = lo + step * static_cast<double>(i);
    const double v = f(x);
    if (v > best_f) {
      best_f = v;
      best_x = x;
    }
  }
  return {best_x, best_f};
}

inline double centered_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Layers of degree 1 on N = 2 subcarriers, columns alternating, so any M is
// allowed.
inline FactorGraph alternating_graph(std::size_t n_layers) {
  BinaryMatrix c = BinaryMatrix::Zero(2, static_cast<Eigen::Index>(n_layers));
  for (Eigen::Index m = 0; m < c.cols(); ++m) c(m % 2, m) = 1;
  return FactorGraph::uniform(c);
}

// K x N gains log-uniform over `dynamic_range` decades, unit noise.
inline ChannelState random_channel(Rng& rng, std::size_t k, std::size_t n, double g_lo,
                                   double g_hi) {
  Matrix h(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index j = 0; j < h.cols(); ++j) h(i, j) = rng.log_uniform(g_lo, g_hi);
  }
  return ChannelState(h, Vector::Ones(h.rows()));
}

inline double effective_cnr(const FactorGraph& g, const ChannelState& chan, std::size_t k,
                            std::size_t m) {
  double s = 0.0;
  for (Eigen::Index n = 0; n < g.alpha().rows(); ++n) {
    s += g.alpha()(n, static_cast<Eigen::Index>(m)) * chan.gains()(static_cast<Eigen::Index>(k), n);
  }
  return s / chan.noise()(static_cast<Eigen::Index>(k));
}

inline constexpr double kLn2 = std::numbers::ln2;

}  // namespace scma::testing
