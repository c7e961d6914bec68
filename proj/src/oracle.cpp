#include "scma/oracle.hpp"

#include "scma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

namespace scma {

std::size_t assignment_count(std::size_t n_users, std::size_t n_layers) {
  std::size_t count = 1;
  for (std::size_t m = 0; m < n_layers; ++m) {
    count *= n_users + 1;
    if (count > kMaxEnumeratedAssignments) {
      throw SizeError("instance too large to enumerate: (K+1)^M exceeds " +
                      std::to_string(kMaxEnumeratedAssignments));
    }
  }
  return count;
}

void enumerate_assignments(std::size_t n_users, std::size_t n_layers,
                           const std::function<void(const BinaryMatrix&)>& visit) {
  const std::size_t total = assignment_count(n_users, n_layers);
  std::vector<std::size_t> digits(n_layers, 0);
  BinaryMatrix assign(static_cast<Eigen::Index>(n_users), static_cast<Eigen::Index>(n_layers));
  for (std::size_t index = 0; index < total; ++index) {
    assign.setZero();
    for (std::size_t m = 0; m < n_layers; ++m) {
      if (digits[m] < n_users) {
        assign(static_cast<Eigen::Index>(digits[m]), static_cast<Eigen::Index>(m)) = 1;
      }
    }
    visit(assign);
    for (std::size_t m = 0; m < n_layers; ++m) {
      if (++digits[m] <= n_users) break;
      digits[m] = 0;
    }
  }
}

std::vector<BinaryMatrix> all_assignments(std::size_t n_users, std::size_t n_layers) {
  std::vector<BinaryMatrix> out;
  out.reserve(assignment_count(n_users, n_layers));
  enumerate_assignments(n_users, n_layers, [&](const BinaryMatrix& s) { out.push_back(s); });
  return out;
}

namespace {

struct Bracket {
  double a;
  double b;
  double best_x;
  double best_f;
};

// Grid scan; the maximizer of a concave f lies within one step of the best point.
Bracket grid_bracket(const std::function<double(double)>& f, double lo, double hi,
                     double grid_step) {
  if (!(hi >= lo)) throw ParameterError("maximize_concave: empty interval");
  if (!(grid_step > 0.0)) throw ParameterError("maximize_concave: grid_step must be positive");
  const auto points = static_cast<std::size_t>(std::ceil((hi - lo) / grid_step));
  double best_x = lo;
  double best_f = f(lo);
  std::size_t best_i = 0;
  for (std::size_t i = 1; i <= points; ++i) {
    const double x = std::min(hi, lo + static_cast<double>(i) * grid_step);
    const double fx = f(x);
    if (fx > best_f) {
      best_f = fx;
      best_x = x;
      best_i = i;
    }
  }
  const double a = best_i == 0 ? lo : std::max(lo, lo + static_cast<double>(best_i - 1) * grid_step);
  const double b = std::min(hi, lo + static_cast<double>(best_i + 1) * grid_step);
  return {a, b, best_x, best_f};
}

}  // namespace

double maximize_concave(const std::function<double(double)>& f,
                        const std::function<double(double)>& df, double lo, double hi,
                        double grid_step) {
  const auto br = grid_bracket(f, lo, hi, grid_step);
  if (hi == lo) return lo;
  double a = br.a;
  double b = br.b;
  if (df(a) <= 0.0) return a;
  if (df(b) >= 0.0) return b;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    (df(mid) > 0.0 ? a : b) = mid;
  }
  return f(a) >= f(b) ? a : b;
}

double maximize_concave(const std::function<double(double)>& f, double lo, double hi,
                        double grid_step) {
  const auto br = grid_bracket(f, lo, hi, grid_step);
  if (hi == lo) return lo;
  double a = br.a;
  double b = br.b;
  const double best_x = br.best_x;
  const double best_f = br.best_f;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  const double tol = 1e-14 * std::max(1.0, std::abs(hi));
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  const double mid = 0.5 * (a + b);
  const double candidates[] = {best_x, mid, a, b};
  double arg = best_x;
  double top = best_f;
  for (double x : candidates) {
    const double fx = f(x);
    if (fx > top) {
      top = fx;
      arg = x;
    }
  }
  return arg;
}

namespace {

// Per-assignment numeric power search. Rates are in bits/s/Hz.
class AssignmentSearch {
 public:
  AssignmentSearch(const Matrix& cnr, const BinaryMatrix& assign, const Vector& weights,
                   const Vector& req, double p_max, double grid_step)
      : cnr_(cnr), weights_(weights), req_(req), p_max_(p_max), grid_step_(grid_step) {
    const auto n_users = cnr.rows();
    layers_.resize(static_cast<std::size_t>(n_users));
    floor_.assign(static_cast<std::size_t>(n_users), 0.0);
    for (Eigen::Index k = 0; k < n_users; ++k) {
      for (Eigen::Index m = 0; m < cnr.cols(); ++m) {
        if (assign(k, m) != 0 && cnr(k, m) > 0.0) layers_[static_cast<std::size_t>(k)].push_back(m);
      }
    }
    feasible_ = true;
    for (Eigen::Index k = 0; k < n_users && feasible_; ++k) {
      if (req(k) > 0.0) feasible_ = find_floor(k);
    }
    if (feasible_) feasible_ = total_power(std::numeric_limits<double>::infinity()) <=
                               p_max_ * (1.0 + 1e-12);
  }

  bool feasible() const { return feasible_; }

  // Powers at shared price `price` >= base. Returns the price actually used.
  double solve(double base_price) {
    if (base_price > 0.0 && total_power(base_price) <= p_max_) return base_price;
    double hi = base_price > 0.0 ? base_price : 1.0;
    double lo = hi;
    if (base_price > 0.0) {
      for (int i = 0; i < 2000 && total_power(hi) > p_max_; ++i) hi *= 2.0;
    } else {
      // bracket the budget crossing from both sides
      for (int i = 0; i < 2000 && total_power(hi) > p_max_; ++i) hi *= 2.0;
      lo = hi;
      for (int i = 0; i < 2000 && total_power(lo) <= p_max_; ++i) lo *= 0.5;
      if (total_power(lo) <= p_max_) return lo;
    }
    for (int i = 0; i < 200; ++i) {
      const double mid = base_price > 0.0 ? 0.5 * (lo + hi) : std::sqrt(lo * hi);
      if (mid <= lo || mid >= hi) break;
      if (total_power(mid) <= p_max_) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return hi;
  }

  Matrix powers(double price) const {
    Matrix p = Matrix::Zero(cnr_.rows(), cnr_.cols());
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      const double ratio = user_ratio(k, price);
      for (auto m : layers_[k]) {
        p(static_cast<Eigen::Index>(k), m) = layer_power(cnr_(static_cast<Eigen::Index>(k), m), ratio);
      }
    }
    return p;
  }

 private:
  // argmax over [0, p_max] of ratio * log2(1 + c p) - p
  double layer_power(double c, double ratio) const {
    if (!std::isfinite(ratio)) return p_max_;
    return maximize_concave([&](double p) { return ratio * std::log2(1.0 + c * p) - p; },
                            [&](double p) { return ratio * c / ((1.0 + c * p) * std::numbers::ln2) - 1.0; },
                            0.0, p_max_, grid_step_);
  }

  double user_rate(std::size_t k, double ratio) const {
    double bits = 0.0;
    for (auto m : layers_[k]) {
      const double c = cnr_(static_cast<Eigen::Index>(k), m);
      bits += std::log2(1.0 + c * layer_power(c, ratio));
    }
    return bits;
  }

  double user_ratio(std::size_t k, double price) const {
    const double own = std::isfinite(price) ? weights_(static_cast<Eigen::Index>(k)) / price : 0.0;
    return std::max(own, floor_[k]);
  }

  double total_power(double price) const {
    double total = 0.0;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      const double ratio = user_ratio(k, price);
      if (ratio <= 0.0) continue;
      for (auto m : layers_[k]) total += layer_power(cnr_(static_cast<Eigen::Index>(k), m), ratio);
    }
    return total;
  }

  // Smallest ratio (w + lambda) / price that meets the rate floor.
  bool find_floor(Eigen::Index k) {
    const auto uk = static_cast<std::size_t>(k);
    const double target = req_(k);
    if (layers_[uk].empty()) return false;
    double cap = 0.0;
    for (auto m : layers_[uk]) cap += std::log2(1.0 + cnr_(k, m) * p_max_);
    if (cap < target) return false;
    double hi = 1.0;
    for (int i = 0; i < 2000 && user_rate(uk, hi) < target; ++i) hi *= 2.0;
    double lo = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (user_rate(uk, mid) >= target) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    floor_[uk] = hi;
    return user_rate(uk, hi) >= target * (1.0 - 1e-12);
  }

  const Matrix& cnr_;
  const Vector& weights_;
  const Vector& req_;
  double p_max_;
  double grid_step_;
  std::vector<std::vector<Eigen::Index>> layers_;
  std::vector<double> floor_;
  bool feasible_ = false;
};

struct OracleInstance {
  Matrix cnr;
  Vector weights;
  Vector req;
};

OracleInstance prepare(const FactorGraph& graph, const ChannelState& chan,
                       const SystemParams& params, double grid_step, bool unit_weights) {
  validate_instance(graph, chan, params);
  if (!(grid_step > 0.0)) throw ParameterError("oracle: grid_step must be positive");
  assignment_count(params.n_users, graph.n_layers());
  OracleInstance inst;
  const auto n_users = static_cast<Eigen::Index>(params.n_users);
  const auto n_layers = static_cast<Eigen::Index>(graph.n_layers());
  inst.cnr = Matrix::Zero(n_users, n_layers);
  for (Eigen::Index k = 0; k < n_users; ++k) {
    for (Eigen::Index m = 0; m < n_layers; ++m) {
      inst.cnr(k, m) = effective_gain(graph, chan, static_cast<std::size_t>(k),
                                      static_cast<std::size_t>(m)) /
                       chan.noise()(k);
    }
  }
  inst.weights = Vector::Ones(n_users);
  inst.req = Vector::Zero(n_users);
  for (Eigen::Index k = 0; k < n_users; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    if (!unit_weights) inst.weights(k) = params.weights[uk];
    inst.req(k) = params.rate_req[uk] / params.subcarrier_bw;
  }
  return inst;
}

double rates_sum(const Matrix& cnr, const Matrix& power, const Vector& weights) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < cnr.rows(); ++k) {
    for (Eigen::Index m = 0; m < cnr.cols(); ++m) {
      total += weights(k) * std::log2(1.0 + cnr(k, m) * power(k, m));
    }
  }
  return total;
}

template <typename Score>
OracleResult search(const FactorGraph& graph, const ChannelState& chan, const SystemParams& params,
                    const OracleInstance& inst, double grid_step, Score&& score) {
  OracleResult result;
  std::optional<BinaryMatrix> best_assign;
  Matrix best_power;
  enumerate_assignments(params.n_users, graph.n_layers(), [&](const BinaryMatrix& assign) {
    ++result.n_assignments_searched;
    AssignmentSearch s(inst.cnr, assign, inst.weights, inst.req, params.p_max, grid_step);
    if (!s.feasible()) {
      result.objectives.push_back(std::numeric_limits<double>::quiet_NaN());
      return;
    }
    Matrix power;
    const double objective = score(s, power);
    result.objectives.push_back(objective);
    if (!best_assign || objective > result.best_objective) {
      result.best_objective = objective;
      best_assign = assign;
      best_power = power;
    }
  });
  result.feasible = best_assign.has_value();
  if (result.feasible) {
    result.best_alloc = make_allocation(graph, chan, params, *best_assign, best_power);
  }
  return result;
}

}  // namespace

OracleResult oracle_se(const FactorGraph& graph, const ChannelState& chan,
                       const SystemParams& params, double grid_step) {
  const auto inst = prepare(graph, chan, params, grid_step, /*unit_weights=*/false);
  return search(graph, chan, params, inst, grid_step, [&](AssignmentSearch& s, Matrix& power) {
    power = s.powers(s.solve(0.0));
    return params.subcarrier_bw * rates_sum(inst.cnr, power, inst.weights);
  });
}

OracleResult oracle_ee(const FactorGraph& graph, const ChannelState& chan,
                       const SystemParams& params, double grid_step) {
  const auto inst = prepare(graph, chan, params, grid_step, /*unit_weights=*/true);
  const double bw = params.subcarrier_bw;
  return search(graph, chan, params, inst, grid_step, [&](AssignmentSearch& s, Matrix& power) {
    // Dinkelbach on the fixed assignment; q in bits/s/Hz per Watt.
    double q = 0.0;
    double best_ee = -1.0;
    for (int it = 0; it < 100; ++it) {
      Matrix trial = s.powers(s.solve(q * params.amp_factor));
      const double rate = rates_sum(inst.cnr, trial, inst.weights);
      const double consumed = params.amp_factor * trial.sum() + params.circuit_power;
      const double ee = consumed > 0.0 ? rate / consumed : 0.0;
      if (ee > best_ee) {
        best_ee = ee;
        power = trial;
      }
      if (rate - q * consumed <= 1e-13 * std::max(1.0, rate) || ee <= q) break;
      q = ee;
    }
    return bw * best_ee;
  });
}

FactorGraph small_factor_graph(std::size_t n_subcarriers, std::size_t n_layers) {
  if (n_layers == 0) throw ParameterError("small_factor_graph: n_layers must be positive");
  const FactorGraph base = canonical_factor_graph(n_subcarriers, n_subcarriers == 2 ? 1 : 2);
  const auto n_base = static_cast<Eigen::Index>(base.n_layers());
  BinaryMatrix mapping(base.mapping().rows(), static_cast<Eigen::Index>(n_layers));
  for (Eigen::Index m = 0; m < mapping.cols(); ++m) mapping.col(m) = base.mapping().col(m % n_base);
  return FactorGraph::uniform(std::move(mapping));
}

}  // namespace scma
