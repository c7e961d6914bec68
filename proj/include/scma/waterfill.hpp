#pragma once

#include "scma/model.hpp"

#include <span>

namespace scma {

// Optimal powers for a fixed layer assignment.
//
// Solves, over p >= 0 on the assigned entries of `assign`,
//
//   max  sum_k w_k r_k - base_price * sum p
//   s.t. r_k >= req_k,  sum p <= p_max,
//   r_k = sum_{m : s(k,m)=1} log2(1 + cnr(k,m) p(k,m))
//
// with cnr the effective channel-to-noise ratio and rates in bits/s/Hz. The
// KKT point is a per-user water level L_k = (w_k + lambda_k) / (price ln 2),
// p(k,m) = [L_k - 1/cnr(k,m)]^+, with price = base_price + budget multiplier.
// The level is found exactly per user for the rate floor and by bisection on
// the shared price for the budget.
struct WaterfillResult {
  bool feasible = false;
  Matrix power;   // K x M, zero off the assignment
  Vector lambda;  // rate-floor multipliers
  double price = 0.0;
};

WaterfillResult qos_waterfill(const Matrix& cnr, const BinaryMatrix& assign,
                              const Vector& weights, const Vector& req, double p_max,
                              double base_price = 0.0);

// Smallest level L with sum_j log2(max(1, cnr_j L)) >= target_bits; zero when
// the target is not positive. Entries with cnr_j <= 0 are ignored. Returns
// +inf when no entry is usable and the target is positive.
double water_level_for_rate(std::span<const double> cnr, double target_bits);

}  // namespace scma
