#pragma once

// Brute-force reference solutions for desk-sized instances. Every assignment
// with at most one user per layer is visited; for each, the powers are found
// numerically (coarse grid plus golden-section search per layer, bisection on
// the per-user rate-floor level and on the shared power price). Nothing here
// uses the closed-form water level, so the solvers can be checked against it.

#include "scma/model.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace scma {

inline constexpr std::size_t kMaxEnumeratedAssignments = 10'000'000;

// (K + 1)^M, throwing SizeError above kMaxEnumeratedAssignments.
std::size_t assignment_count(std::size_t n_users, std::size_t n_layers);

// Calls `visit` once per assignment matrix S in {0,1}^{K x M} with column sums
// <= 1. Layer owners are counted in base K + 1 (digit K = unassigned) with
// layer 0 as the least significant digit.
void enumerate_assignments(std::size_t n_users, std::size_t n_layers,
                           const std::function<void(const BinaryMatrix&)>& visit);

std::vector<BinaryMatrix> all_assignments(std::size_t n_users, std::size_t n_layers);

// Maximizer of a concave f on [lo, hi]: scan at `grid_step`, then golden-
// section search on the bracket around the best grid point.
double maximize_concave(const std::function<double(double)>& f, double lo, double hi,
                        double grid_step);

// Same scan, but the bracket is refined by bisection on the sign of `df`,
// which resolves the maximizer to machine precision.
double maximize_concave(const std::function<double(double)>& f,
                        const std::function<double(double)>& df, double lo, double hi,
                        double grid_step);

struct OracleResult {
  Allocation best_alloc;
  double best_objective = 0.0;  // weighted sum-rate (bits/s) or EE (bits/J)
  bool feasible = false;
  std::size_t n_assignments_searched = 0;
  std::vector<double> objectives;  // per assignment in enumeration order, NaN when infeasible
};

// M layers for brute-force sized checks: the columns of the canonical graph
// (degree 1 for N = 2, degree 2 otherwise) taken cyclically, so M may exceed
// the number of distinct footprints.
FactorGraph small_factor_graph(std::size_t n_subcarriers, std::size_t n_layers);

// grid_step is in Watts and must be positive.
OracleResult oracle_se(const FactorGraph& graph, const ChannelState& chan,
                       const SystemParams& params, double grid_step);

OracleResult oracle_ee(const FactorGraph& graph, const ChannelState& chan,
                       const SystemParams& params, double grid_step);

}  // namespace scma
