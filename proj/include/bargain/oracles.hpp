#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "bargain/core.hpp"

namespace bargain {

/// Gradient norms at or below this are treated as critical points.
inline constexpr double kZeroGradTol = 1e-12;

/// Unit most-preferred direction, or the zero vector at a critical point.
struct DirectionQueryResult {
  Vector direction;
  bool is_zero = true;
};

/// Answer of "is y better than x?" for one agent.
enum class Verdict : int { kWorse = -1, kIndifferent = 0, kBetter = 1 };

struct EstimatorConfig {
  std::size_t queries_per_call = 100;
  /// Probe radius relative to max(1, ||x||).
  double smoothing_radius = 1e-3;
  double noise_flip_prob = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

enum class OracleMode { kExact, kComparison };

/// Deterministic generator for a (seed, stream...) tuple.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream_a = 0,
                         std::uint64_t stream_b = 0);

/// -grad l(x) / ||grad l(x)||, zero at x_star or when the gradient vanishes.
DirectionQueryResult exact_direction(const CostModel& model, const StateVector& x,
                                     const StateVector& x_star);

/// +1 if l(y) < l(x), 0 on equality, -1 otherwise; nonzero answers flip
/// with probability noise_flip_prob.
Verdict compare(const CostModel& model, const StateVector& x, const StateVector& y,
                double noise_flip_prob, std::mt19937_64& rng);

/// Sign-aggregation estimate of the most-preferred direction from exactly
/// cfg.queries_per_call comparisons against random probes around x.
DirectionQueryResult estimate_direction(const CostModel& model, const StateVector& x,
                                        const EstimatorConfig& cfg);

/// Direction-only projected descent on a single agent's cost.
///
/// Exact mode moves towards project(x + r u) for the most-preferred direction
/// u, bisecting on the sign of the directional derivative along that segment,
/// then takes a parallel-tangent step along x_{k+1} - x_{k-1}. Only direction
/// signs are read, so the path depends on the model only through its
/// most-preferred directions. It returns the first iterate whose
/// projected-gradient norm is at most `tol`, or an iterate from which no
/// feasible descent step remains; budget exhaustion throws
/// PreferredStateNotFound.
///
/// Comparison mode steps along estimated directions, keeps a step only when
/// the agent prefers the new state, halves the step otherwise, and returns
/// once the step falls below `tol`.
StateVector find_preferred_state(const CostModel& model, const StateSpace& space,
                                 const StateVector& x0, OracleMode mode,
                                 const EstimatorConfig& cfg, std::size_t budget,
                                 double tol);

}  // namespace bargain
