#pragma once

#include <span>
#include <vector>

#include "bargain/core.hpp"

namespace bargain {

/// Best convex combination of agent gradients at a state.
struct StationarityCertificate {
  double residual = 0.0;
  std::vector<double> weights;
};

/// Agent gradients at x as columns; on the simplex they are first reduced to
/// the sum-zero tangent space.
Matrix agent_gradients(const BargainingGame& game, const Vector& x);

/// min over the simplex of ||sum_i beta^i grad l^i(x)||, by projected gradient
/// from uniform weights.
StationarityCertificate stationarity_residual(const BargainingGame& game,
                                              const StateVector& x);

/// Certificate with beta^i proportional to ||x - x*,i|| / ||grad l^i(x)||, the
/// weights under which a DiBS fixed point is Pareto stationary. Agents with a
/// vanishing gradient take all the weight.
StationarityCertificate dibs_fixed_point_certificate(const BargainingGame& game,
                                                     const StateVector& x);

/// max_i r_i - min_i r_i, r_i = (d^i - l^i(x)) / (d^i - l^i(x*,i)).
double ksbs_ratio_spread(const BargainingGame& game, const StateVector& x);
std::vector<double> ksbs_ratios(const BargainingGame& game, const Vector& x);

/// ||x_dir - x_comp|| / ||x_dir - x0||.
double relative_error(const StateVector& x_dir, const StateVector& x_comp,
                      const StateVector& x0);

/// True iff every iterate is within the ball around the preferred-state
/// centroid whose radius reaches x0 and every preferred state (+1e-9).
bool check_bounded(std::span<const StateVector> trajectory,
                   std::span<const StateVector> preferred_states,
                   const StateVector& x0);

/// Central differences with step h per coordinate.
Vector finite_diff_gradient(const CostModel& model, const Vector& x, double h = 1e-6);

}  // namespace bargain
