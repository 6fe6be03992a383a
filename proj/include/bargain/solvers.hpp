#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include "bargain/core.hpp"
#include "bargain/oracles.hpp"

namespace bargain {

enum class StepKind { kHarmonic, kConstant, kShrinkOnViolation };

struct StepSchedule {
  StepKind kind = StepKind::kHarmonic;
  double alpha0 = 0.01;
  double shrink_factor = 0.1;
  double underflow = 1e-12;

  void validate() const;
};

/// Nominal step for iteration k; shrink-on-violation reports alpha0, the
/// value it retains until the first violation.
double step_schedule_value(const StepSchedule& s, std::size_t k);

/// Tracks the retained step of a shrink-on-violation schedule and the
/// per-iteration backoff used by the other kinds.
class StepController {
 public:
  explicit StepController(StepSchedule schedule);

  double value(std::size_t k) const;
  /// Shrinks after a violated step. Returns false once the step would fall
  /// below the underflow threshold.
  bool shrink();
  /// Drops any backoff that only applied to the current iteration.
  void next_iteration();
  double retained() const noexcept { return retained_; }

 private:
  StepSchedule schedule_;
  double retained_;
  double backoff_ = 1.0;
};

enum class Method { kDibs, kNaive, kNbs };

std::string_view to_string(Method m);
std::optional<Method> method_from_string(std::string_view s);

struct SolverConfig {
  StepSchedule schedule;
  std::size_t max_iters = 5000;
  /// Converged once a step moves the state by at most this much.
  double update_norm_tol = 1e-8;
  OracleMode oracle_mode = OracleMode::kExact;
  EstimatorConfig estimator;
  /// Record every stride-th iterate; 0 disables the trajectory.
  std::size_t trajectory_stride = 0;
  /// KSBS only: accepted spread of the proportional gains.
  double ratio_tol = 1e-6;

  void validate() const;
};

/// Euclidean projection onto {x >= 0, sum x = 1}.
Vector project_simplex(const Vector& v);

/// The unscaled move of one iteration: x+ = project(x + alpha * update).
/// `stream` distinguishes estimator draws across iterations.
Vector bargaining_update(const BargainingGame& game, Method method, const Vector& x,
                         OracleMode mode, const EstimatorConfig& estimator,
                         std::uint64_t stream = 0);

StateVector dibs_step(const BargainingGame& game, const StateVector& x, double alpha,
                      OracleMode mode = OracleMode::kExact,
                      const EstimatorConfig& estimator = {});

StateVector naive_step(const BargainingGame& game, const StateVector& x, double alpha,
                       OracleMode mode = OracleMode::kExact,
                       const EstimatorConfig& estimator = {});

StateVector nbs_step(const BargainingGame& game, const StateVector& x, double alpha);

SolveReport solve(const BargainingGame& game, Method method, const StateVector& x0,
                  const SolverConfig& cfg);

/// Kalai-Smorodinsky point: the largest t with every proportional gain
/// (d^i - l^i(x)) / (d^i - l^i(x*,i)) >= t, found by bisection on t.
SolveReport solve_ksbs(const BargainingGame& game, const StateVector& x0,
                       const SolverConfig& cfg);

}  // namespace bargain
