#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bargain/analysis.hpp"
#include "bargain/errors.hpp"
#include "bargain/solvers.hpp"

namespace bargain {
namespace {

constexpr double kFeasibilityTol = 1e-10;
constexpr std::size_t kInnerBudget = 5000;
constexpr int kMaxBisections = 100;

class RatioProblem {
 public:
  explicit RatioProblem(const BargainingGame& game) : game_(game) {
    const auto d = game.disagreement();
    for (std::size_t i = 0; i < game.num_agents(); ++i) {
      const double ideal = game.agent(i).evaluate(game.preferred_state(i).coords());
      const double gap = d[i] - ideal;
      if (!(gap > 0)) {
        throw IdealPointInfeasible("agent " + std::to_string(i) +
                                   " cannot gain over its disagreement cost");
      }
      gaps_.push_back(gap);
    }
  }

  double ratio(std::size_t i, const Vector& x) const {
    return (game_.disagreement()[i] - game_.agent(i).evaluate(x)) / gaps_[i];
  }

  // sum_i h(target - r_i)^2 where h clips negatives when one_sided.
  double penalty(double target, const Vector& x, bool one_sided) const {
    double total = 0.0;
    for (std::size_t i = 0; i < gaps_.size(); ++i) {
      double v = target - ratio(i, x);
      if (one_sided) v = std::max(v, 0.0);
      total += v * v;
    }
    return total;
  }

  Vector penalty_gradient(double target, const Vector& x, bool one_sided) const {
    Vector g = Vector::Zero(x.size());
    for (std::size_t i = 0; i < gaps_.size(); ++i) {
      double v = target - ratio(i, x);
      if (one_sided) v = std::max(v, 0.0);
      if (v == 0.0) continue;
      // d r_i / dx = -grad l^i / gap_i
      g += (2.0 * v / gaps_[i]) * game_.agent(i).gradient(x);
    }
    return g;
  }

  double worst_shortfall(double target, const Vector& x) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < gaps_.size(); ++i) {
      worst = std::max(worst, target - ratio(i, x));
    }
    return worst;
  }

  // Projected gradient with Armijo backtracking on the penalty.
  Vector minimize(double target, Vector x, bool one_sided) const {
    const StateSpace& space = game_.space();
    double step = 1.0;
    double value = penalty(target, x, one_sided);
    for (std::size_t it = 0; it < kInnerBudget; ++it) {
      if (one_sided && worst_shortfall(target, x) <= kFeasibilityTol) break;
      if (value == 0.0) break;
      const Vector g = penalty_gradient(target, x, one_sided);
      step *= 2.0;
      bool moved = false;
      while (step > 1e-20) {
        Vector y = space.project(x - step * g);
        const double vy = penalty(target, y, one_sided);
        if (vy <= value - 1e-4 * g.dot(x - y) && vy < value) {
          x = std::move(y);
          value = vy;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    return x;
  }

  std::size_t size() const { return gaps_.size(); }

 private:
  const BargainingGame& game_;
  std::vector<double> gaps_;
};

}  // namespace

SolveReport solve_ksbs(const BargainingGame& game, const StateVector& x0,
                       const SolverConfig& cfg) {
  cfg.validate();
  if (x0.dimension() != game.dimension() || !game.space().contains(x0.coords())) {
    throw InfeasibleState("x0 is outside the game's state space");
  }
  const RatioProblem problem(game);
  const auto d = game.disagreement();
  for (std::size_t i = 0; i < game.num_agents(); ++i) {
    if (!(d[i] - game.agent(i).evaluate(x0.coords()) > 0)) {
      throw IndividualRationalityViolated("x0 is not strictly individually rational");
    }
  }

  double t_lo = 0.0;
  double t_hi = 1.0;
  Vector x_lo = x0.coords();
  int bisections = 0;

  // The ideal point itself may be attainable (e.g. a single agent).
  for (std::size_t i = 0; i < game.num_agents() && t_lo < 1.0; ++i) {
    const Vector& p = game.preferred_state(i).coords();
    if (problem.worst_shortfall(1.0, p) <= 0.0) {
      t_lo = 1.0;
      x_lo = p;
    }
  }
  if (t_lo < 1.0) {
    Vector x = problem.minimize(1.0, x_lo, true);
    if (problem.worst_shortfall(1.0, x) <= kFeasibilityTol) {
      t_lo = 1.0;
      x_lo = std::move(x);
    }
  }
  while (t_lo < 1.0 && t_hi - t_lo > 1e-12 && bisections < kMaxBisections) {
    const double mid = 0.5 * (t_lo + t_hi);
    Vector x = problem.minimize(mid, x_lo, true);
    if (problem.worst_shortfall(mid, x) <= kFeasibilityTol) {
      t_lo = mid;
      x_lo = std::move(x);
    } else {
      t_hi = mid;
    }
    ++bisections;
  }

  // Pull every ratio onto t_lo so the gains are equalized, not just bounded.
  Vector x = problem.minimize(t_lo, x_lo, false);
  const StateVector final_state(x);
  const double spread = ksbs_ratio_spread(game, final_state);
  if (!(spread <= cfg.ratio_tol)) {
    throw BisectionStalled("proportional gains still differ by " + std::to_string(spread) +
                           " at t = " + std::to_string(t_lo));
  }

  SolveReport report;
  report.final_state = final_state;
  report.iterations = static_cast<std::size_t>(bisections);
  report.termination = Termination::kConverged;
  report.final_update_norm = spread;
  const Vector costs = game.costs(x);
  report.final_costs.assign(costs.begin(), costs.end());
  if (cfg.trajectory_stride > 0) report.trajectory = {x0, final_state};
  const auto cert = stationarity_residual(game, final_state);
  report.stationarity_residual = cert.residual;
  report.stationarity_weights = cert.weights;
  return report;
}

}  // namespace bargain
