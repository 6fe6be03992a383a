#include "bargain/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "bargain/analysis.hpp"
#include "bargain/errors.hpp"

namespace bargain {

void StepSchedule::validate() const {
  if (!(alpha0 > 0) || !std::isfinite(alpha0)) throw InvalidArgument("alpha0 must be positive");
  if (!(shrink_factor > 0 && shrink_factor < 1)) {
    throw InvalidArgument("shrink factor must lie in (0, 1)");
  }
  if (!(underflow > 0)) throw InvalidArgument("underflow threshold must be positive");
}

double step_schedule_value(const StepSchedule& s, std::size_t k) {
  switch (s.kind) {
    case StepKind::kHarmonic:
      return s.alpha0 / static_cast<double>(k + 1);
    case StepKind::kConstant:
    case StepKind::kShrinkOnViolation:
      return s.alpha0;
  }
  return s.alpha0;
}

StepController::StepController(StepSchedule schedule)
    : schedule_(schedule), retained_(schedule.alpha0) {
  schedule_.validate();
}

double StepController::value(std::size_t k) const {
  if (schedule_.kind == StepKind::kShrinkOnViolation) return retained_ * backoff_;
  return step_schedule_value(schedule_, k) * backoff_;
}

bool StepController::shrink() {
  if (schedule_.kind == StepKind::kShrinkOnViolation) {
    retained_ *= schedule_.shrink_factor;
    return retained_ * backoff_ >= schedule_.underflow;
  }
  backoff_ *= schedule_.shrink_factor;
  return schedule_.alpha0 * backoff_ >= schedule_.underflow;
}

void StepController::next_iteration() { backoff_ = 1.0; }

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kDibs:
      return "dibs";
    case Method::kNaive:
      return "naive";
    case Method::kNbs:
      return "nbs";
  }
  return "unknown";
}

std::optional<Method> method_from_string(std::string_view s) {
  for (auto m : {Method::kDibs, Method::kNaive, Method::kNbs}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

void SolverConfig::validate() const {
  schedule.validate();
  if (max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
  if (!(update_norm_tol > 0)) throw InvalidArgument("update_norm_tol must be positive");
  if (!(ratio_tol > 0)) throw InvalidArgument("ratio_tol must be positive");
  if (oracle_mode == OracleMode::kComparison) estimator.validate();
}

Vector project_simplex(const Vector& v) {
  if (v.size() == 0) throw InvalidArgument("cannot project an empty vector");
  if (!v.allFinite()) throw NonFiniteValue("projection input is not finite");
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumsum += sorted[j];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0) tau = candidate;
  }
  return (v.array() - tau).cwiseMax(0.0);
}

namespace {

// Coordinatewise sum whose rounding does not depend on the order of terms.
Vector order_free_sum(const std::vector<Vector>& terms, Eigen::Index n) {
  Vector out = Vector::Zero(n);
  std::vector<double> column(terms.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < terms.size(); ++i) column[i] = terms[i][j];
    std::sort(column.begin(), column.end());
    out[j] = std::accumulate(column.begin(), column.end(), 0.0);
  }
  return out;
}

std::uint64_t agent_seed(const EstimatorConfig& estimator, std::uint64_t stream,
                         std::size_t agent) {
  return make_rng(estimator.rng_seed, stream, agent)();
}

bool strictly_rational(const BargainingGame& game, const Vector& x) {
  const auto d = game.disagreement();
  for (std::size_t i = 0; i < game.num_agents(); ++i) {
    if (!(d[i] - game.agent(i).evaluate(x) > 0)) return false;
  }
  return true;
}

void require_state(const BargainingGame& game, const StateVector& x) {
  if (x.dimension() != game.dimension()) {
    throw DimensionMismatch("state has dimension " + std::to_string(x.dimension()) +
                            ", game has " + std::to_string(game.dimension()));
  }
  if (!game.space().contains(x.coords())) {
    throw InfeasibleState("state is outside the game's state space");
  }
}

}  // namespace

Vector bargaining_update(const BargainingGame& game, Method method, const Vector& x,
                         OracleMode mode, const EstimatorConfig& estimator,
                         std::uint64_t stream) {
  const std::size_t agents = game.num_agents();
  const StateSpace& space = game.space();
  const StateVector state(x);
  std::vector<Vector> terms;
  terms.reserve(agents);

  for (std::size_t i = 0; i < agents; ++i) {
    const CostModel& model = game.agent(i);
    if (method == Method::kNbs) {
      const double gap = game.disagreement()[i] - model.evaluate(x);
      if (!(gap > 0)) {
        throw IndividualRationalityViolated(
            "agent " + std::to_string(i) + " has gain " + std::to_string(gap) +
            " at the iterate");
      }
      terms.push_back(space.tangent(-model.gradient(x) / gap));
      continue;
    }

    DirectionQueryResult dir;
    if (mode == OracleMode::kExact) {
      dir = exact_direction(model, state, game.preferred_state(i));
    } else {
      EstimatorConfig cfg = estimator;
      cfg.rng_seed = agent_seed(estimator, stream, i);
      dir = estimate_direction(model, state, cfg);
    }
    const double weight =
        method == Method::kDibs ? (x - game.preferred_state(i).coords()).norm() : 1.0;
    terms.push_back(space.tangent(weight * dir.direction));
  }
  return order_free_sum(terms, x.size());
}

StateVector dibs_step(const BargainingGame& game, const StateVector& x, double alpha,
                      OracleMode mode, const EstimatorConfig& estimator) {
  require_state(game, x);
  if (!(alpha > 0)) throw InvalidArgument("step must be positive");
  const Vector u = bargaining_update(game, Method::kDibs, x.coords(), mode, estimator);
  return StateVector(game.space().project(x.coords() + alpha * u));
}

StateVector naive_step(const BargainingGame& game, const StateVector& x, double alpha,
                       OracleMode mode, const EstimatorConfig& estimator) {
  require_state(game, x);
  if (!(alpha > 0)) throw InvalidArgument("step must be positive");
  const Vector u = bargaining_update(game, Method::kNaive, x.coords(), mode, estimator);
  return StateVector(game.space().project(x.coords() + alpha * u));
}

StateVector nbs_step(const BargainingGame& game, const StateVector& x, double alpha) {
  require_state(game, x);
  if (!(alpha > 0)) throw InvalidArgument("step must be positive");
  const Vector u =
      bargaining_update(game, Method::kNbs, x.coords(), OracleMode::kExact, {});
  return StateVector(game.space().project(x.coords() + alpha * u));
}

SolveReport solve(const BargainingGame& game, Method method, const StateVector& x0,
                  const SolverConfig& cfg) {
  cfg.validate();
  require_state(game, x0);
  if (method == Method::kNbs && !strictly_rational(game, x0.coords())) {
    throw IndividualRationalityViolated("x0 is not strictly individually rational");
  }

  const StateSpace& space = game.space();
  const OracleMode mode = method == Method::kNbs ? OracleMode::kExact : cfg.oracle_mode;
  const bool shrink_on_violation = cfg.schedule.kind == StepKind::kShrinkOnViolation;
  StepController step(cfg.schedule);

  SolveReport report;
  report.termination = Termination::kMaxIters;
  Vector x = x0.coords();
  if (cfg.trajectory_stride > 0) report.trajectory.push_back(x0);

  auto update_norm = [&](const Vector& u, double alpha) {
    return (space.project(x + alpha * u) - x).norm();
  };

  std::size_t k = 0;
  for (; k < cfg.max_iters; ++k) {
    step.next_iteration();
    const Vector u = bargaining_update(game, method, x, mode, cfg.estimator, k);
    double alpha = step.value(k);

    Vector next;
    bool underflow = false;
    while (true) {
      const Vector raw = x + alpha * u;
      bool violated = shrink_on_violation && !space.contains(raw, 0.0);
      bool irrational = false;
      if (!violated) {
        next = space.project(raw);
        irrational = method == Method::kNbs && !strictly_rational(game, next);
      }
      if (!violated && !irrational) break;
      if (!step.shrink()) {
        if (irrational) {
          throw IndividualRationalityViolated(
              "every backed-off NBS step leaves the individually rational region");
        }
        underflow = true;
        break;
      }
      alpha = step.value(k);
    }
    if (underflow) {
      report.termination = Termination::kStepUnderflow;
      report.final_update_norm = update_norm(u, alpha);
      break;
    }

    report.final_update_norm = (next - x).norm();
    if (report.final_update_norm <= cfg.update_norm_tol) {
      report.termination = Termination::kConverged;
      break;
    }
    x = std::move(next);
    if (cfg.trajectory_stride > 0 && (k + 1) % cfg.trajectory_stride == 0) {
      report.trajectory.emplace_back(x);
    }
  }

  if (report.termination == Termination::kMaxIters) {
    const Vector u = bargaining_update(game, method, x, mode, cfg.estimator, k);
    report.final_update_norm = update_norm(u, step.value(k));
  }

  report.iterations = k;
  report.final_state = StateVector(x);
  if (cfg.trajectory_stride > 0 && !(report.trajectory.back() == report.final_state)) {
    report.trajectory.push_back(report.final_state);
  }
  const Vector costs = game.costs(x);
  report.final_costs.assign(costs.begin(), costs.end());
  const auto cert = stationarity_residual(game, report.final_state);
  report.stationarity_residual = cert.residual;
  report.stationarity_weights = cert.weights;
  return report;
}

}  // namespace bargain
