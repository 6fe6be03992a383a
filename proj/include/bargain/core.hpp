#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace bargain {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point of the shared decision space. Entries are finite by construction.
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(Vector coords);
  StateVector(std::initializer_list<double> coords);

  const Vector& coords() const noexcept { return coords_; }
  Eigen::Index dimension() const noexcept { return coords_.size(); }
  double operator[](Eigen::Index i) const { return coords_[i]; }

  /// Bitwise coordinate equality.
  friend bool operator==(const StateVector& a, const StateVector& b);

 private:
  Vector coords_;
};

/// Differentiable cost of one agent. Implementations must be deterministic
/// and safe to call concurrently.
class CostModel {
 public:
  virtual ~CostModel() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual double evaluate(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;

  /// Some positive multiple of gradient(x), or zero where the gradient
  /// vanishes. Direction oracles normalize this vector, so a model that is a
  /// positive rescaling of another may forward to the inner model and keep
  /// the normalized direction free of the rescaling's rounding.
  virtual Vector gradient_direction(const Vector& x) const {
    return gradient(x);
  }
};

using CostModelPtr = std::shared_ptr<const CostModel>;

/// Wraps a pair of callables as a cost model.
CostModelPtr make_cost(Eigen::Index dimension,
                       std::function<double(const Vector&)> evaluate,
                       std::function<Vector(const Vector&)> gradient);

/// Feasible set: a (possibly unbounded) box or the probability simplex.
class StateSpace {
 public:
  enum class Kind { kBox, kSimplex };

  static StateSpace box(Vector lower, Vector upper);
  static StateSpace unbounded(Eigen::Index n);
  static StateSpace simplex(Eigen::Index n);

  Kind kind() const noexcept { return kind_; }
  Eigen::Index dimension() const noexcept { return dimension_; }
  const Vector& lower() const noexcept { return lower_; }
  const Vector& upper() const noexcept { return upper_; }

  bool contains(const Vector& x, double tol = 1e-12) const;
  Vector project(const Vector& v) const;

  /// Removes the part of v normal to the affine hull (sum-zero on the simplex,
  /// identity on a box).
  Vector tangent(const Vector& v) const;

  /// Largest t >= 0 with x + t v feasible (infinity if unbounded). Assumes
  /// x is feasible and, on the simplex, that v sums to zero.
  double max_step(const Vector& x, const Vector& v) const;

  /// ||x - project(x - g)||, zero exactly at constrained critical points.
  double projected_gradient_norm(const Vector& x, const Vector& g) const;

 private:
  StateSpace(Kind kind, Eigen::Index n, Vector lower, Vector upper);

  Kind kind_ = Kind::kBox;
  Eigen::Index dimension_ = 0;
  Vector lower_;
  Vector upper_;
};

struct PreferredStateOptions {
  double tol = 1e-8;
  std::size_t budget = 20000;
};

/// N agents over a shared state space with disagreement costs and a frozen
/// preferred state per agent. Immutable once built.
class BargainingGame {
 public:
  std::size_t num_agents() const noexcept { return agents_.size(); }
  Eigen::Index dimension() const noexcept { return space_.dimension(); }
  const CostModel& agent(std::size_t i) const { return *agents_.at(i); }
  const CostModelPtr& agent_ptr(std::size_t i) const { return agents_.at(i); }
  std::span<const double> disagreement() const noexcept { return disagreement_; }
  const StateSpace& space() const noexcept { return space_; }
  const StateVector& preferred_state(std::size_t i) const {
    return preferred_.at(i);
  }
  std::span<const StateVector> preferred_states() const noexcept {
    return preferred_;
  }
  const StateVector& initial_state() const noexcept { return x0_; }

  Vector costs(const Vector& x) const;

  /// Agent k of the result is agent order[k] of this game; preferred states
  /// travel with their agents.
  BargainingGame permuted(std::span<const std::size_t> order) const;

 private:
  friend BargainingGame make_game(std::vector<CostModelPtr>, std::vector<double>,
                                  StateSpace, const StateVector&,
                                  const PreferredStateOptions&);
  BargainingGame() = default;

  std::vector<CostModelPtr> agents_;
  std::vector<double> disagreement_;
  StateSpace space_ = StateSpace::unbounded(0);
  std::vector<StateVector> preferred_;
  StateVector x0_;
};

/// Builds a game and computes each agent's preferred state by exact-direction
/// descent from x0.
BargainingGame make_game(std::vector<CostModelPtr> models, std::vector<double> d,
                         StateSpace space, const StateVector& x0,
                         const PreferredStateOptions& options = {});

enum class Termination { kConverged, kMaxIters, kStepUnderflow };

std::string_view to_string(Termination t);
std::optional<Termination> termination_from_string(std::string_view s);

struct SolveReport {
  StateVector final_state;
  std::vector<StateVector> trajectory;  // empty unless a stride was requested
  std::vector<double> final_costs;
  std::size_t iterations = 0;
  Termination termination = Termination::kMaxIters;
  /// ||x_{k+1} - x_k|| of the last step; for KSBS the final ratio spread.
  double final_update_norm = 0.0;
  double stationarity_residual = 0.0;
  std::vector<double> stationarity_weights;
};

}  // namespace bargain
