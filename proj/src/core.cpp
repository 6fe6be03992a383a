#include "bargain/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "bargain/errors.hpp"
#include "bargain/oracles.hpp"
#include "bargain/solvers.hpp"

namespace bargain {

StateVector::StateVector(Vector coords) : coords_(std::move(coords)) {
  if (!coords_.allFinite()) {
    throw NonFiniteValue("state vector has a non-finite entry");
  }
}

StateVector::StateVector(std::initializer_list<double> coords)
    : StateVector(Vector(Eigen::Map<const Vector>(
          coords.begin(), static_cast<Eigen::Index>(coords.size())))) {}

bool operator==(const StateVector& a, const StateVector& b) {
  return a.coords_.size() == b.coords_.size() &&
         std::equal(a.coords_.begin(), a.coords_.end(), b.coords_.begin());
}

namespace {

class FunctionCost final : public CostModel {
 public:
  FunctionCost(Eigen::Index n, std::function<double(const Vector&)> f,
               std::function<Vector(const Vector&)> g)
      : n_(n), f_(std::move(f)), g_(std::move(g)) {}

  Eigen::Index dimension() const override { return n_; }
  double evaluate(const Vector& x) const override { return f_(x); }
  Vector gradient(const Vector& x) const override { return g_(x); }

 private:
  Eigen::Index n_;
  std::function<double(const Vector&)> f_;
  std::function<Vector(const Vector&)> g_;
};

}  // namespace

CostModelPtr make_cost(Eigen::Index dimension,
                       std::function<double(const Vector&)> evaluate,
                       std::function<Vector(const Vector&)> gradient) {
  if (dimension < 1) throw InvalidArgument("cost dimension must be positive");
  return std::make_shared<FunctionCost>(dimension, std::move(evaluate),
                                        std::move(gradient));
}

// ---------------------------------------------------------------------------

StateSpace::StateSpace(Kind kind, Eigen::Index n, Vector lower, Vector upper)
    : kind_(kind), dimension_(n), lower_(std::move(lower)), upper_(std::move(upper)) {}

StateSpace StateSpace::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size()) {
    throw DimensionMismatch("box bounds differ in length");
  }
  for (Eigen::Index j = 0; j < lower.size(); ++j) {
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j]) {
      throw InvalidArgument("box bound " + std::to_string(j) + " has lower > upper");
    }
  }
  const auto n = lower.size();
  return StateSpace(Kind::kBox, n, std::move(lower), std::move(upper));
}

StateSpace StateSpace::unbounded(Eigen::Index n) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return StateSpace(Kind::kBox, n, Vector::Constant(n, -inf), Vector::Constant(n, inf));
}

StateSpace StateSpace::simplex(Eigen::Index n) {
  if (n < 1) throw InvalidArgument("simplex dimension must be positive");
  return StateSpace(Kind::kSimplex, n, Vector::Zero(n), Vector::Ones(n));
}

bool StateSpace::contains(const Vector& x, double tol) const {
  if (x.size() != dimension_ || !x.allFinite()) return false;
  if (kind_ == Kind::kBox) {
    return ((x.array() >= lower_.array() - tol) && (x.array() <= upper_.array() + tol))
        .all();
  }
  return (x.array() >= -tol).all() && std::abs(x.sum() - 1.0) <= std::max(tol, 1e-12);
}

Vector StateSpace::project(const Vector& v) const {
  if (v.size() != dimension_) throw DimensionMismatch("projection input has wrong size");
  if (kind_ == Kind::kBox) return v.cwiseMax(lower_).cwiseMin(upper_);
  return project_simplex(v);
}

Vector StateSpace::tangent(const Vector& v) const {
  if (kind_ == Kind::kBox) return v;
  return v.array() - v.mean();
}

double StateSpace::max_step(const Vector& x, const Vector& v) const {
  if (x.size() != dimension_ || v.size() != dimension_) {
    throw DimensionMismatch("max_step input has wrong size");
  }
  double t = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (kind_ == Kind::kSimplex) {
      if (v[j] < 0) t = std::min(t, std::max(x[j], 0.0) / -v[j]);
    } else if (v[j] < 0) {
      t = std::min(t, std::max(x[j] - lower_[j], 0.0) / -v[j]);
    } else if (v[j] > 0) {
      t = std::min(t, std::max(upper_[j] - x[j], 0.0) / v[j]);
    }
  }
  return t;
}

double StateSpace::projected_gradient_norm(const Vector& x, const Vector& g) const {
  return (x - project(x - g)).norm();
}

// ---------------------------------------------------------------------------

Vector BargainingGame::costs(const Vector& x) const {
  Vector out(static_cast<Eigen::Index>(agents_.size()));
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = agents_[i]->evaluate(x);
  }
  return out;
}

BargainingGame BargainingGame::permuted(std::span<const std::size_t> order) const {
  if (order.size() != agents_.size()) {
    throw InvalidArgument("permutation length differs from the agent count");
  }
  std::vector<bool> seen(order.size(), false);
  BargainingGame out;
  out.space_ = space_;
  out.x0_ = x0_;
  for (std::size_t k : order) {
    if (k >= order.size() || seen[k]) throw InvalidArgument("not a permutation");
    seen[k] = true;
    out.agents_.push_back(agents_[k]);
    out.disagreement_.push_back(disagreement_[k]);
    out.preferred_.push_back(preferred_[k]);
  }
  return out;
}

BargainingGame make_game(std::vector<CostModelPtr> models, std::vector<double> d,
                         StateSpace space, const StateVector& x0,
                         const PreferredStateOptions& options) {
  if (models.empty()) throw InvalidArgument("a game needs at least one agent");
  if (d.size() != models.size()) {
    throw DimensionMismatch("expected " + std::to_string(models.size()) +
                            " disagreement values, got " + std::to_string(d.size()));
  }
  const Eigen::Index n = space.dimension();
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (!models[i]) throw InvalidArgument("agent " + std::to_string(i) + " is null");
    if (models[i]->dimension() != n) {
      throw DimensionMismatch("agent " + std::to_string(i) + " has dimension " +
                              std::to_string(models[i]->dimension()) +
                              ", state space has " + std::to_string(n));
    }
    if (!std::isfinite(d[i])) throw NonFiniteValue("disagreement value is not finite");
  }
  if (x0.dimension() != n) throw DimensionMismatch("x0 has the wrong dimension");
  if (!space.contains(x0.coords())) throw InfeasibleState("x0 is outside the state space");

  BargainingGame game;
  game.space_ = std::move(space);
  game.x0_ = x0;
  game.disagreement_ = std::move(d);
  game.preferred_.reserve(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    try {
      game.preferred_.push_back(find_preferred_state(*models[i], game.space_, x0,
                                                     OracleMode::kExact, {},
                                                     options.budget, options.tol));
    } catch (const PreferredStateNotFound& e) {
      throw PreferredStateNotFound("agent " + std::to_string(i) + ": " + e.what());
    }
  }
  game.agents_ = std::move(models);
  return game;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kConverged:
      return "converged";
    case Termination::kMaxIters:
      return "max_iters";
    case Termination::kStepUnderflow:
      return "step_underflow";
  }
  return "unknown";
}

std::optional<Termination> termination_from_string(std::string_view s) {
  for (auto t : {Termination::kConverged, Termination::kMaxIters,
                 Termination::kStepUnderflow}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

}  // namespace bargain
