#include "bargain/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>

#include "bargain/errors.hpp"

namespace bargain {

void EstimatorConfig::validate() const {
  if (queries_per_call < 1) throw InvalidArgument("estimator needs at least one query");
  if (!(smoothing_radius > 0) || !std::isfinite(smoothing_radius)) {
    throw InvalidArgument("smoothing radius must be positive");
  }
  if (!(noise_flip_prob >= 0 && noise_flip_prob < 0.5)) {
    throw InvalidArgument("noise flip probability must lie in [0, 0.5)");
  }
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream_a,
                         std::uint64_t stream_b) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream_a), hi(stream_a), lo(stream_b),
                    hi(stream_b)};
  return std::mt19937_64(seq);
}

namespace {

void require_dimension(const CostModel& model, const Vector& x) {
  if (x.size() != model.dimension()) {
    throw DimensionMismatch("state has dimension " + std::to_string(x.size()) +
                            ", model expects " + std::to_string(model.dimension()));
  }
}

double finite_cost(const CostModel& model, const Vector& x) {
  const double v = model.evaluate(x);
  if (!std::isfinite(v)) throw NonFiniteValue("cost evaluated to a non-finite value");
  return v;
}

// Unit descent direction, or nullopt at a critical point.
std::optional<Vector> unit_descent(const CostModel& model, const Vector& x) {
  Vector v = model.gradient_direction(x);
  if (!v.allFinite()) throw NonFiniteValue("gradient has a non-finite entry");
  double norm = v.norm();
  if (norm == 0.0 || !std::isfinite(norm)) norm = v.stableNorm();
  if (norm <= kZeroGradTol) return std::nullopt;
  return Vector(-v / norm);
}

Verdict verdict_from_costs(double at_x, double at_y) {
  if (at_y < at_x) return Verdict::kBetter;
  if (at_y == at_x) return Verdict::kIndifferent;
  return Verdict::kWorse;
}

Verdict maybe_flip(Verdict v, double flip_prob, std::mt19937_64& rng) {
  if (v == Verdict::kIndifferent || flip_prob <= 0) return v;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (unif(rng) < flip_prob) {
    return v == Verdict::kBetter ? Verdict::kWorse : Verdict::kBetter;
  }
  return v;
}

}  // namespace

DirectionQueryResult exact_direction(const CostModel& model, const StateVector& x,
                                     const StateVector& x_star) {
  require_dimension(model, x.coords());
  const Eigen::Index n = x.dimension();
  if (x == x_star) return {Vector::Zero(n), true};
  auto dir = unit_descent(model, x.coords());
  if (!dir) return {Vector::Zero(n), true};
  return {std::move(*dir), false};
}

Verdict compare(const CostModel& model, const StateVector& x, const StateVector& y,
                double noise_flip_prob, std::mt19937_64& rng) {
  require_dimension(model, x.coords());
  require_dimension(model, y.coords());
  const Verdict v =
      verdict_from_costs(finite_cost(model, x.coords()), finite_cost(model, y.coords()));
  return maybe_flip(v, noise_flip_prob, rng);
}

DirectionQueryResult estimate_direction(const CostModel& model, const StateVector& x,
                                        const EstimatorConfig& cfg) {
  cfg.validate();
  require_dimension(model, x.coords());
  const Vector& xc = x.coords();
  const Eigen::Index n = xc.size();
  auto rng = make_rng(cfg.rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const double eps = cfg.smoothing_radius * std::max(1.0, xc.norm());
  const double at_x = finite_cost(model, xc);

  Vector sum = Vector::Zero(n);
  Vector u(n);
  Vector probe(n);
  for (std::size_t q = 0; q < cfg.queries_per_call; ++q) {
    double norm = 0.0;
    do {
      for (Eigen::Index j = 0; j < n; ++j) u[j] = normal(rng);
      norm = u.norm();
    } while (norm == 0.0);
    u /= norm;
    probe = xc + eps * u;
    const Verdict v = maybe_flip(verdict_from_costs(at_x, finite_cost(model, probe)),
                                 cfg.noise_flip_prob, rng);
    sum += static_cast<double>(static_cast<int>(v)) * u;
  }
  const double norm = sum.norm();
  if (norm <= kZeroGradTol) return {Vector::Zero(n), true};
  return {sum / norm, false};
}

namespace {

std::string fmt_tol(double tol) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", tol);
  return buf;
}

StateVector descend_exact(const CostModel& model, const StateSpace& space, Vector x,
                          std::size_t budget, double tol) {
  // Positive while x + t v still lowers the cost. The cost is convex along a
  // segment, so bisecting on this sign never ends above the start.
  auto slope = [&](const Vector& from, const Vector& v, double t) {
    const auto d = unit_descent(model, space.project(from + t * v));
    return d ? d->dot(v) : 0.0;
  };
  auto bisect = [&](const Vector& from, const Vector& v, double hi) {
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double s = slope(from, v, mid);
      if (s == 0.0) return mid;
      if (s > 0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return lo;
  };

  double reach = 0.1 * std::max(1.0, x.norm());
  std::optional<Vector> prev;
  for (std::size_t k = 0; k < budget; ++k) {
    const Vector g = model.gradient_direction(x);
    if (!g.allFinite()) throw NonFiniteValue("gradient has a non-finite entry");
    if (space.projected_gradient_norm(x, g) <= tol) return StateVector(x);

    const auto dir = unit_descent(model, x);
    if (!dir) return StateVector(x);

    // Feasible direction towards the projection of x + reach * u; grow the
    // reach while its endpoint is still downhill.
    Vector v = space.project(x + reach * *dir) - x;
    if (v.norm() == 0.0) return StateVector(x);
    int expansions = 0;
    while (slope(x, v, 1.0) > 0) {
      Vector wider = space.project(x + 2.0 * reach * *dir) - x;
      if (wider == v) break;
      if (++expansions > 200) {
        throw PreferredStateNotFound("cost decreases without bound along the descent ray");
      }
      reach *= 2.0;
      v = std::move(wider);
    }
    const double t = slope(x, v, 1.0) >= 0 ? 1.0 : bisect(x, v, 1.0);
    Vector next = space.project(x + t * v);
    if (t == 0.0 || next == x) return StateVector(x);
    if (t < 1.0) reach = std::max(reach * t, 1e-300);

    // Parallel-tangent acceleration along next - x_{k-1}, kept feasible.
    if (prev) {
      const Vector w = next - *prev;
      const double t_max = space.max_step(next, w);
      if (w.norm() > 0 && t_max > 0 && slope(next, w, 0.0) > 0) {
        double s = std::min(1.0, t_max);
        while (s < t_max && s < 1e300 && slope(next, w, s) > 0) s = std::min(2.0 * s, t_max);
        s = slope(next, w, s) >= 0 ? s : bisect(next, w, s);
        if (s > 0) {
          Vector ahead = space.project(next + s * w);
          if (ahead != next) next = std::move(ahead);
        }
      }
    }
    prev = std::move(x);
    x = std::move(next);
  }
  throw PreferredStateNotFound("projected-gradient norm still above " +
                               fmt_tol(tol) + " after " +
                               std::to_string(budget) + " iterations");
}

StateVector descend_comparison(const CostModel& model, const StateSpace& space, Vector x,
                               const EstimatorConfig& cfg, std::size_t budget,
                               double tol) {
  auto rng = make_rng(cfg.rng_seed, 0xC0FFEEu);
  double step = 0.1 * std::max(1.0, x.norm());
  for (std::size_t k = 0; k < budget && step >= tol; ++k) {
    EstimatorConfig round = cfg;
    round.rng_seed = rng();
    const auto est = estimate_direction(model, StateVector(x), round);
    if (est.is_zero) {
      step *= 0.5;
      continue;
    }
    Vector y = space.project(x + step * est.direction);
    if (y != x && compare(model, StateVector(x), StateVector(y), cfg.noise_flip_prob,
                          rng) == Verdict::kBetter) {
      x = std::move(y);
    } else {
      step *= 0.5;
    }
  }
  return StateVector(x);
}

}  // namespace

StateVector find_preferred_state(const CostModel& model, const StateSpace& space,
                                 const StateVector& x0, OracleMode mode,
                                 const EstimatorConfig& cfg, std::size_t budget,
                                 double tol) {
  require_dimension(model, x0.coords());
  if (space.dimension() != model.dimension()) {
    throw DimensionMismatch("state space and model dimensions differ");
  }
  if (!space.contains(x0.coords())) throw InfeasibleState("x0 is outside the state space");
  if (!(tol > 0)) throw InvalidArgument("tolerance must be positive");
  if (mode == OracleMode::kExact) return descend_exact(model, space, x0.coords(), budget, tol);
  cfg.validate();
  return descend_comparison(model, space, x0.coords(), cfg, budget, tol);
}

}  // namespace bargain
