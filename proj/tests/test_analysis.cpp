#include <doctest.h>

#include <cmath>
#include <random>

#include "bargain/analysis.hpp"
#include "bargain/errors.hpp"
#include "bargain/problems.hpp"
#include "bargain/solvers.hpp"
#include "support.hpp"

using namespace bargain;
using fixtures::example_game;
using fixtures::sq_at;

namespace {

BargainingGame random_game(std::uint64_t seed, std::size_t agents) {
  auto rng = make_rng(seed, 0xA11);
  std::uniform_real_distribution<double> unif(-2, 2);
  std::vector<CostModelPtr> models;
  for (std::size_t i = 0; i < agents; ++i) {
    Vector c(2);
    c << unif(rng), unif(rng);
    models.push_back(fixtures::random_strongly_convex(rng, c));
  }
  return make_game(models, std::vector<double>(agents, 1e6), StateSpace::unbounded(2),
                   StateVector{0.0, 0.0});
}

void check_certificate_invariants(const BargainingGame& g, const StateVector& x,
                                  const StationarityCertificate& c) {
  Vector beta(static_cast<Eigen::Index>(c.weights.size()));
  for (std::size_t i = 0; i < c.weights.size(); ++i) {
    CHECK(c.weights[i] >= -1e-9);
    beta[static_cast<Eigen::Index>(i)] = c.weights[i];
  }
  CHECK(std::abs(beta.sum() - 1.0) <= 1e-9);
  CHECK(std::abs((agent_gradients(g, x.coords()) * beta).norm() - c.residual) <= 1e-9);
}

}  // namespace

TEST_CASE("stationarity residual examples") {
  const auto g = example_game();
  auto c = stationarity_residual(g, StateVector{0.5});
  CHECK(c.residual <= 1e-12);
  CHECK(c.weights[0] == doctest::Approx(0.5));
  CHECK(c.weights[1] == doctest::Approx(0.5));

  c = stationarity_residual(g, StateVector{0.25});
  CHECK(c.residual <= 1e-9);
  CHECK(c.weights[0] == doctest::Approx(0.75).epsilon(1e-6));
  CHECK(c.weights[1] == doctest::Approx(0.25).epsilon(1e-6));
  check_certificate_invariants(g, StateVector{0.25}, c);

  // same costs on the real line, where x = 2 is feasible
  const auto line = make_game({sq_at(0.0), sq_at(1.0)}, {1.0, 1.0}, StateSpace::unbounded(1),
                              StateVector{0.5});
  c = stationarity_residual(line, StateVector{2.0});
  CHECK(c.residual == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(c.weights[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK(c.weights[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("stationarity residual matches a grid search") {
  auto rng = make_rng(303);
  std::uniform_real_distribution<double> unif(-3, 3);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t agents = 2 + seed % 2;
    const auto g = random_game(seed, agents);
    const StateVector x{unif(rng), unif(rng)};
    const auto c = stationarity_residual(g, x);
    const double grid = oracle::grid_min_combination(agent_gradients(g, x.coords()), 1e-3);
    CHECK(std::abs(c.residual - grid) <= 1e-3);
    CHECK(c.residual <= grid + 1e-12);
    check_certificate_invariants(g, x, c);
  }
}

TEST_CASE("stationarity residual is permutation invariant") {
  const auto g = random_game(7, 3);
  const StateVector x{2.5, -2.5};
  const auto c = stationarity_residual(g, x);
  const std::vector<std::size_t> order{2, 0, 1};
  const auto p = stationarity_residual(g.permuted(order), x);
  CHECK(p.residual == doctest::Approx(c.residual).epsilon(1e-9));
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(p.weights[k] == doctest::Approx(c.weights[order[k]]).epsilon(1e-6));
  }
}

TEST_CASE("positive rescaling of one gradient keeps the zero status") {
  auto rng = make_rng(99);
  std::uniform_real_distribution<double> unif(-3, 3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = random_game(seed + 100, 3);
    std::vector<CostModelPtr> models;
    for (std::size_t i = 0; i < 3; ++i) models.push_back(g.agent_ptr(i));
    models[1] = transform_cost(models[1], MonotoneTransform::cubic_plus_linear());
    const auto h = make_game(models, {1e6, 1e6, 1e6}, StateSpace::unbounded(2),
                             StateVector{0.0, 0.0});
    const StateVector x{unif(rng), unif(rng)};
    // zero relative to the gradient scale
    const auto is_zero = [&](const BargainingGame& game) {
      const double scale = agent_gradients(game, x.coords()).colwise().norm().maxCoeff();
      return stationarity_residual(game, x).residual <= 1e-10 * scale;
    };
    const bool zero_before = is_zero(g);
    const bool zero_after = is_zero(h);
    CHECK(zero_before == zero_after);
  }
}

TEST_CASE("dibs fixed-point certificate") {
  const auto g = example_game();
  const auto c = dibs_fixed_point_certificate(g, StateVector{0.5});
  CHECK(c.residual <= 1e-12);
  CHECK(c.weights[0] == doctest::Approx(0.5));
  // away from the fixed point the DiBS weights no longer cancel
  CHECK(dibs_fixed_point_certificate(g, StateVector{0.2}).residual > 0.1);
}

TEST_CASE("ksbs ratio spread") {
  const auto g = example_game();
  CHECK(ksbs_ratio_spread(g, StateVector{0.5}) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(ksbs_ratio_spread(g, StateVector{0.25}) == doctest::Approx(0.5).epsilon(1e-8));
  const auto single = make_game({sq_at(0.3)}, {1.0}, fixtures::unit_box(), StateVector{0.9});
  for (double x : {0.0, 0.4, 1.0}) CHECK(ksbs_ratio_spread(single, StateVector{x}) == 0.0);
  const auto degenerate = make_game({sq_at(0.0), sq_at(1.0)}, {1.0, 0.0}, fixtures::unit_box(),
                                    StateVector{0.5});
  CHECK_THROWS_AS(ksbs_ratio_spread(degenerate, StateVector{0.5}), IdealPointInfeasible);
}

TEST_CASE("relative error") {
  const StateVector x0{0.0, 0.0}, dir{1.0, 0.0};
  CHECK(relative_error(dir, dir, x0) == 0.0);
  CHECK(relative_error(dir, x0, x0) == 1.0);
  CHECK(relative_error(dir, StateVector{0.5, 0.0}, x0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(relative_error(x0, dir, x0), InvalidArgument);
  CHECK_THROWS_AS(relative_error(dir, StateVector{1.0}, x0), DimensionMismatch);
}

TEST_CASE("check_bounded") {
  const std::vector<StateVector> prefs{StateVector{0.0, 0.0}, StateVector{2.0, 0.0}};
  const StateVector x0{1.0, 1.0};
  CHECK(check_bounded(std::vector<StateVector>{x0}, prefs, x0));
  // centroid (1, 0), radius 1
  CHECK_FALSE(check_bounded(std::vector<StateVector>{x0, StateVector{11.0, 0.0}}, prefs, x0));
  CHECK(check_bounded(std::vector<StateVector>{x0, StateVector{1.0, -1.0}}, prefs, x0));
  CHECK_THROWS(check_bounded(std::vector<StateVector>{}, prefs, x0));
}

TEST_CASE("DiBS runs on seeded strongly convex games stay bounded") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = random_game(seed + 500, 3);
    SolverConfig cfg;
    cfg.schedule = {StepKind::kHarmonic, 0.2};
    cfg.trajectory_stride = 1;
    const auto r = solve(g, Method::kDibs, g.initial_state(), cfg);
    CHECK(check_bounded(r.trajectory, g.preferred_states(), g.initial_state()));
  }
}

TEST_CASE("finite difference gradient") {
  const auto sq = sq_at(0.0);
  CHECK(finite_diff_gradient(*sq, Vector::Constant(1, 1.0), 1e-6)[0] ==
        doctest::Approx(2.0).epsilon(1e-6));
  const auto flat = make_cost(
      3, [](const Vector&) { return 4.2; }, [](const Vector&) { return Vector::Zero(3); });
  CHECK(finite_diff_gradient(*flat, Vector::Ones(3), 1e-6).norm() == 0.0);
  CHECK_THROWS_AS(finite_diff_gradient(*sq, Vector::Zero(1), 0.0), InvalidArgument);

  FormationParams p;
  auto rng = make_rng(12);
  std::normal_distribution<double> n01;
  Vector x = formation_initial_state(p);
  for (Eigen::Index j = 0; j < x.size(); ++j) x[j] += 0.3 * n01(rng);
  const auto m = formation_cost(p, 4);
  CHECK(oracle::max_rel_error(m->gradient(x), finite_diff_gradient(*m, x, 1e-6)) <= 1e-5);
}
