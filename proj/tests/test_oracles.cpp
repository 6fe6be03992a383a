#include <doctest.h>

#include <atomic>
#include <cmath>
#include <random>

#include "bargain/errors.hpp"
#include "bargain/oracles.hpp"
#include "bargain/problems.hpp"
#include "support.hpp"

using namespace bargain;
using fixtures::sq_at;

namespace {

CostModelPtr sq_norm(Eigen::Index n) { return centered_quadratic(Vector::Zero(n)); }

Vector e1(Eigen::Index n) {
  Vector v = Vector::Zero(n);
  v[0] = 1.0;
  return v;
}

// Counts evaluations so query budgets can be checked.
class CountingCost final : public CostModel {
 public:
  explicit CountingCost(CostModelPtr inner) : inner_(std::move(inner)) {}
  Eigen::Index dimension() const override { return inner_->dimension(); }
  double evaluate(const Vector& x) const override {
    ++calls;
    return inner_->evaluate(x);
  }
  Vector gradient(const Vector& x) const override { return inner_->gradient(x); }
  mutable std::atomic<int> calls{0};

 private:
  CostModelPtr inner_;
};

double estimator_cosine(std::size_t q, std::uint64_t seed) {
  EstimatorConfig cfg;
  cfg.queries_per_call = q;
  cfg.smoothing_radius = 1e-3;
  cfg.rng_seed = seed;
  const auto r = estimate_direction(*sq_norm(5), StateVector(e1(5)), cfg);
  return r.is_zero ? 0.0 : oracle::cosine(r.direction, -e1(5));
}

}  // namespace

TEST_CASE("exact_direction examples") {
  const StateVector zero{0.0};
  auto r = exact_direction(*sq_at(0.0), StateVector{0.25}, zero);
  CHECK_FALSE(r.is_zero);
  CHECK(r.direction[0] == -1.0);

  r = exact_direction(*sq_at(1.0), StateVector{0.25}, StateVector{1.0});
  CHECK(r.direction[0] == 1.0);

  r = exact_direction(*sq_norm(2), StateVector{3.0, 4.0}, StateVector{0.0, 0.0});
  CHECK(r.direction[0] == doctest::Approx(-0.6).epsilon(1e-15));
  CHECK(r.direction[1] == doctest::Approx(-0.8).epsilon(1e-15));
}

TEST_CASE("exact_direction zero cases") {
  auto r = exact_direction(*sq_at(0.0), StateVector{0.0}, StateVector{0.0});
  CHECK(r.is_zero);
  CHECK(r.direction.norm() == 0.0);
  // interior critical point that is not the stored preferred state
  r = exact_direction(*sq_at(0.0), StateVector{0.0}, StateVector{0.5});
  CHECK(r.is_zero);
  CHECK_THROWS_AS(exact_direction(*sq_at(0.0), StateVector{0.0, 1.0}, StateVector{0.0}),
                  DimensionMismatch);
  const auto bad = make_cost(
      1, [](const Vector&) { return 0.0; },
      [](const Vector&) { return Vector::Constant(1, std::nan("")); });
  CHECK_THROWS_AS(exact_direction(*bad, StateVector{0.0}, StateVector{1.0}), NonFiniteValue);
}

TEST_CASE("unit-norm contract at random points") {
  auto rng = make_rng(5);
  std::normal_distribution<double> n01;
  FormationParams fp;
  const auto f = formation_cost(fp, 3);
  for (int k = 0; k < 100; ++k) {
    Vector x = formation_initial_state(fp);
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] += 0.5 * n01(rng);
    const auto r = exact_direction(*f, StateVector(x), StateVector(Vector::Zero(x.size())));
    REQUIRE_FALSE(r.is_zero);
    CHECK(std::abs(r.direction.norm() - 1.0) <= 1e-9);
  }
}

TEST_CASE("monotone transforms leave exact directions unchanged") {
  auto rng = make_rng(17);
  std::uniform_real_distribution<double> unif(-3, 3);
  Matrix a(3, 3);
  a << 2, 0.3, 0, 0.3, 1, 0.2, 0, 0.2, 0.5;
  Vector c(3);
  c << 0.5, -1, 2;
  const auto base = quadratic_form(a, c);
  for (auto t : {MonotoneTransform::signed_square(), MonotoneTransform::cubic_plus_linear()}) {
    const auto g = transform_cost(base, t);
    for (int k = 0; k < 100; ++k) {
      Vector x(3);
      x << unif(rng), unif(rng), unif(rng);
      const StateVector sx(x);
      const auto d0 = exact_direction(*base, sx, StateVector(c));
      const auto d1 = exact_direction(*g, sx, StateVector(c));
      CHECK(d0.is_zero == d1.is_zero);
      CHECK(d0.direction == d1.direction);
    }
  }
}

TEST_CASE("compare examples") {
  auto rng = make_rng(1);
  const auto m = sq_at(0.0);
  CHECK(compare(*m, StateVector{0.5}, StateVector{0.3}, 0.0, rng) == Verdict::kBetter);
  CHECK(compare(*m, StateVector{0.5}, StateVector{0.5}, 0.0, rng) == Verdict::kIndifferent);
  CHECK(compare(*m, StateVector{0.3}, StateVector{0.5}, 0.0, rng) == Verdict::kWorse);
}

TEST_CASE("compare is invariant under monotone transforms") {
  auto rng = make_rng(2);
  std::uniform_real_distribution<double> unif(-2, 2);
  const auto base = sq_norm(2);
  const auto g = transform_cost(base, MonotoneTransform::cubic_plus_linear());
  for (int k = 0; k < 200; ++k) {
    const StateVector x{unif(rng), unif(rng)};
    const StateVector y{unif(rng), unif(rng)};
    CHECK(compare(*base, x, y, 0.0, rng) == compare(*g, x, y, 0.0, rng));
  }
}

TEST_CASE("noisy compare flips at roughly the requested rate and never flips ties") {
  auto rng = make_rng(9);
  const auto m = sq_at(0.0);
  int flips = 0;
  const int trials = 20000;
  for (int k = 0; k < trials; ++k) {
    if (compare(*m, StateVector{0.5}, StateVector{0.3}, 0.2, rng) == Verdict::kWorse) ++flips;
    CHECK(compare(*m, StateVector{0.5}, StateVector{0.5}, 0.2, rng) == Verdict::kIndifferent);
  }
  CHECK(double(flips) / trials == doctest::Approx(0.2).epsilon(0.05));
}

TEST_CASE("compare rejects non-finite costs") {
  auto rng = make_rng(1);
  const auto bad = make_cost(
      1, [](const Vector&) { return std::numeric_limits<double>::infinity(); },
      [](const Vector&) { return Vector::Zero(1); });
  CHECK_THROWS_AS(compare(*bad, StateVector{0.0}, StateVector{1.0}, 0.0, rng), NonFiniteValue);
}

TEST_CASE("estimator config validation") {
  EstimatorConfig cfg;
  cfg.queries_per_call = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.queries_per_call = 1;
  cfg.smoothing_radius = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.smoothing_radius = 1e-3;
  cfg.noise_flip_prob = 0.5;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.noise_flip_prob = 0.1;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("single-query estimate is a signed unit probe") {
  EstimatorConfig cfg;
  cfg.queries_per_call = 1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.rng_seed = seed;
    const auto r = estimate_direction(*sq_norm(4), StateVector(e1(4)), cfg);
    if (r.is_zero) {
      CHECK(r.direction.norm() == 0.0);
    } else {
      CHECK(std::abs(r.direction.norm() - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("estimator consumes exactly Q comparisons") {
  auto counted = std::make_shared<CountingCost>(sq_norm(3));
  EstimatorConfig cfg;
  cfg.queries_per_call = 37;
  estimate_direction(*counted, StateVector(e1(3)), cfg);
  // one evaluation at x plus one per probe
  CHECK(counted->calls == 38);
}

TEST_CASE("estimator golden value and Q trend") {
  CHECK(estimator_cosine(1000, 7) >= 0.9);

  double prev = -1.0;
  for (std::size_t q : {10, 100, 1000}) {
    std::vector<double> cos;
    for (std::uint64_t s = 0; s < 50; ++s) cos.push_back(estimator_cosine(q, s));
    const double med = oracle::median(cos);
    CHECK(med >= prev);
    prev = med;
  }
}

TEST_CASE("estimator on a linear cost") {
  Vector a(5);
  a << 1, -2, 0.5, 3, -1;
  EstimatorConfig cfg;
  cfg.queries_per_call = 10000;
  cfg.rng_seed = 123;
  const auto r = estimate_direction(*linear_cost(a), StateVector(Vector::Zero(5)), cfg);
  CHECK(oracle::cosine(r.direction, -a) > 0.99);
}

TEST_CASE("estimator is deterministic per seed") {
  EstimatorConfig cfg;
  cfg.queries_per_call = 50;
  cfg.rng_seed = 99;
  cfg.noise_flip_prob = 0.1;
  const auto a = estimate_direction(*sq_norm(3), StateVector(e1(3)), cfg);
  const auto b = estimate_direction(*sq_norm(3), StateVector(e1(3)), cfg);
  CHECK(a.direction == b.direction);
  cfg.rng_seed = 100;
  const auto c = estimate_direction(*sq_norm(3), StateVector(e1(3)), cfg);
  CHECK_FALSE(a.direction == c.direction);
}

TEST_CASE("find_preferred_state examples") {
  const auto box = fixtures::unit_box();
  auto x = find_preferred_state(*sq_at(0.7), box, StateVector{0.0}, OracleMode::kExact, {}, 1000,
                                1e-8);
  CHECK(std::abs(x[0] - 0.7) <= 1e-6);
  x = find_preferred_state(*sq_at(0.0), box, StateVector{0.5}, OracleMode::kExact, {}, 1000, 1e-8);
  CHECK(std::abs(x[0]) <= 1e-6);

  PortfolioProfile p;
  p.mu = Vector::Zero(3);
  p.sigma = Matrix::Identity(3, 3);
  Vector x0(3);
  x0 << 0.1, 0.1, 0.8;
  const auto s = find_preferred_state(*markowitz_cost(p), StateSpace::simplex(3), StateVector(x0),
                                      OracleMode::kExact, {}, 1000, 1e-8);
  const Vector grid =
      oracle::grid_argmin_simplex3([](const Vector& v) { return v.squaredNorm(); }, 300);
  CHECK((s.coords() - grid).norm() <= 1e-4);
}

TEST_CASE("find_preferred_state on an ill-conditioned quadratic") {
  Matrix a(2, 2);
  a << 1000.0, 0.0, 0.0, 1.0;
  Vector c(2);
  c << 0.25, -0.5;
  const auto x = find_preferred_state(*quadratic_form(a, c), StateSpace::unbounded(2),
                                      StateVector{3.0, 3.0}, OracleMode::kExact, {}, 2000, 1e-9);
  CHECK((x.coords() - c).norm() <= 1e-6);
}

TEST_CASE("find_preferred_state in comparison mode") {
  EstimatorConfig cfg;
  cfg.queries_per_call = 200;
  cfg.rng_seed = 4;
  const auto x = find_preferred_state(*sq_at(0.7), fixtures::unit_box(), StateVector{0.0},
                                      OracleMode::kComparison, cfg, 10000, 1e-9);
  CHECK(std::abs(x[0] - 0.7) <= 1e-4);
}

TEST_CASE("transformed models keep their minimiser") {
  Vector c(2);
  c << 0.3, 0.6;
  const auto base = centered_quadratic(c);
  const auto space = StateSpace::box(Vector::Zero(2), Vector::Ones(2));
  const StateVector x0{0.9, 0.1};
  const auto a = find_preferred_state(*base, space, x0, OracleMode::kExact, {}, 1000, 1e-10);
  for (auto t : {MonotoneTransform::signed_square(), MonotoneTransform::cubic_plus_linear()}) {
    const auto b = find_preferred_state(*transform_cost(base, t), space, x0, OracleMode::kExact, {},
                                        1000, 1e-10);
    CHECK((a.coords() - b.coords()).norm() <= 1e-8);
  }
}
