#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bargain/core.hpp"

namespace bargain {

// ---------------------------------------------------------------------------
// Simple models

/// l(x) = ||x - center||^2.
CostModelPtr centered_quadratic(Vector center);

/// l(x) = (x - center)^T A (x - center) with A symmetric.
CostModelPtr quadratic_form(Matrix a, Vector center);

/// l(x) = a^T x.
CostModelPtr linear_cost(Vector a);

// ---------------------------------------------------------------------------
// Monotone transforms

struct MonotoneTransform {
  enum class Kind { kSignedSquare, kPower, kCubicPlusLinear };

  Kind kind = Kind::kSignedSquare;
  double exponent = 2.0;  // kPower only; applies to l >= 0

  double apply(double l) const;
  double derivative(double l) const;

  static MonotoneTransform signed_square() { return {Kind::kSignedSquare, 2.0}; }
  static MonotoneTransform power(double p) { return {Kind::kPower, p}; }
  static MonotoneTransform cubic_plus_linear() { return {Kind::kCubicPlusLinear, 3.0}; }
};

std::string_view to_string(MonotoneTransform::Kind k);
std::optional<MonotoneTransform> transform_from_string(std::string_view s);

/// g o l with gradient g'(l(x)) grad l(x).
CostModelPtr transform_cost(CostModelPtr model, MonotoneTransform t);

// ---------------------------------------------------------------------------
// Formation assignment

struct FormationParams {
  std::size_t n_agents = 10;
  Eigen::Vector2d center{5.0, 5.0};
  double a = 10.0;
  double b = 0.01;
  double alpha_same = 1.0;
  double alpha_cross = 0.1;
  double beta_same = 3.0;
  double beta_cross = 0.9;
  double init_radius = 3.0;
  double box_lower = 0.0;
  double box_upper = 10.0;

  void validate() const;

  double alpha(std::size_t i, std::size_t j) const {
    return (i % 2 == j % 2) ? alpha_same : alpha_cross;
  }
  double beta(std::size_t i, std::size_t j) const {
    return (i % 2 == j % 2) ? beta_same : beta_cross;
  }
};

/// Distance at which e^{-alpha d} - e^{-beta d} peaks.
double pair_equilibrium_distance(double alpha, double beta);

/// Cost of agent i over the stacked positions [x^0, ..., x^{N-1}] in R^{2N}.
/// Distances below 1e-9 contribute no gradient.
CostModelPtr formation_cost(const FormationParams& params, std::size_t agent_index);

/// Agents on a circle of init_radius around the center, equally spaced
/// starting at angle 0.
Vector formation_initial_state(const FormationParams& params);

StateSpace formation_space(const FormationParams& params);

// ---------------------------------------------------------------------------
// Portfolio allocation

enum class Window { k5d, k1m, k3m, k6m, k1y, k2y, k5y, kAll };

inline constexpr Window kAllWindows[] = {Window::k5d, Window::k1m, Window::k3m,
                                         Window::k6m, Window::k1y, Window::k2y,
                                         Window::k5y, Window::kAll};

std::string_view to_string(Window w);
std::optional<Window> window_from_string(std::string_view s);
/// Trading days per window; nullopt for kAll.
std::optional<std::size_t> window_trading_days(Window w);

struct PortfolioProfile {
  Window window = Window::kAll;
  double lambda = 0.0;
  Vector mu;
  Matrix sigma;

  void validate() const;
};

/// l(x) = x^T Sigma x - lambda mu^T x.
CostModelPtr markowitz_cost(const PortfolioProfile& profile);

using Date = std::chrono::year_month_day;

std::string format_date(Date d);
std::optional<Date> parse_date(std::string_view s);

struct PriceSeries {
  std::vector<std::string> tickers;
  std::vector<Date> dates;
  Matrix prices;  // dates x stocks

  std::size_t num_days() const noexcept { return dates.size(); }
  std::size_t num_stocks() const noexcept {
    return static_cast<std::size_t>(prices.cols());
  }
  /// Keeps only the given stock columns, in order.
  PriceSeries select(std::span<const std::size_t> columns) const;
  void validate() const;
};

/// Mean and sample covariance of simple returns over the window ending at
/// end_date (the last row on or before it).
PortfolioProfile estimate_profile(const PriceSeries& prices, Window window,
                                  double lambda, Date end_date);

struct SyntheticPriceOptions {
  double drift_min = -5e-4;
  double drift_max = 1e-3;
  double vol_min = 0.005;
  double vol_max = 0.03;
  Date start{std::chrono::year{2016}, std::chrono::month{1}, std::chrono::day{4}};
};

/// Geometric Brownian motion on consecutive weekdays; deterministic per seed.
PriceSeries synthesize_prices(std::size_t n_stocks, std::size_t n_days,
                              std::uint64_t seed, const SyntheticPriceOptions& opts = {});

/// Reads `date,<ticker>...` followed by `YYYY-MM-DD,<price>...` rows.
PriceSeries load_prices_csv(const std::filesystem::path& path);

}  // namespace bargain
