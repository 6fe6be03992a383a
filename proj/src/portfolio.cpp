#include <Eigen/Eigenvalues>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include "bargain/errors.hpp"
#include "bargain/oracles.hpp"
#include "bargain/problems.hpp"

namespace bargain {

std::string_view to_string(Window w) {
  switch (w) {
    case Window::k5d:
      return "5d";
    case Window::k1m:
      return "1m";
    case Window::k3m:
      return "3m";
    case Window::k6m:
      return "6m";
    case Window::k1y:
      return "1y";
    case Window::k2y:
      return "2y";
    case Window::k5y:
      return "5y";
    case Window::kAll:
      return "all";
  }
  return "unknown";
}

std::optional<Window> window_from_string(std::string_view s) {
  for (Window w : kAllWindows) {
    if (to_string(w) == s) return w;
  }
  return std::nullopt;
}

std::optional<std::size_t> window_trading_days(Window w) {
  switch (w) {
    case Window::k5d:
      return 5;
    case Window::k1m:
      return 21;
    case Window::k3m:
      return 63;
    case Window::k6m:
      return 126;
    case Window::k1y:
      return 252;
    case Window::k2y:
      return 504;
    case Window::k5y:
      return 1260;
    case Window::kAll:
      return std::nullopt;
  }
  return std::nullopt;
}

void PortfolioProfile::validate() const {
  const auto n = mu.size();
  if (n < 1) throw InvalidArgument("portfolio profile has no stocks");
  if (sigma.rows() != n || sigma.cols() != n) {
    throw DimensionMismatch("covariance does not match the return vector");
  }
  if (!mu.allFinite() || !sigma.allFinite()) throw NonFiniteValue("profile is not finite");
  if (!(lambda >= 0.0 && lambda <= 0.1)) throw InvalidArgument("lambda must lie in [0, 0.1]");
  if (((sigma - sigma.transpose()).array().abs() > 1e-10).any()) {
    throw InvalidArgument("covariance is not symmetric");
  }
  const double lmin =
      Eigen::SelfAdjointEigenSolver<Matrix>(sigma, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (lmin < -1e-10) throw InvalidArgument("covariance is not positive semidefinite");
}

namespace {

class MarkowitzCost final : public CostModel {
 public:
  MarkowitzCost(Matrix sigma, Vector tilt) : sigma_(std::move(sigma)), tilt_(std::move(tilt)) {}

  Eigen::Index dimension() const override { return tilt_.size(); }
  double evaluate(const Vector& x) const override { return x.dot(sigma_ * x) - tilt_.dot(x); }
  Vector gradient(const Vector& x) const override { return 2.0 * (sigma_ * x) - tilt_; }

 private:
  Matrix sigma_;
  Vector tilt_;  // lambda * mu
};

}  // namespace

CostModelPtr markowitz_cost(const PortfolioProfile& profile) {
  profile.validate();
  return std::make_shared<MarkowitzCost>(profile.sigma, profile.lambda * profile.mu);
}

// ---------------------------------------------------------------------------

std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

std::optional<Date> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto field = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    const char* first = s.data() + pos;
    const char* last = first + len;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return v;
  };
  const auto y = field(0, 4);
  const auto m = field(5, 2);
  const auto d = field(8, 2);
  if (!y || !m || !d) return std::nullopt;
  const Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                  std::chrono::day{static_cast<unsigned>(*d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

PriceSeries PriceSeries::select(std::span<const std::size_t> columns) const {
  PriceSeries out;
  out.dates = dates;
  out.prices.resize(prices.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k] >= num_stocks()) throw InvalidArgument("stock column out of range");
    out.prices.col(static_cast<Eigen::Index>(k)) =
        prices.col(static_cast<Eigen::Index>(columns[k]));
    out.tickers.push_back(columns[k] < tickers.size() ? tickers[columns[k]] : "");
  }
  return out;
}

void PriceSeries::validate() const {
  if (prices.rows() != static_cast<Eigen::Index>(dates.size())) {
    throw DimensionMismatch("price rows do not match the dates");
  }
  if (tickers.size() != num_stocks()) throw DimensionMismatch("tickers do not match columns");
  if (num_stocks() < 1) throw InvalidArgument("price series has no stocks");
  if (dates.size() < 2) throw InsufficientHistory("price series needs at least two rows");
  for (std::size_t t = 1; t < dates.size(); ++t) {
    if (!(dates[t - 1] < dates[t])) throw InvalidArgument("dates are not strictly increasing");
  }
  if (!prices.allFinite() || (prices.array() <= 0).any()) {
    throw InvalidArgument("prices must be finite and positive");
  }
}

PortfolioProfile estimate_profile(const PriceSeries& prices, Window window, double lambda,
                                  Date end_date) {
  prices.validate();
  std::size_t end = prices.num_days();
  while (end > 0 && prices.dates[end - 1] > end_date) --end;
  if (end == 0) throw InsufficientHistory("no price rows on or before " + format_date(end_date));
  const std::size_t last = end - 1;

  const auto days = window_trading_days(window);
  const std::size_t returns = days ? *days : last;
  if (returns > last) {
    throw InsufficientHistory("window " + std::string(to_string(window)) + " needs " +
                              std::to_string(returns + 1) + " rows, have " +
                              std::to_string(last + 1));
  }
  if (returns < 3) throw InsufficientHistory("fewer than 3 returns in the window");

  const std::size_t first = last - returns;
  const auto t_count = static_cast<Eigen::Index>(returns);
  const auto n = prices.prices.cols();
  Matrix r(t_count, n);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const auto row = static_cast<Eigen::Index>(first) + t;
    r.row(t) = prices.prices.row(row + 1).array() / prices.prices.row(row).array() - 1.0;
  }

  PortfolioProfile profile;
  profile.window = window;
  profile.lambda = lambda;
  profile.mu = r.colwise().mean().transpose();
  const Matrix centered = r.rowwise() - profile.mu.transpose();
  Matrix sigma = centered.transpose() * centered / static_cast<double>(t_count - 1);
  sigma = 0.5 * (sigma + sigma.transpose());
  const double lmin =
      Eigen::SelfAdjointEigenSolver<Matrix>(sigma, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (lmin < 0) sigma.diagonal().array() += 1e-12 - lmin;
  profile.sigma = std::move(sigma);
  profile.validate();
  return profile;
}

PriceSeries synthesize_prices(std::size_t n_stocks, std::size_t n_days, std::uint64_t seed,
                              const SyntheticPriceOptions& opts) {
  if (n_stocks < 1) throw InvalidArgument("need at least one stock");
  if (n_days < 10) throw InvalidArgument("need at least 10 days");
  if (!(opts.drift_min <= opts.drift_max) || !(opts.vol_min >= 0 && opts.vol_min <= opts.vol_max)) {
    throw InvalidArgument("synthetic price ranges are inverted");
  }
  if (!opts.start.ok()) throw InvalidArgument("synthetic start date is invalid");

  auto rng = make_rng(seed, 0x5052494345ULL);
  std::uniform_real_distribution<double> drift(opts.drift_min, opts.drift_max);
  std::uniform_real_distribution<double> vol(opts.vol_min, opts.vol_max);
  std::uniform_real_distribution<double> start_price(20.0, 200.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  PriceSeries out;
  const auto n = static_cast<Eigen::Index>(n_stocks);
  Vector mu(n), sd(n);
  out.prices.resize(static_cast<Eigen::Index>(n_days), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    mu[j] = drift(rng);
    sd[j] = vol(rng);
    out.prices(0, j) = start_price(rng);
    char name[16];
    std::snprintf(name, sizeof name, "S%03d", static_cast<int>(j));
    out.tickers.emplace_back(name);
  }
  for (Eigen::Index t = 1; t < static_cast<Eigen::Index>(n_days); ++t) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double z = normal(rng);
      out.prices(t, j) =
          out.prices(t - 1, j) * std::exp(mu[j] - 0.5 * sd[j] * sd[j] + sd[j] * z);
    }
  }

  std::chrono::sys_days day{opts.start};
  while (out.dates.size() < n_days) {
    const std::chrono::weekday wd{day};
    if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) out.dates.emplace_back(day);
    day += std::chrono::days{1};
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

PriceSeries load_prices_csv(const std::filesystem::path& path) {
  using K = PriceCsvError::Kind;
  std::ifstream in(path);
  if (!in) throw PriceCsvError(K::kIo, 0, "cannot open " + path.string());

  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  if (in.bad()) throw PriceCsvError(K::kIo, lines.size(), "read failed");
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw PriceCsvError(K::kMalformedHeader, 1, "file is empty");

  const auto header = split_commas(lines[0]);
  if (header.size() < 2 || header[0] != "date") {
    throw PriceCsvError(K::kMalformedHeader, 1, "header must be date,<ticker>,...");
  }
  PriceSeries out;
  for (std::size_t k = 1; k < header.size(); ++k) {
    if (header[k].empty()) throw PriceCsvError(K::kMalformedHeader, 1, "empty ticker name");
    out.tickers.emplace_back(header[k]);
  }

  const std::size_t rows = lines.size() - 1;
  const auto cols = static_cast<Eigen::Index>(out.tickers.size());
  out.prices.resize(static_cast<Eigen::Index>(rows), cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t line_no = r + 2;
    const auto fields = split_commas(lines[r + 1]);
    if (fields.size() != header.size()) {
      throw PriceCsvError(K::kRaggedRow, line_no,
                          "expected " + std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));
    }
    const auto date = parse_date(fields[0]);
    if (!date) {
      throw PriceCsvError(K::kMalformedDate, line_no,
                          "bad date '" + std::string(fields[0]) + "'");
    }
    if (!out.dates.empty() && !(out.dates.back() < *date)) {
      throw PriceCsvError(K::kNonIncreasingDate, line_no,
                          "date " + format_date(*date) + " does not follow " +
                              format_date(out.dates.back()));
    }
    out.dates.push_back(*date);
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto f = fields[static_cast<std::size_t>(j) + 1];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size()) {
        throw PriceCsvError(K::kMalformedNumber, line_no, "bad price '" + std::string(f) + "'");
      }
      if (!std::isfinite(v) || !(v > 0)) {
        throw PriceCsvError(K::kNonPositivePrice, line_no,
                            "price for " + out.tickers[static_cast<std::size_t>(j)] +
                                " must be positive");
      }
      out.prices(static_cast<Eigen::Index>(r), j) = v;
    }
  }
  if (rows < 2) throw PriceCsvError(K::kTooFewRows, lines.size(), "need at least two price rows");
  return out;
}

}  // namespace bargain
