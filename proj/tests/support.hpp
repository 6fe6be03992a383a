#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "bargain/core.hpp"
#include "bargain/oracles.hpp"
#include "bargain/problems.hpp"

// Brute-force reference computations. None of these call into the library
// beyond evaluating cost models.
namespace oracle {

using bargain::Matrix;
using bargain::Vector;

// Point of the probability 3-simplex grid {(i, j, m - i - j) / m}.
template <class F>
Vector grid_argmin_simplex3(F&& f, int m) {
  Vector best(3);
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= m; ++i) {
    for (int j = 0; i + j <= m; ++j) {
      Vector x(3);
      x << double(i) / m, double(j) / m, double(m - i - j) / m;
      const double v = f(x);
      if (v < best_val) {
        best_val = v;
        best = x;
      }
    }
  }
  return best;
}

// Closest grid point of the 3-simplex to v (Euclidean).
inline Vector grid_project_simplex3(const Vector& v, int m) {
  return grid_argmin_simplex3([&](const Vector& x) { return (x - v).squaredNorm(); }, m);
}

// min over beta in the 2- or 3-simplex of ||G beta||: a grid of step h, then
// `zooms` passes of a tenfold finer grid within 2 steps of the best point.
inline double grid_min_combination(const Matrix& g, double h, int zooms = 3) {
  const bool three = g.cols() == 3;
  double best = std::numeric_limits<double>::infinity(), c0 = 0.5, c1 = 0.5;
  const auto scan = [&](double lo0, double hi0, double lo1, double hi1, double step) {
    const long n0 = std::lround((hi0 - lo0) / step);
    const long n1 = three ? std::lround((hi1 - lo1) / step) : 0;
    double b_best0 = c0, b_best1 = c1;
    for (long i = 0; i <= n0; ++i) {
      const double b0 = lo0 + double(i) * step;
      for (long j = 0; j <= n1; ++j) {
        const double b1 = three ? lo1 + double(j) * step : 1.0 - b0;
        if (b0 < 0 || b1 < 0 || b0 + b1 > 1 + 1e-15) continue;
        Vector v = b0 * g.col(0) + b1 * g.col(1);
        if (three) v += (1.0 - b0 - b1) * g.col(2);
        if (v.norm() < best) {
          best = v.norm();
          b_best0 = b0;
          b_best1 = b1;
        }
      }
    }
    c0 = b_best0;
    c1 = b_best1;
  };
  scan(0.0, 1.0, 0.0, 1.0, h);
  for (int z = 0; z < zooms; ++z) {
    const double r = 2.0 * h;
    h /= 10.0;
    scan(c0 - r, c0 + r, c1 - r, c1 + r, h);
  }
  return best;
}

// Two-pass mean and T-1 covariance of simple returns over the last `rows`
// price rows.
struct Moments {
  Vector mean;
  Matrix cov;
};

inline Moments return_moments(const Matrix& prices, std::size_t first_row, std::size_t rows) {
  const auto n = prices.cols();
  const std::size_t t = rows - 1;
  std::vector<std::vector<double>> r(t, std::vector<double>(n));
  for (std::size_t k = 0; k < t; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      r[k][j] = prices(first_row + k + 1, j) / prices(first_row + k, j) - 1.0;
    }
  }
  Moments m{Vector::Zero(n), Matrix::Zero(n, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = 0;
    for (std::size_t k = 0; k < t; ++k) s += r[k][j];
    m.mean[j] = s / double(t);
  }
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      double s = 0;
      for (std::size_t k = 0; k < t; ++k) s += (r[k][a] - m.mean[a]) * (r[k][b] - m.mean[b]);
      m.cov(a, b) = s / double(t - 1);
    }
  }
  return m;
}

// Grid crossing of two 1-D proportional-gain curves on [0, 1].
template <class F, class G>
double grid_equal_ratio(F&& r1, G&& r2, int m) {
  double best_x = 0, best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= m; ++i) {
    const double x = double(i) / m;
    const double gap = std::abs(r1(x) - r2(x));
    if (gap < best) {
      best = gap;
      best_x = x;
    }
  }
  return best_x;
}

inline double cosine(const Vector& a, const Vector& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double max_rel_error(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-12);
}

}  // namespace oracle

namespace fixtures {

using bargain::CostModelPtr;
using bargain::StateSpace;
using bargain::StateVector;
using bargain::Vector;

inline CostModelPtr sq_at(double c) {
  return bargain::centered_quadratic(Vector::Constant(1, c));
}

inline StateSpace unit_box() { return StateSpace::box(Vector::Zero(1), Vector::Ones(1)); }

// Two agents x^2 and (x - 1)^2 on [0, 1] with d = (1, 1).
inline bargain::BargainingGame example_game(double x0 = 0.5) {
  return bargain::make_game({sq_at(0.0), sq_at(1.0)}, {1.0, 1.0}, unit_box(), StateVector{x0});
}

// x^4 and (x - 1)^2: the first agent's cost squared.
inline bargain::BargainingGame transformed_example_game(double x0 = 0.5) {
  return bargain::make_game(
      {bargain::transform_cost(sq_at(0.0), bargain::MonotoneTransform::power(2.0)), sq_at(1.0)},
      {1.0, 1.0}, unit_box(), StateVector{x0});
}

// Random SPD 2x2 quadratic centred at c.
inline CostModelPtr random_strongly_convex(std::mt19937_64& rng, const Vector& c) {
  std::normal_distribution<double> n01;
  bargain::Matrix m(2, 2);
  m << n01(rng), n01(rng), n01(rng), n01(rng);
  bargain::Matrix a = m * m.transpose() + 0.5 * bargain::Matrix::Identity(2, 2);
  return bargain::quadratic_form(a, c);
}

}  // namespace fixtures
