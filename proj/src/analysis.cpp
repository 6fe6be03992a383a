#include "bargain/analysis.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

#include "bargain/errors.hpp"
#include "bargain/oracles.hpp"
#include "bargain/solvers.hpp"

namespace bargain {

Matrix agent_gradients(const BargainingGame& game, const Vector& x) {
  const auto agents = static_cast<Eigen::Index>(game.num_agents());
  Matrix g(game.dimension(), agents);
  for (Eigen::Index i = 0; i < agents; ++i) {
    g.col(i) = game.space().tangent(game.agent(static_cast<std::size_t>(i)).gradient(x));
  }
  return g;
}

namespace {

constexpr double kWeightTol = 1e-10;
constexpr std::size_t kMaxWeightIters = 50000;

StationarityCertificate certificate_from(const Matrix& grads, Vector beta) {
  StationarityCertificate cert;
  cert.residual = (grads * beta).norm();
  cert.weights.assign(beta.begin(), beta.end());
  return cert;
}

}  // namespace

StationarityCertificate stationarity_residual(const BargainingGame& game,
                                              const StateVector& x) {
  if (x.dimension() != game.dimension()) {
    throw DimensionMismatch("state dimension differs from the game");
  }
  const Matrix grads = agent_gradients(game, x.coords());
  const Eigen::Index agents = grads.cols();
  const Matrix gram = grads.transpose() * grads;
  Vector beta = Vector::Constant(agents, 1.0 / static_cast<double>(agents));

  // f(beta) = beta^T Q beta has gradient 2 Q beta and Lipschitz constant
  // 2 lambda_max(Q).
  const double lmax =
      Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  if (!(lmax > 0)) return certificate_from(grads, beta);
  const double step = 1.0 / (2.0 * lmax);

  // Accelerated projected gradient with function-value restarts.
  Vector y = beta;
  double momentum = 1.0;
  double value = beta.dot(gram * beta);
  for (std::size_t it = 0; it < kMaxWeightIters; ++it) {
    const Vector next = project_simplex(y - step * 2.0 * (gram * y));
    const double next_value = next.dot(gram * next);
    const Vector plain = project_simplex(beta - step * 2.0 * (gram * beta));
    if ((plain - beta).norm() <= kWeightTol || value == 0.0) break;
    if (next_value > value) {
      // Restart from a plain projected step.
      momentum = 1.0;
      y = plain;
      beta = plain;
      value = plain.dot(gram * plain);
      continue;
    }
    const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = next + ((momentum - 1.0) / m_next) * (next - beta);
    momentum = m_next;
    beta = next;
    value = next_value;
  }
  return certificate_from(grads, beta);
}

StationarityCertificate dibs_fixed_point_certificate(const BargainingGame& game,
                                                     const StateVector& x) {
  const Matrix grads = agent_gradients(game, x.coords());
  const Eigen::Index agents = grads.cols();
  Vector raw(agents);
  Vector critical = Vector::Zero(agents);
  for (Eigen::Index i = 0; i < agents; ++i) {
    const auto agent = static_cast<std::size_t>(i);
    const double gnorm = game.agent(agent).gradient(x.coords()).norm();
    if (gnorm <= kZeroGradTol) {
      critical[i] = 1.0;
      raw[i] = 0.0;
    } else {
      raw[i] = (x.coords() - game.preferred_state(agent).coords()).norm() / gnorm;
    }
  }
  Vector beta;
  if (critical.sum() > 0) {
    beta = critical / critical.sum();
  } else if (raw.sum() > 0) {
    beta = raw / raw.sum();
  } else {
    beta = Vector::Constant(agents, 1.0 / static_cast<double>(agents));
  }
  return certificate_from(grads, beta);
}

std::vector<double> ksbs_ratios(const BargainingGame& game, const Vector& x) {
  std::vector<double> ratios;
  const auto d = game.disagreement();
  for (std::size_t i = 0; i < game.num_agents(); ++i) {
    const double ideal = game.agent(i).evaluate(game.preferred_state(i).coords());
    const double gap = d[i] - ideal;
    if (!(gap > 0)) {
      throw IdealPointInfeasible("agent " + std::to_string(i) +
                                 " has a non-positive ideal gap");
    }
    ratios.push_back((d[i] - game.agent(i).evaluate(x)) / gap);
  }
  return ratios;
}

double ksbs_ratio_spread(const BargainingGame& game, const StateVector& x) {
  const auto r = ksbs_ratios(game, x.coords());
  const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
  return *hi - *lo;
}

double relative_error(const StateVector& x_dir, const StateVector& x_comp,
                      const StateVector& x0) {
  if (x_dir.dimension() != x_comp.dimension() || x_dir.dimension() != x0.dimension()) {
    throw DimensionMismatch("relative error inputs differ in dimension");
  }
  const double denom = (x_dir.coords() - x0.coords()).norm();
  if (!(denom > 0)) {
    throw InvalidArgument("relative error undefined: exact solution equals x0");
  }
  return (x_dir.coords() - x_comp.coords()).norm() / denom;
}

bool check_bounded(std::span<const StateVector> trajectory,
                   std::span<const StateVector> preferred_states,
                   const StateVector& x0) {
  if (trajectory.empty()) throw InvalidArgument("trajectory is empty");
  if (preferred_states.empty()) throw InvalidArgument("no preferred states");
  Vector centroid = Vector::Zero(x0.dimension());
  for (const auto& p : preferred_states) centroid += p.coords();
  centroid /= static_cast<double>(preferred_states.size());

  double radius = (x0.coords() - centroid).norm();
  for (const auto& p : preferred_states) {
    radius = std::max(radius, (p.coords() - centroid).norm());
  }
  radius += 1e-9;
  return std::all_of(trajectory.begin(), trajectory.end(), [&](const StateVector& s) {
    return (s.coords() - centroid).norm() <= radius;
  });
}

Vector finite_diff_gradient(const CostModel& model, const Vector& x, double h) {
  if (!(h > 0)) throw InvalidArgument("finite-difference step must be positive");
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + h;
    const double up = model.evaluate(probe);
    probe[j] = x[j] - h;
    const double down = model.evaluate(probe);
    probe[j] = x[j];
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace bargain
