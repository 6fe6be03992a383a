#include <cmath>
#include <numbers>
#include <string>

#include "bargain/errors.hpp"
#include "bargain/problems.hpp"

namespace bargain {
namespace {

class QuadraticForm final : public CostModel {
 public:
  QuadraticForm(Matrix a, Vector center) : a_(std::move(a)), center_(std::move(center)) {}

  Eigen::Index dimension() const override { return center_.size(); }
  double evaluate(const Vector& x) const override {
    const Vector r = x - center_;
    return r.dot(a_ * r);
  }
  Vector gradient(const Vector& x) const override { return 2.0 * (a_ * (x - center_)); }

 private:
  Matrix a_;
  Vector center_;
};

class CenteredQuadratic final : public CostModel {
 public:
  explicit CenteredQuadratic(Vector center) : center_(std::move(center)) {}

  Eigen::Index dimension() const override { return center_.size(); }
  double evaluate(const Vector& x) const override { return (x - center_).squaredNorm(); }
  Vector gradient(const Vector& x) const override { return 2.0 * (x - center_); }

 private:
  Vector center_;
};

class LinearCost final : public CostModel {
 public:
  explicit LinearCost(Vector a) : a_(std::move(a)) {}

  Eigen::Index dimension() const override { return a_.size(); }
  double evaluate(const Vector& x) const override { return a_.dot(x); }
  Vector gradient(const Vector&) const override { return a_; }

 private:
  Vector a_;
};

class TransformedCost final : public CostModel {
 public:
  TransformedCost(CostModelPtr inner, MonotoneTransform t)
      : inner_(std::move(inner)), t_(t) {}

  Eigen::Index dimension() const override { return inner_->dimension(); }
  double evaluate(const Vector& x) const override { return t_.apply(inner_->evaluate(x)); }
  Vector gradient(const Vector& x) const override {
    return t_.derivative(inner_->evaluate(x)) * inner_->gradient(x);
  }
  Vector gradient_direction(const Vector& x) const override {
    if (!(t_.derivative(inner_->evaluate(x)) > 0)) return Vector::Zero(dimension());
    return inner_->gradient_direction(x);
  }

 private:
  CostModelPtr inner_;
  MonotoneTransform t_;
};

void require_finite(const Vector& v, const char* what) {
  if (v.size() == 0) throw InvalidArgument(std::string(what) + " is empty");
  if (!v.allFinite()) throw NonFiniteValue(std::string(what) + " is not finite");
}

}  // namespace

CostModelPtr centered_quadratic(Vector center) {
  require_finite(center, "center");
  return std::make_shared<CenteredQuadratic>(std::move(center));
}

CostModelPtr quadratic_form(Matrix a, Vector center) {
  require_finite(center, "center");
  if (a.rows() != center.size() || a.cols() != center.size()) {
    throw DimensionMismatch("quadratic form matrix does not match the center");
  }
  if (!a.allFinite()) throw NonFiniteValue("quadratic form matrix is not finite");
  const Matrix sym = 0.5 * (a + a.transpose());
  return std::make_shared<QuadraticForm>(sym, std::move(center));
}

CostModelPtr linear_cost(Vector a) {
  require_finite(a, "coefficient vector");
  return std::make_shared<LinearCost>(std::move(a));
}

// ---------------------------------------------------------------------------

double MonotoneTransform::apply(double l) const {
  switch (kind) {
    case Kind::kSignedSquare:
      return std::copysign(l * l, l);
    case Kind::kPower:
      if (l < 0) throw InvalidArgument("power transform needs a nonnegative cost");
      return std::pow(l, exponent);
    case Kind::kCubicPlusLinear:
      return l * l * l + l;
  }
  return l;
}

double MonotoneTransform::derivative(double l) const {
  switch (kind) {
    case Kind::kSignedSquare:
      return 2.0 * std::abs(l);
    case Kind::kPower:
      if (l < 0) throw InvalidArgument("power transform needs a nonnegative cost");
      return exponent * std::pow(l, exponent - 1.0);
    case Kind::kCubicPlusLinear:
      return 3.0 * l * l + 1.0;
  }
  return 1.0;
}

std::string_view to_string(MonotoneTransform::Kind k) {
  switch (k) {
    case MonotoneTransform::Kind::kSignedSquare:
      return "signed_square";
    case MonotoneTransform::Kind::kPower:
      return "power";
    case MonotoneTransform::Kind::kCubicPlusLinear:
      return "cubic_plus_linear";
  }
  return "unknown";
}

std::optional<MonotoneTransform> transform_from_string(std::string_view s) {
  if (s == "signed_square") return MonotoneTransform::signed_square();
  if (s == "cubic_plus_linear") return MonotoneTransform::cubic_plus_linear();
  if (s == "power") return MonotoneTransform::power(2.0);
  return std::nullopt;
}

CostModelPtr transform_cost(CostModelPtr model, MonotoneTransform t) {
  if (!model) throw InvalidArgument("cannot transform a null model");
  if (t.kind == MonotoneTransform::Kind::kPower && !(t.exponent > 1.0)) {
    throw InvalidArgument("power transform needs an exponent above 1");
  }
  return std::make_shared<TransformedCost>(std::move(model), t);
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kCoincidentTol = 1e-9;

class FormationCost final : public CostModel {
 public:
  FormationCost(const FormationParams& p, std::size_t i) : p_(p), i_(i) {}

  Eigen::Index dimension() const override {
    return static_cast<Eigen::Index>(2 * p_.n_agents);
  }

  double evaluate(const Vector& x) const override {
    check(x);
    const Eigen::Vector2d xi = pos(x, i_);
    double cost = -p_.a * std::exp(-p_.b * (xi - p_.center).norm());
    for (std::size_t j = 0; j < p_.n_agents; ++j) {
      if (j == i_) continue;
      const double d = (xi - pos(x, j)).norm();
      cost -= std::exp(-p_.alpha(i_, j) * d) - std::exp(-p_.beta(i_, j) * d);
    }
    return cost;
  }

  Vector gradient(const Vector& x) const override {
    check(x);
    Vector g = Vector::Zero(x.size());
    const auto io = static_cast<Eigen::Index>(2 * i_);
    const Eigen::Vector2d xi = pos(x, i_);

    for (std::size_t j = 0; j < p_.n_agents; ++j) {
      if (j == i_) continue;
      const Eigen::Vector2d diff = xi - pos(x, j);
      const double d = diff.norm();
      if (d < kCoincidentTol) continue;
      const double al = p_.alpha(i_, j);
      const double be = p_.beta(i_, j);
      const double dphi = al * std::exp(-al * d) - be * std::exp(-be * d);
      const Eigen::Vector2d term = (dphi / d) * diff;
      g.segment<2>(io) += term;
      g.segment<2>(static_cast<Eigen::Index>(2 * j)) -= term;
    }

    const Eigen::Vector2d rc = xi - p_.center;
    const double r = rc.norm();
    if (r >= kCoincidentTol) {
      g.segment<2>(io) += (p_.a * p_.b * std::exp(-p_.b * r) / r) * rc;
    } else {
      // At the center the cost has a cone-shaped kink whose subgradients fill
      // a disc of radius a*b; report the least-norm one.
      const double pull = g.segment<2>(io).norm();
      const double kink = p_.a * p_.b;
      g.segment<2>(io) *= pull <= kink ? 0.0 : 1.0 - kink / pull;
    }
    return g;
  }

 private:
  void check(const Vector& x) const {
    if (x.size() != dimension()) {
      throw DimensionMismatch("formation state must have " + std::to_string(dimension()) +
                              " entries");
    }
  }
  static Eigen::Vector2d pos(const Vector& x, std::size_t k) {
    return x.segment<2>(static_cast<Eigen::Index>(2 * k));
  }

  FormationParams p_;
  std::size_t i_;
};

}  // namespace

void FormationParams::validate() const {
  if (n_agents < 1) throw InvalidArgument("formation needs at least one agent");
  if (!center.allFinite()) throw NonFiniteValue("formation center is not finite");
  if (!(a > 0) || !(b > 0)) throw InvalidArgument("a and b must be positive");
  if (!(alpha_same > 0) || !(alpha_cross > 0)) throw InvalidArgument("alphas must be positive");
  if (!(beta_same > alpha_same) || !(beta_cross > alpha_cross)) {
    throw InvalidArgument("each beta must exceed the matching alpha");
  }
  if (!(init_radius > 0)) throw InvalidArgument("init_radius must be positive");
  if (!(box_lower < box_upper)) throw InvalidArgument("box lower bound must be below upper");
  if ((center.array() - init_radius < box_lower).any() ||
      (center.array() + init_radius > box_upper).any()) {
    throw InvalidArgument("initial circle does not fit inside the box");
  }
}

double pair_equilibrium_distance(double alpha, double beta) {
  if (!(alpha > 0) || !(beta > alpha)) {
    throw InvalidArgument("need 0 < alpha < beta");
  }
  return std::log(beta / alpha) / (beta - alpha);
}

CostModelPtr formation_cost(const FormationParams& params, std::size_t agent_index) {
  params.validate();
  if (agent_index >= params.n_agents) {
    throw InvalidArgument("agent index " + std::to_string(agent_index) + " out of range");
  }
  return std::make_shared<FormationCost>(params, agent_index);
}

Vector formation_initial_state(const FormationParams& params) {
  params.validate();
  const auto n = params.n_agents;
  Vector x(static_cast<Eigen::Index>(2 * n));
  for (std::size_t k = 0; k < n; ++k) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    x[static_cast<Eigen::Index>(2 * k)] = params.center.x() + params.init_radius * std::cos(theta);
    x[static_cast<Eigen::Index>(2 * k + 1)] =
        params.center.y() + params.init_radius * std::sin(theta);
  }
  return x;
}

StateSpace formation_space(const FormationParams& params) {
  params.validate();
  const auto n = static_cast<Eigen::Index>(2 * params.n_agents);
  return StateSpace::box(Vector::Constant(n, params.box_lower),
                         Vector::Constant(n, params.box_upper));
}

}  // namespace bargain
