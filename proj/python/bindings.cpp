#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "bargain/analysis.hpp"
#include "bargain/errors.hpp"
#include "bargain/experiments.hpp"
#include "bargain/problems.hpp"
#include "bargain/solvers.hpp"

namespace py = pybind11;
using namespace bargain;

namespace {

class PyCostModel : public CostModel, public py::trampoline_self_life_support {
 public:
  Eigen::Index dimension() const override {
    PYBIND11_OVERRIDE_PURE(Eigen::Index, CostModel, dimension);
  }
  double evaluate(const Vector& x) const override {
    PYBIND11_OVERRIDE_PURE(double, CostModel, evaluate, x);
  }
  Vector gradient(const Vector& x) const override {
    PYBIND11_OVERRIDE_PURE(Vector, CostModel, gradient, x);
  }
};

using ModelPtr = std::shared_ptr<CostModel>;

// The library hands out const models; Python only ever reads them.
ModelPtr to_py(CostModelPtr p) { return std::const_pointer_cast<CostModel>(std::move(p)); }

std::vector<CostModelPtr> to_cpp(const std::vector<ModelPtr>& models) {
  return {models.begin(), models.end()};
}

MonotoneTransform parse_transform(const std::string& kind, double exponent) {
  auto t = transform_from_string(kind);
  if (!t) throw InvalidArgument("unknown transform '" + kind + "'");
  if (t->kind == MonotoneTransform::Kind::kPower) t->exponent = exponent;
  return *t;
}

std::vector<Vector> coords(std::span<const StateVector> states) {
  std::vector<Vector> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.coords());
  return out;
}

std::vector<StateVector> states(const std::vector<Vector>& xs) {
  return {xs.begin(), xs.end()};
}

EstimatorConfig estimator(std::size_t queries, double radius, double noise, std::uint64_t seed) {
  EstimatorConfig e;
  e.queries_per_call = queries;
  e.smoothing_radius = radius;
  e.noise_flip_prob = noise;
  e.rng_seed = seed;
  return e;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Direction-based bargaining solvers";

  auto base = py::register_exception<Error>(m, "BargainError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<PreferredStateNotFound>(m, "PreferredStateNotFound", base.ptr());

  py::enum_<Method>(m, "Method")
      .value("DIBS", Method::kDibs)
      .value("NAIVE", Method::kNaive)
      .value("NBS", Method::kNbs);
  py::enum_<StepKind>(m, "StepKind")
      .value("HARMONIC", StepKind::kHarmonic)
      .value("CONSTANT", StepKind::kConstant)
      .value("SHRINK_ON_VIOLATION", StepKind::kShrinkOnViolation);
  py::enum_<OracleMode>(m, "OracleMode")
      .value("EXACT", OracleMode::kExact)
      .value("COMPARISON", OracleMode::kComparison);
  py::enum_<Termination>(m, "Termination")
      .value("CONVERGED", Termination::kConverged)
      .value("MAX_ITERS", Termination::kMaxIters)
      .value("STEP_UNDERFLOW", Termination::kStepUnderflow);

  py::class_<CostModel, PyCostModel, py::smart_holder>(m, "CostModel")
      .def(py::init<>())
      .def("dimension", &CostModel::dimension)
      .def("evaluate", &CostModel::evaluate, py::arg("x"))
      .def("gradient", &CostModel::gradient, py::arg("x"));

  m.def("centered_quadratic", [](Vector c) { return to_py(centered_quadratic(std::move(c))); },
        py::arg("center"));
  m.def("quadratic_form",
        [](Matrix a, Vector c) { return to_py(quadratic_form(std::move(a), std::move(c))); },
        py::arg("a"), py::arg("center"));
  m.def("linear_cost", [](Vector a) { return to_py(linear_cost(std::move(a))); }, py::arg("a"));
  m.def(
      "transform_cost",
      [](ModelPtr model, const std::string& kind, double exponent) {
        return to_py(transform_cost(std::move(model), parse_transform(kind, exponent)));
      },
      py::arg("model"), py::arg("kind") = "signed_square", py::arg("exponent") = 2.0);
  m.def(
      "formation_cost",
      [](std::size_t n_agents, std::size_t agent) {
        FormationParams p;
        p.n_agents = n_agents;
        return to_py(formation_cost(p, agent));
      },
      py::arg("n_agents"), py::arg("agent"));
  m.def(
      "formation_initial_state",
      [](std::size_t n_agents) {
        FormationParams p;
        p.n_agents = n_agents;
        return formation_initial_state(p);
      },
      py::arg("n_agents"));
  m.def(
      "markowitz_cost",
      [](Matrix sigma, Vector mu, double lambda) {
        PortfolioProfile p;
        p.sigma = std::move(sigma);
        p.mu = std::move(mu);
        p.lambda = lambda;
        return to_py(markowitz_cost(p));
      },
      py::arg("sigma"), py::arg("mu"), py::arg("lam"));

  py::class_<StateSpace>(m, "StateSpace")
      .def_static("box", &StateSpace::box, py::arg("lower"), py::arg("upper"))
      .def_static("unbounded", &StateSpace::unbounded, py::arg("n"))
      .def_static("simplex", &StateSpace::simplex, py::arg("n"))
      .def_static("formation", [](std::size_t n_agents) {
        FormationParams p;
        p.n_agents = n_agents;
        return formation_space(p);
      })
      .def_property_readonly("dimension", &StateSpace::dimension)
      .def("contains", &StateSpace::contains, py::arg("x"), py::arg("tol") = 1e-12)
      .def("project", &StateSpace::project, py::arg("v"));

  py::class_<BargainingGame>(m, "Game")
      .def(py::init([](const std::vector<ModelPtr>& models, std::vector<double> d,
                       StateSpace space, const Vector& x0) {
             return make_game(to_cpp(models), std::move(d), std::move(space), StateVector(x0));
           }),
           py::arg("models"), py::arg("disagreement"), py::arg("space"), py::arg("x0"))
      .def_property_readonly("num_agents", &BargainingGame::num_agents)
      .def_property_readonly("dimension", &BargainingGame::dimension)
      .def_property_readonly("disagreement",
                             [](const BargainingGame& g) {
                               return std::vector<double>(g.disagreement().begin(),
                                                          g.disagreement().end());
                             })
      .def_property_readonly("preferred_states",
                             [](const BargainingGame& g) { return coords(g.preferred_states()); })
      .def_property_readonly("initial_state",
                             [](const BargainingGame& g) { return g.initial_state().coords(); })
      .def("costs", &BargainingGame::costs, py::arg("x"))
      .def(
          "permuted",
          [](const BargainingGame& g, const std::vector<std::size_t>& order) {
            return g.permuted(order);
          },
          py::arg("order"));

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_property(
          "step_kind", [](const SolverConfig& c) { return c.schedule.kind; },
          [](SolverConfig& c, StepKind k) { c.schedule.kind = k; })
      .def_property(
          "alpha0", [](const SolverConfig& c) { return c.schedule.alpha0; },
          [](SolverConfig& c, double a) { c.schedule.alpha0 = a; })
      .def_property(
          "shrink_factor", [](const SolverConfig& c) { return c.schedule.shrink_factor; },
          [](SolverConfig& c, double f) { c.schedule.shrink_factor = f; })
      .def_readwrite("max_iters", &SolverConfig::max_iters)
      .def_readwrite("update_norm_tol", &SolverConfig::update_norm_tol)
      .def_readwrite("oracle_mode", &SolverConfig::oracle_mode)
      .def_property(
          "queries_per_call", [](const SolverConfig& c) { return c.estimator.queries_per_call; },
          [](SolverConfig& c, std::size_t q) { c.estimator.queries_per_call = q; })
      .def_property(
          "smoothing_radius", [](const SolverConfig& c) { return c.estimator.smoothing_radius; },
          [](SolverConfig& c, double r) { c.estimator.smoothing_radius = r; })
      .def_property(
          "noise_flip_prob", [](const SolverConfig& c) { return c.estimator.noise_flip_prob; },
          [](SolverConfig& c, double p) { c.estimator.noise_flip_prob = p; })
      .def_property(
          "rng_seed", [](const SolverConfig& c) { return c.estimator.rng_seed; },
          [](SolverConfig& c, std::uint64_t s) { c.estimator.rng_seed = s; })
      .def_readwrite("trajectory_stride", &SolverConfig::trajectory_stride)
      .def_readwrite("ratio_tol", &SolverConfig::ratio_tol);

  py::class_<SolveReport>(m, "SolveReport")
      .def_property_readonly("final_state",
                             [](const SolveReport& r) { return r.final_state.coords(); })
      .def_property_readonly("trajectory", [](const SolveReport& r) { return coords(r.trajectory); })
      .def_readonly("final_costs", &SolveReport::final_costs)
      .def_readonly("iterations", &SolveReport::iterations)
      .def_readonly("termination", &SolveReport::termination)
      .def_readonly("final_update_norm", &SolveReport::final_update_norm)
      .def_readonly("stationarity_residual", &SolveReport::stationarity_residual)
      .def_readonly("stationarity_weights", &SolveReport::stationarity_weights);

  m.def(
      "solve",
      [](const BargainingGame& g, Method method, const Vector& x0, const SolverConfig& cfg) {
        return solve(g, method, StateVector(x0), cfg);
      },
      py::arg("game"), py::arg("method"), py::arg("x0"), py::arg("config") = SolverConfig{});
  m.def(
      "solve_ksbs",
      [](const BargainingGame& g, const Vector& x0, const SolverConfig& cfg) {
        return solve_ksbs(g, StateVector(x0), cfg);
      },
      py::arg("game"), py::arg("x0"), py::arg("config") = SolverConfig{});
  m.def(
      "dibs_step",
      [](const BargainingGame& g, const Vector& x, double alpha) {
        return dibs_step(g, StateVector(x), alpha).coords();
      },
      py::arg("game"), py::arg("x"), py::arg("alpha"));
  m.def(
      "naive_step",
      [](const BargainingGame& g, const Vector& x, double alpha) {
        return naive_step(g, StateVector(x), alpha).coords();
      },
      py::arg("game"), py::arg("x"), py::arg("alpha"));
  m.def(
      "nbs_step",
      [](const BargainingGame& g, const Vector& x, double alpha) {
        return nbs_step(g, StateVector(x), alpha).coords();
      },
      py::arg("game"), py::arg("x"), py::arg("alpha"));
  m.def("project_simplex", &project_simplex, py::arg("v"));

  m.def(
      "exact_direction",
      [](const ModelPtr& model, const Vector& x, const Vector& x_star) {
        return exact_direction(*model, StateVector(x), StateVector(x_star)).direction;
      },
      py::arg("model"), py::arg("x"), py::arg("x_star"));
  m.def(
      "estimate_direction",
      [](const ModelPtr& model, const Vector& x, std::size_t queries, double radius,
         double noise, std::uint64_t seed) {
        return estimate_direction(*model, StateVector(x), estimator(queries, radius, noise, seed))
            .direction;
      },
      py::arg("model"), py::arg("x"), py::arg("queries") = 100, py::arg("radius") = 1e-3,
      py::arg("noise") = 0.0, py::arg("seed") = 0);

  m.def(
      "stationarity_residual",
      [](const BargainingGame& g, const Vector& x) {
        const auto c = stationarity_residual(g, StateVector(x));
        return py::make_tuple(c.residual, c.weights);
      },
      py::arg("game"), py::arg("x"));
  m.def(
      "ksbs_ratio_spread",
      [](const BargainingGame& g, const Vector& x) { return ksbs_ratio_spread(g, StateVector(x)); },
      py::arg("game"), py::arg("x"));
  m.def(
      "relative_error",
      [](const Vector& x_dir, const Vector& x_comp, const Vector& x0) {
        return relative_error(StateVector(x_dir), StateVector(x_comp), StateVector(x0));
      },
      py::arg("x_dir"), py::arg("x_comp"), py::arg("x0"));
  m.def(
      "check_bounded",
      [](const std::vector<Vector>& trajectory, const std::vector<Vector>& preferred,
         const Vector& x0) {
        return check_bounded(states(trajectory), states(preferred), StateVector(x0));
      },
      py::arg("trajectory"), py::arg("preferred_states"), py::arg("x0"));
  m.def(
      "finite_diff_gradient",
      [](const ModelPtr& model, const Vector& x, double h) {
        return finite_diff_gradient(*model, x, h);
      },
      py::arg("model"), py::arg("x"), py::arg("h") = 1e-6);

  m.def(
      "_run_experiment_jsonl",
      [](const std::string& config_json, const std::string& base_dir) {
        auto cfg = parse_config(config_json, base_dir);
        cfg.finalize();
        ExperimentOutput out;
        {
          py::gil_scoped_release release;
          out = run_experiment(cfg);
        }
        std::ostringstream ss;
        write_results(ss, out.records, OutputFormat::kJsonl);
        return ss.str();
      },
      py::arg("config_json"), py::arg("base_dir") = "");
}
