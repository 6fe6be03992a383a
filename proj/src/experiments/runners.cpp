#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "bargain/analysis.hpp"
#include "bargain/experiments.hpp"

namespace bargain {
namespace {

// Runs fn(i) for i in [0, count) on at most `threads` workers. The first
// exception is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < count && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            failed = true;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

struct Defaults {
  StepKind schedule;
  double alpha0;
  std::size_t max_iters;
  double tol;
};

SolverConfig solver_config(const ExperimentConfig& cfg, const Defaults& d) {
  SolverConfig sc;
  sc.schedule.kind = cfg.solver.schedule.value_or(d.schedule);
  sc.schedule.alpha0 = cfg.solver.alpha0.value_or(d.alpha0);
  sc.max_iters = cfg.solver.max_iters.value_or(d.max_iters);
  sc.update_norm_tol = cfg.solver.tol.value_or(d.tol);
  return sc;
}

std::vector<double> to_std(const Vector& v) { return {v.begin(), v.end()}; }

struct RunSpec {
  std::size_t scenario = 0;
  std::string variant = "plain";
  std::size_t n_stocks = 0;
  std::size_t n_agents = 0;
};

struct RunResult {
  ResultRecord record;
  std::optional<SolveReport> report;
};

RunResult run_method(const BargainingGame& game, MethodId method, const StateVector& x0,
                     const SolverConfig& sc, const RunSpec& spec, bool timing) {
  RunResult out;
  ResultRecord& r = out.record;
  r.scenario = spec.scenario;
  r.method = std::string(to_string(method));
  r.variant = spec.variant;
  r.n_stocks = spec.n_stocks;
  r.n_agents = spec.n_agents;
  r.x0 = to_std(x0.coords());
  const bool comparison = sc.oracle_mode == OracleMode::kComparison &&
                          (method == MethodId::kDibs || method == MethodId::kNaive);
  r.oracle_mode = comparison ? "comparison" : "exact";
  r.queries = comparison ? sc.estimator.queries_per_call : 0;

  const auto start = std::chrono::steady_clock::now();
  try {
    SolveReport rep;
    switch (method) {
      case MethodId::kDibs:
        rep = solve(game, Method::kDibs, x0, sc);
        break;
      case MethodId::kNaive:
        rep = solve(game, Method::kNaive, x0, sc);
        break;
      case MethodId::kNbs:
        rep = solve(game, Method::kNbs, x0, sc);
        break;
      case MethodId::kKsbs:
        rep = solve_ksbs(game, x0, sc);
        break;
    }
    r.final_state = to_std(rep.final_state.coords());
    r.final_costs = rep.final_costs;
    r.iterations = rep.iterations;
    r.termination = std::string(to_string(rep.termination));
    r.final_update_norm = rep.final_update_norm;
    r.stationarity_residual = rep.stationarity_residual;
    out.report = std::move(rep);
  } catch (const Error& e) {
    spdlog::warn("scenario {} {} ({}) failed: {}", spec.scenario, r.method, spec.variant,
                 e.what());
    r.termination = "error";
    r.error = e.what();
  }
  if (timing) {
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return out;
}

/// Runs every configured method on one game and oracle setting.
void run_methods(const ExperimentConfig& cfg, const BargainingGame& game, const StateVector& x0,
                 SolverConfig sc, const RunSpec& spec, std::uint64_t seed,
                 std::vector<ResultRecord>& records,
                 std::vector<TrajectoryRecord>* trajectories) {
  auto keep = [&](RunResult&& res) {
    if (trajectories && res.report && sc.trajectory_stride > 0) {
      std::size_t step = 0;
      for (const auto& s : res.report->trajectory) {
        trajectories->push_back({res.record.scenario, res.record.method, res.record.variant,
                                 res.record.queries, step, to_std(s.coords())});
        step = std::min(step + sc.trajectory_stride, res.report->iterations);
      }
    }
    records.push_back(std::move(res.record));
  };

  for (MethodId m : cfg.methods) {
    const bool directional = m == MethodId::kDibs || m == MethodId::kNaive;
    if (!directional || cfg.oracle_mode == OracleMode::kExact) {
      SolverConfig exact = sc;
      exact.oracle_mode = OracleMode::kExact;
      keep(run_method(game, m, x0, exact, spec, cfg.timing));
      continue;
    }
    for (std::size_t q : cfg.comparisons_per_iter) {
      SolverConfig comp = sc;
      comp.oracle_mode = OracleMode::kComparison;
      comp.estimator.queries_per_call = q;
      comp.estimator.smoothing_radius = cfg.smoothing_radius;
      comp.estimator.rng_seed = scenario_seed(seed, q, static_cast<std::uint64_t>(m));
      keep(run_method(game, m, x0, comp, spec, cfg.timing));
    }
  }
}

std::vector<std::size_t> transformed_agents(const ExperimentConfig& cfg,
                                            std::vector<std::size_t> fallback,
                                            std::size_t n_agents) {
  auto agents = cfg.transform && !cfg.transform->agents.empty() ? cfg.transform->agents
                                                                 : std::move(fallback);
  for (auto a : agents) {
    if (a >= n_agents) {
      throw ConfigError("transform agent index " + std::to_string(a) + " exceeds " +
                        std::to_string(n_agents) + " agents");
    }
  }
  return agents;
}

bool contains(const std::vector<std::size_t>& v, std::size_t x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

ExperimentOutput run_toy(const ExperimentConfig& cfg) {
  const SolverConfig sc = solver_config(cfg, {StepKind::kHarmonic, 0.5, 5000, 1e-8});
  const MonotoneTransform t =
      cfg.transform ? cfg.transform->transform : MonotoneTransform::power(2.0);
  const auto agents = transformed_agents(cfg, {0}, 2);

  std::vector<double> starts = cfg.toy_starts;
  if (starts.empty()) {
    auto rng = make_rng(*cfg.seed, 0x746f79);
    std::uniform_real_distribution<double> unif(0.01, 0.99);
    for (std::size_t s = 0; s < cfg.n_scenarios; ++s) starts.push_back(unif(rng));
  }

  const CostModelPtr base[2] = {centered_quadratic(Vector::Constant(1, 0.0)),
                                centered_quadratic(Vector::Constant(1, 1.0))};
  const StateSpace space = StateSpace::box(Vector::Zero(1), Vector::Ones(1));

  std::vector<std::vector<ResultRecord>> per(starts.size());
  parallel_for(starts.size(), cfg.threads, [&](std::size_t s) {
    const StateVector x0{starts[s]};
    for (int variant = 0; variant < 2; ++variant) {
      std::vector<CostModelPtr> models;
      for (std::size_t i = 0; i < 2; ++i) {
        models.push_back(variant && contains(agents, i) ? transform_cost(base[i], t) : base[i]);
      }
      const auto game = make_game(models, {1.0, 1.0}, space, x0);
      const RunSpec spec{s, variant ? "transformed" : "plain", 0, 2};
      run_methods(cfg, game, x0, sc, spec, scenario_seed(*cfg.seed, s), per[s], nullptr);
    }
  });

  ExperimentOutput out;
  for (auto& v : per) {
    for (auto& r : v) out.records.push_back(std::move(r));
  }
  sort_records(out.records);
  return out;
}

ExperimentOutput run_formation(const ExperimentConfig& cfg) {
  SolverConfig sc = solver_config(cfg, {StepKind::kConstant, 0.005, 5000, 1e-8});
  sc.trajectory_stride = cfg.trajectory_stride;
  const MonotoneTransform t =
      cfg.transform ? cfg.transform->transform : MonotoneTransform::signed_square();

  struct Job {
    std::size_t scenario;
    std::size_t n_agents;
    int variant;
  };
  std::vector<Job> jobs;
  for (std::size_t k = 0; k < cfg.n_agents.size(); ++k) {
    for (int v = 0; v < 2; ++v) jobs.push_back({k, cfg.n_agents[k], v});
  }

  std::vector<std::vector<ResultRecord>> recs(jobs.size());
  std::vector<std::vector<TrajectoryRecord>> trajs(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    FormationParams params;
    params.n_agents = job.n_agents;
    std::vector<std::size_t> odd;
    for (std::size_t i = 1; i < job.n_agents; i += 2) odd.push_back(i);
    const auto agents = transformed_agents(cfg, odd, job.n_agents);

    std::vector<CostModelPtr> models;
    for (std::size_t i = 0; i < job.n_agents; ++i) {
      auto c = formation_cost(params, i);
      models.push_back(job.variant && contains(agents, i) ? transform_cost(c, t) : c);
    }
    const StateVector x0(formation_initial_state(params));
    spdlog::info("formation N={} {}: computing preferred states", job.n_agents,
                 job.variant ? "transformed" : "plain");
    const auto game = make_game(models, std::vector<double>(job.n_agents, 0.0),
                                formation_space(params), x0);
    const RunSpec spec{job.scenario, job.variant ? "transformed" : "plain", 0, job.n_agents};
    run_methods(cfg, game, x0, sc, spec, scenario_seed(*cfg.seed, job.scenario), recs[j],
                &trajs[j]);
  });

  ExperimentOutput out;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    for (auto& r : recs[j]) out.records.push_back(std::move(r));
    for (auto& t2 : trajs[j]) out.trajectories.push_back(std::move(t2));
  }
  sort_records(out.records);
  std::stable_sort(out.trajectories.begin(), out.trajectories.end(),
                   [](const TrajectoryRecord& a, const TrajectoryRecord& b) {
                     return std::tie(a.scenario, a.method, a.queries, a.variant, a.step) <
                            std::tie(b.scenario, b.method, b.queries, b.variant, b.step);
                   });
  return out;
}

namespace {

constexpr std::uint64_t kPriceSalt = 0x707269636573;
constexpr int kMaxResamples = 50;

PriceSeries portfolio_prices(const ExperimentConfig& cfg) {
  if (cfg.prices_csv) {
    auto p = load_prices_csv(*cfg.prices_csv);
    const auto most = *std::max_element(cfg.n_stocks.begin(), cfg.n_stocks.end());
    if (p.num_stocks() < most) {
      throw ConfigError("price file has " + std::to_string(p.num_stocks()) +
                        " stocks, experiment needs " + std::to_string(most));
    }
    return p;
  }
  return synthesize_prices(cfg.synthetic_stocks, cfg.synthetic_days,
                           scenario_seed(*cfg.seed, 0, kPriceSalt));
}

}  // namespace

ExperimentOutput run_portfolio(const ExperimentConfig& cfg) {
  const SolverConfig sc =
      solver_config(cfg, {StepKind::kShrinkOnViolation, 0.01, 1000, 1e-12});
  const PriceSeries universe = portfolio_prices(cfg);
  const Date end_date = universe.dates.back();

  struct Cell {
    std::size_t n_stocks;
    std::size_t n_agents;
  };
  std::vector<Cell> cells;
  for (auto n : cfg.n_stocks) {
    for (auto a : cfg.n_agents) cells.push_back({n, a});
  }
  const std::size_t total = cells.size() * cfg.n_scenarios;
  std::vector<std::vector<ResultRecord>> per(total);
  std::atomic<std::size_t> done{0};

  parallel_for(total, cfg.threads, [&](std::size_t id) {
    const Cell& cell = cells[id / cfg.n_scenarios];
    const auto n = static_cast<Eigen::Index>(cell.n_stocks);
    const StateVector x0(Vector::Constant(n, 1.0 / static_cast<double>(n)));

    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxResamples) {
        throw Error("scenario " + std::to_string(id) + " could not be sampled");
      }
      const std::uint64_t seed = scenario_seed(*cfg.seed, id, static_cast<std::uint64_t>(attempt));
      auto rng = make_rng(seed, 1);

      std::vector<std::size_t> columns(universe.num_stocks());
      std::iota(columns.begin(), columns.end(), std::size_t{0});
      std::shuffle(columns.begin(), columns.end(), rng);
      columns.resize(cell.n_stocks);
      std::sort(columns.begin(), columns.end());
      const PriceSeries prices = universe.select(columns);

      std::uniform_int_distribution<std::size_t> pick(0, cfg.windows.size() - 1);
      std::uniform_real_distribution<double> lam(0.0, cfg.lambda_max);
      std::vector<CostModelPtr> models;
      for (std::size_t i = 0; i < cell.n_agents; ++i) {
        std::optional<PortfolioProfile> profile;
        for (int w = 0; w < kMaxResamples && !profile; ++w) {
          const Window window = cfg.windows[pick(rng)];
          const double lambda = lam(rng);
          try {
            profile = estimate_profile(prices, window, lambda, end_date);
          } catch (const InsufficientHistory& e) {
            spdlog::info("scenario {} agent {}: window {} resampled ({})", id, i,
                         to_string(window), e.what());
          }
        }
        if (!profile) throw Error("no price window fits the available history");
        models.push_back(markowitz_cost(*profile));
      }

      std::vector<double> d;
      for (const auto& m : models) d.push_back(m->evaluate(x0.coords()) + 1.0);
      const auto game = make_game(models, d, StateSpace::simplex(n), x0);
      const RunSpec spec{id, "plain", cell.n_stocks, cell.n_agents};

      std::vector<ResultRecord> records;
      bool degenerate = false;
      for (MethodId m : cfg.methods) {
        SolverConfig exact = sc;
        exact.oracle_mode = OracleMode::kExact;
        auto base = run_method(game, m, x0, exact, spec, cfg.timing);
        if (!base.report) {
          records.push_back(std::move(base.record));
          continue;
        }
        const StateVector x_dir = base.report->final_state;
        if (x_dir == x0 && cfg.oracle_mode == OracleMode::kComparison) {
          degenerate = true;
          break;
        }
        records.push_back(std::move(base.record));
        if (cfg.oracle_mode != OracleMode::kComparison) continue;
        for (std::size_t q : cfg.comparisons_per_iter) {
          SolverConfig comp = sc;
          comp.oracle_mode = OracleMode::kComparison;
          comp.estimator.queries_per_call = q;
          comp.estimator.smoothing_radius = cfg.smoothing_radius;
          comp.estimator.rng_seed = scenario_seed(seed, q, static_cast<std::uint64_t>(m));
          auto res = run_method(game, m, x0, comp, spec, cfg.timing);
          if (res.report) {
            res.record.relative_error = relative_error(x_dir, res.report->final_state, x0);
          }
          records.push_back(std::move(res.record));
        }
      }
      if (degenerate) {
        spdlog::info("scenario {}: exact solution equals x0, resampling", id);
        continue;
      }
      per[id] = std::move(records);
      break;
    }
    const auto finished = ++done;
    spdlog::debug("portfolio scenario {} done ({}/{})", id, finished, total);
  });

  ExperimentOutput out;
  for (auto& v : per) {
    for (auto& r : v) out.records.push_back(std::move(r));
  }
  sort_records(out.records);
  return out;
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::kToy:
      return run_toy(cfg);
    case ExperimentKind::kFormation:
      return run_formation(cfg);
    case ExperimentKind::kPortfolio:
      return run_portfolio(cfg);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace bargain
