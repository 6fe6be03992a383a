#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bargain/errors.hpp"
#include "bargain/oracles.hpp"
#include "bargain/problems.hpp"
#include "bargain/solvers.hpp"

namespace bargain {

/// Invalid or unreadable experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class ExperimentKind { kToy, kFormation, kPortfolio };

std::string_view to_string(ExperimentKind k);
std::optional<ExperimentKind> experiment_from_string(std::string_view s);

/// A method column in the result table; "ksbs" joins the iterative methods.
enum class MethodId { kDibs, kNaive, kNbs, kKsbs };

std::string_view to_string(MethodId m);
std::optional<MethodId> method_id_from_string(std::string_view s);

enum class OutputFormat { kJsonl, kCsv };

struct SolverOverrides {
  std::optional<std::size_t> max_iters;
  std::optional<double> tol;
  std::optional<double> alpha0;
  std::optional<StepKind> schedule;
};

struct TransformSpec {
  MonotoneTransform transform = MonotoneTransform::signed_square();
  /// Agents the transform applies to; empty means the experiment default.
  std::vector<std::size_t> agents;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kToy;
  std::vector<MethodId> methods;
  OracleMode oracle_mode = OracleMode::kExact;
  std::vector<std::size_t> comparisons_per_iter;
  std::vector<std::size_t> n_stocks;
  std::vector<std::size_t> n_agents;
  std::size_t n_scenarios = 1;
  std::optional<std::uint64_t> seed;
  SolverOverrides solver;
  std::optional<TransformSpec> transform;
  std::optional<std::filesystem::path> output;
  OutputFormat format = OutputFormat::kJsonl;
  std::size_t threads = 0;  // 0: hardware concurrency
  bool timing = false;

  // toy
  std::vector<double> toy_starts;  // explicit x0 values; else seeded draws

  // formation
  std::size_t trajectory_stride = 50;
  std::optional<std::filesystem::path> trajectory_output;

  // portfolio
  std::optional<std::filesystem::path> prices_csv;
  std::size_t synthetic_stocks = 50;
  std::size_t synthetic_days = 1600;
  std::vector<Window> windows;
  double lambda_max = 0.1;
  double smoothing_radius = 1e-3;
  std::optional<std::filesystem::path> summary_output;

  /// Fills experiment-specific defaults and checks invariants; throws
  /// ConfigError.
  void finalize();
};

/// Parses JSON text; unknown keys are rejected by name. Relative paths are
/// resolved against base_dir.
ExperimentConfig parse_config(std::string_view json_text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct ResultRecord {
  std::size_t scenario = 0;
  std::string method;
  std::string oracle_mode;
  std::size_t queries = 0;  // Q; 0 for exact runs
  std::string variant;      // "plain" or "transformed"
  std::size_t n_stocks = 0;
  std::size_t n_agents = 0;
  std::vector<double> x0;
  std::vector<double> final_state;
  std::vector<double> final_costs;
  std::size_t iterations = 0;
  std::string termination;
  double final_update_norm = 0.0;
  double stationarity_residual = 0.0;
  std::optional<double> relative_error;
  std::optional<double> wall_time;
  std::optional<std::string> error;  // set when the run raised instead of finishing
};

bool operator==(const ResultRecord& a, const ResultRecord& b);

/// A strided trajectory for plotting.
struct TrajectoryRecord {
  std::size_t scenario = 0;
  std::string method;
  std::string variant;
  std::size_t queries = 0;
  std::size_t step = 0;
  std::vector<double> state;
};

struct ExperimentOutput {
  std::vector<ResultRecord> records;
  std::vector<TrajectoryRecord> trajectories;
};

ExperimentOutput run_toy(const ExperimentConfig& cfg);
ExperimentOutput run_formation(const ExperimentConfig& cfg);
ExperimentOutput run_portfolio(const ExperimentConfig& cfg);
ExperimentOutput run_experiment(const ExperimentConfig& cfg);

/// Sorts by (scenario, method, Q, variant) so output order is schedule-free.
void sort_records(std::vector<ResultRecord>& records);

/// Column order shared by both formats.
const std::vector<std::string>& result_fields();

void write_results(std::ostream& out, const std::vector<ResultRecord>& records,
                   OutputFormat format);
void emit_results(const std::vector<ResultRecord>& records, const std::filesystem::path& path,
                  OutputFormat format);
std::vector<ResultRecord> read_results_jsonl(std::istream& in);

struct PercentileRow {
  std::size_t n_stocks = 0;
  std::size_t n_agents = 0;
  std::size_t queries = 0;
  std::size_t count = 0;
  double p1_5 = 0, p25 = 0, p50 = 0, p75 = 0, p98_5 = 0;
  std::vector<std::size_t> outliers;  // scenarios outside Q1 -/+ 1.5 IQR
};

/// Linear interpolation between closest ranks; p in [0, 100].
double percentile(std::vector<double> values, double p);

/// One row per (n_stocks, n_agents, Q) over records carrying a relative error.
std::vector<PercentileRow> summarize_relative_errors(const std::vector<ResultRecord>& records);
void write_percentile_summary(std::ostream& out, const std::vector<PercentileRow>& rows);
/// Formation trajectories, one row per (record, step, agent).
void write_trajectories(std::ostream& out, const std::vector<TrajectoryRecord>& rows);

/// Writes records to cfg.output (or `fallback` when unset) plus the
/// portfolio summary and formation trajectory files next to it.
void write_outputs(const ExperimentConfig& cfg, const ExperimentOutput& output,
                   std::ostream& fallback);

/// Per-scenario seed derived from the master seed; independent of scheduling.
std::uint64_t scenario_seed(std::uint64_t master, std::uint64_t scenario,
                            std::uint64_t salt = 0);

}  // namespace bargain
