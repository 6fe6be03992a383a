#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

#include "bargain/experiments.hpp"
#include "bargain/oracles.hpp"

namespace bargain {

using nlohmann::json;

bool operator==(const ResultRecord& a, const ResultRecord& b) {
  auto same = [](double x, double y) {
    return x == y || (std::isnan(x) && std::isnan(y));
  };
  auto same_vec = [&](const std::vector<double>& x, const std::vector<double>& y) {
    return x.size() == y.size() && std::equal(x.begin(), x.end(), y.begin(), same);
  };
  auto same_opt = [&](const std::optional<double>& x, const std::optional<double>& y) {
    return x.has_value() == y.has_value() && (!x || same(*x, *y));
  };
  return a.scenario == b.scenario && a.method == b.method && a.oracle_mode == b.oracle_mode &&
         a.queries == b.queries && a.variant == b.variant && a.n_stocks == b.n_stocks &&
         a.n_agents == b.n_agents && same_vec(a.x0, b.x0) &&
         same_vec(a.final_state, b.final_state) && same_vec(a.final_costs, b.final_costs) &&
         a.iterations == b.iterations && a.termination == b.termination &&
         same(a.final_update_norm, b.final_update_norm) &&
         same(a.stationarity_residual, b.stationarity_residual) &&
         same_opt(a.relative_error, b.relative_error) && same_opt(a.wall_time, b.wall_time) &&
         a.error == b.error;
}

void sort_records(std::vector<ResultRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.scenario, a.method, a.queries, a.variant, a.oracle_mode) <
           std::tie(b.scenario, b.method, b.queries, b.variant, b.oracle_mode);
  });
}

const std::vector<std::string>& result_fields() {
  static const std::vector<std::string> fields = {
      "scenario",    "method",      "oracle_mode",  "Q",
      "variant",     "n_stocks",    "n_agents",     "x0",
      "final_state", "final_costs", "iterations",   "termination",
      "final_update_norm", "stationarity_residual", "relative_error", "wall_time",
      "error"};
  return fields;
}

namespace {

std::string num(double v) {
  if (!std::isfinite(v)) return "null";
  return fmt::format("{:.17g}", v);
}

std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::string json_array(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ',';
    out += num(v[k]);
  }
  return out + "]";
}

std::string csv_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ';';
    out += csv_num(v[k]);
  }
  return out;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string jsonl_line(const ResultRecord& r) {
  auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string("null"); };
  return fmt::format(
      "{{\"scenario\":{},\"method\":{},\"oracle_mode\":{},\"Q\":{},\"variant\":{},"
      "\"n_stocks\":{},\"n_agents\":{},\"x0\":{},\"final_state\":{},\"final_costs\":{},"
      "\"iterations\":{},\"termination\":{},\"final_update_norm\":{},"
      "\"stationarity_residual\":{},\"relative_error\":{},\"wall_time\":{},\"error\":{}}}",
      r.scenario, json(r.method).dump(), json(r.oracle_mode).dump(), r.queries,
      json(r.variant).dump(), r.n_stocks, r.n_agents, json_array(r.x0),
      json_array(r.final_state), json_array(r.final_costs), r.iterations,
      json(r.termination).dump(), num(r.final_update_norm), num(r.stationarity_residual),
      opt(r.relative_error), opt(r.wall_time), r.error ? json(*r.error).dump() : "null");
}

std::string csv_line(const ResultRecord& r) {
  auto opt = [](const std::optional<double>& v) { return v ? csv_num(*v) : std::string(); };
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", r.scenario,
                     csv_quote(r.method), csv_quote(r.oracle_mode), r.queries,
                     csv_quote(r.variant), r.n_stocks, r.n_agents, csv_list(r.x0),
                     csv_list(r.final_state), csv_list(r.final_costs), r.iterations,
                     csv_quote(r.termination), csv_num(r.final_update_norm),
                     csv_num(r.stationarity_residual), opt(r.relative_error),
                     opt(r.wall_time), csv_quote(r.error.value_or("")));
}

std::vector<double> doubles(const json& v) {
  std::vector<double> out;
  for (const auto& e : v) {
    out.push_back(e.is_null() ? std::numeric_limits<double>::quiet_NaN() : e.get<double>());
  }
  return out;
}

double number_or_nan(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

}  // namespace

void write_results(std::ostream& out, const std::vector<ResultRecord>& records,
                   OutputFormat format) {
  if (format == OutputFormat::kCsv) {
    const auto& f = result_fields();
    for (std::size_t k = 0; k < f.size(); ++k) out << (k ? "," : "") << f[k];
    out << '\n';
    for (const auto& r : records) out << csv_line(r) << '\n';
  } else {
    for (const auto& r : records) out << jsonl_line(r) << '\n';
  }
}

void emit_results(const std::vector<ResultRecord>& records, const std::filesystem::path& path,
                  OutputFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_results(out, records, format);
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<ResultRecord> read_results_jsonl(std::istream& in) {
  std::vector<ResultRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      ResultRecord r;
      r.scenario = j.at("scenario").get<std::size_t>();
      r.method = j.at("method").get<std::string>();
      r.oracle_mode = j.at("oracle_mode").get<std::string>();
      r.queries = j.at("Q").get<std::size_t>();
      r.variant = j.at("variant").get<std::string>();
      r.n_stocks = j.at("n_stocks").get<std::size_t>();
      r.n_agents = j.at("n_agents").get<std::size_t>();
      r.x0 = doubles(j.at("x0"));
      r.final_state = doubles(j.at("final_state"));
      r.final_costs = doubles(j.at("final_costs"));
      r.iterations = j.at("iterations").get<std::size_t>();
      r.termination = j.at("termination").get<std::string>();
      r.final_update_norm = number_or_nan(j.at("final_update_norm"));
      r.stationarity_residual = number_or_nan(j.at("stationarity_residual"));
      if (!j.at("relative_error").is_null()) r.relative_error = j["relative_error"].get<double>();
      if (!j.at("wall_time").is_null()) r.wall_time = j["wall_time"].get<double>();
      if (!j.at("error").is_null()) r.error = j["error"].get<std::string>();
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error("result line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidArgument("percentile of an empty sample");
  if (!(p >= 0 && p <= 100)) throw InvalidArgument("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<PercentileRow> summarize_relative_errors(const std::vector<ResultRecord>& records) {
  using Key = std::tuple<std::size_t, std::size_t, std::size_t>;
  std::map<Key, std::vector<std::pair<std::size_t, double>>> cells;
  for (const auto& r : records) {
    if (r.relative_error) {
      cells[{r.n_stocks, r.n_agents, r.queries}].emplace_back(r.scenario, *r.relative_error);
    }
  }
  std::vector<PercentileRow> rows;
  for (const auto& [key, samples] : cells) {
    std::vector<double> v;
    for (const auto& s : samples) v.push_back(s.second);
    PercentileRow row;
    std::tie(row.n_stocks, row.n_agents, row.queries) = key;
    row.count = v.size();
    row.p1_5 = percentile(v, 1.5);
    row.p25 = percentile(v, 25);
    row.p50 = percentile(v, 50);
    row.p75 = percentile(v, 75);
    row.p98_5 = percentile(v, 98.5);
    const double iqr = row.p75 - row.p25;
    for (const auto& [scenario, e] : samples) {
      if (e < row.p25 - 1.5 * iqr || e > row.p75 + 1.5 * iqr) row.outliers.push_back(scenario);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_percentile_summary(std::ostream& out, const std::vector<PercentileRow>& rows) {
  out << "n_stocks,n_agents,Q,count,p1_5,p25,p50,p75,p98_5,lower_fence,upper_fence,outliers\n";
  for (const auto& r : rows) {
    const double iqr = r.p75 - r.p25;
    std::string outliers;
    for (std::size_t k = 0; k < r.outliers.size(); ++k) {
      if (k) outliers += ';';
      outliers += std::to_string(r.outliers[k]);
    }
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.n_stocks, r.n_agents,
                       r.queries, r.count, csv_num(r.p1_5), csv_num(r.p25), csv_num(r.p50),
                       csv_num(r.p75), csv_num(r.p98_5), csv_num(r.p25 - 1.5 * iqr),
                       csv_num(r.p75 + 1.5 * iqr), outliers);
  }
}

void write_trajectories(std::ostream& out, const std::vector<TrajectoryRecord>& rows) {
  out << "scenario,method,variant,Q,step,agent,x,y\n";
  for (const auto& r : rows) {
    for (std::size_t a = 0; 2 * a + 1 < r.state.size(); ++a) {
      out << fmt::format("{},{},{},{},{},{},{},{}\n", r.scenario, r.method, r.variant,
                         r.queries, r.step, a, csv_num(r.state[2 * a]),
                         csv_num(r.state[2 * a + 1]));
    }
  }
}

namespace {

std::filesystem::path sibling(const std::filesystem::path& out, const std::string& suffix) {
  std::filesystem::path p = out;
  p.replace_extension();
  p += suffix;
  return p;
}

template <class Fn>
void write_file(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  fn(out);
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

void write_outputs(const ExperimentConfig& cfg, const ExperimentOutput& output,
                   std::ostream& fallback) {
  if (cfg.output) {
    emit_results(output.records, *cfg.output, cfg.format);
  } else {
    write_results(fallback, output.records, cfg.format);
  }

  std::optional<std::filesystem::path> summary = cfg.summary_output;
  if (!summary && cfg.output) summary = sibling(*cfg.output, ".summary.csv");
  if (cfg.experiment == ExperimentKind::kPortfolio && summary) {
    const auto rows = summarize_relative_errors(output.records);
    write_file(*summary, [&](std::ostream& o) { write_percentile_summary(o, rows); });
  }

  std::optional<std::filesystem::path> traj = cfg.trajectory_output;
  if (!traj && cfg.output) traj = sibling(*cfg.output, ".trajectories.csv");
  if (cfg.experiment == ExperimentKind::kFormation && traj) {
    write_file(*traj, [&](std::ostream& o) { write_trajectories(o, output.trajectories); });
  }
}

std::uint64_t scenario_seed(std::uint64_t master, std::uint64_t scenario, std::uint64_t salt) {
  return make_rng(master, scenario, salt)();
}

}  // namespace bargain
