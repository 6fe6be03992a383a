#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bargain/experiments.hpp"

namespace bargain {

using nlohmann::json;

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kToy:
      return "toy";
    case ExperimentKind::kFormation:
      return "formation";
    case ExperimentKind::kPortfolio:
      return "portfolio";
  }
  return "unknown";
}

std::optional<ExperimentKind> experiment_from_string(std::string_view s) {
  for (auto k : {ExperimentKind::kToy, ExperimentKind::kFormation, ExperimentKind::kPortfolio}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string_view to_string(MethodId m) {
  switch (m) {
    case MethodId::kDibs:
      return "dibs";
    case MethodId::kNaive:
      return "naive";
    case MethodId::kNbs:
      return "nbs";
    case MethodId::kKsbs:
      return "ksbs";
  }
  return "unknown";
}

std::optional<MethodId> method_id_from_string(std::string_view s) {
  for (auto m : {MethodId::kDibs, MethodId::kNaive, MethodId::kNbs, MethodId::kKsbs}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

namespace {

class Reader {
 public:
  Reader(const json& obj, std::string prefix, std::set<std::string> allowed)
      : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw ConfigError(where("") + "must be an object");
    for (const auto& [key, _] : obj_.items()) {
      if (!allowed.count(key)) throw ConfigError("unknown key '" + prefix_ + key + "'");
    }
  }

  const json* get(const std::string& key) const {
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::string where(const std::string& key) const {
    return prefix_.empty() && key.empty() ? "config " : "'" + prefix_ + key + "' ";
  }

  std::optional<std::string> str(const std::string& key) const {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ConfigError(where(key) + "must be a string");
    return v->get<std::string>();
  }

  std::optional<double> number(const std::string& key) const {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) throw ConfigError(where(key) + "must be a number");
    return v->get<double>();
  }

  std::optional<std::uint64_t> count(const std::string& key) const {
    const json* v = get(key);
    if (!v) return std::nullopt;
    return as_count(*v, key);
  }

  std::optional<bool> boolean(const std::string& key) const {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) throw ConfigError(where(key) + "must be true or false");
    return v->get<bool>();
  }

  /// A single count or a list of them.
  std::optional<std::vector<std::size_t>> counts(const std::string& key) const {
    const json* v = get(key);
    if (!v) return std::nullopt;
    std::vector<std::size_t> out;
    if (v->is_array()) {
      for (const auto& e : *v) out.push_back(as_count(e, key));
    } else {
      out.push_back(as_count(*v, key));
    }
    return out;
  }

  std::optional<std::vector<std::string>> strings(const std::string& key) const {
    const json* v = get(key);
    if (!v) return std::nullopt;
    std::vector<std::string> out;
    if (!v->is_array()) throw ConfigError(where(key) + "must be a list of strings");
    for (const auto& e : *v) {
      if (!e.is_string()) throw ConfigError(where(key) + "must be a list of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  std::optional<std::vector<double>> numbers(const std::string& key) const {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) throw ConfigError(where(key) + "must be a list of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
      if (!e.is_number()) throw ConfigError(where(key) + "must be a list of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  const std::string& prefix() const { return prefix_; }

 private:
  std::size_t as_count(const json& v, const std::string& key) const {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError(where(key) + "must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  const json& obj_;
  std::string prefix_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

StepKind parse_step_kind(const std::string& s) {
  if (s == "harmonic") return StepKind::kHarmonic;
  if (s == "constant") return StepKind::kConstant;
  if (s == "shrink_on_violation") return StepKind::kShrinkOnViolation;
  throw ConfigError("'solver.schedule' must be harmonic, constant or shrink_on_violation, got '" +
                    s + "'");
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }

  const Reader top(root, "",
                   {"experiment", "methods", "oracle_mode", "comparisons_per_iter", "n_stocks",
                    "n_agents", "n_scenarios", "seed", "solver", "transform", "output", "format",
                    "threads", "timing", "toy", "formation", "portfolio"});
  ExperimentConfig cfg;

  if (auto s = top.str("experiment")) {
    auto k = experiment_from_string(*s);
    if (!k) throw ConfigError("'experiment' must be toy, formation or portfolio, got '" + *s + "'");
    cfg.experiment = *k;
  } else {
    throw ConfigError("'experiment' is required");
  }
  if (auto list = top.strings("methods")) {
    for (const auto& m : *list) {
      auto id = method_id_from_string(m);
      if (!id) throw ConfigError("unknown method '" + m + "' in 'methods'");
      if (std::find(cfg.methods.begin(), cfg.methods.end(), *id) == cfg.methods.end()) {
        cfg.methods.push_back(*id);
      }
    }
    if (cfg.methods.empty()) throw ConfigError("'methods' must not be empty");
  }
  if (auto s = top.str("oracle_mode")) {
    if (*s == "exact") {
      cfg.oracle_mode = OracleMode::kExact;
    } else if (*s == "comparison") {
      cfg.oracle_mode = OracleMode::kComparison;
    } else {
      throw ConfigError("'oracle_mode' must be exact or comparison, got '" + *s + "'");
    }
  }
  if (auto v = top.counts("comparisons_per_iter")) cfg.comparisons_per_iter = *v;
  if (auto v = top.counts("n_stocks")) cfg.n_stocks = *v;
  if (auto v = top.counts("n_agents")) cfg.n_agents = *v;
  if (auto v = top.count("n_scenarios")) cfg.n_scenarios = *v;
  if (auto v = top.count("seed")) cfg.seed = *v;
  if (auto v = top.count("threads")) cfg.threads = *v;
  if (auto v = top.boolean("timing")) cfg.timing = *v;
  if (auto s = top.str("output")) cfg.output = resolve(base_dir, *s);
  if (auto s = top.str("format")) {
    if (*s == "jsonl") {
      cfg.format = OutputFormat::kJsonl;
    } else if (*s == "csv") {
      cfg.format = OutputFormat::kCsv;
    } else {
      throw ConfigError("'format' must be jsonl or csv, got '" + *s + "'");
    }
  }

  if (const json* s = top.get("solver")) {
    const Reader r(*s, "solver.", {"max_iters", "tol", "alpha0", "schedule"});
    if (auto v = r.count("max_iters")) cfg.solver.max_iters = *v;
    cfg.solver.tol = r.number("tol");
    cfg.solver.alpha0 = r.number("alpha0");
    if (auto v = r.str("schedule")) cfg.solver.schedule = parse_step_kind(*v);
  }

  if (const json* t = top.get("transform")) {
    const Reader r(*t, "transform.", {"kind", "exponent", "agents"});
    TransformSpec spec;
    const auto kind = r.str("kind");
    if (!kind) throw ConfigError("'transform.kind' is required");
    auto parsed = transform_from_string(*kind);
    if (!parsed) {
      throw ConfigError("'transform.kind' must be signed_square, power or cubic_plus_linear");
    }
    spec.transform = *parsed;
    if (auto e = r.number("exponent")) {
      if (spec.transform.kind != MonotoneTransform::Kind::kPower) {
        throw ConfigError("'transform.exponent' applies only to the power transform");
      }
      spec.transform.exponent = *e;
    }
    if (auto a = r.counts("agents")) spec.agents = *a;
    cfg.transform = spec;
  }

  if (const json* t = top.get("toy")) {
    const Reader r(*t, "toy.", {"starts"});
    if (auto v = r.numbers("starts")) cfg.toy_starts = *v;
  }
  if (const json* f = top.get("formation")) {
    const Reader r(*f, "formation.", {"trajectory_stride", "trajectory_output"});
    if (auto v = r.count("trajectory_stride")) cfg.trajectory_stride = *v;
    if (auto s = r.str("trajectory_output")) cfg.trajectory_output = resolve(base_dir, *s);
  }
  if (const json* p = top.get("portfolio")) {
    const Reader r(*p, "portfolio.",
                   {"prices_csv", "synthetic_stocks", "synthetic_days", "windows", "lambda_max",
                    "smoothing_radius", "summary_output"});
    if (auto s = r.str("prices_csv")) cfg.prices_csv = resolve(base_dir, *s);
    if (auto v = r.count("synthetic_stocks")) cfg.synthetic_stocks = *v;
    if (auto v = r.count("synthetic_days")) cfg.synthetic_days = *v;
    if (auto list = r.strings("windows")) {
      for (const auto& w : *list) {
        auto win = window_from_string(w);
        if (!win) throw ConfigError("unknown window '" + w + "' in 'portfolio.windows'");
        cfg.windows.push_back(*win);
      }
    }
    if (auto v = r.number("lambda_max")) cfg.lambda_max = *v;
    if (auto v = r.number("smoothing_radius")) cfg.smoothing_radius = *v;
    if (auto s = r.str("summary_output")) cfg.summary_output = resolve(base_dir, *s);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

void ExperimentConfig::finalize() {
  const bool portfolio = experiment == ExperimentKind::kPortfolio;
  if (methods.empty()) {
    switch (experiment) {
      case ExperimentKind::kToy:
        methods = {MethodId::kDibs, MethodId::kNaive, MethodId::kNbs, MethodId::kKsbs};
        break;
      case ExperimentKind::kFormation:
        methods = {MethodId::kDibs, MethodId::kNbs};
        break;
      case ExperimentKind::kPortfolio:
        methods = {MethodId::kDibs};
        break;
    }
  }
  if (n_scenarios < 1) throw ConfigError("'n_scenarios' must be at least 1");
  if (portfolio && !seed) throw ConfigError("'seed' is required for the portfolio experiment");
  if (oracle_mode == OracleMode::kComparison && !seed) {
    throw ConfigError("'seed' is required when oracle_mode is comparison");
  }
  if (!seed) seed = 0;
  if (oracle_mode == OracleMode::kComparison && comparisons_per_iter.empty()) {
    comparisons_per_iter = portfolio ? std::vector<std::size_t>{1, 10, 100, 1000}
                                     : std::vector<std::size_t>{100};
  }
  for (auto q : comparisons_per_iter) {
    if (q < 1) throw ConfigError("'comparisons_per_iter' entries must be at least 1");
  }
  if (!(smoothing_radius > 0)) throw ConfigError("'portfolio.smoothing_radius' must be positive");

  switch (experiment) {
    case ExperimentKind::kToy:
      if (!n_stocks.empty() || !n_agents.empty()) {
        throw ConfigError("'n_stocks' and 'n_agents' do not apply to the toy experiment");
      }
      for (double x : toy_starts) {
        if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("'toy.starts' must lie in [0, 1]");
      }
      break;
    case ExperimentKind::kFormation:
      if (!n_stocks.empty()) throw ConfigError("'n_stocks' does not apply to formation");
      if (n_agents.empty()) n_agents = {10};
      for (auto n : n_agents) {
        if (n < 2 || n % 2 != 0) throw ConfigError("formation 'n_agents' must be even and >= 2");
      }
      if (n_scenarios != 1) {
        throw ConfigError("formation runs are deterministic; 'n_scenarios' must be 1");
      }
      break;
    case ExperimentKind::kPortfolio:
      if (n_stocks.empty()) n_stocks = {5, 10};
      if (n_agents.empty()) n_agents = {2, 3, 5, 10};
      for (auto n : n_stocks) {
        if (n < 2) throw ConfigError("'n_stocks' entries must be at least 2");
      }
      for (auto n : n_agents) {
        if (n < 1) throw ConfigError("'n_agents' entries must be at least 1");
      }
      for (auto m : methods) {
        if (m != MethodId::kDibs && m != MethodId::kNaive) {
          throw ConfigError("portfolio supports the dibs and naive methods only");
        }
      }
      if (windows.empty()) windows.assign(std::begin(kAllWindows), std::end(kAllWindows));
      if (!(lambda_max >= 0.0 && lambda_max <= 0.1)) {
        throw ConfigError("'portfolio.lambda_max' must lie in [0, 0.1]");
      }
      if (!prices_csv) {
        const auto most = *std::max_element(n_stocks.begin(), n_stocks.end());
        if (synthetic_stocks < most) {
          throw ConfigError("'portfolio.synthetic_stocks' is smaller than the largest n_stocks");
        }
        if (synthetic_days < 10) throw ConfigError("'portfolio.synthetic_days' must be >= 10");
      }
      break;
  }

  if (solver.max_iters && *solver.max_iters < 1) {
    throw ConfigError("'solver.max_iters' must be at least 1");
  }
  if (solver.tol && !(*solver.tol > 0)) throw ConfigError("'solver.tol' must be positive");
  if (solver.alpha0 && !(*solver.alpha0 > 0)) throw ConfigError("'solver.alpha0' must be positive");
  if (transform && transform->transform.kind == MonotoneTransform::Kind::kPower &&
      !(transform->transform.exponent > 1.0)) {
    throw ConfigError("'transform.exponent' must exceed 1");
  }
}

}  // namespace bargain
