#include "dgp/harness.hpp"

#include "dgp/decomposed_regression.hpp"
#include "dgp/errors.hpp"
#include "dgp/gp_core.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

namespace dgp {
namespace {

namespace pt = boost::property_tree;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(trim(text.substr(start, pos == std::string_view::npos ? text.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError("'" + key + "' expects a number, got '" + text + "'");
  }
  return v;
}

template <typename Int>
Int to_integer(const std::string& key, const std::string& text) {
  Int v{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError("'" + key + "' expects an integer, got '" + text + "'");
  }
  return v;
}

std::vector<double> to_double_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, ',')) out.push_back(to_double(key, item));
  return out;
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_double(values[i]);
  return out;
}

// Reads every key of one section through a visitor; unknown keys are errors.
class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  template <typename F>
  void read(const std::string& key, F&& apply) {
    known_.insert(key);
    if (!tree_) return;
    if (auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'))) {
      apply(name_ + "." + key, trim(*v));
    }
  }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_) {
      if (!known_.count(key)) throw ConfigError("unknown key '" + key + "' in [" + name_ + "]");
    }
  }

 private:
  std::string name_;
  const pt::ptree* tree_;
  std::set<std::string> known_;
};

struct Writer {
  std::ostringstream out;
  void section(const std::string& name) { out << (out.tellp() > 0 ? "\n" : "") << '[' << name << "]\n"; }
  void put(const std::string& key, const std::string& value) { out << key << " = " << value << '\n'; }
};

ExperimentKind parse_kind(const std::string& key, const std::string& v) {
  if (v == "regression_compare") return ExperimentKind::kRegressionCompare;
  if (v == "bandit_compare") return ExperimentKind::kBanditCompare;
  throw ConfigError("'" + key + "' must be regression_compare or bandit_compare, got '" + v + "'");
}

ObjectiveType parse_objective(const std::string& key, const std::string& v) {
  if (v == "synthetic") return ObjectiveType::kSynthetic;
  if (v == "sir") return ObjectiveType::kSir;
  if (v == "weather") return ObjectiveType::kWeather;
  throw ConfigError("'" + key + "' must be synthetic, sir or weather, got '" + v + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& file) {
  if (file.empty()) return {};
  const std::filesystem::path p(file);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

std::vector<double> mean_prediction(const BatchPrediction& p) {
  return std::vector<double>(p.mean.data(), p.mean.data() + p.mean.size());
}

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::optional<double> parse_cell(const std::string& text, int line) {
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw FormatError("bad numeric cell '" + text + "'", line);
  return v;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw FileError("cannot write results", path.string());
  return out;
}

SummaryStat stat_of(const std::vector<double>& values) {
  SummaryStat s;
  s.count = values.size();
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.standard_error = std::sqrt(ss / static_cast<double>(values.size() - 1)) /
                       std::sqrt(static_cast<double>(values.size()));
  }
  return s;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  return kind == ExperimentKind::kRegressionCompare ? "regression_compare" : "bandit_compare";
}

std::string to_string(ObjectiveType type) {
  switch (type) {
    case ObjectiveType::kSynthetic:
      return "synthetic";
    case ObjectiveType::kSir:
      return "sir";
    case ObjectiveType::kWeather:
      return "weather";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (!(beta_divisor > 0.0)) throw ConfigError("beta_divisor must be positive");
  if (!(xi >= 0.0)) throw ConfigError("xi must be nonnegative");
  if (output.empty()) throw ConfigError("output path is empty");
  if (kind == ExperimentKind::kBanditCompare) {
    if (strategies.empty()) throw ConfigError("a bandit comparison needs at least one strategy");
    const bool linear = objective != ObjectiveType::kWeather;
    for (Strategy s : strategies) {
      if (s == Strategy::kDecomposedUcb && !linear) {
        throw ConfigError("d-gpucb needs a linear decomposition; the weather objective is general");
      }
      if (s == Strategy::kGeneralizedUcb && linear) {
        throw ConfigError("generalized-d-gpucb needs a general decomposition; " + to_string(objective) +
                          " is linear");
      }
    }
  } else {
    if (objective == ObjectiveType::kWeather) {
      throw ConfigError("regression comparison needs a linear decomposition; the weather objective is general");
    }
    if (schedule.empty()) throw ConfigError("regression comparison needs a nonempty schedule");
    for (int t : schedule) {
      if (t < 1) throw ConfigError("schedule sample sizes must be positive");
    }
  }
  if (synthetic.components < 1) throw ConfigError("synthetic components must be at least 1");
  if (synthetic.grid_size < 1) throw ConfigError("synthetic grid_size must be at least 1");
  if (objective == ObjectiveType::kSir) {
    SirSettings without_file = sir;
    without_file.contact_file.clear();
    sir_model_from_settings(without_file).validate();
  }
  if (sir.grid_size < 1 || sir.fit_samples < 2) throw ConfigError("sir grid_size / fit_samples too small");
  if (!(sir.budget > 0.0 && sir.budget <= 1.0)) throw ConfigError("sir budget must lie in (0, 1]");
  if (!(sir.noise_variance > 0.0) || !(weather.noise_variance > 0.0)) {
    throw ConfigError("observation noise variances must be positive");
  }
  if (!(weather.fit_fraction > 0.0 && weather.fit_fraction < 1.0)) {
    throw ConfigError("weather fit_fraction must lie in (0, 1)");
  }
  if (objective == ObjectiveType::kWeather && weather.sensor_file.empty()) {
    throw ConfigError("weather objective needs a sensor_file");
  }
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  static const std::set<std::string> sections = {"experiment", "objective", "synthetic", "sir", "weather"};
  for (const auto& [name, child] : tree) {
    if (!child.data().empty()) throw ConfigError("key '" + name + "' appears outside any section");
    if (!sections.count(name)) throw ConfigError("unknown section [" + name + "]");
  }
  auto child = [&](const std::string& name) { return tree.get_child_optional(name).get_ptr(); };

  ExperimentConfig c;
  Section ex("experiment", child("experiment"));
  ex.read("kind", [&](const auto& k, const auto& v) { c.kind = parse_kind(k, v); });
  ex.read("strategies", [&](const auto&, const auto& v) {
    c.strategies.clear();
    for (const auto& s : split(v, ',')) c.strategies.push_back(parse_strategy(s));
  });
  ex.read("trials", [&](const auto& k, const auto& v) { c.trials = to_integer<int>(k, v); });
  ex.read("horizon", [&](const auto& k, const auto& v) { c.horizon = to_integer<int>(k, v); });
  ex.read("delta", [&](const auto& k, const auto& v) { c.delta = to_double(k, v); });
  ex.read("seed", [&](const auto& k, const auto& v) { c.seed = to_integer<std::uint64_t>(k, v); });
  ex.read("output", [&](const auto&, const auto& v) { c.output = v; });
  ex.read("beta_divisor", [&](const auto& k, const auto& v) { c.beta_divisor = to_double(k, v); });
  ex.read("beta_mode", [&](const auto&, const auto& v) { c.beta_mode = parse_beta_mode(v); });
  ex.read("xi", [&](const auto& k, const auto& v) { c.xi = to_double(k, v); });
  ex.read("schedule", [&](const auto& k, const auto& v) {
    c.schedule.clear();
    for (const auto& s : split(v, ',')) c.schedule.push_back(to_integer<int>(k, s));
  });
  ex.reject_unknown();

  Section ob("objective", child("objective"));
  ob.read("type", [&](const auto& k, const auto& v) { c.objective = parse_objective(k, v); });
  ob.reject_unknown();

  Section sy("synthetic", child("synthetic"));
  sy.read("components", [&](const auto& k, const auto& v) { c.synthetic.components = to_integer<std::size_t>(k, v); });
  sy.read("kernel", [&](const auto&, const auto& v) { c.synthetic.kernel = parse_kernel_family(v); });
  sy.read("grid_size", [&](const auto& k, const auto& v) { c.synthetic.grid_size = to_integer<std::size_t>(k, v); });
  sy.reject_unknown();

  Section si("sir", child("sir"));
  si.read("populations", [&](const auto& k, const auto& v) { c.sir.populations = to_double_list(k, v); });
  si.read("susceptibility", [&](const auto& k, const auto& v) { c.sir.susceptibility = to_double_list(k, v); });
  si.read("infected_fraction", [&](const auto& k, const auto& v) { c.sir.infected_fraction = to_double(k, v); });
  si.read("recovery_rate", [&](const auto& k, const auto& v) { c.sir.recovery_rate = to_double(k, v); });
  si.read("vaccine_efficacy", [&](const auto& k, const auto& v) { c.sir.vaccine_efficacy = to_double(k, v); });
  si.read("horizon_days", [&](const auto& k, const auto& v) { c.sir.horizon_days = to_integer<int>(k, v); });
  si.read("timestep", [&](const auto& k, const auto& v) { c.sir.timestep = to_double(k, v); });
  si.read("contact_file", [&](const auto&, const auto& v) { c.sir.contact_file = v; });
  si.read("grid_size", [&](const auto& k, const auto& v) { c.sir.grid_size = to_integer<std::size_t>(k, v); });
  si.read("budget", [&](const auto& k, const auto& v) { c.sir.budget = to_double(k, v); });
  si.read("fit_samples", [&](const auto& k, const auto& v) { c.sir.fit_samples = to_integer<std::size_t>(k, v); });
  si.read("noise_variance", [&](const auto& k, const auto& v) { c.sir.noise_variance = to_double(k, v); });
  si.reject_unknown();

  Section we("weather", child("weather"));
  we.read("sensor_file", [&](const auto&, const auto& v) { c.weather.sensor_file = v; });
  we.read("fit_fraction", [&](const auto& k, const auto& v) { c.weather.fit_fraction = to_double(k, v); });
  we.read("noise_variance", [&](const auto& k, const auto& v) { c.weather.noise_variance = to_double(k, v); });
  we.reject_unknown();

  c.validate();
  return c;
}

std::string serialize_experiment_config(const ExperimentConfig& c) {
  Writer w;
  w.section("experiment");
  w.put("kind", to_string(c.kind));
  std::string strategies;
  for (std::size_t i = 0; i < c.strategies.size(); ++i) strategies += (i ? "," : "") + to_string(c.strategies[i]);
  w.put("strategies", strategies);
  w.put("trials", std::to_string(c.trials));
  w.put("horizon", std::to_string(c.horizon));
  w.put("delta", format_double(c.delta));
  w.put("seed", std::to_string(c.seed));
  w.put("output", c.output);
  w.put("beta_divisor", format_double(c.beta_divisor));
  if (c.beta_mode) w.put("beta_mode", to_string(*c.beta_mode));
  w.put("xi", format_double(c.xi));
  std::string schedule;
  for (std::size_t i = 0; i < c.schedule.size(); ++i) schedule += (i ? "," : "") + std::to_string(c.schedule[i]);
  w.put("schedule", schedule);

  w.section("objective");
  w.put("type", to_string(c.objective));

  w.section("synthetic");
  w.put("components", std::to_string(c.synthetic.components));
  w.put("kernel", to_string(c.synthetic.kernel));
  w.put("grid_size", std::to_string(c.synthetic.grid_size));

  w.section("sir");
  w.put("populations", join_doubles(c.sir.populations));
  w.put("susceptibility", join_doubles(c.sir.susceptibility));
  w.put("infected_fraction", format_double(c.sir.infected_fraction));
  w.put("recovery_rate", format_double(c.sir.recovery_rate));
  w.put("vaccine_efficacy", format_double(c.sir.vaccine_efficacy));
  w.put("horizon_days", std::to_string(c.sir.horizon_days));
  w.put("timestep", format_double(c.sir.timestep));
  w.put("contact_file", c.sir.contact_file);
  w.put("grid_size", std::to_string(c.sir.grid_size));
  w.put("budget", format_double(c.sir.budget));
  w.put("fit_samples", std::to_string(c.sir.fit_samples));
  w.put("noise_variance", format_double(c.sir.noise_variance));

  w.section("weather");
  w.put("sensor_file", c.weather.sensor_file);
  w.put("fit_fraction", format_double(c.weather.fit_fraction));
  w.put("noise_variance", format_double(c.weather.noise_variance));
  return w.out.str();
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open config", path.string());
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentConfig c = parse_experiment_config(text.str());
  const auto base = path.parent_path();
  c.weather.sensor_file = resolve(base, c.weather.sensor_file).string();
  c.sir.contact_file = resolve(base, c.sir.contact_file).string();
  return c;
}

SirModel sir_model_from_settings(const SirSettings& s) {
  SirModel m = SirModel::default_model();
  std::vector<double> populations = m.populations();
  if (!s.populations.empty()) {
    populations = s.populations;
    m.group_labels.clear();
  }
  if (!(s.infected_fraction >= 0.0 && s.infected_fraction <= 1.0)) {
    throw ConfigError("sir infected_fraction must lie in [0, 1]");
  }
  m.initial_susceptible.clear();
  m.initial_infected.clear();
  for (double n : populations) {
    m.initial_infected.push_back(s.infected_fraction * n);
    m.initial_susceptible.push_back(n - s.infected_fraction * n);
  }
  if (!s.susceptibility.empty()) m.susceptibility = s.susceptibility;
  m.contact_matrix = s.contact_file.empty() ? synthetic_contact_matrix(populations.size())
                                            : load_contact_matrix(s.contact_file);
  m.recovery_rate = s.recovery_rate;
  m.vaccine_efficacy = s.vaccine_efficacy;
  m.horizon_days = s.horizon_days;
  m.timestep = s.timestep;
  return m;
}

BetaMode default_beta_mode(ObjectiveType type) {
  switch (type) {
    case ObjectiveType::kSynthetic:
      return BetaMode::kDiscreteLinear;
    case ObjectiveType::kSir:
      return BetaMode::kContinuous;
    case ObjectiveType::kWeather:
      return BetaMode::kDiscreteGeneral;
  }
  return BetaMode::kDiscreteLinear;
}

ContinuousBetaParams continuous_params(ObjectiveType type) {
  ContinuousBetaParams p;
  if (type == ObjectiveType::kSir) {
    p.dimension = 5.0;
    p.r = std::sqrt(5.0);
  } else if (type == ObjectiveType::kWeather) {
    p.dimension = 2.0;
    p.r = std::numbers::sqrt2;
  }
  return p;
}

DecomposedObjective build_objective(const ExperimentConfig& config, int trial) {
  const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(trial), 0);
  switch (config.objective) {
    case ObjectiveType::kSynthetic:
      return synthetic_objective(seed, config.synthetic.components, config.synthetic.kernel,
                                 unit_interval_grid(config.synthetic.grid_size));
    case ObjectiveType::kSir: {
      SirObjectiveOptions options;
      options.grid_size = config.sir.grid_size;
      options.budget = config.sir.budget;
      options.fit_samples = config.sir.fit_samples;
      options.noise_variance = config.sir.noise_variance;
      return make_sir_objective(sir_model_from_settings(config.sir), options, seed);
    }
    case ObjectiveType::kWeather: {
      const auto records = load_sensor_csv(config.weather.sensor_file);
      WeatherObjectiveOptions options;
      options.fit_fraction = config.weather.fit_fraction;
      options.noise_variance = config.weather.noise_variance;
      return make_weather_objective(records, options, seed);
    }
  }
  throw ConfigError("unknown objective type");
}

void ResultTable::sort() {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.strategy, a.trial, a.t) < std::tie(b.strategy, b.trial, b.t);
  });
  std::stable_sort(runs.begin(), runs.end(), [](const RunDiagnostics& a, const RunDiagnostics& b) {
    return std::tie(a.strategy, a.trial) < std::tie(b.strategy, b.trial);
  });
}

std::vector<SummaryRow> summarize(const ResultTable& table) {
  struct Columns {
    std::vector<double> cumulative, average, rmse, beta, coverage;
  };
  std::map<std::pair<std::string, int>, Columns> groups;
  for (const auto& r : table.rows) {
    auto& g = groups[{r.strategy, r.t}];
    if (r.cumulative_regret) g.cumulative.push_back(*r.cumulative_regret);
    if (r.average_regret) g.average.push_back(*r.average_regret);
    if (r.rmse) g.rmse.push_back(*r.rmse);
    if (r.beta) g.beta.push_back(*r.beta);
    if (r.coverage) g.coverage.push_back(*r.coverage);
  }
  auto stat = [](const std::vector<double>& v) -> std::optional<SummaryStat> {
    if (v.empty()) return std::nullopt;
    return stat_of(v);
  };
  std::vector<SummaryRow> out;
  for (const auto& [key, g] : groups) {
    SummaryRow s;
    s.strategy = key.first;
    s.t = key.second;
    s.cumulative_regret = stat(g.cumulative);
    s.average_regret = stat(g.average);
    s.rmse = stat(g.rmse);
    s.beta = stat(g.beta);
    s.coverage = stat(g.coverage);
    out.push_back(std::move(s));
  }
  return out;
}

ResultTable run_regression_experiment(const ExperimentConfig& config) {
  config.validate();
  if (config.kind != ExperimentKind::kRegressionCompare) {
    throw ConfigError("run_regression_experiment needs kind = regression_compare");
  }
  ResultTable table;
  for (int trial = 0; trial < config.trials; ++trial) {
    const DecomposedObjective objective = build_objective(config, trial);
    const auto& decomposition = std::get<LinearDecomposition>(objective.decomposition);
    const Eigen::VectorXd truth_vec = objective.values();
    const std::vector<double> truth(truth_vec.data(), truth_vec.data() + truth_vec.size());
    const std::size_t J = objective.components();
    for (int T : config.schedule) {
      if (static_cast<std::size_t>(T) > objective.grid.size()) {
        throw ConfigError("schedule size " + std::to_string(T) + " exceeds the grid size");
      }
      std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(trial), 1000 + static_cast<std::uint64_t>(T)));
      std::vector<std::size_t> indices(objective.grid.size());
      std::iota(indices.begin(), indices.end(), 0);
      std::shuffle(indices.begin(), indices.end(), rng);
      std::normal_distribution<double> normal;

      Dataset data;
      data.observations.resize(T, static_cast<Eigen::Index>(J));
      data.noise_variances = objective.noise_variances;
      for (int t = 0; t < T; ++t) {
        const std::size_t i = indices[static_cast<std::size_t>(t)];
        data.points.push_back(objective.grid[i]);
        for (std::size_t j = 0; j < J; ++j) {
          data.observations(t, static_cast<Eigen::Index>(j)) =
              objective.component_truth(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +
              std::sqrt(objective.noise_variances[j]) * normal(rng);
        }
      }
      const auto standard = mean_prediction(fit_standard(decomposition, data).predict(objective.grid));
      const auto decomposed = mean_prediction(fit_decomposed(decomposition, data).predict(objective.grid));
      for (const auto& [name, mean] : {std::pair{"decomposed", &decomposed}, std::pair{"standard", &standard}}) {
        ResultRow row;
        row.strategy = name;
        row.trial = trial;
        row.t = T;
        row.rmse = rmse(*mean, truth);
        table.rows.push_back(std::move(row));
      }
    }
  }
  table.sort();
  return table;
}

double mean_rmse_improvement(const ResultTable& table, int t) {
  std::map<int, std::pair<std::optional<double>, std::optional<double>>> by_trial;
  for (const auto& r : table.rows) {
    if (r.t != t || !r.rmse) continue;
    if (r.strategy == "standard") by_trial[r.trial].first = r.rmse;
    if (r.strategy == "decomposed") by_trial[r.trial].second = r.rmse;
  }
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& [trial, pair] : by_trial) {
    if (!pair.first || !pair.second || *pair.first <= 0.0) continue;
    total += 100.0 * (*pair.first - *pair.second) / *pair.first;
    ++count;
  }
  if (count == 0) throw InputError("no paired regression rows at t = " + std::to_string(t));
  return total / static_cast<double>(count);
}

ResultTable run_bandit_experiment(const ExperimentConfig& config) {
  config.validate();
  if (config.kind != ExperimentKind::kBanditCompare) {
    throw ConfigError("run_bandit_experiment needs kind = bandit_compare");
  }
  ResultTable table;
  for (int trial = 0; trial < config.trials; ++trial) {
    const DecomposedObjective objective = build_objective(config, trial);
    std::optional<double> certificate;
    for (Strategy strategy : config.strategies) {
      BanditConfig bc;
      bc.horizon = config.horizon;
      bc.delta = config.delta;
      bc.beta_mode = config.beta_mode.value_or(default_beta_mode(config.objective));
      bc.beta_divisor = config.beta_divisor;
      bc.continuous = continuous_params(config.objective);
      bc.xi = config.xi;
      bc.seed = derive_seed(config.seed, static_cast<std::uint64_t>(trial),
                            100 + static_cast<std::uint64_t>(strategy));
      const BanditTrace trace = run_bandit(objective, strategy, bc);
      const RegretMetrics metrics = regret_metrics(trace, trace.optimum_value);
      const bool ucb = strategy == Strategy::kGpUcb || uses_decomposition(strategy);
      const std::string name = to_string(strategy);

      std::optional<CoverageStatistics> coverage;
      if (ucb) coverage = coverage_statistics(trace, [&](std::size_t i) { return objective.value(i); });
      for (std::size_t t = 0; t < trace.rounds(); ++t) {
        ResultRow row;
        row.strategy = name;
        row.trial = trial;
        row.t = static_cast<int>(t + 1);
        row.cumulative_regret = metrics.cumulative[t];
        row.average_regret = metrics.average[t];
        if (ucb) {
          row.beta = trace.betas[t];
          const double f = trace.noise_free[t];
          row.coverage = std::abs(f - trace.predicted_mean[t]) <= std::sqrt(trace.betas[t]) * trace.predicted_sd[t]
                             ? 1.0
                             : 0.0;
        }
        table.rows.push_back(std::move(row));
      }

      RunDiagnostics run;
      run.strategy = name;
      run.trial = trial;
      run.optimum_value = trace.optimum_value;
      run.cumulative_regret = metrics.cumulative.back();
      if (uses_decomposition(strategy)) {
        if (!certificate) certificate = run_certificate(objective, bc);
        run.certificate = certificate;
      }
      if (coverage) {
        run.coverage = coverage->coverage;
        run.regret_within_bound = coverage->regret_within_bound;
        run.event_rounds = coverage->event_rounds;
        run.event_violations = coverage->event_violations;
      }
      table.runs.push_back(std::move(run));
    }
  }
  table.sort();
  return table;
}

std::filesystem::path summary_path(const std::filesystem::path& path) {
  return path.parent_path() / (path.stem().string() + "_summary" + path.extension().string());
}

std::filesystem::path runs_path(const std::filesystem::path& path) {
  return path.parent_path() / (path.stem().string() + "_runs" + path.extension().string());
}

std::vector<std::filesystem::path> emit_results(const ResultTable& input, const std::filesystem::path& path) {
  ResultTable table = input;
  table.sort();
  std::vector<std::filesystem::path> written;

  {
    std::ofstream out = open_output(path);
    out << "strategy,trial,t,cumulative_regret,average_regret,rmse,beta,coverage\n";
    for (const auto& r : table.rows) {
      out << r.strategy << ',' << r.trial << ',' << r.t << ',' << cell(r.cumulative_regret) << ','
          << cell(r.average_regret) << ',' << cell(r.rmse) << ',' << cell(r.beta) << ',' << cell(r.coverage)
          << '\n';
    }
    if (!out) throw FileError("write failed", path.string());
    written.push_back(path);
  }

  {
    const auto p = summary_path(path);
    std::ofstream out = open_output(p);
    out << "strategy,t";
    for (const char* c : {"cumulative_regret", "average_regret", "rmse", "beta", "coverage"}) {
      out << ',' << c << "_mean," << c << "_se";
    }
    out << ",trials\n";
    for (const auto& s : summarize(table)) {
      out << s.strategy << ',' << s.t;
      std::size_t count = 0;
      for (const auto* stat : {&s.cumulative_regret, &s.average_regret, &s.rmse, &s.beta, &s.coverage}) {
        if (*stat) {
          out << ',' << format_double((*stat)->mean) << ',' << format_double((*stat)->standard_error);
          count = std::max(count, (*stat)->count);
        } else {
          out << ",,";
        }
      }
      out << ',' << count << '\n';
    }
    if (!out) throw FileError("write failed", p.string());
    written.push_back(p);
  }

  if (!table.runs.empty()) {
    const auto p = runs_path(path);
    std::ofstream out = open_output(p);
    out << "strategy,trial,optimum_value,cumulative_regret,certificate,coverage,regret_within_bound,"
           "event_rounds,event_violations\n";
    for (const auto& r : table.runs) {
      out << r.strategy << ',' << r.trial << ',' << format_double(r.optimum_value) << ','
          << format_double(r.cumulative_regret) << ',' << cell(r.certificate) << ',' << cell(r.coverage) << ','
          << cell(r.regret_within_bound) << ',' << r.event_rounds << ',' << r.event_violations << '\n';
    }
    if (!out) throw FileError("write failed", p.string());
    written.push_back(p);
  }
  return written;
}

ResultTable read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open results", path.string());
  ResultTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "strategy,trial,t,cumulative_regret,average_regret,rmse,beta,coverage") {
        throw FormatError("unexpected results header", line_no);
      }
      continue;
    }
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) throw FormatError("expected 8 columns", line_no);
    ResultRow r;
    r.strategy = f[0];
    try {
      r.trial = std::stoi(f[1]);
      r.t = std::stoi(f[2]);
    } catch (const std::exception&) {
      throw FormatError("bad trial or t", line_no);
    }
    r.cumulative_regret = parse_cell(f[3], line_no);
    r.average_regret = parse_cell(f[4], line_no);
    r.rmse = parse_cell(f[5], line_no);
    r.beta = parse_cell(f[6], line_no);
    r.coverage = parse_cell(f[7], line_no);
    table.rows.push_back(std::move(r));
  }
  if (line_no == 0) throw FormatError("empty results file", 1);
  return table;
}

}  // namespace dgp
