// Command-line front end: regression and bandit comparisons, the flu and
// weather experiments, and a quick self-check.

#include "dgp/bandit.hpp"
#include "dgp/decomposed_regression.hpp"
#include "dgp/errors.hpp"
#include "dgp/gp_core.hpp"
#include "dgp/harness.hpp"
#include "dgp/objectives.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>

namespace {

using namespace dgp;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> trials;
  std::optional<int> horizon;
};

void add_common_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Experiment config file (INI)");
  cmd->add_option("--seed", o.seed, "Base seed");
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_option("--trials", o.trials, "Number of trials")->check(CLI::PositiveNumber);
  cmd->add_option("--horizon", o.horizon, "Rounds per bandit run")->check(CLI::PositiveNumber);
}

ExperimentConfig default_config(const std::string& command) {
  ExperimentConfig c;
  if (command == "regress") {
    c.kind = ExperimentKind::kRegressionCompare;
    c.trials = 100;
    c.output = "results/regression.csv";
  } else if (command == "bandit") {
    c.strategies = {Strategy::kGpUcb, Strategy::kDecomposedUcb, Strategy::kExpectedImprovement,
                    Strategy::kProbabilityOfImprovement};
    c.output = "results/synthetic_bandit.csv";
  } else if (command == "flu") {
    c.objective = ObjectiveType::kSir;
    c.strategies = {Strategy::kGpUcb, Strategy::kDecomposedUcb, Strategy::kExpectedImprovement,
                    Strategy::kProbabilityOfImprovement};
    c.output = "results/flu.csv";
  } else if (command == "weather") {
    c.objective = ObjectiveType::kWeather;
    c.strategies = {Strategy::kGpUcb, Strategy::kGeneralizedUcb, Strategy::kExpectedImprovement,
                    Strategy::kProbabilityOfImprovement};
    c.output = "results/weather.csv";
  }
  return c;
}

ExperimentConfig resolve_config(const std::string& command, const Overrides& o) {
  ExperimentConfig c = default_config(command);
  if (!o.config.empty()) {
    try {
      c = load_experiment_config(o.config);
    } catch (const FileError& e) {
      throw ConfigError(e.what());
    }
  }
  if (o.seed) c.seed = *o.seed;
  if (o.trials) c.trials = *o.trials;
  if (o.horizon) c.horizon = *o.horizon;
  if (!o.out_dir.empty()) {
    c.output = (std::filesystem::path(o.out_dir) / std::filesystem::path(c.output).filename()).string();
  }
  if (command == "regress" && c.kind != ExperimentKind::kRegressionCompare) {
    throw ConfigError("regress needs kind = regression_compare");
  }
  if (command != "regress" && c.kind != ExperimentKind::kBanditCompare) {
    throw ConfigError(command + " needs kind = bandit_compare");
  }
  if (command == "flu" && c.objective != ObjectiveType::kSir) throw ConfigError("flu needs objective type sir");
  if (command == "weather" && c.objective != ObjectiveType::kWeather) {
    throw ConfigError("weather needs objective type weather");
  }
  c.validate();
  return c;
}

void report_written(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) std::cout << "wrote " << p.string() << '\n';
}

int run_regress(const Overrides& o) {
  const ExperimentConfig c = resolve_config("regress", o);
  const ResultTable table = run_regression_experiment(c);
  report_written(emit_results(table, c.output));
  for (int t : c.schedule) {
    std::printf("T=%-4d mean RMSE improvement %.2f%%\n", t, mean_rmse_improvement(table, t));
  }
  return kExitOk;
}

int run_bandit_command(const std::string& command, const Overrides& o) {
  const ExperimentConfig c = resolve_config(command, o);
  const ResultTable table = run_bandit_experiment(c);
  report_written(emit_results(table, c.output));
  for (const auto& s : summarize(table)) {
    if (s.t != c.horizon || !s.cumulative_regret) continue;
    std::printf("%-22s R_T mean %.4f (se %.4f)  R_T/T %.5f\n", s.strategy.c_str(), s.cumulative_regret->mean,
                s.cumulative_regret->standard_error, s.average_regret->mean);
  }
  return kExitOk;
}

struct Check {
  int failures = 0;
  void operator()(bool ok, const std::string& name, const std::string& detail) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << '\n';
    failures += ok ? 0 : 1;
  }
};

LinearDecomposition random_decomposition(std::mt19937_64& rng, std::size_t J) {
  std::uniform_real_distribution<double> scale(0.1, 1.0), weight(-2.0, 2.0);
  std::vector<KernelSpec> kernels;
  for (std::size_t j = 0; j < J; ++j) {
    switch (j % 3) {
      case 0:
        kernels.push_back(KernelSpec::squared_exponential(scale(rng)));
        break;
      case 1:
        kernels.push_back(KernelSpec::matern(1.5, scale(rng)));
        break;
      default:
        kernels.push_back(KernelSpec::rational_quadratic(2.0, scale(rng)));
        break;
    }
  }
  LinearDecomposition d;
  d.component_kernels = kernels;
  for (std::size_t j = 0; j < J; ++j) {
    const double a = weight(rng), b = weight(rng);
    d.weights.push_back([a, b](const Point& x) { return a + b * x(0); });
    d.weight_bounds.push_back(std::abs(a) + std::abs(b));
  }
  return d;
}

Dataset random_dataset(std::mt19937_64& rng, std::size_t J, int T) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  Dataset data;
  data.observations.resize(T, static_cast<Eigen::Index>(J));
  data.noise_variances.assign(J, 1e-2);
  for (int t = 0; t < T; ++t) {
    data.points.push_back(Point::Constant(1, unit(rng)));
    for (std::size_t j = 0; j < J; ++j) data.observations(t, static_cast<Eigen::Index>(j)) = normal(rng);
  }
  return data;
}

int run_validate(std::uint64_t seed) {
  Check check;
  std::mt19937_64 rng(seed);

  const Point origin = Point::Zero(1), one = Point::Ones(1);
  check(std::abs(eval_kernel(KernelSpec::squared_exponential(1.0), origin, one) - std::exp(-0.5)) < 1e-12,
        "kernel", "squared exponential at unit distance");
  check(std::abs(eval_kernel(KernelSpec::matern(0.5, 1.0), origin, one) - std::exp(-1.0)) < 1e-12, "kernel",
        "Matern 1/2 at unit distance");
  check(std::abs(eval_kernel(KernelSpec::rational_quadratic(1.0, 1.0), origin, one) - 2.0 / 3.0) < 1e-12,
        "kernel", "rational quadratic at unit distance");
  const double pi2 = M_PI * M_PI;
  check(std::abs(beta_schedule(BetaMode::kDiscreteLinear, 1, 1000, 1, 0.05, {}, 1.0) -
                 2.0 * std::log(1000.0 * pi2 / 0.3)) < 1e-10,
        "beta",
        "discrete schedule, |X| = 1000, t = 1");

  int dominance_failures = 0, equivalence_failures = 0;
  for (int instance = 0; instance < 20; ++instance) {
    const std::size_t J = 2 + static_cast<std::size_t>(instance % 5);
    const int T = 1 + instance * 2;
    const LinearDecomposition d = random_decomposition(rng, J);
    const Dataset data = random_dataset(rng, J, T);
    const DecomposedPosterior decomposed = fit_decomposed(d, data);
    const Posterior standard = fit_standard(d, data);
    for (int probe = 0; probe < 5; ++probe) {
      const Point x = Point::Constant(1, std::uniform_real_distribution<double>(0.0, 1.0)(rng));
      const VarianceOracles v = variance_oracles(d, data, x);
      if (v.decomposed > v.entire + 1e-8) ++dominance_failures;
      const double direct = standard.predict(x).variance;
      if (std::abs(direct - v.entire) > 1e-6 * std::max(1.0, std::abs(direct))) ++equivalence_failures;
      if (std::abs(decomposed.predict(x).variance - v.decomposed) > 1e-8) ++equivalence_failures;
    }
  }
  check(dominance_failures == 0, "variance dominance", std::to_string(dominance_failures) + " violations in 100 probes");
  check(equivalence_failures == 0, "variance oracles",
        std::to_string(equivalence_failures) + " mismatches against direct regression");

  const SirModel model = SirModel::default_model();
  const std::vector<double> zeros(model.group_count(), 0.0), half(model.group_count(), 0.5);
  const SirTrajectory traj = simulate_sir_trajectory(model, half);
  double drift = 0.0;
  const Eigen::VectorXd start = traj.susceptible.row(0) + traj.infected.row(0) + traj.recovered.row(0);
  for (Eigen::Index s = 0; s < traj.susceptible.rows(); ++s) {
    const Eigen::VectorXd now = traj.susceptible.row(s) + traj.infected.row(s) + traj.recovered.row(s);
    drift = std::max(drift, ((now - start).array().abs() / start.array()).maxCoeff());
  }
  check(drift < 1e-9, "SIR conservation", "max relative drift " + std::to_string(drift));
  check(simulate_sir(model, half).total <= simulate_sir(model, zeros).total, "SIR vaccination",
        "vaccinating half of every group lowers sick days");

  std::cout << (check.failures == 0 ? "all checks passed" : std::to_string(check.failures) + " checks failed")
            << '\n';
  return check.failures == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-process regression and bandit optimization with decomposed feedback"};
  app.require_subcommand(1);

  Overrides regress_o, bandit_o, flu_o, weather_o;
  auto* regress = app.add_subcommand("regress", "Standard vs decomposed regression RMSE");
  add_common_flags(regress, regress_o);
  auto* bandit = app.add_subcommand("bandit", "Bandit strategy comparison on a synthetic objective");
  add_common_flags(bandit, bandit_o);
  auto* flu = app.add_subcommand("flu", "Vaccination policy search on the age-stratified SIR model");
  add_common_flags(flu, flu_o);
  auto* weather = app.add_subcommand("weather", "Hottest perceived temperature over sensor records");
  add_common_flags(weather, weather_o);
  std::string synthesize_path;
  std::size_t synthesize_count = 300;
  weather->add_option("--synthesize", synthesize_path, "Write synthetic sensor records to this CSV and exit");
  weather->add_option("--count", synthesize_count, "Number of synthetic records")->check(CLI::PositiveNumber);
  auto* validate = app.add_subcommand("validate", "Quick oracle and invariant checks");
  std::uint64_t validate_seed = 7;
  validate->add_option("--seed", validate_seed, "Seed of the random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*regress) return run_regress(regress_o);
    if (*bandit) return run_bandit_command("bandit", bandit_o);
    if (*flu) return run_bandit_command("flu", flu_o);
    if (*weather) {
      if (!synthesize_path.empty()) {
        const std::uint64_t seed = weather_o.seed.value_or(2017);
        write_sensor_csv(synthesize_path, synthesize_sensor_records(synthesize_count, seed));
        std::cout << "wrote " << synthesize_path << '\n';
        return kExitOk;
      }
      return run_bandit_command("weather", weather_o);
    }
    if (*validate) return run_validate(validate_seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
