#ifndef DGP_HARNESS_HPP
#define DGP_HARNESS_HPP

#include "dgp/bandit.hpp"
#include "dgp/kernels.hpp"
#include "dgp/objectives.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dgp {

enum class ExperimentKind { kRegressionCompare, kBanditCompare };
enum class ObjectiveType { kSynthetic, kSir, kWeather };

std::string to_string(ExperimentKind kind);
std::string to_string(ObjectiveType type);

struct SyntheticSettings {
  std::size_t components = 10;
  KernelFamily kernel = KernelFamily::kSquaredExponential;
  std::size_t grid_size = 1000;

  bool operator==(const SyntheticSettings&) const = default;
};

struct SirSettings {
  std::vector<double> populations;  // empty: built-in defaults
  std::vector<double> susceptibility;
  double infected_fraction = 1e-4;
  double recovery_rate = 0.25;
  double vaccine_efficacy = 0.9;
  int horizon_days = 365;
  double timestep = 0.25;
  std::string contact_file;  // empty: synthetic matrix
  std::size_t grid_size = 500;
  double budget = 0.3;
  std::size_t fit_samples = 300;
  double noise_variance = 1e-4;

  bool operator==(const SirSettings&) const = default;
};

struct WeatherSettings {
  std::string sensor_file = "data/sensors_synthetic.csv";
  double fit_fraction = 1.0 / 3.0;
  double noise_variance = 1e-4;

  bool operator==(const WeatherSettings&) const = default;
};

/// One experiment, read from an INI-style file:
///
///   [experiment]  kind, strategies, trials, horizon, delta, seed, output,
///                 beta_divisor, beta_mode, xi, schedule
///   [objective]   type = synthetic | sir | weather
///   [synthetic] [sir] [weather]  objective parameters
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kBanditCompare;
  ObjectiveType objective = ObjectiveType::kSynthetic;
  std::vector<Strategy> strategies = {Strategy::kGpUcb, Strategy::kDecomposedUcb};
  int trials = 30;
  int horizon = 100;
  double delta = 0.05;
  std::uint64_t seed = 1;
  std::string output = "results/experiment.csv";
  double beta_divisor = 5.0;
  std::optional<BetaMode> beta_mode;  // default depends on the objective
  double xi = 0.01;
  std::vector<int> schedule = {5, 20, 50};  // sample sizes of a regression comparison
  SyntheticSettings synthetic;
  SirSettings sir;
  WeatherSettings weather;

  /// Throws ConfigError. Does not touch the file system.
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_experiment_config(const std::string& text);
std::string serialize_experiment_config(const ExperimentConfig& config);

/// Parses a file; relative data paths are resolved against its directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

SirModel sir_model_from_settings(const SirSettings& settings);

/// The beta schedule used for an objective unless the config overrides it.
BetaMode default_beta_mode(ObjectiveType type);

/// Continuous-domain schedule constants of an objective type.
ContinuousBetaParams continuous_params(ObjectiveType type);

/// The objective of one trial; identical for every strategy of that trial.
DecomposedObjective build_objective(const ExperimentConfig& config, int trial);

/// One row per (strategy, trial, t). Unset cells are written empty.
struct ResultRow {
  std::string strategy;
  int trial = 0;
  int t = 0;
  std::optional<double> cumulative_regret;
  std::optional<double> average_regret;
  std::optional<double> rmse;
  std::optional<double> beta;
  std::optional<double> coverage;

  bool operator==(const ResultRow&) const = default;
};

/// Per-run diagnostics of a bandit comparison.
struct RunDiagnostics {
  std::string strategy;
  int trial = 0;
  double optimum_value = 0.0;
  double cumulative_regret = 0.0;
  std::optional<double> certificate;
  std::optional<double> coverage;
  std::optional<double> regret_within_bound;
  std::size_t event_rounds = 0;
  std::size_t event_violations = 0;
};

struct ResultTable {
  std::vector<ResultRow> rows;
  std::vector<RunDiagnostics> runs;

  /// Sorts rows by (strategy, trial, t) and runs by (strategy, trial).
  void sort();
};

struct SummaryStat {
  std::size_t count = 0;
  double mean = 0.0;
  double standard_error = 0.0;
};

struct SummaryRow {
  std::string strategy;
  int t = 0;
  std::optional<SummaryStat> cumulative_regret;
  std::optional<SummaryStat> average_regret;
  std::optional<SummaryStat> rmse;
  std::optional<SummaryStat> beta;
  std::optional<SummaryStat> coverage;
};

/// Mean and standard error over trials for every (strategy, t).
std::vector<SummaryRow> summarize(const ResultTable& table);

/// Rows "standard" and "decomposed" carry the RMSE over the grid for every
/// trial and sample size in the schedule.
ResultTable run_regression_experiment(const ExperimentConfig& config);

/// Mean over trials of 100 (rmse_standard - rmse_decomposed) / rmse_standard at sample size t.
double mean_rmse_improvement(const ResultTable& table, int t);

ResultTable run_bandit_experiment(const ExperimentConfig& config);

/// Writes `path`, `<stem>_summary.csv` next to it, and `<stem>_runs.csv` when
/// the table has run diagnostics. Returns the paths written.
std::vector<std::filesystem::path> emit_results(const ResultTable& table, const std::filesystem::path& path);

/// Reads the rows of a file written by emit_results.
ResultTable read_results_csv(const std::filesystem::path& path);

std::filesystem::path summary_path(const std::filesystem::path& path);
std::filesystem::path runs_path(const std::filesystem::path& path);

}  // namespace dgp

#endif  // DGP_HARNESS_HPP
