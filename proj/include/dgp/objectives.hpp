#ifndef DGP_OBJECTIVES_HPP
#define DGP_OBJECTIVES_HPP

#include "dgp/bandit.hpp"
#include "dgp/kernels.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dgp {

/// splitmix64 finalizer over a base seed and two stream identifiers.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// `size` evenly spaced points on [0, 1], endpoints included.
PointSet unit_interval_grid(std::size_t size = 1000);

// ---------------------------------------------------------------------------
// Age-stratified SIR model

/// Symmetric contact matrix with unit row sums, heavier on the diagonal and
/// decaying with age-group distance.
Eigen::MatrixXd synthetic_contact_matrix(std::size_t groups);

/// Square matrix of nonnegative numbers, one comma-separated row per line.
Eigen::MatrixXd load_contact_matrix(const std::filesystem::path& path);

struct SirModel {
  std::vector<std::string> group_labels;
  std::vector<double> initial_susceptible;
  std::vector<double> initial_infected;
  Eigen::MatrixXd contact_matrix;
  std::vector<double> susceptibility;
  double recovery_rate = 0.25;
  double vaccine_efficacy = 0.9;
  int horizon_days = 365;
  double timestep = 0.25;

  /// Five age groups (0-19, 20-49, 50-64, 65-69, 70+) sized like the US
  /// population, 1e-4 initially infected, synthetic contact matrix.
  static SirModel default_model();

  std::size_t group_count() const { return initial_susceptible.size(); }
  std::vector<double> populations() const;

  /// Throws ConfigError on inconsistent sizes or out-of-range parameters.
  void validate() const;
};

struct SirOutcome {
  std::vector<double> per_group;  // sick days contributed by group j, per person of the whole population
  double total = 0.0;
};

/// Compartment sizes after each step; row 0 is the state right after vaccination.
struct SirTrajectory {
  Eigen::MatrixXd susceptible;
  Eigen::MatrixXd infected;
  Eigen::MatrixXd recovered;
  SirOutcome outcome;
};

SirTrajectory simulate_sir_trajectory(const SirModel& model, std::span<const double> vaccination);
SirOutcome simulate_sir(const SirModel& model, std::span<const double> vaccination);

struct SirObjectiveOptions {
  std::size_t grid_size = 500;
  /// Largest population-weighted vaccination coverage of a candidate policy.
  double budget = 0.3;
  std::size_t fit_samples = 300;
  double noise_variance = 1e-4;
};

/// Vaccination policies on a random budget-feasible grid. Components are the
/// per-group sick days standardized on separate fit samples, so the objective
/// (negated sick days, up to a constant) is sum_j -scale_j * f_j. Each
/// component gets a squared-exponential kernel with a length scale chosen by
/// marginal likelihood on the fit samples.
DecomposedObjective make_sir_objective(const SirModel& model, const SirObjectiveOptions& options,
                                       std::uint64_t seed);

// ---------------------------------------------------------------------------
// Perceived temperature

/// Fahrenheit. Heat index (Rothfusz regression) at or above 80 F, wind chill
/// at or below 50 F, the air temperature in between.
double perceived_temperature(double temperature_f, double humidity_pct, double wind_mph);

struct SensorRecord {
  std::string sensor_id;
  double latitude = 0.0;
  double longitude = 0.0;
  double temperature = 0.0;
  double humidity = 0.0;
  double wind_speed = 0.0;

  bool operator==(const SensorRecord&) const = default;
};

std::vector<SensorRecord> load_sensor_csv(const std::filesystem::path& path);
void write_sensor_csv(const std::filesystem::path& path, std::span<const SensorRecord> records);

/// Smooth synthetic weather fields sampled at random continental-US locations.
std::vector<SensorRecord> synthesize_sensor_records(std::size_t count, std::uint64_t seed);

using Combiner = std::function<double(std::span<const double>)>;

/// max over sampled points and box corners of |dg/df_j| by central differences, times 1.1.
std::vector<double> gradient_bounds(const Combiner& g, std::span<const std::pair<double, double>> ranges,
                                    std::size_t samples, std::uint64_t seed = 0);

/// Same estimate taken only at the given component-value vectors.
std::vector<double> gradient_bounds_at(const Combiner& g, std::span<const std::vector<double>> points);

struct WeatherObjectiveOptions {
  double fit_fraction = 1.0 / 3.0;
  double noise_variance = 1e-4;
  std::size_t gradient_samples = 2000;
  /// B_j from the component values of the fit split rather than from random
  /// points of their bounding box.
  bool bounds_from_fit_split = true;
};

/// A random fit_fraction of the sensors standardizes the three components and
/// selects their kernels; the rest form the candidate set. Inputs are
/// latitude/longitude rescaled to the unit box of the whole record set.
DecomposedObjective make_weather_objective(std::span<const SensorRecord> records,
                                           const WeatherObjectiveOptions& options, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic

/// J components drawn from zero-mean GPs with log-uniform length scales in
/// [0.05, 0.5], unit weights, noise 1e-4 per component.
DecomposedObjective synthetic_objective(std::uint64_t seed, std::size_t components, KernelFamily family,
                                        const PointSet& grid);

}  // namespace dgp

#endif  // DGP_OBJECTIVES_HPP
