#include "dgp/objectives.hpp"

#include "dgp/errors.hpp"
#include "dgp/gp_core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace dgp {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_commas(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(const std::string& text, double& value) {
  if (text.empty()) return false;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end && std::isfinite(value);
}

struct Standardizer {
  double mean = 0.0;
  double scale = 1.0;
};

Standardizer fit_standardizer(std::span<const double> values) {
  Standardizer s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size()));
  s.scale = sd > 1e-12 ? sd : 1.0;
  return s;
}

KernelSpec fit_se_kernel(const PointSet& points, std::span<const double> values, double noise) {
  const LengthScaleFit fit = select_length_scale(KernelSpec::squared_exponential(1.0), points, values,
                                                 std::max(noise, 1e-6));
  return KernelSpec::squared_exponential(fit.length_scale);
}

double fahrenheit_to_celsius(double f) { return (f - 32.0) * 5.0 / 9.0; }
double celsius_to_fahrenheit(double c) { return c * 9.0 / 5.0 + 32.0; }

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

PointSet unit_interval_grid(std::size_t size) {
  if (size == 0) throw InputError("grid size must be positive");
  PointSet grid;
  grid.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    Point p(1);
    p(0) = size == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(size - 1);
    grid.push_back(p);
  }
  return grid;
}

Eigen::MatrixXd synthetic_contact_matrix(std::size_t groups) {
  if (groups == 0) throw ConfigError("contact matrix needs at least one group");
  const auto n = static_cast<Eigen::Index>(groups);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      a(i, j) = std::exp(-0.7 * static_cast<double>(std::abs(i - j))) + (i == j ? 1.5 : 0.0);
    }
  }
  // Symmetric Sinkhorn scaling D A D to unit row sums.
  Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
  for (int iter = 0; iter < 1000; ++iter) {
    const Eigen::VectorXd rows = d.asDiagonal() * a * d;
    if ((rows.array() - 1.0).abs().maxCoeff() < 1e-15) break;
    d = (d.array() / rows.array().sqrt()).matrix();
  }
  Eigen::MatrixXd c = d.asDiagonal() * a * d.asDiagonal();
  return 0.5 * (c + c.transpose());
}

Eigen::MatrixXd load_contact_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open contact matrix", path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const auto& field : split_commas(line)) {
      double v = 0.0;
      if (!parse_double(field, v) || v < 0.0) {
        throw FormatError("contact matrix entries must be nonnegative numbers", line_no);
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("contact matrix file has no rows");
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != n) {
      throw InputError("contact matrix must be square");
    }
    for (Eigen::Index j = 0; j < n; ++j) c(i, j) = rows[i][j];
  }
  return c;
}

SirModel SirModel::default_model() {
  SirModel m;
  m.group_labels = {"0-19", "20-49", "50-64", "65-69", "70+"};
  const std::vector<double> populations = {83.3e6, 126.9e6, 61.3e6, 15.8e6, 27.4e6};
  constexpr double infected_fraction = 1e-4;
  for (double n : populations) {
    m.initial_infected.push_back(infected_fraction * n);
    m.initial_susceptible.push_back(n - infected_fraction * n);
  }
  m.contact_matrix = synthetic_contact_matrix(populations.size());
  m.susceptibility = {0.40, 0.34, 0.30, 0.28, 0.26};
  return m;
}

std::vector<double> SirModel::populations() const {
  std::vector<double> n(group_count());
  for (std::size_t j = 0; j < n.size(); ++j) n[j] = initial_susceptible[j] + initial_infected[j];
  return n;
}

void SirModel::validate() const {
  const std::size_t n = group_count();
  if (n == 0) throw ConfigError("SIR model needs at least one group");
  if (initial_infected.size() != n || susceptibility.size() != n) {
    throw ConfigError("SIR per-group lists must all have " + std::to_string(n) + " entries");
  }
  if (!group_labels.empty() && group_labels.size() != n) {
    throw ConfigError("SIR group labels must match the group count");
  }
  if (contact_matrix.rows() != static_cast<Eigen::Index>(n) || contact_matrix.cols() != static_cast<Eigen::Index>(n)) {
    throw ConfigError("SIR contact matrix must be " + std::to_string(n) + " x " + std::to_string(n));
  }
  if ((contact_matrix.array() < 0.0).any() || !contact_matrix.allFinite()) {
    throw ConfigError("SIR contact matrix must be finite and nonnegative");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!(initial_susceptible[j] >= 0.0) || !(initial_infected[j] >= 0.0) || !(susceptibility[j] >= 0.0)) {
      throw ConfigError("SIR populations and susceptibilities must be nonnegative");
    }
  }
  if (!(recovery_rate > 0.0 && recovery_rate <= 1.0)) throw ConfigError("recovery rate must lie in (0, 1]");
  if (!(vaccine_efficacy > 0.0 && vaccine_efficacy <= 1.0)) {
    throw ConfigError("vaccine efficacy must lie in (0, 1]");
  }
  if (horizon_days < 1) throw ConfigError("SIR horizon must be at least one day");
  if (!(timestep > 0.0)) throw ConfigError("SIR timestep must be positive");
}

SirTrajectory simulate_sir_trajectory(const SirModel& model, std::span<const double> vaccination) {
  model.validate();
  const std::size_t n = model.group_count();
  if (vaccination.size() != n) {
    throw InputError("vaccination vector has " + std::to_string(vaccination.size()) + " entries, expected " +
                     std::to_string(n));
  }
  for (double x : vaccination) {
    if (!(x >= 0.0 && x <= 1.0)) throw InputError("vaccination rates must lie in [0, 1]");
  }
  const auto groups = static_cast<Eigen::Index>(n);
  const auto steps = static_cast<Eigen::Index>(std::ceil(model.horizon_days / model.timestep - 1e-9));
  const double dt = model.timestep;
  const std::vector<double> population = model.populations();
  double total_population = std::accumulate(population.begin(), population.end(), 0.0);

  Eigen::VectorXd s(groups), i(groups), r(groups);
  for (Eigen::Index j = 0; j < groups; ++j) {
    const double moved = vaccination[j] * model.vaccine_efficacy * model.initial_susceptible[j];
    s(j) = model.initial_susceptible[j] - moved;
    i(j) = model.initial_infected[j];
    r(j) = moved;
  }

  SirTrajectory out;
  out.susceptible.resize(steps + 1, groups);
  out.infected.resize(steps + 1, groups);
  out.recovered.resize(steps + 1, groups);
  out.susceptible.row(0) = s;
  out.infected.row(0) = i;
  out.recovered.row(0) = r;

  Eigen::VectorXd sick_days = Eigen::VectorXd::Zero(groups);
  Eigen::VectorXd prevalence(groups);
  for (Eigen::Index step = 1; step <= steps; ++step) {
    for (Eigen::Index j = 0; j < groups; ++j) {
      prevalence(j) = population[j] > 0.0 ? i(j) / population[j] : 0.0;
    }
    const Eigen::VectorXd pressure = model.contact_matrix * prevalence;
    for (Eigen::Index j = 0; j < groups; ++j) {
      sick_days(j) += i(j) * dt;
      const double infections = model.susceptibility[j] * s(j) * pressure(j) * dt;
      const double recoveries = model.recovery_rate * i(j) * dt;
      s(j) -= infections;
      i(j) += infections - recoveries;
      r(j) += recoveries;
      if (s(j) < 0.0 || i(j) < 0.0) {
        throw NumericalError("SIR populations went negative at step " + std::to_string(step) +
                             "; reduce the timestep");
      }
    }
    out.susceptible.row(step) = s;
    out.infected.row(step) = i;
    out.recovered.row(step) = r;
  }

  out.outcome.per_group.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.outcome.per_group[j] =
        total_population > 0.0 ? sick_days(static_cast<Eigen::Index>(j)) / total_population : 0.0;
  }
  out.outcome.total = std::accumulate(out.outcome.per_group.begin(), out.outcome.per_group.end(), 0.0);
  return out;
}

SirOutcome simulate_sir(const SirModel& model, std::span<const double> vaccination) {
  return simulate_sir_trajectory(model, vaccination).outcome;
}

DecomposedObjective make_sir_objective(const SirModel& model, const SirObjectiveOptions& options,
                                       std::uint64_t seed) {
  model.validate();
  if (options.grid_size == 0 || options.fit_samples < 2) {
    throw ConfigError("SIR objective needs a nonempty grid and at least two fit samples");
  }
  if (!(options.budget > 0.0 && options.budget <= 1.0)) {
    throw ConfigError("vaccination budget must lie in (0, 1]");
  }
  if (!(options.noise_variance > 0.0)) throw ConfigError("SIR observation noise must be positive");

  const std::size_t J = model.group_count();
  const std::vector<double> population = model.populations();
  const double total = std::accumulate(population.begin(), population.end(), 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw_policy = [&] {
    Point x(static_cast<Eigen::Index>(J));
    double coverage = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      x(static_cast<Eigen::Index>(j)) = unit(rng);
      coverage += population[j] * x(static_cast<Eigen::Index>(j)) / total;
    }
    // Policies over budget are shrunk towards zero onto the budget boundary.
    const double limit = options.budget * unit(rng);
    if (coverage > limit && coverage > 0.0) x *= limit / coverage;
    return x;
  };
  auto evaluate = [&](const PointSet& points) {
    Eigen::MatrixXd table(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(J));
    for (std::size_t i = 0; i < points.size(); ++i) {
      const SirOutcome o = simulate_sir(model, std::span<const double>(points[i].data(), J));
      for (std::size_t j = 0; j < J; ++j) table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = o.per_group[j];
    }
    return table;
  };

  PointSet fit_points, grid;
  for (std::size_t k = 0; k < options.fit_samples; ++k) fit_points.push_back(draw_policy());
  for (std::size_t k = 0; k < options.grid_size; ++k) grid.push_back(draw_policy());
  const Eigen::MatrixXd fit_raw = evaluate(fit_points);
  const Eigen::MatrixXd grid_raw = evaluate(grid);

  DecomposedObjective objective;
  objective.name = "sir";
  objective.grid = grid;
  objective.component_truth.resize(grid_raw.rows(), grid_raw.cols());
  LinearDecomposition decomposition;
  for (std::size_t j = 0; j < J; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const Eigen::VectorXd fit_col = fit_raw.col(col);
    const Standardizer z = fit_standardizer(std::span<const double>(fit_col.data(), fit_col.size()));
    const Eigen::VectorXd fit_std = (fit_col.array() - z.mean) / z.scale;
    objective.component_truth.col(col) = (grid_raw.col(col).array() - z.mean) / z.scale;
    const KernelSpec kernel =
        fit_se_kernel(fit_points, std::span<const double>(fit_std.data(), fit_std.size()), options.noise_variance);
    objective.component_kernels.push_back(kernel);
    decomposition.component_kernels.push_back(kernel);
    const double weight = -z.scale;
    decomposition.weights.push_back([weight](const Point&) { return weight; });
    decomposition.weight_bounds.push_back(z.scale);
    objective.noise_variances.push_back(options.noise_variance);
  }
  objective.decomposition = std::move(decomposition);
  objective.validate();
  return objective;
}

double perceived_temperature(double temperature_f, double humidity_pct, double wind_mph) {
  if (!(humidity_pct >= 0.0 && humidity_pct <= 100.0)) {
    throw InputError("humidity must lie in [0, 100] percent");
  }
  if (!(wind_mph >= 0.0)) throw InputError("wind speed must be nonnegative");
  if (!std::isfinite(temperature_f)) throw InputError("temperature must be finite");
  const double t = temperature_f;
  if (t >= 80.0) {
    const double h = humidity_pct;
    return -42.379 + 2.04901523 * t + 10.14333127 * h - 0.22475541 * t * h - 6.83783e-3 * t * t -
           5.481717e-2 * h * h + 1.22874e-3 * t * t * h + 8.5282e-4 * t * h * h - 1.99e-6 * t * t * h * h;
  }
  if (t <= 50.0) {
    const double c = fahrenheit_to_celsius(t);
    // The regression is fitted for winds of at least 3 mph; calmer air counts as 3 mph.
    const double v = std::pow(std::max(wind_mph, 3.0) * 1.609344, 0.16);
    return celsius_to_fahrenheit(13.12 + 0.6215 * c - 11.37 * v + 0.3965 * c * v);
  }
  return t;
}

std::vector<SensorRecord> load_sensor_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open sensor file", path.string());
  static const std::vector<std::string> header = {"sensor_id", "lat", "lon", "temperature", "humidity",
                                                  "wind_speed"};
  std::vector<SensorRecord> records;
  std::string line;
  int line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    if (!seen_header) {
      if (fields != header) {
        throw FormatError("expected header sensor_id,lat,lon,temperature,humidity,wind_speed", line_no);
      }
      seen_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw FormatError("expected 6 columns, found " + std::to_string(fields.size()), line_no);
    }
    SensorRecord r;
    r.sensor_id = fields[0];
    double* targets[] = {&r.latitude, &r.longitude, &r.temperature, &r.humidity, &r.wind_speed};
    for (std::size_t k = 0; k < 5; ++k) {
      if (!parse_double(fields[k + 1], *targets[k])) {
        throw FormatError("column '" + header[k + 1] + "' is not a finite number: '" + fields[k + 1] + "'",
                          line_no);
      }
    }
    if (r.humidity < 0.0 || r.humidity > 100.0) {
      throw FormatError("humidity " + fields[4] + " is outside [0, 100]", line_no);
    }
    if (r.wind_speed < 0.0) throw FormatError("wind speed " + fields[5] + " is negative", line_no);
    records.push_back(std::move(r));
  }
  if (!seen_header) throw FormatError("missing header", line_no == 0 ? 1 : line_no);
  if (records.empty()) throw InputError("sensor file " + path.string() + " has no records");
  return records;
}

void write_sensor_csv(const std::filesystem::path& path, std::span<const SensorRecord> records) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write sensor file", path.string());
  out << "sensor_id,lat,lon,temperature,humidity,wind_speed\n";
  char buf[64];
  auto put = [&](double v) {
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
  };
  for (const auto& r : records) {
    out << r.sensor_id;
    for (double v : {r.latitude, r.longitude, r.temperature, r.humidity, r.wind_speed}) {
      out << ',';
      put(v);
    }
    out << '\n';
  }
  if (!out) throw FileError("write failed", path.string());
}

std::vector<SensorRecord> synthesize_sensor_records(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lat_dist(25.0, 49.0), lon_dist(-124.0, -67.0);
  std::normal_distribution<double> jitter(0.0, 1.0);
  auto round_to = [](double v, double digits) { const double k = std::pow(10.0, digits); return std::round(v * k) / k; };
  std::vector<SensorRecord> records;
  records.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double lat = lat_dist(rng);
    const double lon = lon_dist(rng);
    // Warm south, a hot interior desert, a humid south-east, windy plains.
    const double desert = std::exp(-((lon + 112.0) * (lon + 112.0) / 320.0 + (lat - 33.0) * (lat - 33.0) / 96.0));
    const double gulf = std::exp(-((lon + 88.0) * (lon + 88.0) / 480.0 + (lat - 29.0) * (lat - 29.0) / 120.0));
    const double plains = std::exp(-((lon + 99.0) * (lon + 99.0) / 240.0 + (lat - 41.0) * (lat - 41.0) / 120.0));
    const double temperature = 92.0 - 2.2 * (lat - 25.0) + 10.0 * desert + 4.0 * gulf + 0.1 * jitter(rng);
    const double humidity =
        std::clamp(35.0 + 45.0 * gulf + 10.0 * std::sin((lon + 67.0) / 24.0) - 25.0 * desert + 0.3 * jitter(rng),
                   2.0, 100.0);
    const double wind = std::max(0.0, 6.0 + 12.0 * plains + 2.0 * std::cos(lat / 10.0) + 0.05 * jitter(rng));
    SensorRecord r;
    r.sensor_id = "s" + std::to_string(k + 1);
    r.latitude = round_to(lat, 4);
    r.longitude = round_to(lon, 4);
    r.temperature = round_to(temperature, 2);
    r.humidity = round_to(humidity, 2);
    r.wind_speed = round_to(wind, 2);
    records.push_back(std::move(r));
  }
  return records;
}

namespace {

// 1.1 * max over probes of |dg/df_j| by central differences with step scale[j] * 1e-6.
std::vector<double> max_partial_derivatives(const Combiner& g, std::vector<std::vector<double>> probes,
                                            std::span<const double> scale) {
  auto evaluate = [&](const std::vector<double>& p) {
    const double v = g(p);
    if (!std::isfinite(v)) throw InputError("gradient_bounds: combiner returned a non-finite value");
    return v;
  };
  std::vector<double> bounds(scale.size(), 0.0);
  for (auto& p : probes) {
    for (std::size_t j = 0; j < scale.size(); ++j) {
      const double h = 1e-6 * std::max(1.0, std::max(scale[j], std::abs(p[j])));
      const double centre = p[j];
      p[j] = centre + h;
      const double up = evaluate(p);
      p[j] = centre - h;
      const double down = evaluate(p);
      p[j] = centre;
      bounds[j] = std::max(bounds[j], std::abs(up - down) / (2.0 * h));
    }
  }
  for (double& b : bounds) b *= 1.1;
  return bounds;
}

}  // namespace

std::vector<double> gradient_bounds(const Combiner& g, std::span<const std::pair<double, double>> ranges,
                                    std::size_t samples, std::uint64_t seed) {
  if (!g) throw ConfigError("gradient_bounds: empty combiner");
  if (ranges.empty()) throw InputError("gradient_bounds: no input ranges");
  if (samples < 100) throw InputError("gradient_bounds: at least 100 samples are required");
  for (const auto& [lo, hi] : ranges) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
      throw InputError("gradient_bounds: ranges must be finite with lo <= hi");
    }
  }
  const std::size_t J = ranges.size();
  std::vector<std::vector<double>> probes;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t s = 0; s < samples; ++s) {
    std::vector<double> p(J);
    for (std::size_t j = 0; j < J; ++j) p[j] = ranges[j].first + unit(rng) * (ranges[j].second - ranges[j].first);
    probes.push_back(std::move(p));
  }
  if (J <= 12) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << J); ++mask) {
      std::vector<double> p(J);
      for (std::size_t j = 0; j < J; ++j) p[j] = (mask >> j) & 1U ? ranges[j].second : ranges[j].first;
      probes.push_back(std::move(p));
    }
  }
  std::vector<double> widths;
  for (const auto& [lo, hi] : ranges) widths.push_back(hi - lo);
  return max_partial_derivatives(g, std::move(probes), widths);
}

std::vector<double> gradient_bounds_at(const Combiner& g, std::span<const std::vector<double>> points) {
  if (!g) throw ConfigError("gradient_bounds: empty combiner");
  if (points.empty()) throw InputError("gradient_bounds: no points");
  const std::size_t J = points.front().size();
  if (J == 0) throw InputError("gradient_bounds: points have no components");
  std::vector<double> widths(J, 0.0);
  for (const auto& p : points) {
    if (p.size() != J) throw InputError("gradient_bounds: points differ in length");
    for (std::size_t j = 0; j < J; ++j) {
      if (!std::isfinite(p[j])) throw InputError("gradient_bounds: non-finite point");
      widths[j] = std::max(widths[j], std::abs(p[j]));
    }
  }
  return max_partial_derivatives(g, std::vector<std::vector<double>>(points.begin(), points.end()), widths);
}

DecomposedObjective make_weather_objective(std::span<const SensorRecord> records,
                                           const WeatherObjectiveOptions& options, std::uint64_t seed) {
  if (!(options.fit_fraction > 0.0 && options.fit_fraction < 1.0)) {
    throw ConfigError("weather fit fraction must lie in (0, 1)");
  }
  if (!(options.noise_variance > 0.0)) throw ConfigError("weather observation noise must be positive");
  const auto fit_count = static_cast<std::size_t>(std::round(options.fit_fraction * static_cast<double>(records.size())));
  if (fit_count < 2 || records.size() - fit_count < 1) {
    throw InputError("weather objective needs more sensor records (got " + std::to_string(records.size()) + ")");
  }

  double lat_lo = records[0].latitude, lat_hi = lat_lo, lon_lo = records[0].longitude, lon_hi = lon_lo;
  for (const auto& r : records) {
    lat_lo = std::min(lat_lo, r.latitude);
    lat_hi = std::max(lat_hi, r.latitude);
    lon_lo = std::min(lon_lo, r.longitude);
    lon_hi = std::max(lon_hi, r.longitude);
  }
  const double span = std::max({lat_hi - lat_lo, lon_hi - lon_lo, 1e-9});
  auto location = [&](const SensorRecord& r) {
    Point p(2);
    p << (r.latitude - lat_lo) / span, (r.longitude - lon_lo) / span;
    return p;
  };
  auto raw = [](const SensorRecord& r, std::size_t j) {
    return j == 0 ? r.temperature : j == 1 ? r.humidity : r.wind_speed;
  };

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::vector<std::size_t> fit(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(fit_count));
  const std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(fit_count), order.end());

  constexpr std::size_t J = 3;
  PointSet fit_points;
  for (std::size_t k : fit) fit_points.push_back(location(records[k]));

  DecomposedObjective objective;
  objective.name = "weather";
  for (std::size_t k : rest) objective.grid.push_back(location(records[k]));
  objective.component_truth.resize(static_cast<Eigen::Index>(rest.size()), J);

  std::vector<Standardizer> z(J);
  std::vector<std::pair<double, double>> ranges(J);
  for (std::size_t j = 0; j < J; ++j) {
    std::vector<double> values;
    for (std::size_t k : fit) values.push_back(raw(records[k], j));
    z[j] = fit_standardizer(values);
    std::vector<double> standardized;
    for (double v : values) standardized.push_back((v - z[j].mean) / z[j].scale);
    objective.component_kernels.push_back(fit_se_kernel(fit_points, standardized, options.noise_variance));
    objective.noise_variances.push_back(options.noise_variance);

    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const double v = (raw(records[i], j) - z[j].mean) / z[j].scale;
      lo = i == 0 ? v : std::min(lo, v);
      hi = i == 0 ? v : std::max(hi, v);
    }
    const double pad = 0.05 * std::max(hi - lo, 1e-6);
    ranges[j] = {lo - pad, hi + pad};
    for (std::size_t i = 0; i < rest.size(); ++i) {
      objective.component_truth(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (raw(records[rest[i]], j) - z[j].mean) / z[j].scale;
    }
  }

  // Physical values are clamped so that model means outside the observed
  // range still yield a defined perceived temperature.
  Combiner combiner = [z](std::span<const double> f) {
    const double t = z[0].mean + z[0].scale * f[0];
    const double h = std::clamp(z[1].mean + z[1].scale * f[1], 0.0, 100.0);
    const double w = std::max(z[2].mean + z[2].scale * f[2], 0.0);
    return perceived_temperature(t, h, w);
  };
  GeneralDecomposition general;
  general.components = J;
  general.combiner = combiner;
  if (options.bounds_from_fit_split) {
    std::vector<std::vector<double>> observed;
    for (std::size_t k : fit) {
      std::vector<double> f(J);
      for (std::size_t j = 0; j < J; ++j) f[j] = (raw(records[k], j) - z[j].mean) / z[j].scale;
      observed.push_back(std::move(f));
    }
    general.gradient_bounds = gradient_bounds_at(combiner, observed);
  } else {
    general.gradient_bounds = gradient_bounds(combiner, ranges, options.gradient_samples, derive_seed(seed, 1));
  }
  objective.decomposition = general;

  std::vector<double> fit_values;
  for (std::size_t k : fit) {
    const auto& r = records[k];
    fit_values.push_back(perceived_temperature(r.temperature, r.humidity, r.wind_speed));
  }
  const Standardizer pz = fit_standardizer(fit_values);
  std::vector<double> fit_std;
  for (double v : fit_values) fit_std.push_back((v - pz.mean) / pz.scale);
  BaselineModel baseline;
  baseline.kernel = fit_se_kernel(fit_points, fit_std, options.noise_variance);
  baseline.offset = pz.mean;
  baseline.scale = pz.scale;
  baseline.noise_variance = options.noise_variance;
  objective.baseline = baseline;
  objective.validate();
  return objective;
}

DecomposedObjective synthetic_objective(std::uint64_t seed, std::size_t components, KernelFamily family,
                                        const PointSet& grid) {
  if (components == 0) throw ConfigError("synthetic objective needs J >= 1");
  if (grid.empty()) throw InputError("synthetic objective needs a nonempty grid");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> log_scale(std::log(0.05), std::log(0.5));
  std::vector<KernelSpec> kernels;
  for (std::size_t j = 0; j < components; ++j) {
    const double l = std::exp(log_scale(rng));
    switch (family) {
      case KernelFamily::kSquaredExponential:
        kernels.push_back(KernelSpec::squared_exponential(l));
        break;
      case KernelFamily::kMatern:
        kernels.push_back(KernelSpec::matern(2.5, l));
        break;
      case KernelFamily::kRationalQuadratic:
        kernels.push_back(KernelSpec::rational_quadratic(1.0, l));
        break;
    }
  }
  DecomposedObjective objective;
  objective.name = "synthetic";
  objective.grid = grid;
  objective.component_truth.resize(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(components));
  for (std::size_t j = 0; j < components; ++j) {
    const std::vector<double> draw = sample_gp_function(kernels[j], grid, derive_seed(seed, 17, j));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      objective.component_truth(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = draw[i];
    }
  }
  objective.component_kernels = kernels;
  objective.noise_variances.assign(components, 1e-4);
  objective.decomposition = LinearDecomposition::unit_weights(kernels);
  return objective;
}

}  // namespace dgp
