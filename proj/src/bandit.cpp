#include "dgp/bandit.hpp"

#include "dgp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace dgp {
namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// Mean and variance of the acquisition model over the grid, both on the
// objective's scale and on the scale the acquisition rule operates on.
struct RoundModel {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  Eigen::VectorXd model_mean;
  Eigen::VectorXd model_variance;
  Eigen::MatrixXd component_variance;  // N x J for decomposed strategies
};

Eigen::MatrixXd weight_table(const LinearDecomposition& d, const PointSet& grid) {
  Eigen::MatrixXd table(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(d.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = 0; j < d.size(); ++j) {
      table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d.weights[j](grid[i]);
    }
  }
  return table;
}

BetaMode single_model_mode(BetaMode mode) {
  if (mode == BetaMode::kDiscreteGeneral) return BetaMode::kDiscreteLinear;
  if (mode == BetaMode::kContinuousGeneral) return BetaMode::kContinuous;
  return mode;
}

}  // namespace

void GeneralDecomposition::validate() const {
  if (components == 0) throw ConfigError("general decomposition needs J >= 1");
  if (!combiner) throw ConfigError("general decomposition has no combiner");
  if (gradient_bounds.size() != components) {
    throw ConfigError("general decomposition needs one gradient bound per component");
  }
  for (double b : gradient_bounds) {
    if (!(b >= 0.0)) throw ConfigError("gradient bounds must be nonnegative");
  }
}

double GeneralDecomposition::operator()(std::span<const double> values) const {
  if (values.size() != components) {
    throw InputError("combiner expects " + std::to_string(components) + " values, got " +
                     std::to_string(values.size()));
  }
  return combiner(values);
}

double DecomposedObjective::compose(std::size_t index, std::span<const double> component_values) const {
  if (const auto* linear = std::get_if<LinearDecomposition>(&decomposition)) {
    double total = 0.0;
    for (std::size_t j = 0; j < linear->size(); ++j) {
      total += linear->weights[j](grid[index]) * component_values[j];
    }
    return total;
  }
  return std::get<GeneralDecomposition>(decomposition)(component_values);
}

double DecomposedObjective::value(std::size_t index) const {
  std::vector<double> f(components());
  for (std::size_t j = 0; j < f.size(); ++j) {
    f[j] = component_truth(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(j));
  }
  return compose(index, f);
}

Eigen::VectorXd DecomposedObjective::values() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) out(static_cast<Eigen::Index>(i)) = value(i);
  return out;
}

std::vector<double> DecomposedObjective::bounds() const {
  if (const auto* linear = std::get_if<LinearDecomposition>(&decomposition)) {
    return linear->weight_bounds;
  }
  return std::get<GeneralDecomposition>(decomposition).gradient_bounds;
}

void DecomposedObjective::validate() const {
  if (grid.empty()) throw ConfigError("objective '" + name + "' has an empty grid");
  const std::size_t J = components();
  if (J == 0) throw ConfigError("objective '" + name + "' has no components");
  if (static_cast<std::size_t>(component_truth.rows()) != grid.size() ||
      static_cast<std::size_t>(component_truth.cols()) != J) {
    throw ConfigError("objective '" + name + "' truth table must be |grid| x J");
  }
  if (noise_variances.size() != J) {
    throw ConfigError("objective '" + name + "' needs one noise variance per component");
  }
  for (double v : noise_variances) {
    if (!(v > 0.0)) throw ConfigError("objective noise variances must be positive");
  }
  for (const auto& k : component_kernels) k.validate();
  if (const auto* linear = std::get_if<LinearDecomposition>(&decomposition)) {
    linear->validate();
    if (linear->component_kernels != component_kernels) {
      throw ConfigError("objective '" + name + "' kernels disagree with its linear decomposition");
    }
  } else {
    const auto& general = std::get<GeneralDecomposition>(decomposition);
    general.validate();
    if (general.components != J) {
      throw ConfigError("objective '" + name + "' combiner arity differs from its component count");
    }
  }
}

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kGpUcb:
      return "gp-ucb";
    case Strategy::kDecomposedUcb:
      return "d-gpucb";
    case Strategy::kGeneralizedUcb:
      return "generalized-d-gpucb";
    case Strategy::kExpectedImprovement:
      return "ei";
    case Strategy::kProbabilityOfImprovement:
      return "mpi";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "gp-ucb") return Strategy::kGpUcb;
  if (name == "d-gpucb") return Strategy::kDecomposedUcb;
  if (name == "generalized-d-gpucb") return Strategy::kGeneralizedUcb;
  if (name == "ei") return Strategy::kExpectedImprovement;
  if (name == "mpi") return Strategy::kProbabilityOfImprovement;
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

bool uses_decomposition(Strategy strategy) {
  return strategy == Strategy::kDecomposedUcb || strategy == Strategy::kGeneralizedUcb;
}

std::string to_string(BetaMode mode) {
  switch (mode) {
    case BetaMode::kDiscreteLinear:
      return "discrete_linear";
    case BetaMode::kDiscreteGeneral:
      return "discrete_general";
    case BetaMode::kContinuous:
      return "continuous";
    case BetaMode::kContinuousGeneral:
      return "continuous_general";
  }
  return "unknown";
}

BetaMode parse_beta_mode(std::string_view name) {
  if (name == "discrete_linear") return BetaMode::kDiscreteLinear;
  if (name == "discrete_general") return BetaMode::kDiscreteGeneral;
  if (name == "continuous") return BetaMode::kContinuous;
  if (name == "continuous_general") return BetaMode::kContinuousGeneral;
  throw ConfigError("unknown beta mode '" + std::string(name) + "'");
}

double beta_schedule(BetaMode mode, int t, std::size_t grid_size, std::size_t components, double delta,
                     const ContinuousBetaParams& continuous, double divisor) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("beta_schedule: delta must lie in (0, 1)");
  if (t < 1) throw InputError("beta_schedule: rounds start at t = 1");
  if (grid_size < 1 || components < 1) {
    throw InputError("beta_schedule: grid size and component count must be at least 1");
  }
  if (!(divisor > 0.0)) throw ConfigError("beta_schedule: divisor must be positive");

  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  const double t2 = static_cast<double>(t) * static_cast<double>(t);
  const double X = static_cast<double>(grid_size);
  const double J = static_cast<double>(components);
  double beta = 0.0;
  switch (mode) {
    case BetaMode::kDiscreteLinear:
      beta = 2.0 * std::log(X * t2 * pi2 / (6.0 * delta));
      break;
    case BetaMode::kDiscreteGeneral:
      beta = 2.0 * std::log(X * J * t2 * pi2 / (6.0 * delta));
      break;
    case BetaMode::kContinuous:
    case BetaMode::kContinuousGeneral: {
      const auto& c = continuous;
      if (!(c.dimension > 0.0 && c.a > 0.0 && c.b > 0.0 && c.r > 0.0)) {
        throw ConfigError("beta_schedule: continuous parameters must be positive");
      }
      const double inner = std::log(4.0 * c.dimension * c.a / delta);
      if (!(inner > 0.0)) throw ConfigError("beta_schedule: log(4 d a / delta) must be positive");
      const double union_factor = mode == BetaMode::kContinuousGeneral ? J : 1.0;
      beta = 2.0 * std::log(2.0 * union_factor * t2 * pi2 / (3.0 * delta)) +
             2.0 * c.dimension * std::log(t2 * c.dimension * c.b * c.r * std::sqrt(inner));
      break;
    }
  }
  return beta / divisor;
}

double acquisition_score(double mean, double variance, const AcquisitionRule& rule) {
  const double sd = std::sqrt(std::max(variance, 0.0));
  if (const auto* ucb = std::get_if<UpperConfidenceBound>(&rule)) {
    return mean + std::sqrt(ucb->beta) * sd;
  }
  if (const auto* ei = std::get_if<ExpectedImprovement>(&rule)) {
    const double improvement = mean - ei->best - ei->xi;
    if (sd == 0.0) return std::max(improvement, 0.0);
    const double z = improvement / sd;
    return improvement * normal_cdf(z) + sd * normal_pdf(z);
  }
  const auto& pi = std::get<ProbabilityOfImprovement>(rule);
  const double improvement = mean - pi.best - pi.xi;
  if (sd == 0.0) return improvement > 0.0 ? 1.0 : 0.0;
  return normal_cdf(improvement / sd);
}

std::size_t acquisition_select(std::span<const double> means, std::span<const double> variances,
                               const AcquisitionRule& rule) {
  if (means.empty()) throw InputError("acquisition_select: no candidates");
  if (means.size() != variances.size()) {
    throw InputError("acquisition_select: means and variances differ in length");
  }
  if (const auto* ucb = std::get_if<UpperConfidenceBound>(&rule); ucb && !(ucb->beta >= 0.0)) {
    throw InputError("acquisition_select: beta must be nonnegative");
  }
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (variances[i] < 0.0) throw InputError("acquisition_select: negative variance");
    const double score = acquisition_score(means[i], variances[i], rule);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

void BanditConfig::validate() const {
  if (horizon < 1) throw ConfigError("bandit horizon must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("bandit delta must lie in (0, 1)");
  if (!(beta_divisor > 0.0)) throw ConfigError("beta divisor must be positive");
  if (!(xi >= 0.0)) throw ConfigError("improvement margin xi must be nonnegative");
}

BanditTrace run_bandit(const DecomposedObjective& objective, Strategy strategy, const BanditConfig& config) {
  config.validate();
  objective.validate();
  if (strategy == Strategy::kDecomposedUcb && !objective.is_linear()) {
    throw ConfigError("d-gpucb needs a linear decomposition; objective '" + objective.name +
                      "' is general");
  }
  if (strategy == Strategy::kGeneralizedUcb && objective.is_linear()) {
    throw ConfigError("generalized-d-gpucb needs a general decomposition; objective '" +
                      objective.name + "' is linear");
  }
  if (!uses_decomposition(strategy) && !objective.is_linear() && !objective.baseline) {
    throw ConfigError("objective '" + objective.name + "' has no baseline model for " + to_string(strategy));
  }

  const PointSet& grid = objective.grid;
  const auto n = static_cast<Eigen::Index>(grid.size());
  const std::size_t J = objective.components();
  const auto Ji = static_cast<Eigen::Index>(J);
  const Eigen::VectorXd truth = objective.values();

  BanditTrace trace;
  trace.strategy = strategy;
  {
    Eigen::Index best = 0;
    trace.optimum_value = truth.maxCoeff(&best);
    trace.optimum_index = static_cast<std::size_t>(best);
  }
  const int T = config.horizon;
  trace.component_observations.resize(T, Ji);
  if (uses_decomposition(strategy)) trace.component_variances.resize(T, Ji);

  Eigen::MatrixXd weights;
  const LinearDecomposition* linear = std::get_if<LinearDecomposition>(&objective.decomposition);
  if (linear) weights = weight_table(*linear, grid);

  const BetaMode mode = uses_decomposition(strategy) ? config.beta_mode : single_model_mode(config.beta_mode);
  std::mt19937_64 noise_rng(config.seed);
  std::normal_distribution<double> normal;

  PointSet sampled;
  std::vector<std::vector<double>> component_y(J);
  std::vector<double> model_rewards;     // baseline-scale composed rewards
  std::vector<double> aggregated_noise;  // per-point noise of the composed observation

  for (int t = 1; t <= T; ++t) {
    RoundModel model;
    if (uses_decomposition(strategy)) {
      model.component_variance.resize(n, Ji);
      Eigen::MatrixXd component_mean(n, Ji);
      for (std::size_t j = 0; j < J; ++j) {
        const std::vector<double> noise(sampled.size(), objective.noise_variances[j]);
        const Posterior posterior =
            fit_posterior(objective.component_kernels[j], sampled, component_y[j], noise);
        const BatchPrediction p = posterior.predict(grid);
        component_mean.col(static_cast<Eigen::Index>(j)) = p.mean;
        model.component_variance.col(static_cast<Eigen::Index>(j)) = p.variance;
      }
      if (strategy == Strategy::kDecomposedUcb) {
        model.mean = (weights.array() * component_mean.array()).rowwise().sum();
        model.variance = (weights.array().square() * model.component_variance.array()).rowwise().sum();
      } else {
        const auto& general = std::get<GeneralDecomposition>(objective.decomposition);
        model.mean.resize(n);
        std::vector<double> mu(J);
        for (Eigen::Index i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < J; ++j) mu[j] = component_mean(i, static_cast<Eigen::Index>(j));
          model.mean(i) = general(mu);
        }
        Eigen::VectorXd b2(Ji);
        for (std::size_t j = 0; j < J; ++j) {
          b2(static_cast<Eigen::Index>(j)) = general.gradient_bounds[j] * general.gradient_bounds[j];
        }
        model.variance = static_cast<double>(J) * (model.component_variance * b2);
      }
      model.model_mean = model.mean;
      model.model_variance = model.variance;
    } else {
      const double offset = linear ? 0.0 : objective.baseline->offset;
      const double scale = linear ? 1.0 : objective.baseline->scale;
      const Kernel kernel = linear ? Kernel(linear->composed_kernel()) : objective.baseline->kernel;
      const Posterior posterior = fit_posterior(kernel, sampled, model_rewards, aggregated_noise);
      const BatchPrediction p = posterior.predict(grid);
      model.model_mean = p.mean;
      model.model_variance = p.variance;
      model.mean = offset + scale * p.mean.array();
      model.variance = scale * scale * p.variance.array();
    }

    const double beta = beta_schedule(mode, t, grid.size(), J, config.delta, config.continuous,
                                      config.beta_divisor);
    AcquisitionRule rule = UpperConfidenceBound{beta};
    if (strategy == Strategy::kExpectedImprovement || strategy == Strategy::kProbabilityOfImprovement) {
      const double best = model_rewards.empty()
                              ? 0.0
                              : *std::max_element(model_rewards.begin(), model_rewards.end());
      if (strategy == Strategy::kExpectedImprovement) {
        rule = ExpectedImprovement{best, config.xi};
      } else {
        rule = ProbabilityOfImprovement{best, config.xi};
      }
    }
    const std::size_t pick = acquisition_select(
        std::span<const double>(model.model_mean.data(), static_cast<std::size_t>(n)),
        std::span<const double>(model.model_variance.data(), static_cast<std::size_t>(n)), rule);
    const auto pi = static_cast<Eigen::Index>(pick);
    const auto oi = static_cast<Eigen::Index>(trace.optimum_index);

    trace.chosen.push_back(pick);
    trace.chosen_points.push_back(grid[pick]);
    trace.betas.push_back(beta);
    trace.predicted_mean.push_back(model.mean(pi));
    trace.predicted_sd.push_back(std::sqrt(model.variance(pi)));
    trace.optimum_mean.push_back(model.mean(oi));
    trace.optimum_sd.push_back(std::sqrt(model.variance(oi)));
    if (uses_decomposition(strategy)) {
      trace.component_variances.row(t - 1) = model.component_variance.row(pi);
    }

    std::vector<double> y(J);
    for (std::size_t j = 0; j < J; ++j) {
      y[j] = objective.component_truth(pi, static_cast<Eigen::Index>(j)) +
             std::sqrt(objective.noise_variances[j]) * normal(noise_rng);
      component_y[j].push_back(y[j]);
      trace.component_observations(t - 1, static_cast<Eigen::Index>(j)) = y[j];
    }
    const double reward = objective.compose(pick, y);
    trace.rewards.push_back(reward);
    sampled.push_back(grid[pick]);
    if (linear) {
      double noise = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        const double g = weights(pi, static_cast<Eigen::Index>(j));
        noise += g * g * objective.noise_variances[j];
      }
      model_rewards.push_back(reward);
      aggregated_noise.push_back(noise);
    } else if (objective.baseline) {
      model_rewards.push_back((reward - objective.baseline->offset) / objective.baseline->scale);
      aggregated_noise.push_back(objective.baseline->noise_variance);
    }

    trace.noise_free.push_back(truth(pi));
    trace.regrets.push_back(trace.optimum_value - truth(pi));
    trace.cumulative_regret.push_back(trace.regrets.back() +
                                      (t > 1 ? trace.cumulative_regret[t - 2] : 0.0));
  }
  return trace;
}

RegretMetrics regret_metrics(std::span<const double> noise_free_rewards, double optimum_value) {
  if (noise_free_rewards.empty()) throw InputError("regret_metrics: empty trace");
  RegretMetrics out;
  double total = 0.0;
  for (std::size_t t = 0; t < noise_free_rewards.size(); ++t) {
    const double r = optimum_value - noise_free_rewards[t];
    total += r;
    out.regrets.push_back(r);
    out.cumulative.push_back(total);
    out.average.push_back(total / static_cast<double>(t + 1));
  }
  return out;
}

RegretMetrics regret_metrics(const BanditTrace& trace, double optimum_value) {
  return regret_metrics(trace.noise_free, optimum_value);
}

double regret_bound_certificate(int horizon, double beta, std::span<const double> bounds,
                                std::span<const double> information_gains, double noise_variance) {
  if (!(noise_variance > 0.0)) throw ConfigError("certificate: noise variance must be positive");
  if (horizon < 0 || beta < 0.0) throw InputError("certificate: horizon and beta must be nonnegative");
  if (bounds.size() != information_gains.size()) {
    throw InputError("certificate: need one information gain per bound");
  }
  const double c1 = 8.0 / std::log1p(1.0 / noise_variance);
  double weighted = 0.0;
  for (std::size_t j = 0; j < bounds.size(); ++j) {
    if (bounds[j] < 0.0 || information_gains[j] < 0.0) {
      throw InputError("certificate: bounds and information gains must be nonnegative");
    }
    weighted += bounds[j] * bounds[j] * information_gains[j];
  }
  return std::sqrt(c1 * static_cast<double>(horizon) * beta * weighted);
}

double run_certificate(const DecomposedObjective& objective, const BanditConfig& config) {
  config.validate();
  objective.validate();
  const double beta = beta_schedule(config.beta_mode, config.horizon, objective.grid.size(),
                                    objective.components(), config.delta, config.continuous, 1.0);
  std::vector<double> gains;
  for (std::size_t j = 0; j < objective.components(); ++j) {
    gains.push_back(greedy_max_information_gain(objective.component_kernels[j], objective.grid,
                                                config.horizon, objective.noise_variances[j]));
  }
  const double noise = *std::max_element(objective.noise_variances.begin(), objective.noise_variances.end());
  return regret_bound_certificate(config.horizon, beta, objective.bounds(), gains, noise);
}

CoverageStatistics coverage_statistics(const BanditTrace& trace,
                                       const std::function<double(std::size_t)>& truth) {
  const std::size_t T = trace.rounds();
  if (T == 0) throw InputError("coverage_statistics: empty trace");
  if (trace.predicted_mean.size() != T || trace.predicted_sd.size() != T || trace.betas.size() != T ||
      trace.optimum_mean.size() != T || trace.optimum_sd.size() != T) {
    throw InputError("coverage_statistics: trace lacks recorded posterior statistics");
  }
  CoverageStatistics out;
  out.rounds = T;
  const double optimum = truth(trace.optimum_index);
  std::size_t covered = 0;
  std::size_t bounded = 0;
  for (std::size_t t = 0; t < T; ++t) {
    const double root_beta = std::sqrt(trace.betas[t]);
    const double f = truth(trace.chosen[t]);
    const double regret = optimum - f;
    const double slack = 1e-9 * (1.0 + std::abs(optimum) + std::abs(f));
    const bool at_choice = std::abs(f - trace.predicted_mean[t]) <= root_beta * trace.predicted_sd[t];
    const bool at_optimum =
        std::abs(optimum - trace.optimum_mean[t]) <= root_beta * trace.optimum_sd[t];
    const bool within = regret <= 2.0 * root_beta * trace.predicted_sd[t] + slack;
    covered += at_choice ? 1 : 0;
    bounded += within ? 1 : 0;
    if (at_choice && at_optimum) {
      ++out.event_rounds;
      if (!within) ++out.event_violations;
    }
  }
  out.coverage = static_cast<double>(covered) / static_cast<double>(T);
  out.regret_within_bound = static_cast<double>(bounded) / static_cast<double>(T);
  return out;
}

}  // namespace dgp
