#ifndef DGP_BANDIT_HPP
#define DGP_BANDIT_HPP

#include "dgp/decomposed_regression.hpp"
#include "dgp/gp_core.hpp"
#include "dgp/kernels.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dgp {

/// f(x) = g(f_1(x), ..., f_J(x)) with |dg/df_j| <= B_j over the reachable range.
struct GeneralDecomposition {
  std::size_t components = 0;
  std::function<double(std::span<const double>)> combiner;
  std::vector<double> gradient_bounds;

  void validate() const;
  double operator()(std::span<const double> values) const;
};

using Decomposition = std::variant<LinearDecomposition, GeneralDecomposition>;

/// Single-GP surrogate used by the non-decomposed baselines on a general
/// decomposition: objective value = offset + scale * model value.
struct BaselineModel {
  Kernel kernel = KernelSpec{};
  double offset = 0.0;
  double scale = 1.0;
  double noise_variance = 1e-4;
};

/// A decomposed objective tabulated on a finite candidate set.
///
/// component_truth(i, j) is the noise-free f_j at grid[i]. Observations of
/// component j carry N(0, noise_variances[j]) noise. For linear decompositions
/// the component kernels are those of the decomposition.
struct DecomposedObjective {
  std::string name;
  PointSet grid;
  Eigen::MatrixXd component_truth;
  std::vector<double> noise_variances;
  std::vector<KernelSpec> component_kernels;
  Decomposition decomposition;
  std::optional<BaselineModel> baseline;

  std::size_t components() const { return component_kernels.size(); }
  bool is_linear() const { return std::holds_alternative<LinearDecomposition>(decomposition); }

  /// Noise-free f at grid[index].
  double value(std::size_t index) const;
  /// Noise-free f over the whole grid.
  Eigen::VectorXd values() const;
  /// Composition of arbitrary component values at grid[index].
  double compose(std::size_t index, std::span<const double> component_values) const;

  /// B_j of the decomposition (weight bounds or gradient bounds).
  std::vector<double> bounds() const;

  void validate() const;
};

enum class Strategy { kGpUcb, kDecomposedUcb, kGeneralizedUcb, kExpectedImprovement, kProbabilityOfImprovement };

std::string to_string(Strategy strategy);
/// Accepts "gp-ucb", "d-gpucb", "generalized-d-gpucb", "ei", "mpi".
Strategy parse_strategy(std::string_view name);
bool uses_decomposition(Strategy strategy);

enum class BetaMode { kDiscreteLinear, kDiscreteGeneral, kContinuous, kContinuousGeneral };

std::string to_string(BetaMode mode);
BetaMode parse_beta_mode(std::string_view name);

/// Constants of the continuous-domain schedule: input dimension d, tail
/// constants a and b of the derivative bound, and domain diameter r.
struct ContinuousBetaParams {
  double dimension = 1.0;
  double a = 1.0;
  double b = 1.0;
  double r = 1.0;

  bool operator==(const ContinuousBetaParams&) const = default;
};

/// Exploration weight for round t (t >= 1), divided by `divisor`:
///   discrete linear:     2 log(|X| t^2 pi^2 / (6 delta))
///   discrete general:    2 log(|X| J t^2 pi^2 / (6 delta))
///   continuous:          2 log(2 t^2 pi^2 / (3 delta)) + 2 d log(t^2 d b r sqrt(log(4 d a / delta)))
///   continuous general:  as continuous with 2 J t^2 pi^2 in the first log.
double beta_schedule(BetaMode mode, int t, std::size_t grid_size, std::size_t components, double delta,
                     const ContinuousBetaParams& continuous, double divisor);

struct UpperConfidenceBound {
  double beta = 0.0;
};
struct ExpectedImprovement {
  double best = 0.0;
  double xi = 0.01;
};
struct ProbabilityOfImprovement {
  double best = 0.0;
  double xi = 0.01;
};
using AcquisitionRule = std::variant<UpperConfidenceBound, ExpectedImprovement, ProbabilityOfImprovement>;

/// Score of one candidate under a rule.
double acquisition_score(double mean, double variance, const AcquisitionRule& rule);

/// Index of the highest score; the lowest index wins ties.
std::size_t acquisition_select(std::span<const double> means, std::span<const double> variances,
                               const AcquisitionRule& rule);

struct BanditConfig {
  int horizon = 100;
  double delta = 0.05;
  BetaMode beta_mode = BetaMode::kDiscreteLinear;
  double beta_divisor = 5.0;
  ContinuousBetaParams continuous;
  double xi = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Everything recorded by one run. Vectors are indexed by round (0-based for t = 1..T).
struct BanditTrace {
  Strategy strategy = Strategy::kGpUcb;
  std::vector<std::size_t> chosen;
  PointSet chosen_points;
  Eigen::MatrixXd component_observations;  // T x J
  std::vector<double> rewards;             // composed noisy reward y_t
  std::vector<double> noise_free;          // f(x_t)
  std::vector<double> regrets;
  std::vector<double> cumulative_regret;
  std::vector<double> betas;
  std::vector<double> predicted_mean;  // mu_{t-1}(x_t)
  std::vector<double> predicted_sd;    // sigma_{t-1}(x_t)
  std::vector<double> optimum_mean;    // mu_{t-1}(x*)
  std::vector<double> optimum_sd;      // sigma_{t-1}(x*)
  Eigen::MatrixXd component_variances;  // T x J, sigma^2_{j,t-1}(x_t); empty for baselines
  std::size_t optimum_index = 0;
  double optimum_value = 0.0;

  std::size_t rounds() const { return chosen.size(); }
};

/// Runs one strategy for config.horizon rounds. The noise-free truth is used
/// only for regret accounting and diagnostics, never for selection.
BanditTrace run_bandit(const DecomposedObjective& objective, Strategy strategy, const BanditConfig& config);

struct RegretMetrics {
  std::vector<double> regrets;
  std::vector<double> cumulative;
  std::vector<double> average;
};

RegretMetrics regret_metrics(std::span<const double> noise_free_rewards, double optimum_value);
RegretMetrics regret_metrics(const BanditTrace& trace, double optimum_value);

/// sqrt(C1 T beta_T sum_j B_j^2 gamma_j) with C1 = 8 / log(1 + 1/noise_variance).
double regret_bound_certificate(int horizon, double beta, std::span<const double> bounds,
                                std::span<const double> information_gains, double noise_variance);

/// The certificate for a finished run: unscaled beta_T, greedy gamma_j per
/// component kernel on the objective grid, and the largest component noise.
double run_certificate(const DecomposedObjective& objective, const BanditConfig& config);

struct CoverageStatistics {
  std::size_t rounds = 0;
  /// Fraction of rounds with |f(x_t) - mu_{t-1}(x_t)| <= sqrt(beta_t) sigma_{t-1}(x_t).
  double coverage = 0.0;
  /// Fraction of rounds with r_t <= 2 sqrt(beta_t) sigma_{t-1}(x_t).
  double regret_within_bound = 0.0;
  /// Rounds on which the confidence event holds at both x_t and x*.
  std::size_t event_rounds = 0;
  /// Of those, rounds where r_t exceeds 2 sqrt(beta_t) sigma_{t-1}(x_t).
  std::size_t event_violations = 0;
};

CoverageStatistics coverage_statistics(const BanditTrace& trace,
                                       const std::function<double(std::size_t)>& truth);

}  // namespace dgp

#endif  // DGP_BANDIT_HPP
