#ifndef DGP_GP_CORE_HPP
#define DGP_GP_CORE_HPP

#include "dgp/kernels.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace dgp {

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

struct BatchPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// Noisy samples of J component functions at shared input points.
///
/// observations(t, j) is y_{j,t}. Component j has constant noise variance
/// noise_variances[j] unless noise_override is non-empty, in which case it is
/// a T x J table of per-point variances.
struct Dataset {
  PointSet points;
  Eigen::MatrixXd observations;
  std::vector<double> noise_variances;
  Eigen::MatrixXd noise_override;

  std::size_t size() const { return points.size(); }
  std::size_t components() const { return static_cast<std::size_t>(observations.cols()); }

  /// Noise variance of observation (t, j).
  double noise(std::size_t t, std::size_t j) const;

  /// Observations and per-point noise of one component.
  std::vector<double> column(std::size_t j) const;
  std::vector<double> column_noise(std::size_t j) const;

  /// Throws InputError on inconsistent shapes, mixed dimensions or negative noise.
  void validate() const;
};

/// Exact GP posterior given noisy observations:
///   mean(x)     = k_T(x)^T K_T^-1 y
///   cov(x, x')  = k(x, x') - k_T(x)^T K_T^-1 k_T(x')
/// Immutable once fitted.
class Posterior {
 public:
  /// Posterior with no data: mean 0, variance k(x, x).
  explicit Posterior(Kernel kernel);

  Prediction predict(const Point& x) const;
  BatchPrediction predict(const PointSet& xs) const;
  double covariance(const Point& x, const Point& x2) const;

  const Kernel& kernel() const { return kernel_; }
  const PointSet& training_points() const { return points_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  std::size_t size() const { return points_.size(); }

  /// Diagonal jitter that was needed to factorize K_T (0 when none).
  double jitter() const { return jitter_; }

  /// L L^T from the stored factor, for reconstruction checks.
  Eigen::MatrixXd reconstructed_gram() const;

 private:
  friend Posterior fit_posterior(Kernel, PointSet, std::span<const double>, std::span<const double>);

  void check_query(const Point& x) const;

  Kernel kernel_;
  PointSet points_;
  Eigen::LLT<Eigen::MatrixXd> cholesky_;
  Eigen::VectorXd weights_;  // K_T^-1 y
  double jitter_ = 0.0;
};

/// Fits the exact posterior. If the Cholesky factorization of K_T fails, a
/// diagonal jitter starting at 1e-10 is added and escalated x10 up to 1e-4;
/// beyond that a NumericalError is thrown.
Posterior fit_posterior(Kernel kernel, PointSet points, std::span<const double> observations,
                        std::span<const double> noise_variances);

Prediction predict(const Posterior& posterior, const Point& x);
double posterior_covariance(const Posterior& posterior, const Point& x, const Point& x2);

/// Draw of a zero-mean GP on `grid` through a Cholesky factor of the Gram
/// matrix plus 1e-8 jitter. Deterministic in (kernel, grid, seed).
std::vector<double> sample_gp_function(const Kernel& kernel, const PointSet& grid, std::uint64_t seed);

/// 1/2 sum_t log(1 + variance_t / noise_variance).
double information_gain(std::span<const double> predictive_variances, double noise_variance);

/// Information gain of the sequence obtained by repeatedly picking the grid
/// point of largest current posterior variance (lowest index on ties).
double greedy_max_information_gain(const Kernel& kernel, const PointSet& grid, int rounds,
                                   double noise_variance);

/// Per-round terms of greedy_max_information_gain, useful for diminishing-returns checks.
std::vector<double> greedy_information_gain_increments(const Kernel& kernel, const PointSet& grid,
                                                       int rounds, double noise_variance);

/// Log marginal likelihood of `values` at `points` under a kernel and constant noise.
double log_marginal_likelihood(const Kernel& kernel, const PointSet& points,
                               std::span<const double> values, double noise_variance);

struct LengthScaleFit {
  double length_scale = 1.0;
  double log_marginal_likelihood = 0.0;
};

/// Grid search over length scales (log-spaced between lo and hi) of a kernel
/// family, scoring each by log marginal likelihood of the given samples.
LengthScaleFit select_length_scale(const KernelSpec& base, const PointSet& points,
                                   std::span<const double> values, double noise_variance,
                                   double lo = 0.02, double hi = 2.0, int candidates = 25);

}  // namespace dgp

#endif  // DGP_GP_CORE_HPP
