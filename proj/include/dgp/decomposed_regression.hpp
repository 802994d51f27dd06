#ifndef DGP_DECOMPOSED_REGRESSION_HPP
#define DGP_DECOMPOSED_REGRESSION_HPP

#include "dgp/gp_core.hpp"
#include "dgp/kernels.hpp"

#include <span>
#include <vector>

namespace dgp {

/// f(x) = sum_j g_j(x) f_j(x), f_j ~ GP(0, k_j), |g_j| <= B_j.
struct LinearDecomposition {
  std::vector<KernelSpec> component_kernels;
  std::vector<WeightFunction> weights;
  std::vector<double> weight_bounds;

  /// J components with g_j == 1 and B_j = 1.
  static LinearDecomposition unit_weights(std::vector<KernelSpec> kernels);

  std::size_t size() const { return component_kernels.size(); }

  /// Shape and hyperparameter checks; throws ConfigError.
  void validate() const;

  /// Throws ConfigError if some |g_j(x)| exceeds B_j + 1e-9 at a probe.
  void check_weight_bounds(const PointSet& probes) const;

  /// The kernel of f implied by the decomposition.
  ComposedKernelSpec composed_kernel() const;
};

/// Observations and noise of the composed function, y_t = sum_j g_j(x_t) y_{j,t}
/// with noise variance sum_j g_j(x_t)^2 sigma_j^2.
struct AggregatedData {
  std::vector<double> observations;
  std::vector<double> noise_variances;
};

AggregatedData aggregate(const LinearDecomposition& decomposition, const Dataset& dataset);

struct DecomposedPrediction {
  double mean = 0.0;
  double variance = 0.0;
  std::vector<Prediction> components;  // (mu_j, sigma_j^2) before weighting
};

/// One exact posterior per component, composed with the known weights.
class DecomposedPosterior {
 public:
  DecomposedPosterior(std::vector<Posterior> components, LinearDecomposition decomposition);

  DecomposedPrediction predict(const Point& x) const;
  BatchPrediction predict(const PointSet& xs) const;

  const std::vector<Posterior>& components() const { return components_; }
  const LinearDecomposition& decomposition() const { return decomposition_; }

 private:
  std::vector<Posterior> components_;
  LinearDecomposition decomposition_;
};

/// Fits component j on column j of the dataset with its own kernel and noise.
DecomposedPosterior fit_decomposed(const LinearDecomposition& decomposition, const Dataset& dataset);

DecomposedPrediction decomposed_predict(const DecomposedPosterior& posterior, const Point& x);

/// Standard regression baseline: a single posterior with the composed kernel
/// fitted to aggregated observations.
Posterior fit_standard(const LinearDecomposition& decomposition, const Dataset& dataset);

/// Closed-form predictive variances of the two regressions at one point, built
/// from D_l = diag(g_l(x_t)) and z_l = D_l k_{l,T}(x) g_l(x):
///   entire     = k(x,x) - sum_{i,j} z_i^T (sum_l D_l K_l D_l)^-1 z_j
///   decomposed = k(x,x) - sum_l z_l^T (D_l K_l D_l)^-1 z_l
/// Zero weights make D_l singular; those diagonal entries are shifted by 1e-12
/// and `regularized` is set.
struct VarianceOracles {
  double entire = 0.0;
  double decomposed = 0.0;
  double gap = 0.0;
  bool regularized = false;
};

VarianceOracles variance_oracles(const LinearDecomposition& decomposition, const Dataset& dataset,
                                 const Point& x);

/// Root-mean-squared difference; throws InputError on empty or mismatched input.
double rmse(std::span<const double> estimate, std::span<const double> truth);

}  // namespace dgp

#endif  // DGP_DECOMPOSED_REGRESSION_HPP
