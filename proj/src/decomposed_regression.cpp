#include "dgp/decomposed_regression.hpp"

#include "dgp/errors.hpp"

#include <cmath>

namespace dgp {
namespace {

constexpr double kZeroWeightShift = 1e-12;

void check_columns(const LinearDecomposition& decomposition, const Dataset& dataset) {
  decomposition.validate();
  dataset.validate();
  if (dataset.components() != decomposition.size()) {
    throw InputError("dataset has " + std::to_string(dataset.components()) +
                     " observation columns but the decomposition has " +
                     std::to_string(decomposition.size()) + " components");
  }
}

// x^T M^-1 x for a symmetric positive (semi)definite M.
double quadratic_form_inverse(const Eigen::MatrixXd& m, const Eigen::VectorXd& x) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalError("variance oracle: factorization failed");
  }
  return x.dot(ldlt.solve(x));
}

}  // namespace

LinearDecomposition LinearDecomposition::unit_weights(std::vector<KernelSpec> kernels) {
  LinearDecomposition d;
  d.weights.assign(kernels.size(), [](const Point&) { return 1.0; });
  d.weight_bounds.assign(kernels.size(), 1.0);
  d.component_kernels = std::move(kernels);
  return d;
}

void LinearDecomposition::validate() const {
  if (component_kernels.empty()) {
    throw ConfigError("linear decomposition needs at least one component");
  }
  if (weights.size() != component_kernels.size() || weight_bounds.size() != component_kernels.size()) {
    throw ConfigError("linear decomposition lists must all have length J = " +
                      std::to_string(component_kernels.size()));
  }
  for (const auto& k : component_kernels) k.validate();
  for (const auto& w : weights) {
    if (!w) throw ConfigError("linear decomposition has an empty weight function");
  }
  for (double b : weight_bounds) {
    if (!(b >= 0.0)) throw ConfigError("weight bounds must be nonnegative");
  }
}

void LinearDecomposition::check_weight_bounds(const PointSet& probes) const {
  for (const auto& x : probes) {
    for (std::size_t j = 0; j < size(); ++j) {
      const double g = weights[j](x);
      if (std::abs(g) > weight_bounds[j] + 1e-9) {
        throw ConfigError("weight " + std::to_string(j) + " has |g| = " + std::to_string(std::abs(g)) +
                          " above its bound " + std::to_string(weight_bounds[j]));
      }
    }
  }
}

ComposedKernelSpec LinearDecomposition::composed_kernel() const {
  return ComposedKernelSpec{component_kernels, weights};
}

AggregatedData aggregate(const LinearDecomposition& decomposition, const Dataset& dataset) {
  check_columns(decomposition, dataset);
  AggregatedData out;
  out.observations.assign(dataset.size(), 0.0);
  out.noise_variances.assign(dataset.size(), 0.0);
  for (std::size_t t = 0; t < dataset.size(); ++t) {
    for (std::size_t j = 0; j < decomposition.size(); ++j) {
      const double g = decomposition.weights[j](dataset.points[t]);
      out.observations[t] +=
          g * dataset.observations(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
      out.noise_variances[t] += g * g * dataset.noise(t, j);
    }
  }
  return out;
}

DecomposedPosterior::DecomposedPosterior(std::vector<Posterior> components,
                                         LinearDecomposition decomposition)
    : components_(std::move(components)), decomposition_(std::move(decomposition)) {
  if (components_.size() != decomposition_.size()) {
    throw InputError("decomposed posterior needs one posterior per component");
  }
}

DecomposedPrediction DecomposedPosterior::predict(const Point& x) const {
  DecomposedPrediction out;
  out.components.reserve(components_.size());
  for (std::size_t j = 0; j < components_.size(); ++j) {
    const Prediction p = components_[j].predict(x);
    const double g = decomposition_.weights[j](x);
    out.mean += g * p.mean;
    out.variance += g * g * p.variance;
    out.components.push_back(p);
  }
  return out;
}

BatchPrediction DecomposedPosterior::predict(const PointSet& xs) const {
  const auto n = static_cast<Eigen::Index>(xs.size());
  BatchPrediction out{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  for (std::size_t j = 0; j < components_.size(); ++j) {
    const BatchPrediction p = components_[j].predict(xs);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double g = decomposition_.weights[j](xs[i]);
      out.mean(i) += g * p.mean(i);
      out.variance(i) += g * g * p.variance(i);
    }
  }
  return out;
}

DecomposedPosterior fit_decomposed(const LinearDecomposition& decomposition, const Dataset& dataset) {
  check_columns(decomposition, dataset);
  std::vector<Posterior> components;
  components.reserve(decomposition.size());
  for (std::size_t j = 0; j < decomposition.size(); ++j) {
    const auto y = dataset.column(j);
    const auto noise = dataset.column_noise(j);
    components.push_back(fit_posterior(decomposition.component_kernels[j], dataset.points, y, noise));
  }
  return DecomposedPosterior(std::move(components), decomposition);
}

DecomposedPrediction decomposed_predict(const DecomposedPosterior& posterior, const Point& x) {
  return posterior.predict(x);
}

Posterior fit_standard(const LinearDecomposition& decomposition, const Dataset& dataset) {
  const AggregatedData data = aggregate(decomposition, dataset);
  return fit_posterior(decomposition.composed_kernel(), dataset.points, data.observations,
                       data.noise_variances);
}

VarianceOracles variance_oracles(const LinearDecomposition& decomposition, const Dataset& dataset,
                                 const Point& x) {
  check_columns(decomposition, dataset);
  if (!dataset.points.empty() && x.size() != dataset.points.front().size()) {
    throw InputError("variance_oracles: query dimension does not match the dataset");
  }
  const std::size_t J = decomposition.size();
  const auto T = static_cast<Eigen::Index>(dataset.size());

  double prior = 0.0;
  for (std::size_t l = 0; l < J; ++l) {
    const double g = decomposition.weights[l](x);
    prior += g * g;
  }
  VarianceOracles out{prior, prior, 0.0, false};
  if (T == 0) return out;

  Eigen::MatrixXd summed = Eigen::MatrixXd::Zero(T, T);
  Eigen::VectorXd z_total = Eigen::VectorXd::Zero(T);
  double decomposed_reduction = 0.0;
  for (std::size_t l = 0; l < J; ++l) {
    const Kernel kernel = decomposition.component_kernels[l];
    const auto noise = dataset.column_noise(l);
    const Eigen::MatrixXd k_l = gram_matrix(kernel, dataset.points, noise);
    Eigen::VectorXd d(T);
    for (Eigen::Index t = 0; t < T; ++t) d(t) = decomposition.weights[l](dataset.points[t]);

    Eigen::MatrixXd dkd = d.asDiagonal() * k_l * d.asDiagonal();
    summed += dkd;
    const Eigen::VectorXd cross = cross_covariance(kernel, dataset.points, PointSet{x}).col(0);
    const Eigen::VectorXd z = d.cwiseProduct(cross) * decomposition.weights[l](x);
    z_total += z;

    for (Eigen::Index t = 0; t < T; ++t) {
      if (d(t) == 0.0) {
        dkd(t, t) += kZeroWeightShift;
        out.regularized = true;
      }
    }
    decomposed_reduction += quadratic_form_inverse(dkd, z);
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    if (summed(t, t) == 0.0) {
      summed(t, t) += kZeroWeightShift;
      out.regularized = true;
    }
  }
  out.entire = prior - quadratic_form_inverse(summed, z_total);
  out.decomposed = prior - decomposed_reduction;
  out.gap = out.entire - out.decomposed;
  return out;
}

double rmse(std::span<const double> estimate, std::span<const double> truth) {
  if (estimate.empty()) throw InputError("rmse: empty input");
  if (estimate.size() != truth.size()) {
    throw InputError("rmse: lengths differ (" + std::to_string(estimate.size()) + " vs " +
                     std::to_string(truth.size()) + ")");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double d = estimate[i] - truth[i];
    total += d * d;
  }
  return std::sqrt(total / static_cast<double>(estimate.size()));
}

}  // namespace dgp
