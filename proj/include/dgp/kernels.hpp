#ifndef DGP_KERNELS_HPP
#define DGP_KERNELS_HPP

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dgp {

/// An input location. All points handed to one kernel or posterior must share
/// a dimension.
using Point = Eigen::VectorXd;
using PointSet = std::vector<Point>;

enum class KernelFamily { kSquaredExponential, kMatern, kRationalQuadratic };

std::string to_string(KernelFamily family);
/// Accepts "squared_exponential"/"se", "matern", "rational_quadratic"/"rq".
KernelFamily parse_kernel_family(std::string_view name);

/// Stationary, unit-variance covariance function.
///
/// Squared exponential: exp(-d^2 / (2 l^2)).
/// Matern:              closed forms for nu in {1/2, 3/2, 5/2}, r = d / l.
/// Rational quadratic:  (1 + d^2 / (2 alpha l^2))^-alpha.
///
/// k(x, x) == 1 for every family.
struct KernelSpec {
  KernelFamily family = KernelFamily::kSquaredExponential;
  double length_scale = 1.0;
  double smoothness = 2.5;  // Matern nu
  double mixture = 1.0;     // rational-quadratic alpha

  static KernelSpec squared_exponential(double length_scale);
  static KernelSpec matern(double smoothness, double length_scale);
  static KernelSpec rational_quadratic(double mixture, double length_scale);

  /// Throws ConfigError on non-positive hyperparameters or unsupported nu.
  void validate() const;

  /// Covariance as a function of Euclidean distance.
  double at_distance(double distance) const;

  bool operator==(const KernelSpec&) const = default;
};

/// Known deterministic weight g_j(x).
using WeightFunction = std::function<double(const Point&)>;

/// k(x, x') = sum_j g_j(x) k_j(x, x') g_j(x').
struct ComposedKernelSpec {
  std::vector<KernelSpec> components;
  std::vector<WeightFunction> weights;

  void validate() const;
};

/// Either a single stationary kernel or a linearly composed one.
using Kernel = std::variant<KernelSpec, ComposedKernelSpec>;

double eval_kernel(const KernelSpec& spec, const Point& x, const Point& x2);
double compose_linear_kernel(const ComposedKernelSpec& spec, const Point& x, const Point& x2);
double eval_kernel(const Kernel& kernel, const Point& x, const Point& x2);

/// k(x, x); 1 for stationary kernels, sum_j g_j(x)^2 when composed.
double prior_variance(const Kernel& kernel, const Point& x);

/// [k(x_i, x_j)] + diag(noise_variances).
Eigen::MatrixXd gram_matrix(const Kernel& kernel, const PointSet& points,
                            std::span<const double> noise_variances);

/// [k(a_i, b_j)], |a| x |b|.
Eigen::MatrixXd cross_covariance(const Kernel& kernel, const PointSet& a, const PointSet& b);

}  // namespace dgp

#endif  // DGP_KERNELS_HPP
