#include "dgp/kernels.hpp"

#include "dgp/errors.hpp"

#include <cmath>

namespace dgp {
namespace {

void check_same_dimension(const Point& x, const Point& x2) {
  if (x.size() != x2.size()) {
    throw InputError("kernel inputs have different dimensions (" + std::to_string(x.size()) +
                     " vs " + std::to_string(x2.size()) + ")");
  }
}

// Weights of every component evaluated at every point, |points| x J.
Eigen::MatrixXd weight_table(const ComposedKernelSpec& spec, const PointSet& points) {
  Eigen::MatrixXd table(static_cast<Eigen::Index>(points.size()),
                        static_cast<Eigen::Index>(spec.weights.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < spec.weights.size(); ++j) {
      table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = spec.weights[j](points[i]);
    }
  }
  return table;
}

void check_dimensions(const PointSet& points) {
  for (const auto& p : points) {
    if (p.size() != points.front().size()) {
      throw InputError("point set mixes dimensions");
    }
  }
}

}  // namespace

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::kSquaredExponential:
      return "squared_exponential";
    case KernelFamily::kMatern:
      return "matern";
    case KernelFamily::kRationalQuadratic:
      return "rational_quadratic";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "squared_exponential" || name == "se") return KernelFamily::kSquaredExponential;
  if (name == "matern") return KernelFamily::kMatern;
  if (name == "rational_quadratic" || name == "rq") return KernelFamily::kRationalQuadratic;
  throw ConfigError("unknown kernel family '" + std::string(name) + "'");
}

KernelSpec KernelSpec::squared_exponential(double length_scale) {
  KernelSpec spec;
  spec.family = KernelFamily::kSquaredExponential;
  spec.length_scale = length_scale;
  return spec;
}

KernelSpec KernelSpec::matern(double smoothness, double length_scale) {
  KernelSpec spec;
  spec.family = KernelFamily::kMatern;
  spec.smoothness = smoothness;
  spec.length_scale = length_scale;
  return spec;
}

KernelSpec KernelSpec::rational_quadratic(double mixture, double length_scale) {
  KernelSpec spec;
  spec.family = KernelFamily::kRationalQuadratic;
  spec.mixture = mixture;
  spec.length_scale = length_scale;
  return spec;
}

void KernelSpec::validate() const {
  if (!(length_scale > 0.0) || !std::isfinite(length_scale)) {
    throw ConfigError("kernel length scale must be positive, got " + std::to_string(length_scale));
  }
  if (family == KernelFamily::kMatern) {
    if (!(smoothness > 0.0)) {
      throw ConfigError("Matern smoothness must be positive");
    }
    if (smoothness != 0.5 && smoothness != 1.5 && smoothness != 2.5) {
      throw ConfigError("Matern smoothness must be one of 0.5, 1.5, 2.5; got " +
                        std::to_string(smoothness));
    }
  }
  if (family == KernelFamily::kRationalQuadratic && !(mixture > 0.0)) {
    throw ConfigError("rational-quadratic mixture must be positive");
  }
}

double KernelSpec::at_distance(double distance) const {
  const double r = distance / length_scale;
  switch (family) {
    case KernelFamily::kSquaredExponential:
      return std::exp(-0.5 * r * r);
    case KernelFamily::kMatern:
      if (smoothness == 0.5) return std::exp(-r);
      if (smoothness == 1.5) {
        const double s = std::sqrt(3.0) * r;
        return (1.0 + s) * std::exp(-s);
      } else {
        const double s = std::sqrt(5.0) * r;
        return (1.0 + s + s * s / 3.0) * std::exp(-s);
      }
    case KernelFamily::kRationalQuadratic:
      return std::pow(1.0 + r * r / (2.0 * mixture), -mixture);
  }
  return 0.0;
}

void ComposedKernelSpec::validate() const {
  if (components.empty()) {
    throw ConfigError("composed kernel needs at least one component");
  }
  if (components.size() != weights.size()) {
    throw ConfigError("composed kernel has " + std::to_string(components.size()) +
                      " components but " + std::to_string(weights.size()) + " weights");
  }
  for (const auto& c : components) c.validate();
  for (const auto& w : weights) {
    if (!w) throw ConfigError("composed kernel has an empty weight function");
  }
}

double eval_kernel(const KernelSpec& spec, const Point& x, const Point& x2) {
  spec.validate();
  check_same_dimension(x, x2);
  return spec.at_distance((x - x2).norm());
}

double compose_linear_kernel(const ComposedKernelSpec& spec, const Point& x, const Point& x2) {
  spec.validate();
  check_same_dimension(x, x2);
  const double distance = (x - x2).norm();
  double total = 0.0;
  for (std::size_t j = 0; j < spec.components.size(); ++j) {
    total += spec.components[j].at_distance(distance) * (spec.weights[j](x) * spec.weights[j](x2));
  }
  return total;
}

double eval_kernel(const Kernel& kernel, const Point& x, const Point& x2) {
  return std::visit(
      [&](const auto& spec) -> double {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, KernelSpec>) {
          return eval_kernel(spec, x, x2);
        } else {
          return compose_linear_kernel(spec, x, x2);
        }
      },
      kernel);
}

double prior_variance(const Kernel& kernel, const Point& x) {
  if (const auto* composed = std::get_if<ComposedKernelSpec>(&kernel)) {
    double total = 0.0;
    for (const auto& w : composed->weights) {
      const double g = w(x);
      total += g * g;
    }
    return total;
  }
  return 1.0;
}

Eigen::MatrixXd cross_covariance(const Kernel& kernel, const PointSet& a, const PointSet& b) {
  const auto rows = static_cast<Eigen::Index>(a.size());
  const auto cols = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd out(rows, cols);
  if (a.empty() || b.empty()) return out;
  check_dimensions(a);
  check_dimensions(b);
  check_same_dimension(a.front(), b.front());

  if (const auto* spec = std::get_if<KernelSpec>(&kernel)) {
    spec->validate();
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        out(i, j) = spec->at_distance((a[i] - b[j]).norm());
      }
    }
    return out;
  }

  const auto& composed = std::get<ComposedKernelSpec>(kernel);
  composed.validate();
  const Eigen::MatrixXd wa = weight_table(composed, a);
  const Eigen::MatrixXd wb = weight_table(composed, b);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double distance = (a[i] - b[j]).norm();
      double total = 0.0;
      for (Eigen::Index c = 0; c < wa.cols(); ++c) {
        total += composed.components[c].at_distance(distance) * (wa(i, c) * wb(j, c));
      }
      out(i, j) = total;
    }
  }
  return out;
}

Eigen::MatrixXd gram_matrix(const Kernel& kernel, const PointSet& points,
                            std::span<const double> noise_variances) {
  if (points.size() != noise_variances.size()) {
    throw InputError("gram_matrix: " + std::to_string(points.size()) + " points but " +
                     std::to_string(noise_variances.size()) + " noise variances");
  }
  if (points.empty()) {
    throw InputError("gram_matrix: need at least one point");
  }
  Eigen::MatrixXd gram = cross_covariance(kernel, points, points);
  // Exact symmetry; the composed path multiplies weights in a different order per triangle.
  gram = 0.5 * (gram + gram.transpose()).eval();
  for (std::size_t t = 0; t < points.size(); ++t) {
    if (noise_variances[t] < 0.0) {
      throw InputError("gram_matrix: negative noise variance");
    }
    gram(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t)) += noise_variances[t];
  }
  return gram;
}

}  // namespace dgp
