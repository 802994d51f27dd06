#include "dgp/gp_core.hpp"

#include "dgp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace dgp {
namespace {

constexpr double kFirstJitter = 1e-10;
constexpr double kLastJitter = 1e-4;
constexpr double kSampleJitter = 1e-8;

std::string condition_report(const Eigen::MatrixXd& gram) {
  std::ostringstream out;
  const Eigen::VectorXd diag = gram.diagonal();
  out << "size " << gram.rows() << ", diagonal range [" << diag.minCoeff() << ", " << diag.maxCoeff()
      << "]";
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.info() == Eigen::Success) {
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    out << ", eigenvalue range [" << lo << ", " << hi << "]";
    if (lo > 0.0) out << ", condition " << hi / lo;
  }
  return out.str();
}

// Cholesky with the escalating jitter policy. Returns the jitter used.
double factorize(const Eigen::MatrixXd& gram, Eigen::LLT<Eigen::MatrixXd>& llt) {
  llt.compute(gram);
  if (llt.info() == Eigen::Success) return 0.0;
  for (double jitter = kFirstJitter; jitter <= kLastJitter * 1.0000001; jitter *= 10.0) {
    Eigen::MatrixXd shifted = gram;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) return jitter;
  }
  throw NumericalError("Cholesky factorization failed after jitter escalation to 1e-4 (" +
                       condition_report(gram) + ")");
}

}  // namespace

double Dataset::noise(std::size_t t, std::size_t j) const {
  if (noise_override.size() > 0) {
    return noise_override(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
  }
  return noise_variances[j];
}

std::vector<double> Dataset::column(std::size_t j) const {
  std::vector<double> out(size());
  for (std::size_t t = 0; t < size(); ++t) {
    out[t] = observations(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
  }
  return out;
}

std::vector<double> Dataset::column_noise(std::size_t j) const {
  std::vector<double> out(size());
  for (std::size_t t = 0; t < size(); ++t) out[t] = noise(t, j);
  return out;
}

void Dataset::validate() const {
  if (static_cast<std::size_t>(observations.rows()) != points.size()) {
    throw InputError("dataset has " + std::to_string(points.size()) + " points but " +
                     std::to_string(observations.rows()) + " observation rows");
  }
  if (noise_variances.size() != components()) {
    throw InputError("dataset has " + std::to_string(components()) + " components but " +
                     std::to_string(noise_variances.size()) + " noise variances");
  }
  if (noise_override.size() > 0 &&
      (noise_override.rows() != observations.rows() || noise_override.cols() != observations.cols())) {
    throw InputError("dataset noise override must match the observation table shape");
  }
  for (const auto& p : points) {
    if (p.size() != points.front().size()) throw InputError("dataset points mix dimensions");
  }
  for (double v : noise_variances) {
    if (v < 0.0) throw InputError("dataset noise variance is negative");
  }
  if (noise_override.size() > 0 && noise_override.minCoeff() < 0.0) {
    throw InputError("dataset noise override has a negative entry");
  }
}

Posterior::Posterior(Kernel kernel) : kernel_(std::move(kernel)) {}

void Posterior::check_query(const Point& x) const {
  if (!points_.empty() && x.size() != points_.front().size()) {
    throw InputError("query point has dimension " + std::to_string(x.size()) +
                     ", training points have " + std::to_string(points_.front().size()));
  }
}

Prediction Posterior::predict(const Point& x) const {
  check_query(x);
  const double prior = prior_variance(kernel_, x);
  if (points_.empty()) return {0.0, prior};
  const Eigen::VectorXd k = cross_covariance(kernel_, points_, PointSet{x}).col(0);
  const Eigen::VectorXd v = cholesky_.matrixL().solve(k);
  const double variance = std::clamp(prior - v.squaredNorm(), 0.0, prior);
  return {k.dot(weights_), variance};
}

BatchPrediction Posterior::predict(const PointSet& xs) const {
  const auto n = static_cast<Eigen::Index>(xs.size());
  BatchPrediction out{Eigen::VectorXd::Zero(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    check_query(xs[i]);
    out.variance(i) = prior_variance(kernel_, xs[i]);
  }
  if (points_.empty() || n == 0) return out;
  const Eigen::MatrixXd cross = cross_covariance(kernel_, points_, xs);
  out.mean.noalias() = cross.transpose() * weights_;
  const Eigen::MatrixXd v = cholesky_.matrixL().solve(cross);
  const Eigen::VectorXd reduction = v.colwise().squaredNorm().transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    out.variance(i) = std::clamp(out.variance(i) - reduction(i), 0.0, out.variance(i));
  }
  return out;
}

double Posterior::covariance(const Point& x, const Point& x2) const {
  check_query(x);
  check_query(x2);
  if (x.size() == x2.size() && (x.array() == x2.array()).all()) return predict(x).variance;
  const double prior = eval_kernel(kernel_, x, x2);
  if (points_.empty()) return prior;
  const Eigen::MatrixXd cross = cross_covariance(kernel_, points_, PointSet{x, x2});
  const Eigen::MatrixXd v = cholesky_.matrixL().solve(cross);
  return prior - v.col(0).dot(v.col(1));
}

Eigen::MatrixXd Posterior::reconstructed_gram() const {
  if (points_.empty()) return {};
  const Eigen::MatrixXd lower = cholesky_.matrixL();
  return lower * lower.transpose();
}

Posterior fit_posterior(Kernel kernel, PointSet points, std::span<const double> observations,
                        std::span<const double> noise_variances) {
  if (points.size() != observations.size()) {
    throw InputError("fit_posterior: " + std::to_string(points.size()) + " points but " +
                     std::to_string(observations.size()) + " observations");
  }
  if (points.size() != noise_variances.size()) {
    throw InputError("fit_posterior: " + std::to_string(points.size()) + " points but " +
                     std::to_string(noise_variances.size()) + " noise variances");
  }
  Posterior posterior(std::move(kernel));
  if (points.empty()) return posterior;

  const Eigen::MatrixXd gram = gram_matrix(posterior.kernel_, points, noise_variances);
  posterior.jitter_ = factorize(gram, posterior.cholesky_);
  const Eigen::Map<const Eigen::VectorXd> y(observations.data(),
                                            static_cast<Eigen::Index>(observations.size()));
  posterior.weights_ = posterior.cholesky_.solve(y);
  posterior.points_ = std::move(points);
  return posterior;
}

Prediction predict(const Posterior& posterior, const Point& x) { return posterior.predict(x); }

double posterior_covariance(const Posterior& posterior, const Point& x, const Point& x2) {
  return posterior.covariance(x, x2);
}

std::vector<double> sample_gp_function(const Kernel& kernel, const PointSet& grid, std::uint64_t seed) {
  if (grid.empty()) throw InputError("sample_gp_function: grid is empty");
  const std::vector<double> jitter(grid.size(), kSampleJitter);
  const Eigen::MatrixXd gram = gram_matrix(kernel, grid, jitter);
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("sample_gp_function: Cholesky factorization failed (" +
                         condition_report(gram) + ")");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(static_cast<Eigen::Index>(grid.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  const Eigen::VectorXd sample = llt.matrixL() * z;
  return {sample.data(), sample.data() + sample.size()};
}

double information_gain(std::span<const double> predictive_variances, double noise_variance) {
  if (!(noise_variance > 0.0)) {
    throw ConfigError("information_gain: noise variance must be positive");
  }
  double total = 0.0;
  for (double v : predictive_variances) {
    if (v < 0.0) throw InputError("information_gain: negative predictive variance");
    total += 0.5 * std::log1p(v / noise_variance);
  }
  return total;
}

std::vector<double> greedy_information_gain_increments(const Kernel& kernel, const PointSet& grid,
                                                       int rounds, double noise_variance) {
  if (rounds < 1) throw InputError("greedy information gain needs at least one round");
  if (grid.empty()) throw InputError("greedy information gain needs a nonempty grid");
  if (!(noise_variance > 0.0)) {
    throw ConfigError("greedy information gain: noise variance must be positive");
  }
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::VectorXd variance(n);
  for (Eigen::Index i = 0; i < n; ++i) variance(i) = prior_variance(kernel, grid[i]);

  // Column r holds k_{r-1}(., x_r) / sqrt(var_{r-1}(x_r) + noise): the rank-one
  // downdates accumulated so far, so that var_t = prior - sum of squares.
  Eigen::MatrixXd factors(n, rounds);
  std::vector<double> increments;
  increments.reserve(static_cast<std::size_t>(rounds));
  for (int r = 0; r < rounds; ++r) {
    Eigen::Index pick = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
      if (variance(i) > variance(pick)) pick = i;
    }
    const double picked_variance = variance(pick);
    increments.push_back(0.5 * std::log1p(picked_variance / noise_variance));

    Eigen::VectorXd column = cross_covariance(kernel, grid, PointSet{grid[pick]}).col(0);
    if (r > 0) {
      column.noalias() -= factors.leftCols(r) * factors.leftCols(r).row(pick).transpose();
    }
    column /= std::sqrt(picked_variance + noise_variance);
    factors.col(r) = column;
    variance -= column.cwiseAbs2();
    variance = variance.cwiseMax(0.0);
  }
  return increments;
}

double greedy_max_information_gain(const Kernel& kernel, const PointSet& grid, int rounds,
                                   double noise_variance) {
  const auto increments = greedy_information_gain_increments(kernel, grid, rounds, noise_variance);
  double total = 0.0;
  for (double v : increments) total += v;
  return total;
}

double log_marginal_likelihood(const Kernel& kernel, const PointSet& points,
                               std::span<const double> values, double noise_variance) {
  if (points.size() != values.size() || points.empty()) {
    throw InputError("log_marginal_likelihood: need matching nonempty points and values");
  }
  const std::vector<double> noise(points.size(), noise_variance);
  const Eigen::MatrixXd gram = gram_matrix(kernel, points, noise);
  Eigen::LLT<Eigen::MatrixXd> llt;
  factorize(gram, llt);
  const Eigen::Map<const Eigen::VectorXd> y(values.data(), static_cast<Eigen::Index>(values.size()));
  const Eigen::VectorXd alpha = llt.solve(y);
  const Eigen::MatrixXd lower = llt.matrixL();
  const double log_det = 2.0 * lower.diagonal().array().log().sum();
  return -0.5 * y.dot(alpha) - 0.5 * log_det -
         0.5 * static_cast<double>(values.size()) * std::log(2.0 * std::numbers::pi);
}

LengthScaleFit select_length_scale(const KernelSpec& base, const PointSet& points,
                                   std::span<const double> values, double noise_variance, double lo,
                                   double hi, int candidates) {
  if (!(lo > 0.0) || !(hi >= lo) || candidates < 1) {
    throw ConfigError("select_length_scale: invalid search range");
  }
  LengthScaleFit best{lo, -std::numeric_limits<double>::infinity()};
  for (int i = 0; i < candidates; ++i) {
    const double frac = candidates == 1 ? 0.0 : static_cast<double>(i) / (candidates - 1);
    KernelSpec spec = base;
    spec.length_scale = lo * std::pow(hi / lo, frac);
    double score = -std::numeric_limits<double>::infinity();
    try {
      score = log_marginal_likelihood(spec, points, values, noise_variance);
    } catch (const NumericalError&) {
      continue;
    }
    if (score > best.log_marginal_likelihood) best = {spec.length_scale, score};
  }
  return best;
}

}  // namespace dgp
