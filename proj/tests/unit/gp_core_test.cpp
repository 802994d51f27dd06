#include "dgp/errors.hpp"
#include "dgp/gp_core.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace dgp {
namespace {

Point p1(double v) {
  Point x(1);
  x << v;
  return x;
}

PointSet random_points(std::mt19937_64& rng, std::size_t count, int dim, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  PointSet out;
  for (std::size_t i = 0; i < count; ++i) {
    Point x(dim);
    for (int d = 0; d < dim; ++d) x[d] = u(rng);
    out.push_back(x);
  }
  return out;
}

PointSet line_grid(std::size_t n) {
  PointSet g;
  for (std::size_t i = 0; i < n; ++i) g.push_back(p1(static_cast<double>(i) / static_cast<double>(n - 1)));
  return g;
}

TEST(GpCore, EmptyPosteriorIsPrior) {
  const Posterior p(KernelSpec::squared_exponential(1.0));
  for (double v : {-3.0, 0.0, 2.5}) {
    const auto pr = p.predict(p1(v));
    EXPECT_EQ(pr.mean, 0.0);
    EXPECT_EQ(pr.variance, 1.0);
  }
  EXPECT_NEAR(posterior_covariance(p, p1(0.0), p1(1.0)), std::exp(-0.5), 1e-15);
}

TEST(GpCore, OnePointClosedForm) {
  const std::vector<double> y = {1.0}, noise = {1e-4};
  const auto p = fit_posterior(KernelSpec::squared_exponential(1.0), {p1(0.3)}, y, noise);
  const auto pr = predict(p, p1(0.3));
  EXPECT_NEAR(pr.mean, 1.0 / (1.0 + 1e-4), 1e-12);
  EXPECT_NEAR(pr.variance, 1.0 - 1.0 / (1.0 + 1e-4), 1e-12);
  EXPECT_NEAR(pr.mean, 0.999900, 1e-6);
  EXPECT_NEAR(pr.variance, 9.9990e-5, 1e-9);
}

TEST(GpCore, FarQueryRecoversPrior) {
  const std::vector<double> y = {2.0, -1.0}, noise = {1e-4, 1e-4};
  const auto p = fit_posterior(KernelSpec::squared_exponential(1.0), {p1(0.0), p1(0.5)}, y, noise);
  const auto pr = p.predict(p1(12.0));
  EXPECT_NEAR(pr.mean, 0.0, 1e-8);
  EXPECT_NEAR(pr.variance, 1.0, 1e-8);
}

TEST(GpCore, FactorReproducesGram) {
  std::mt19937_64 rng(3);
  const auto pts = random_points(rng, 15, 2);
  std::vector<double> y(pts.size()), noise(pts.size(), 1e-4);
  std::normal_distribution<double> n;
  for (auto& v : y) v = n(rng);
  const Kernel k = KernelSpec::matern(2.5, 0.3);
  const auto p = fit_posterior(k, pts, y, noise);
  const Eigen::MatrixXd K = gram_matrix(k, pts, noise);
  EXPECT_LE((p.reconstructed_gram() - K).cwiseAbs().maxCoeff(), 1e-8 + p.jitter());
}

TEST(GpCore, MatchesDenseInverse) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  std::uniform_int_distribution<int> count(1, 10);
  const std::vector<KernelSpec> kernels = {KernelSpec::squared_exponential(0.4), KernelSpec::matern(1.5, 0.6),
                                           KernelSpec::rational_quadratic(2.0, 0.3)};
  for (int trial = 0; trial < 30; ++trial) {
    const auto& k = kernels[static_cast<std::size_t>(trial) % kernels.size()];
    const auto pts = random_points(rng, static_cast<std::size_t>(count(rng)), 2);
    const std::size_t T = pts.size();
    std::vector<double> y(T), noise(T);
    for (std::size_t t = 0; t < T; ++t) {
      y[t] = n(rng);
      noise[t] = 1e-2 * (1.0 + static_cast<double>(t % 3));
    }
    const auto p = fit_posterior(k, pts, y, noise);

    Eigen::MatrixXd K(T, T);
    for (std::size_t i = 0; i < T; ++i) {
      for (std::size_t j = 0; j < T; ++j) K(i, j) = k.at_distance((pts[i] - pts[j]).norm()) + (i == j ? noise[i] : 0.0);
    }
    const Eigen::MatrixXd Kinv = K.inverse();
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(T));
    for (const auto& x : random_points(rng, 10, 2)) {
      Eigen::VectorXd kx(T);
      for (std::size_t i = 0; i < T; ++i) kx[i] = k.at_distance((x - pts[i]).norm());
      const auto pr = p.predict(x);
      EXPECT_NEAR(pr.mean, kx.dot(Kinv * yv), 1e-8);
      EXPECT_NEAR(pr.variance, 1.0 - kx.dot(Kinv * kx), 1e-8);
    }
  }
}

TEST(GpCore, BatchMatchesPointwise) {
  std::mt19937_64 rng(6);
  const auto pts = random_points(rng, 6, 1);
  const std::vector<double> y = {0.1, -0.3, 0.5, 1.0, 0.0, -0.2}, noise(6, 1e-3);
  const auto p = fit_posterior(KernelSpec::squared_exponential(0.2), pts, y, noise);
  const auto grid = line_grid(50);
  const auto batch = p.predict(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto pr = p.predict(grid[i]);
    EXPECT_NEAR(batch.mean[static_cast<Eigen::Index>(i)], pr.mean, 1e-12);
    EXPECT_NEAR(batch.variance[static_cast<Eigen::Index>(i)], pr.variance, 1e-12);
  }
}

TEST(GpCore, CovarianceSymmetricAndConsistentWithVariance) {
  std::mt19937_64 rng(8);
  const auto pts = random_points(rng, 5, 2);
  const std::vector<double> y(5, 1.0), noise(5, 1e-3);
  const auto p = fit_posterior(KernelSpec::rational_quadratic(1.0, 0.5), pts, y, noise);
  const auto probes = random_points(rng, 8, 2);
  for (const auto& a : probes) {
    EXPECT_NEAR(posterior_covariance(p, a, a), p.predict(a).variance, 1e-12);
    for (const auto& b : probes) EXPECT_EQ(posterior_covariance(p, a, b), posterior_covariance(p, b, a));
  }
}

TEST(GpCore, NoiselessTrainingPointDecorrelates) {
  const std::vector<double> y = {0.7}, noise = {1e-10};
  const auto p = fit_posterior(KernelSpec::squared_exponential(1.0), {p1(0.0)}, y, noise);
  for (double v : {0.1, 0.5, 2.0}) EXPECT_LT(std::abs(posterior_covariance(p, p1(0.0), p1(v))), 1e-4);
  const auto pr = p.predict(p1(0.0));
  EXPECT_NEAR(pr.mean, 0.7, 1e-4);
  EXPECT_NEAR(pr.variance, 0.0, 1e-4);
}

TEST(GpCore, VarianceNeverGrowsWithMoreData) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  const auto pts = random_points(rng, 12, 2);
  const auto probes = random_points(rng, 50, 2);
  const Kernel k = KernelSpec::matern(2.5, 0.4);
  std::vector<double> prev(probes.size(), 1.0);
  for (std::size_t T = 1; T <= pts.size(); ++T) {
    const PointSet sub(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(T));
    std::vector<double> y(T), noise(T, 1e-4);
    for (auto& v : y) v = n(rng);
    const auto p = fit_posterior(k, sub, y, noise);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const double v = p.predict(probes[i]).variance;
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, prev[i] + 1e-8);
      prev[i] = v;
    }
  }
}

// Data drawn from the prior itself, restricted to |y| <= 3.
TEST(GpCore, MeanIsSmooth) {
  const Kernel k = KernelSpec::squared_exponential(1.0);
  const double dx = 1e-3;
  int fitted = 0;
  for (std::uint64_t seed = 0; fitted < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto pts = random_points(rng, 10, 1, 0.0, 8.0);
    const auto y = sample_gp_function(k, pts, seed);
    if (std::any_of(y.begin(), y.end(), [](double v) { return std::abs(v) > 3.0; })) continue;
    ++fitted;
    const std::vector<double> noise(pts.size(), 1e-4);
    const auto p = fit_posterior(k, pts, y, noise);
    double prev = p.predict(p1(0.0)).mean;
    for (double x = dx; x <= 8.0; x += dx) {
      const double m = p.predict(p1(x)).mean;
      EXPECT_LE(std::abs(m - prev), 5.0 * dx);
      prev = m;
    }
  }
}

TEST(GpCore, JitterRescuesDuplicatePoints) {
  const PointSet pts = {p1(0.2), p1(0.2), p1(0.2)};
  const std::vector<double> y = {1.0, 1.0, 1.0}, noise = {0.0, 0.0, 0.0};
  const auto p = fit_posterior(KernelSpec::squared_exponential(1.0), pts, y, noise);
  EXPECT_GT(p.jitter(), 0.0);
  EXPECT_LE(p.jitter(), 1e-4);
  EXPECT_NEAR(p.predict(p1(0.2)).mean, 1.0, 1e-3);
}

TEST(GpCore, InputErrors) {
  const std::vector<double> y = {1.0}, two = {1.0, 2.0}, noise = {1e-4};
  EXPECT_THROW(fit_posterior(KernelSpec::squared_exponential(1.0), {p1(0.0)}, two, noise), InputError);
  const auto p = fit_posterior(KernelSpec::squared_exponential(1.0), {p1(0.0)}, y, noise);
  Point x2(2);
  x2 << 0.0, 0.0;
  EXPECT_THROW(p.predict(x2), InputError);
}

TEST(GpCore, DatasetAccessors) {
  Dataset d;
  d.points = {p1(0.0), p1(1.0)};
  d.observations.resize(2, 2);
  d.observations << 1.0, 2.0, 3.0, 4.0;
  d.noise_variances = {0.1, 0.2};
  EXPECT_NO_THROW(d.validate());
  EXPECT_EQ(d.column(1), (std::vector<double>{2.0, 4.0}));
  EXPECT_EQ(d.column_noise(0), (std::vector<double>{0.1, 0.1}));
  d.noise_override = Eigen::MatrixXd::Constant(2, 2, 0.5);
  d.noise_override(1, 0) = 0.7;
  EXPECT_EQ(d.noise(1, 0), 0.7);
  d.noise_variances = {-1.0, 0.2};
  EXPECT_THROW(d.validate(), InputError);
}

TEST(GpCore, SamplingIsDeterministic) {
  const auto grid = line_grid(40);
  const Kernel k = KernelSpec::squared_exponential(0.2);
  EXPECT_EQ(sample_gp_function(k, grid, 42), sample_gp_function(k, grid, 42));
  EXPECT_NE(sample_gp_function(k, grid, 42), sample_gp_function(k, grid, 43));
}

TEST(GpCore, SamplesHaveZeroMeanAndUnitVariance) {
  const auto grid = line_grid(20);
  const Kernel k = KernelSpec::squared_exponential(0.3);
  const int seeds = 200;
  std::vector<double> sum(grid.size(), 0.0), sq(grid.size(), 0.0);
  for (int s = 0; s < seeds; ++s) {
    const auto f = sample_gp_function(k, grid, static_cast<std::uint64_t>(s));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      sum[i] += f[i];
      sq[i] += f[i] * f[i];
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double mean = sum[i] / seeds;
    const double var = (sq[i] - seeds * mean * mean) / (seeds - 1);
    EXPECT_LE(std::abs(mean), 3.0 / std::sqrt(static_cast<double>(seeds)));
    EXPECT_GE(var, 0.7);
    EXPECT_LE(var, 1.3);
  }
}

TEST(GpCore, InformationGainFormula) {
  const std::vector<double> zeros(4, 0.0), one = {1.0};
  EXPECT_EQ(information_gain(zeros, 0.5), 0.0);
  EXPECT_NEAR(information_gain(one, 1.0), 0.5 * std::log(2.0), 1e-15);
  EXPECT_NEAR(0.5 * std::log(2.0), 0.346574, 1e-6);
  std::vector<double> vars;
  double prev = 0.0;
  for (double v : {0.3, 0.0, 1.2, 0.01}) {
    vars.push_back(v);
    const double g = information_gain(vars, 0.1);
    EXPECT_GE(g, prev);
    prev = g;
  }
  EXPECT_THROW(information_gain(one, 0.0), ConfigError);
}

TEST(GpCore, GreedyInformationGainFirstRound) {
  const auto grid = line_grid(30);
  for (double noise : {1e-4, 0.1, 1.0}) {
    EXPECT_NEAR(greedy_max_information_gain(KernelSpec::squared_exponential(0.2), grid, 1, noise),
                0.5 * std::log(1.0 + 1.0 / noise), 1e-12);
  }
}

TEST(GpCore, GreedyIncrementsDiminish) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ls(0.05, 0.5);
  for (int inst = 0; inst < 20; ++inst) {
    const auto grid = random_points(rng, 40, 1);
    const Kernel k = KernelSpec::squared_exponential(ls(rng));
    const auto inc = greedy_information_gain_increments(k, grid, 15, 1e-2);
    ASSERT_EQ(inc.size(), 15u);
    for (std::size_t t = 1; t < inc.size(); ++t) EXPECT_LE(inc[t], inc[t - 1] + 1e-12);
    double total = 0.0;
    for (double v : inc) total += v;
    EXPECT_NEAR(greedy_max_information_gain(k, grid, 15, 1e-2), total, 1e-9);
    EXPECT_GE(greedy_max_information_gain(k, grid, 2, 1e-2), greedy_max_information_gain(k, grid, 1, 1e-2));
  }
}

// The greedy pick is the point of largest posterior variance; recompute it with fresh fits.
TEST(GpCore, GreedyMatchesBruteForceSelection) {
  const auto grid = line_grid(25);
  const Kernel k = KernelSpec::matern(1.5, 0.15);
  const double noise = 1e-2;
  PointSet chosen;
  std::vector<double> vars;
  for (int t = 0; t < 6; ++t) {
    const std::vector<double> y(chosen.size(), 0.0), nv(chosen.size(), noise);
    const Posterior p = chosen.empty() ? Posterior(k) : fit_posterior(k, chosen, y, nv);
    std::size_t best = 0;
    double best_var = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double v = p.predict(grid[i]).variance;
      if (v > best_var + 1e-12) {
        best_var = v;
        best = i;
      }
    }
    vars.push_back(best_var);
    chosen.push_back(grid[best]);
  }
  EXPECT_NEAR(greedy_max_information_gain(k, grid, 6, noise), information_gain(vars, noise), 1e-8);
}

TEST(GpCore, LengthScaleSelectionRecoversScale) {
  const auto grid = line_grid(120);
  const double truth = 0.1;
  const auto f = sample_gp_function(KernelSpec::squared_exponential(truth), grid, 5);
  const auto fit = select_length_scale(KernelSpec::squared_exponential(1.0), grid, f, 1e-4);
  EXPECT_GT(fit.length_scale, truth / 2.0);
  EXPECT_LT(fit.length_scale, truth * 2.0);
  EXPECT_NEAR(fit.log_marginal_likelihood,
              log_marginal_likelihood(KernelSpec::squared_exponential(fit.length_scale), grid, f, 1e-4), 1e-9);
}

TEST(GpCore, LogMarginalLikelihoodOnePoint) {
  const std::vector<double> y = {0.5};
  const double s = 1.0 + 0.1;
  const double expected = -0.5 * 0.25 / s - 0.5 * std::log(s) - 0.5 * std::log(2.0 * M_PI);
  EXPECT_NEAR(log_marginal_likelihood(KernelSpec::squared_exponential(1.0), {p1(0.0)}, y, 0.1), expected, 1e-12);
}

}  // namespace
}  // namespace dgp
