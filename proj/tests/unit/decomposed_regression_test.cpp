#include "dgp/decomposed_regression.hpp"
#include "dgp/errors.hpp"
#include "dgp/objectives.hpp"

#include "instances.hpp"

#include <gtest/gtest.h>

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

Dataset one_point(double y1, double y2) {
  Dataset d;
  d.points = {p1(0.5)};
  d.observations.resize(1, 2);
  d.observations << y1, y2;
  d.noise_variances = {1e-4, 1e-4};
  return d;
}

TEST(DecomposedRegression, SingleUnitComponentMatchesStandardFit) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  const auto k = KernelSpec::matern(2.5, 0.2);
  Dataset d;
  d.observations.resize(12, 1);
  for (int t = 0; t < 12; ++t) {
    d.points.push_back(p1(std::uniform_real_distribution<double>()(rng)));
    d.observations(t, 0) = n(rng);
  }
  d.noise_variances = {1e-3};
  const auto dp = fit_decomposed(LinearDecomposition::unit_weights({k}), d);
  const auto y = d.column(0);
  const auto nv = d.column_noise(0);
  const auto sp = fit_posterior(k, d.points, y, nv);
  for (double x = 0.0; x <= 1.0; x += 0.05) {
    const auto a = decomposed_predict(dp, p1(x));
    const auto b = sp.predict(p1(x));
    EXPECT_NEAR(a.mean, b.mean, 1e-10);
    EXPECT_NEAR(a.variance, b.variance, 1e-10);
  }
}

TEST(DecomposedRegression, UnitWeightsAddComponentVariances) {
  const auto d = one_point(1.0, 2.0);
  const auto dp = fit_decomposed(
      LinearDecomposition::unit_weights({KernelSpec::squared_exponential(1.0), KernelSpec::matern(0.5, 0.3)}), d);
  for (double x : {0.5, 0.1, 0.9}) {
    const auto pr = decomposed_predict(dp, p1(x));
    ASSERT_EQ(pr.components.size(), 2u);
    EXPECT_NEAR(pr.variance, pr.components[0].variance + pr.components[1].variance, 1e-15);
    EXPECT_NEAR(pr.mean, pr.components[0].mean + pr.components[1].mean, 1e-15);
  }
}

TEST(DecomposedRegression, OnePointComposedMean) {
  const auto k = KernelSpec::squared_exponential(1.0);
  const auto dp = fit_decomposed(LinearDecomposition::unit_weights({k, k}), one_point(1.0, 2.0));
  const auto pr = decomposed_predict(dp, p1(0.5));
  EXPECT_NEAR(pr.mean, 3.0 / (1.0 + 1e-4), 1e-12);
  EXPECT_NEAR(pr.mean, 2.99970, 1e-5);
}

TEST(DecomposedRegression, NoDataGivesPriorComposition) {
  LinearDecomposition dec;
  dec.component_kernels = {KernelSpec::squared_exponential(1.0), KernelSpec::squared_exponential(0.5)};
  dec.weights = {[](const Point& x) { return 2.0 * x[0]; }, [](const Point&) { return -1.5; }};
  dec.weight_bounds = {2.0, 1.5};
  Dataset d;
  d.observations.resize(0, 2);
  d.noise_variances = {1e-4, 1e-4};
  const auto dp = fit_decomposed(dec, d);
  const auto pr = decomposed_predict(dp, p1(0.7));
  EXPECT_EQ(pr.mean, 0.0);
  EXPECT_NEAR(pr.variance, 1.4 * 1.4 + 1.5 * 1.5, 1e-14);
}

TEST(DecomposedRegression, ZeroWeightsAnnihilate) {
  auto dec = LinearDecomposition::unit_weights({KernelSpec::squared_exponential(1.0), KernelSpec::matern(1.5, 1.0)});
  for (auto& w : dec.weights) w = [](const Point&) { return 0.0; };
  const auto dp = fit_decomposed(dec, one_point(4.0, -2.0));
  for (double x : {0.0, 0.5, 3.0}) {
    const auto pr = decomposed_predict(dp, p1(x));
    EXPECT_EQ(pr.mean, 0.0);
    EXPECT_EQ(pr.variance, 0.0);
  }
}

TEST(DecomposedRegression, DoublingWeightsScalesMeanAndVariance) {
  std::mt19937_64 rng(2);
  for (int inst = 0; inst < 10; ++inst) {
    auto ri = testing::random_regression_instance(rng, 2, 5, 20);
    const auto base = fit_decomposed(ri.decomposition, ri.dataset);
    auto doubled = ri.decomposition;
    for (auto& w : doubled.weights) w = [g = w](const Point& x) { return 2.0 * g(x); };
    const auto twice = fit_decomposed(doubled, ri.dataset);
    for (const auto& x : ri.probes) {
      const auto a = decomposed_predict(base, x);
      const auto b = decomposed_predict(twice, x);
      EXPECT_NEAR(b.mean, 2.0 * a.mean, 1e-10 * (1.0 + std::abs(a.mean)));
      EXPECT_NEAR(b.variance, 4.0 * a.variance, 1e-10 * (1.0 + a.variance));
    }
  }
}

TEST(DecomposedRegression, AggregateUsesWeightsAndSquaredNoise) {
  LinearDecomposition dec;
  dec.component_kernels = {KernelSpec::squared_exponential(1.0), KernelSpec::squared_exponential(1.0)};
  dec.weights = {[](const Point&) { return 2.0; }, [](const Point& x) { return x[0]; }};
  dec.weight_bounds = {2.0, 1.0};
  Dataset d = one_point(1.0, 4.0);
  d.noise_variances = {0.1, 0.3};
  const auto agg = aggregate(dec, d);
  EXPECT_NEAR(agg.observations[0], 2.0 * 1.0 + 0.5 * 4.0, 1e-15);
  EXPECT_NEAR(agg.noise_variances[0], 4.0 * 0.1 + 0.25 * 0.3, 1e-15);
}

TEST(DecomposedRegression, SingleComponentOraclesAgree) {
  std::mt19937_64 rng(3);
  for (int inst = 0; inst < 20; ++inst) {
    const auto ri = testing::random_regression_instance(rng, 1, 1, 30, 5);
    for (const auto& x : ri.probes) {
      const auto o = variance_oracles(ri.decomposition, ri.dataset, x);
      EXPECT_NEAR(o.gap, 0.0, 1e-9);
      EXPECT_FALSE(o.regularized);
    }
  }
}

TEST(DecomposedRegression, DecomposedVarianceDominated) {
  std::mt19937_64 rng(4);
  for (int inst = 0; inst < 40; ++inst) {
    const auto ri = testing::random_regression_instance(rng);
    for (const auto& x : ri.probes) {
      EXPECT_GE(variance_oracles(ri.decomposition, ri.dataset, x).gap, -1e-8);
    }
  }
}

TEST(DecomposedRegression, OraclesMatchFittedPosteriors) {
  std::mt19937_64 rng(5);
  for (int inst = 0; inst < 25; ++inst) {
    const auto ri = testing::random_regression_instance(rng);
    const auto dp = fit_decomposed(ri.decomposition, ri.dataset);
    const auto sp = fit_standard(ri.decomposition, ri.dataset);
    for (const auto& x : ri.probes) {
      const auto o = variance_oracles(ri.decomposition, ri.dataset, x);
      EXPECT_NEAR(o.decomposed, decomposed_predict(dp, x).variance, 1e-8);
      const double standard = sp.predict(x).variance;
      EXPECT_LE(std::abs(o.entire - standard), 1e-6 * std::max(std::abs(standard), 1e-12) + 1e-12);
    }
  }
}

TEST(DecomposedRegression, ZeroWeightAtTrainingPointIsRegularized) {
  LinearDecomposition dec;
  dec.component_kernels = {KernelSpec::squared_exponential(0.5), KernelSpec::squared_exponential(0.3)};
  dec.weights = {[](const Point& x) { return x[0]; }, [](const Point&) { return 1.0; }};
  dec.weight_bounds = {1.0, 1.0};
  Dataset d;
  d.points = {p1(0.0), p1(0.6)};
  d.observations.resize(2, 2);
  d.observations << 0.3, -0.2, 1.0, 0.5;
  d.noise_variances = {1e-2, 1e-2};
  const auto o = variance_oracles(dec, d, p1(0.4));
  EXPECT_TRUE(o.regularized);
  EXPECT_TRUE(std::isfinite(o.decomposed));
  EXPECT_GE(o.gap, -1e-8);
}

TEST(DecomposedRegression, WeightBoundsChecked) {
  auto dec = LinearDecomposition::unit_weights({KernelSpec::squared_exponential(1.0)});
  EXPECT_NO_THROW(dec.check_weight_bounds({p1(0.0), p1(1.0)}));
  dec.weight_bounds = {0.5};
  EXPECT_THROW(dec.check_weight_bounds({p1(0.0)}), ConfigError);
}

TEST(DecomposedRegression, ColumnMismatchRejected) {
  const auto dec = LinearDecomposition::unit_weights({KernelSpec::squared_exponential(1.0)});
  EXPECT_THROW(fit_decomposed(dec, one_point(1.0, 2.0)), InputError);
}

TEST(DecomposedRegression, RmseValues) {
  const std::vector<double> a = {1.0, -2.0, 3.5};
  EXPECT_EQ(rmse(a, a), 0.0);
  const std::vector<double> zeros(4, 0.0), c(4, -1.25);
  EXPECT_NEAR(rmse(c, zeros), 1.25, 1e-15);
  const std::vector<double> e = {0.0, 2.0}, t = {0.0, 0.0};
  EXPECT_NEAR(rmse(e, t), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(rmse(std::vector<double>{}, std::vector<double>{}), InputError);
  EXPECT_THROW(rmse(a, e), InputError);
}

// Averaged over seeds, knowing the components should never hurt the fit.
TEST(DecomposedRegression, DecomposedFitsBetterOnAverage) {
  const auto grid = unit_interval_grid(200);
  double standard_total = 0.0, decomposed_total = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto obj = synthetic_objective(seed, 10, KernelFamily::kSquaredExponential, grid);
    const auto& dec = std::get<LinearDecomposition>(obj.decomposition);
    std::mt19937_64 rng(seed + 100);
    std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
    std::normal_distribution<double> noise(0.0, 1e-2);
    Dataset d;
    d.observations.resize(20, 10);
    d.noise_variances = obj.noise_variances;
    for (int t = 0; t < 20; ++t) {
      const std::size_t i = pick(rng);
      d.points.push_back(grid[i]);
      for (int j = 0; j < 10; ++j) d.observations(t, j) = obj.component_truth(static_cast<Eigen::Index>(i), j) + noise(rng);
    }
    const auto truth = obj.values();
    const std::vector<double> tv(truth.data(), truth.data() + truth.size());
    const auto dm = fit_decomposed(dec, d).predict(grid).mean;
    const auto sm = fit_standard(dec, d).predict(grid).mean;
    decomposed_total += rmse(std::vector<double>(dm.data(), dm.data() + dm.size()), tv);
    standard_total += rmse(std::vector<double>(sm.data(), sm.data() + sm.size()), tv);
  }
  EXPECT_LE(decomposed_total, standard_total);
}

}  // namespace
}  // namespace dgp
