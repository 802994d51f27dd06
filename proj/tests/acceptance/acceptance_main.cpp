// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Usage: dgp_acceptance [criterion numbers...]   (default: all)

#include "dgp/bandit.hpp"
#include "dgp/decomposed_regression.hpp"
#include "dgp/errors.hpp"
#include "dgp/gp_core.hpp"
#include "dgp/harness.hpp"
#include "dgp/kernels.hpp"
#include "dgp/objectives.hpp"

#include "instances.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace {

using namespace dgp;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int number;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome variance_dominance() {
  std::mt19937_64 rng(101);
  double worst = std::numeric_limits<double>::infinity();
  std::size_t checks = 0, violations = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const auto ri = testing::random_regression_instance(rng, 2, 10, 50, 20, 1e-4, 1e-2);
    const auto decomposed = fit_decomposed(ri.decomposition, ri.dataset);
    const auto standard = fit_standard(ri.decomposition, ri.dataset);
    for (const auto& x : ri.probes) {
      const double gap = standard.predict(x).variance - decomposed_predict(decomposed, x).variance;
      worst = std::min(worst, gap);
      ++checks;
      if (gap < -1e-8) ++violations;
    }
  }
  return {violations == 0, fmt("%zu probes on 100 instances, min(entire - decomposed) = %.3g, violations = %zu",
                               checks, worst, violations)};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(202);
  double worst_entire = 0.0, worst_decomposed = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const auto ri = testing::random_regression_instance(rng, 2, 10, 50, 20, 1e-4, 1e-2);
    const auto decomposed = fit_decomposed(ri.decomposition, ri.dataset);
    const auto standard = fit_standard(ri.decomposition, ri.dataset);
    for (const auto& x : ri.probes) {
      const auto o = variance_oracles(ri.decomposition, ri.dataset, x);
      const double direct = standard.predict(x).variance;
      worst_entire = std::max(worst_entire, std::abs(o.entire - direct) / std::max(std::abs(direct), 1e-300));
      worst_decomposed = std::max(worst_decomposed, std::abs(o.decomposed - decomposed_predict(decomposed, x).variance));
    }
  }
  return {worst_entire <= 1e-6 && worst_decomposed <= 1e-8,
          fmt("entire-variance formula max rel err %.3g (tol 1e-6), decomposed formula max abs err %.3g (tol 1e-8)",
              worst_entire, worst_decomposed)};
}

Outcome regression_improvement() {
  ExperimentConfig c;
  c.kind = ExperimentKind::kRegressionCompare;
  c.objective = ObjectiveType::kSynthetic;
  c.trials = 100;
  c.schedule = {5, 20, 50};
  c.synthetic.components = 10;
  c.synthetic.grid_size = 1000;
  const auto table = run_regression_experiment(c);
  const double i5 = mean_rmse_improvement(table, 5), i20 = mean_rmse_improvement(table, 20),
               i50 = mean_rmse_improvement(table, 50);
  return {i20 >= 5.0, fmt("mean RMSE improvement %.2f%% (T=5), %.2f%% (T=20, need >= 5%%), %.2f%% (T=50)", i5, i20, i50)};
}

std::map<std::string, std::map<int, double>> mean_by_strategy_and_t(const ResultTable& table, bool average) {
  std::map<std::string, std::map<int, std::pair<double, int>>> acc;
  for (const auto& r : table.rows) {
    auto& a = acc[r.strategy][r.t];
    a.first += average ? *r.average_regret : *r.cumulative_regret;
    ++a.second;
  }
  std::map<std::string, std::map<int, double>> out;
  for (const auto& [s, byt] : acc) {
    for (const auto& [t, a] : byt) out[s][t] = a.first / a.second;
  }
  return out;
}

Outcome bandit_improvement() {
  ExperimentConfig c;
  c.kind = ExperimentKind::kBanditCompare;
  c.objective = ObjectiveType::kSynthetic;
  c.strategies = {Strategy::kGpUcb, Strategy::kDecomposedUcb};
  c.trials = 30;
  c.horizon = 100;
  c.delta = 0.05;
  c.beta_divisor = 5.0;
  const auto table = run_bandit_experiment(c);
  const auto cumulative = mean_by_strategy_and_t(table, false);
  const auto average = mean_by_strategy_and_t(table, true);
  const double d = cumulative.at("d-gpucb").at(100), g = cumulative.at("gp-ucb").at(100);
  const double a10 = average.at("d-gpucb").at(10), a100 = average.at("d-gpucb").at(100);
  return {d < g && a100 < 0.5 * a10,
          fmt("mean R_100: d-gpucb %.3f vs gp-ucb %.3f; d-gpucb average regret %.4f at T=100 vs %.4f at T=10 "
              "(ratio %.3f, need < 0.5)",
              d, g, a100, a10, a100 / a10)};
}

// Criteria 5 and 6 share the same 100 runs with the unscaled schedule.
const ResultTable& unscaled_runs() {
  static const ResultTable table = [] {
    ExperimentConfig c;
    c.kind = ExperimentKind::kBanditCompare;
    c.objective = ObjectiveType::kSynthetic;
    c.strategies = {Strategy::kDecomposedUcb};
    c.trials = 100;
    c.horizon = 100;
    c.delta = 0.05;
    c.beta_divisor = 1.0;
    c.seed = 5;
    return run_bandit_experiment(c);
  }();
  return table;
}

Outcome confidence_coverage() {
  const auto& table = unscaled_runs();
  std::size_t covered = 0, rounds = 0;
  for (const auto& r : table.rows) {
    rounds += 1;
    covered += *r.coverage > 0.5 ? 1 : 0;
  }
  std::size_t events = 0, violations = 0;
  for (const auto& run : table.runs) {
    events += run.event_rounds;
    violations += run.event_violations;
  }
  const double fraction = static_cast<double>(covered) / static_cast<double>(rounds);
  return {fraction >= 0.95 && violations == 0,
          fmt("pooled coverage %.4f over %zu rounds (need >= 0.95); regret bound broken on %zu of %zu "
              "rounds where the confidence event holds",
              fraction, rounds, violations, events)};
}

Outcome certificate_validity() {
  const auto& table = unscaled_runs();
  int within = 0;
  double min_ratio = std::numeric_limits<double>::infinity(), max_ratio = 0.0;
  for (const auto& run : table.runs) {
    const double ratio = run.cumulative_regret / *run.certificate;
    min_ratio = std::min(min_ratio, ratio);
    max_ratio = std::max(max_ratio, ratio);
    within += run.cumulative_regret <= *run.certificate ? 1 : 0;
  }
  return {within >= 95, fmt("R_T <= certificate in %d of %zu runs (need >= 95); R_T / certificate in [%.4f, %.4f]",
                            within, table.runs.size(), min_ratio, max_ratio)};
}

Outcome generalized_loop() {
  const auto records = load_sensor_csv(DGP_SENSOR_CSV);
  if (records.size() < 200) return {false, fmt("only %zu sensor records", records.size())};
  ExperimentConfig c;
  c.kind = ExperimentKind::kBanditCompare;
  c.objective = ObjectiveType::kWeather;
  c.strategies = {Strategy::kGpUcb, Strategy::kGeneralizedUcb};
  c.trials = 10;
  c.horizon = 100;
  c.weather.sensor_file = DGP_SENSOR_CSV;
  const auto table = run_bandit_experiment(c);
  const auto average = mean_by_strategy_and_t(table, true);
  const auto& gen = average.at("generalized-d-gpucb");
  const double g10 = gen.at(10), g100 = gen.at(100), b100 = average.at("gp-ucb").at(100);
  return {g100 < 0.2 * g10 && g100 < b100,
          fmt("%zu records; generalized average regret %.3f at T=100 vs %.3f at T=10 (ratio %.3f, need < 0.2); "
              "gp-ucb %.3f at T=100",
              records.size(), g100, g10, g100 / g10, b100)};
}

Outcome sir_properties() {
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_conservation = 0.0;
  bool exact_sum = true, monotone = true;
  for (int k = 0; k < 20; ++k) {
    const auto m = testing::random_sir_model(rng);
    std::vector<double> x(m.group_count());
    for (auto& v : x) v = unit(rng);
    const auto tr = simulate_sir_trajectory(m, x);
    const auto pop = m.populations();
    const Eigen::MatrixXd total = tr.susceptible + tr.infected + tr.recovered;
    for (Eigen::Index j = 0; j < total.cols(); ++j) {
      const double n = pop[static_cast<std::size_t>(j)];
      worst_conservation = std::max(worst_conservation, (total.col(j).array() - n).abs().maxCoeff() / n);
    }
    double sum = 0.0;
    for (double f : tr.outcome.per_group) sum += f;
    exact_sum = exact_sum && sum == tr.outcome.total;

    const std::vector<double> none(m.group_count(), 0.0), all(m.group_count(), 1.0);
    monotone = monotone && simulate_sir(m, all).total <= simulate_sir(m, none).total;
  }
  return {worst_conservation <= 1e-9 && exact_sum && monotone,
          fmt("20 random models: max relative S+I+R drift %.3g (tol 1e-9), sum of groups == total: %s, "
              "full vaccination never worse: %s",
              worst_conservation, exact_sum ? "yes" : "no", monotone ? "yes" : "no")};
}

Outcome spot_checks() {
  std::vector<std::string> failures;
  auto check = [&](const char* what, double got, double want) {
    if (!(std::abs(got - want) <= 1e-4)) failures.push_back(fmt("%s=%.8g (want %.8g)", what, got, want));
  };
  Point x(1);
  x << 0.0;
  const std::vector<double> y = {1.0}, noise = {1e-4};
  const auto p = fit_posterior(KernelSpec::squared_exponential(1.0), {x}, y, noise).predict(x);
  check("one-point mean", p.mean, 0.999900);
  check("one-point variance", p.variance, 9.9990e-5);

  // Direct evaluation of 2 ln(|X| J t^2 pi^2 / (6 delta)) at |X| = 1000, t = 1, delta = 0.05.
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double beta_linear = beta_schedule(BetaMode::kDiscreteLinear, 1, 1000, 10, 0.05, {}, 1.0);
  const double beta_general = beta_schedule(BetaMode::kDiscreteGeneral, 1, 1000, 10, 0.05, {}, 1.0);
  check("beta linear", beta_linear, 2.0 * std::log(1000.0 * pi2 / 0.3));
  check("beta general", beta_general, 2.0 * std::log(10000.0 * pi2 / 0.3));
  check("beta linear / 5", beta_schedule(BetaMode::kDiscreteLinear, 1, 1000, 10, 0.05, {}, 5.0),
        2.0 * std::log(1000.0 * pi2 / 0.3) / 5.0);

  const std::vector<double> b = {1.0}, g = {1.0};
  const double c1 = std::pow(regret_bound_certificate(1, 1.0, b, g, 1.0), 2);
  check("C1", c1, 11.54156);

  Point a(1), d(1);
  a << 0.0;
  d << 1.0;
  check("SE(d=1)", eval_kernel(KernelSpec::squared_exponential(1.0), a, d), 0.60653066);
  check("Matern1/2(d=1)", eval_kernel(KernelSpec::matern(0.5, 1.0), a, d), 0.36787944);
  check("RQ(alpha=1,d=1)", eval_kernel(KernelSpec::rational_quadratic(1.0, 1.0), a, d), 2.0 / 3.0);

  std::string detail = fmt("one-point (%.6f, %.4e), beta %.6f / %.6f, C1 %.5f, kernels ok", p.mean, p.variance,
                           beta_linear, beta_general, c1);
  detail += fmt("; note: the listed beta literals 20.8026 / 25.4078 differ from the formula by %.1e / %.1e",
                std::abs(beta_linear - 20.8026), std::abs(beta_general - 25.4078));
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "variance dominance", 120.0, variance_dominance},
      {2, "oracle equivalence", 60.0, oracle_equivalence},
      {3, "regression improvement", 600.0, regression_improvement},
      {4, "bandit improvement", 900.0, bandit_improvement},
      {5, "confidence coverage", 600.0, confidence_coverage},
      {6, "certificate validity", 600.0, certificate_validity},
      {7, "generalized loop", 600.0, generalized_loop},
      {8, "SIR properties", 60.0, sir_properties},
      {9, "closed-form spot checks", 10.0, spot_checks},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.number)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.budget_seconds;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("%s %d %s [%.1fs, budget %.0fs%s]: %s\n", pass ? "PASS" : "FAIL", c.number, c.name, seconds,
                c.budget_seconds, in_time ? "" : ", exceeded", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
