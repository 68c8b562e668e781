// Acceptance gate: one check per shipped guarantee, grouped by runtime.
//   fast     — model/kernel/chemistry/stopping correctness (seconds)
//   salt_1d  — 1-D precipitate benchmark accuracy (under two minutes)
//   salt_2d  — 2-D benchmark accuracy and stopping-rule comparison
//   six_d    — 6-D carbonate benchmark (long-running)
// Prints one PASS/FAIL line per criterion and exits non-zero on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "gpal/chem.hpp"
#include "gpal/experiments.hpp"
#include "gpal/gp.hpp"
#include "gpal/kernels.hpp"
#include "gpal/rng.hpp"
#include "gpal/stopping.hpp"

namespace {

namespace experiments = gpal::experiments;
namespace chem = gpal::chem;
namespace gp = gpal::gp;
namespace kernels = gpal::kernels;
namespace loop = gpal::loop;
namespace rng = gpal::rng;
namespace stopping = gpal::stopping;
using experiments::ExperimentConfig;
using experiments::ExperimentReport;
using kernels::Family;
using stopping::Criterion;

struct CriterionResult {
  int number = 0;
  bool pass = false;
  std::string detail;
};

std::vector<CriterionResult> g_results;

void record(int number, bool pass, const std::string& detail) {
  g_results.push_back({number, pass, detail});
}

template <typename F>
void guarded(int number, F&& body) {
  try {
    body();
  } catch (const std::exception& error) {
    record(number, false, std::string("exception: ") + error.what());
  }
}

std::string fmt(double value) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.4g", value);
  return buffer;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double snapshot_metric(const gpal::trace::FitInfo& fit, const std::string& name) {
  for (const auto& metric : fit.metric_snapshot) {
    if (metric.name == name) return metric.value;
  }
  throw std::runtime_error("metric snapshot lacks " + name);
}

// Mean over replications of a final-iteration snapshot metric for one kernel.
double mean_final_metric(const ExperimentReport& report, const std::string& kernel,
                         const std::string& name) {
  double sum = 0.0;
  long count = 0;
  for (const auto& run : report.runs) {
    if (run.kernel != kernel) continue;
    if (run.status != "completed") throw std::runtime_error(kernel + " run did not complete");
    const auto& record = run.trace.records.back();
    if (!record.fit) throw std::runtime_error("final record carries no fit");
    sum += snapshot_metric(*record.fit, name);
    ++count;
  }
  if (count == 0) throw std::runtime_error("no runs for kernel " + kernel);
  return sum / static_cast<double>(count);
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Eigen::VectorXd random_point(long dimension, rng::Engine& engine) {
  Eigen::VectorXd u(dimension);
  for (long j = 0; j < dimension; ++j) u(j) = rng::uniform01(engine);
  return u;
}

gp::Observations random_observations(long count, long dimension, rng::Engine& engine) {
  gp::Observations obs;
  obs.X.resize(count, dimension);
  obs.y.resize(count);
  for (long i = 0; i < count; ++i) {
    obs.X.row(i) = random_point(dimension, engine).transpose();
    obs.y(i) = 4.0 * rng::uniform01(engine) - 2.0;
  }
  return obs;
}

kernels::Spec random_spec(Family family, long dimension, rng::Engine& engine) {
  Eigen::VectorXd lengthscales(dimension);
  for (long j = 0; j < dimension; ++j) lengthscales(j) = 0.3 + 2.7 * rng::uniform01(engine);
  return {family, lengthscales};
}

// ---- criterion 1 & 2: 1-D precipitate benchmark ----------------------------

void check_salt_1d() {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig config;
  config.oracle.kind = "salt_1d";
  config.grid.type = "regular";
  config.grid.counts = {1140};
  config.kernels = {Family::SquaredExponential, Family::Matern52};
  config.replications = 10;
  config.base_seed = 1;
  config.t1 = 3;
  config.budget = 40;
  const ExperimentReport report = experiments::run_experiment(config);
  const double elapsed = seconds_since(start);

  const double se = mean_final_metric(report, "se", "normalized_mae");
  constexpr double kMaeBound = 1e-2;
  constexpr double kTimeBound = 120.0;
  record(1, se <= kMaeBound && elapsed < kTimeBound,
         "1-D precipitate, SE kernel, 10 replications, 1140-point grid: mean normalized MAE at "
         "t=40 = " +
             fmt(se) + " (bound " + fmt(kMaeBound) + "), runtime " + fmt(elapsed) + "s (bound " +
             fmt(kTimeBound) + "s)");

  const double m52 = mean_final_metric(report, "matern52", "normalized_mae");
  constexpr double kRatioBound = 1.5;
  record(2, m52 <= kRatioBound * se,
         "1-D Matern-5/2 mean normalized MAE at t=40 = " + fmt(m52) + " vs SE " + fmt(se) +
             " (bound " + fmt(kRatioBound) + "x SE = " + fmt(kRatioBound * se) + ")");
}

// ---- criterion 3 & 4: 2-D precipitate benchmark and stopping rules ---------

void check_salt_2d() {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig config;
  config.oracle.kind = "salt_2d";
  config.grid.type = "regular";
  config.grid.counts = {200, 200};
  config.kernels = {Family::SquaredExponential};
  config.replications = 10;
  config.base_seed = 1;
  // Until the design covers the square at the fitted length scale, the maximal
  // variance sits at the prior value and a ratio rule reads that flat stretch
  // as a plateau; start the history near the coverage threshold so early
  // ratios see genuine decline and the plateau still arrives well before the
  // iteration bound below.
  config.t1 = 10;
  config.budget = 100;
  config.snapshot_every = 100;  // error metrics needed at the final iteration only
  const ExperimentReport report = experiments::run_experiment(config);
  const double elapsed = seconds_since(start);

  const double se = mean_final_metric(report, "se", "normalized_mae");
  constexpr double kMaeBound = 1e-2;
  constexpr double kTimeBound = 900.0;
  record(3, se <= kMaeBound && elapsed < kTimeBound,
         "2-D precipitate, SE kernel, 10 replications, 200x200 grid: mean normalized MAE at "
         "t=100 = " +
             fmt(se) + " (bound " + fmt(kMaeBound) + "), runtime " + fmt(elapsed) + "s (bound " +
             fmt(kTimeBound) + "s)");

  // Stopping comparison on the same runs, replayed from the variance history.
  const std::vector<Criterion> rules = {Criterion::ratio_variance(5), Criterion::ratio_variance(10),
                                        Criterion::mobile_average(10)};
  constexpr long kIterationBound = 60;
  constexpr long kMinFiring = 8;
  constexpr double kMedianVarianceBound = 1e-1;
  bool pass4 = true;
  std::string detail4 = "2-D stopping rules:";
  for (const auto& rule : rules) {
    long fired_in_time = 0;
    std::vector<double> terminal_variance;
    for (const auto& run : report.runs) {
      const auto history = run.trace.variance_history();
      const auto fired_at = stopping::first_firing_iteration(rule, history);
      const long t_star = fired_at.value_or(history.latest_t());
      if (fired_at && *fired_at <= kIterationBound) ++fired_in_time;
      terminal_variance.push_back(history.at(t_star));
    }
    const double median_variance = median(terminal_variance);
    const bool ok =
        fired_in_time >= kMinFiring && median_variance <= kMedianVarianceBound;
    pass4 = pass4 && ok;
    detail4 += " " + rule.name() + ": t*<=" + std::to_string(kIterationBound) + " on " +
               std::to_string(fired_in_time) + "/10, median V(t*) = " + fmt(median_variance) +
               (ok ? ";" : " (bound " + fmt(kMedianVarianceBound) + ") FAILED;");
  }
  record(4, pass4, detail4);
}

// ---- criterion 5: 6-D carbonate benchmark ----------------------------------

void check_six_d() {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig config;
  config.oracle.kind = "calcite";
  config.oracle.system_file = std::string(GPAL_DATA_DIR) + "/systems/calcite_dolomite.json";
  config.grid.type = "lhs";
  config.grid.dimension = 6;
  config.grid.count = 4096;
  config.grid.seed = 2026;
  config.kernels = {Family::SquaredExponential};
  config.replications = 3;
  config.base_seed = 1;
  config.t1 = 20;
  config.budget = 500;
  config.metrics.mode = "subsample";
  config.metrics.count = 2000;
  config.metrics.seed = 99;
  config.refit_every = 10;
  config.snapshot_every = 10;
  config.optimizer.restarts = 3;
  const ExperimentReport report = experiments::run_experiment(config);
  const double elapsed = seconds_since(start);

  // Replication-mean normalized MAE per snapshot iteration (cadence is
  // deterministic, so snapshots align across replications).
  std::vector<long> snapshot_t;
  std::vector<double> mean_nmae;
  for (const auto& record : report.runs.front().trace.records) {
    if (!record.fit || record.fit->metric_snapshot.empty()) continue;
    double sum = 0.0;
    for (const auto& run : report.runs) {
      if (run.status != "completed") throw std::runtime_error("6-D run did not complete");
      bool found = false;
      for (const auto& other : run.trace.records) {
        if (other.t != record.t) continue;
        sum += snapshot_metric(*other.fit, "normalized_mae");
        found = true;
        break;
      }
      if (!found) throw std::runtime_error("snapshot iterations differ across replications");
    }
    snapshot_t.push_back(record.t);
    mean_nmae.push_back(sum / static_cast<double>(report.runs.size()));
  }

  // Smooth over 50-iteration windows: partition iterations past the initial
  // design into consecutive 50-wide blocks and average within each.
  constexpr long kWindow = 50;
  std::vector<double> block_sum;
  std::vector<long> block_count;
  for (std::size_t i = 0; i < snapshot_t.size(); ++i) {
    const std::size_t block = static_cast<std::size_t>((snapshot_t[i] - config.t1) / kWindow);
    if (block >= block_sum.size()) {
      block_sum.resize(block + 1, 0.0);
      block_count.resize(block + 1, 0);
    }
    block_sum[block] += mean_nmae[i];
    block_count[block] += 1;
  }
  bool monotone = true;
  double previous = std::numeric_limits<double>::infinity();
  std::string curve;
  for (std::size_t b = 0; b < block_sum.size(); ++b) {
    if (block_count[b] == 0) continue;
    const double value = block_sum[b] / static_cast<double>(block_count[b]);
    if (value > previous) monotone = false;
    previous = value;
    curve += (curve.empty() ? "" : " ") + fmt(value);
  }

  const double final_nmae = mean_nmae.back();
  constexpr double kFinalBound = 1e-1;
  constexpr double kTimeBound = 7200.0;
  record(5,
         monotone && final_nmae <= kFinalBound && elapsed < kTimeBound,
         "6-D carbonate, SE kernel, 3 replications, 4096-point candidate set, 2000-point test "
         "subsample: 50-iteration window means [" +
             curve + "] " + (monotone ? "non-increasing" : "NOT non-increasing") +
             ", final mean normalized MAE = " + fmt(final_nmae) + " (bound " + fmt(kFinalBound) +
             "), runtime " + fmt(elapsed) + "s (bound " + fmt(kTimeBound) + "s)");
}

// ---- criterion 6: GP regression correctness --------------------------------

// Up to 9 jittered points with pairwise distance >= 0.4 in the unit square.
// Explicit matrix inversion only matches a factorization-based solve up to
// epsilon times the gram condition number, so the agreement check needs test
// problems whose points stay separated on the length scale.
gp::Observations separated_observations(long count, rng::Engine& engine) {
  gp::Observations obs;
  obs.X.resize(count, 2);
  obs.y.resize(count);
  std::vector<long> cells(9);
  for (long c = 0; c < 9; ++c) cells[static_cast<std::size_t>(c)] = c;
  rng::shuffle(cells, engine);
  for (long i = 0; i < count; ++i) {
    const long cell = cells[static_cast<std::size_t>(i)];
    obs.X(i, 0) = 0.05 + 0.45 * static_cast<double>(cell % 3) + 0.1 * rng::uniform01(engine) - 0.05;
    obs.X(i, 1) = 0.05 + 0.45 * static_cast<double>(cell / 3) + 0.1 * rng::uniform01(engine) - 0.05;
    obs.y(i) = 4.0 * rng::uniform01(engine) - 2.0;
  }
  return obs;
}

void check_gp() {
  const auto start = std::chrono::steady_clock::now();
  rng::Engine engine(20260814);
  constexpr double kAgreementBound = 1e-8;
  double worst_mean = 0.0;
  double worst_variance = 0.0;
  for (const Family family : {Family::SquaredExponential, Family::Matern32, Family::Matern52}) {
    for (long t = 1; t <= 8; ++t) {
      for (int repeat = 0; repeat < 5; ++repeat) {
        const gp::Observations obs = separated_observations(t, engine);
        Eigen::VectorXd lengthscales(2);
        lengthscales << 0.15 + 0.25 * rng::uniform01(engine),
            0.15 + 0.25 * rng::uniform01(engine);
        const kernels::Spec spec{family, lengthscales};
        const gp::Posterior model = gp::fit(obs, spec);
        const Eigen::MatrixXd gram =
            kernels::gram_matrix(spec, obs.X) +
            model.nugget * Eigen::MatrixXd::Identity(t, t);
        const Eigen::MatrixXd inverse = gram.inverse();
        for (int probe = 0; probe < 5; ++probe) {
          const Eigen::VectorXd u = random_point(2, engine);
          const Eigen::VectorXd k = kernels::cross_vector(spec, obs.X, u);
          const double naive_mean = k.dot(inverse * obs.y);
          const double naive_variance =
              std::clamp(1.0 - k.dot(inverse * k), 0.0, 1.0);
          worst_mean = std::max(worst_mean, std::abs(naive_mean - gp::posterior_mean(model, u)));
          worst_variance = std::max(
              worst_variance, std::abs(naive_variance - gp::posterior_variance(model, u)));
        }
      }
    }
  }

  // Log-marginal-likelihood gradient against central differences.
  constexpr double kGradientBound = 1e-4;
  double worst_gradient = 0.0;
  for (int repeat = 0; repeat < 20; ++repeat) {
    const Family family =
        std::array{Family::SquaredExponential, Family::Matern32, Family::Matern52}[repeat % 3];
    const gp::Observations obs = random_observations(6, 2, engine);
    const kernels::Spec spec = random_spec(family, 2, engine);
    const gp::LmlWithGradient result = gp::log_marginal_likelihood_gradient(obs, spec);
    const double h = 1e-5;
    for (long j = 0; j < spec.dimension(); ++j) {
      kernels::Spec plus = spec;
      kernels::Spec minus = spec;
      plus.lengthscales(j) *= std::exp(h);
      minus.lengthscales(j) *= std::exp(-h);
      const double finite_difference = (gp::log_marginal_likelihood(obs, plus) -
                                        gp::log_marginal_likelihood(obs, minus)) /
                                       (2.0 * h);
      const double relative = std::abs(finite_difference - result.gradient(j)) /
                              std::max(std::abs(result.gradient(j)), 1e-6);
      worst_gradient = std::max(worst_gradient, relative);
    }
  }

  // Adding an observation never increases posterior variance anywhere.
  constexpr double kVarianceSlack = 1e-10;
  long violations = 0;
  for (int repeat = 0; repeat < 1000; ++repeat) {
    const long d = 1 + static_cast<long>(rng::uniform_below(engine, 3));
    const long t = 1 + static_cast<long>(rng::uniform_below(engine, 8));
    const Family family =
        std::array{Family::SquaredExponential, Family::Matern32, Family::Matern52}[repeat % 3];
    gp::Observations obs = random_observations(t, d, engine);
    const kernels::Spec spec = random_spec(family, d, engine);
    const Eigen::VectorXd u = random_point(d, engine);
    const gp::Posterior before = gp::fit(obs, spec);
    obs.append(random_point(d, engine), 4.0 * rng::uniform01(engine) - 2.0);
    const gp::Posterior after = gp::fit(obs, spec);
    if (gp::posterior_variance(after, u) > gp::posterior_variance(before, u) + kVarianceSlack) {
      ++violations;
    }
  }

  const double elapsed = seconds_since(start);
  constexpr double kTimeBound = 60.0;
  record(6,
         worst_mean <= kAgreementBound && worst_variance <= kAgreementBound &&
             worst_gradient <= kGradientBound && violations == 0 && elapsed < kTimeBound,
         "GP suite: naive-inversion agreement " + fmt(worst_mean) + "/" + fmt(worst_variance) +
             " (bound " + fmt(kAgreementBound) + "), gradient vs finite differences " +
             fmt(worst_gradient) + " relative (bound " + fmt(kGradientBound) +
             "), variance-reduction violations " + std::to_string(violations) +
             "/1000, runtime " + fmt(elapsed) + "s (bound " + fmt(kTimeBound) + "s)");
}

// ---- criterion 7: kernel analytic values -----------------------------------

void check_kernels() {
  constexpr double kBound = 1e-12;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  const Eigen::VectorXd scales = Eigen::VectorXd::Ones(1);

  const double se = kernels::eval({Family::SquaredExponential, scales}, zero, one);
  const double m32 = kernels::eval({Family::Matern32, scales}, zero, one);
  const double m52 = kernels::eval({Family::Matern52, scales}, zero, one);
  const double se_expected = std::exp(-0.5);
  const double m32_expected = (1.0 + std::sqrt(3.0)) * std::exp(-std::sqrt(3.0));
  const double m52_expected =
      (1.0 + std::sqrt(5.0) + 5.0 / 3.0) * std::exp(-std::sqrt(5.0));

  double worst_peak = 0.0;
  Eigen::VectorXd u(2);
  u << 0.3, 0.7;
  Eigen::VectorXd two_scales(2);
  two_scales << 0.8, 1.7;
  for (const Family family : {Family::SquaredExponential, Family::Matern32, Family::Matern52}) {
    worst_peak = std::max(worst_peak, std::abs(kernels::eval({family, two_scales}, u, u) - 1.0));
  }

  const bool pass = std::abs(se - se_expected) <= kBound && std::abs(m32 - m32_expected) <= kBound &&
                    std::abs(m52 - m52_expected) <= kBound && worst_peak <= kBound;
  record(7, pass,
         "kernel values at unit scaled distance: SE " + fmt(se) + " vs exp(-1/2), Matern-3/2 " +
             fmt(m32) + " vs (1+sqrt(3))exp(-sqrt(3)), Matern-5/2 " + fmt(m52) +
             " vs (1+sqrt(5)+5/3)exp(-sqrt(5)), unit peak deviation " + fmt(worst_peak) +
             " (bound " + fmt(kBound) + ")");
}

// ---- criterion 8: chemistry invariants -------------------------------------

double bisect_salt(double total_a, double total_b, double logk) {
  const double k = std::pow(10.0, logk);
  if (total_a * total_b <= k) return 0.0;
  double lo = 0.0;
  double hi = std::min(total_a, total_b);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double residual = (total_a - mid) * (total_b - mid) - k;
    (residual > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void check_chemistry() {
  rng::Engine engine(8);
  constexpr double kSaltBound = 1e-10;
  double worst_salt = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double total_a = 15.0 * rng::uniform01(engine);
    const double total_b = 15.0 * rng::uniform01(engine);
    const double closed = chem::salt_equilibrium(total_a, total_b);
    const double reference = bisect_salt(total_a, total_b, chem::kSaltLogK);
    worst_salt = std::max(worst_salt, std::abs(closed - reference));
  }

  const chem::ChemicalSystem system = chem::ChemicalSystem::from_json_file(
      std::string(GPAL_DATA_DIR) + "/systems/calcite_dolomite.json");
  const chem::CarbonateOracleConfig oracle_config;
  const gpal::sampling::BoundsMap bounds = chem::carbonate_bounds(oracle_config);
  const long calcite = system.mineral_index("Calcite");
  const long dolomite = system.mineral_index("Dolomite");
  constexpr double kMassActionBound = 1e-10;  // log10 units
  constexpr double kMassBalanceBound = 1e-8;  // relative
  constexpr double kSaturationBound = 1e-8;   // log10 units
  constexpr double kCalciteLogK = -8.48;
  double worst_action = 0.0;
  double worst_balance = 0.0;
  double worst_saturation = 0.0;
  long calcite_present = 0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd v = bounds.from_unit(random_point(6, engine));
    chem::SpeciationInput input;
    input.totals = {{"C", v(0)}, {"Ca", v(1)}, {"Cl", v(2)}, {"Mg", v(3)}};
    input.ph = v(4);
    input.mineral_amounts = {{"Dolomite", v(5)}};
    const chem::EquilibriumState state = chem::speciation_solve(system, input);

    for (std::size_t s = 0; s < system.species.size(); ++s) {
      const double concentration = state.species_concentration(static_cast<long>(s));
      if (concentration <= 0.0) continue;
      double expected = system.species[s].logk;
      for (long j = 0; j < static_cast<long>(system.components.size()); ++j) {
        const double coefficient = system.species[s].stoich(j);
        if (coefficient == 0.0) continue;
        expected += coefficient * state.component_log_activity(j);
      }
      worst_action = std::max(worst_action, std::abs(std::log10(concentration) - expected));
    }

    for (long j = 0; j < static_cast<long>(system.components.size()); ++j) {
      const auto& component = system.components[j];
      if (component.fixed()) continue;
      double effective_total = input.totals.at(component.total_label);
      for (std::size_t m = 0; m < system.minerals.size(); ++m) {
        const auto held = input.mineral_amounts.find(system.minerals[m].name);
        if (held == input.mineral_amounts.end()) continue;
        effective_total += held->second * system.minerals[m].stoich(j);
      }
      double modeled = state.component_concentration(j);
      for (std::size_t s = 0; s < system.species.size(); ++s) {
        modeled += system.species[s].stoich(j) * state.species_concentration(static_cast<long>(s));
      }
      for (std::size_t m = 0; m < system.minerals.size(); ++m) {
        modeled += system.minerals[m].stoich(j) * state.mineral_amount(static_cast<long>(m));
      }
      if (effective_total > 0.0) {
        worst_balance =
            std::max(worst_balance, std::abs(modeled - effective_total) / effective_total);
      } else {
        worst_balance = std::max(worst_balance, std::abs(modeled));
      }
    }

    if (state.mineral_amount(calcite) > 0.0) {
      ++calcite_present;
      double ion_product = 0.0;
      for (long j = 0; j < static_cast<long>(system.components.size()); ++j) {
        const double coefficient = system.minerals[static_cast<std::size_t>(calcite)].stoich(j);
        if (coefficient == 0.0) continue;
        ion_product += coefficient * state.component_log_activity(j);
      }
      worst_saturation = std::max(worst_saturation, std::abs(ion_product - kCalciteLogK));
    }
    (void)dolomite;
  }

  const bool pass = worst_salt <= kSaltBound && worst_action <= kMassActionBound &&
                    worst_balance <= kMassBalanceBound && worst_saturation <= kSaturationBound &&
                    calcite_present > 0;
  record(8, pass,
         "chemistry: closed form vs bisection " + fmt(worst_salt) + " over 10000 draws (bound " +
             fmt(kSaltBound) + "); 100 random speciation solves: mass action " + fmt(worst_action) +
             " log10 (bound " + fmt(kMassActionBound) + "), mass balance " + fmt(worst_balance) +
             " relative (bound " + fmt(kMassBalanceBound) + "), calcite ion product vs " +
             fmt(kCalciteLogK) + ": " + fmt(worst_saturation) + " log10 (bound " +
             fmt(kSaturationBound) + ", present in " + std::to_string(calcite_present) + "/100)");
}

// ---- criterion 9: stopping semantics ----------------------------------------

void check_stopping() {
  rng::Engine engine(9);

  // Mobile average over one value is pointwise identical to the 0.01 level.
  const Criterion mobile = Criterion::mobile_average(1);
  const Criterion level = Criterion::max_variance(0.01);
  long equivalence_mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    stopping::VarianceHistory history;
    history.first_t = 1 + static_cast<long>(rng::uniform_below(engine, 5));
    const long length = 1 + static_cast<long>(rng::uniform_below(engine, 40));
    for (long t = 0; t < length; ++t) {
      history.append(0.02 * rng::uniform01(engine));
      if (stopping::should_stop(mobile, history) != stopping::should_stop(level, history)) {
        ++equivalence_mismatches;
      }
    }
  }

  // Ratio rules are invariant under positive rescaling of the history.
  constexpr double kRatioBound = 1e-12;
  double worst_ratio = 0.0;
  long scale_mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    stopping::VarianceHistory history;
    history.first_t = 3;
    const long length = 14 + static_cast<long>(rng::uniform_below(engine, 20));
    for (long t = 0; t < length; ++t) history.append(0.001 + rng::uniform01(engine));
    const double scale = std::pow(10.0, 6.0 * rng::uniform01(engine) - 3.0);
    stopping::VarianceHistory scaled = history;
    for (auto& value : scaled.values) value *= scale;
    for (const long k : {2L, 5L, 10L}) {
      for (const bool smoothed : {false, true}) {
        const auto base = stopping::ratio_variance(history, k, smoothed);
        const auto rescaled = stopping::ratio_variance(scaled, k, smoothed);
        if (base.has_value() != rescaled.has_value()) {
          ++scale_mismatches;
          continue;
        }
        if (base) {
          worst_ratio = std::max(
              worst_ratio, std::abs(*base - *rescaled) / std::max(1.0, std::abs(*base)));
        }
        const Criterion rule = Criterion::ratio_variance(k, smoothed);
        if (stopping::should_stop(rule, history) != stopping::should_stop(rule, scaled)) {
          ++scale_mismatches;
        }
      }
    }
  }

  // Offline replay matches the live rule on every run of a real experiment.
  ExperimentConfig config;
  config.oracle.kind = "salt_1d";
  config.grid.type = "regular";
  config.grid.counts = {65};
  config.kernels = {Family::SquaredExponential};
  config.replications = 2;
  config.base_seed = 5;
  config.t1 = 3;
  config.budget = 15;
  config.criteria = {Criterion::max_variance(0.3), Criterion::mobile_average(2),
                     Criterion::ratio_variance(3)};
  config.optimizer.restarts = 3;
  const ExperimentReport report = experiments::run_experiment(config);
  const auto grid = config.grid.build();
  const auto oracle = experiments::make_oracle(config.oracle);
  long replay_mismatches = 0;
  for (const auto& row : report.stopping) {
    loop::LoopConfig live;
    live.family = Family::SquaredExponential;
    live.t1 = config.t1;
    live.budget = config.budget;
    live.criterion = Criterion::parse(row.replay.criterion);
    live.seed = report.seeds[static_cast<std::size_t>(row.replication)];
    live.optimizer = config.optimizer;
    const auto result = loop::run(oracle, grid, live);
    const bool live_fired = result.trace.terminal.status == "criterion_fired";
    if (live_fired != row.replay.fired || result.trace.terminal.stopped_t != row.replay.t_star) {
      ++replay_mismatches;
    }
  }

  record(9,
         equivalence_mismatches == 0 && scale_mismatches == 0 && worst_ratio <= kRatioBound &&
             replay_mismatches == 0 && !report.stopping.empty(),
         "stopping semantics: mobile-average(1) vs level-0.01 mismatches " +
             std::to_string(equivalence_mismatches) + "/1000 histories, ratio scale-invariance " +
             fmt(worst_ratio) + " relative (bound " + fmt(kRatioBound) + ", decision mismatches " +
             std::to_string(scale_mismatches) + "), live-vs-replay mismatches " +
             std::to_string(replay_mismatches) + "/" + std::to_string(report.stopping.size()));
}

}  // namespace

int main(int argc, char** argv) {
  const std::string group = argc > 1 ? argv[1] : "fast";
  if (group == "fast") {
    guarded(6, check_gp);
    guarded(7, check_kernels);
    guarded(8, check_chemistry);
    guarded(9, check_stopping);
  } else if (group == "salt_1d") {
    guarded(1, check_salt_1d);
  } else if (group == "salt_2d") {
    guarded(3, check_salt_2d);
  } else if (group == "six_d") {
    guarded(5, check_six_d);
  } else {
    std::cerr << "usage: acceptance [fast|salt_1d|salt_2d|six_d]\n";
    return 2;
  }

  int failures = 0;
  for (const auto& result : g_results) {
    std::cout << "[" << result.number << "] " << (result.pass ? "PASS" : "FAIL") << ": "
              << result.detail << "\n";
    failures += result.pass ? 0 : 1;
  }
  std::cout << (failures == 0 ? "acceptance group passed" : "acceptance group FAILED") << " ("
            << group << ")\n";
  return failures == 0 ? 0 : 1;
}
