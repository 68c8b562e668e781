#include "gpal/optimizer.hpp"

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "test_util.hpp"

using gpal::kernels::Family;
using gpal::kernels::Spec;
namespace gp = gpal::gp;
namespace kernels = gpal::kernels;
namespace test = gpal::test;

namespace {

// Exact GP sample path values on X for the given kernel: y = L z.
Eigen::VectorXd sample_path(const Spec& spec, const Eigen::MatrixXd& X,
                            gpal::rng::Engine& engine) {
  Eigen::MatrixXd K = kernels::gram_matrix(spec, X);
  K.diagonal().array() += 1e-10;
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(K).matrixL();
  Eigen::VectorXd z(X.rows());
  for (long i = 0; i < z.size(); ++i) z[i] = test::random_normal(engine);
  return L * z;
}

}  // namespace

TEST_CASE("recovers a known length scale within a factor of two") {
  gpal::rng::Engine engine(101);
  const double true_l = 0.3;
  const Spec truth{Family::SquaredExponential, Eigen::VectorXd::Constant(1, true_l)};
  const Eigen::MatrixXd X = test::random_points(20, 1, engine);
  gp::Observations obs{X, sample_path(truth, X, engine)};

  gp::OptimizerConfig config;
  config.seed = 5;
  const auto result = gp::optimize_lengthscales(obs, Family::SquaredExponential, config);
  const double recovered = result.kernel.lengthscales[0];
  CHECK(recovered > true_l / 2.0);
  CHECK(recovered < true_l * 2.0);
  CHECK(result.failed_restarts.empty());
}

TEST_CASE("flat data returns a bounds-respecting optimum without error") {
  gp::Observations obs;
  obs.X.resize(2, 1);
  obs.X << 0.2, 0.8;
  obs.y = Eigen::VectorXd::Zero(2);
  gp::OptimizerConfig config;
  config.seed = 1;
  const auto result = gp::optimize_lengthscales(obs, Family::Matern52, config);
  CHECK(result.kernel.lengthscales[0] >= config.lower_bound);
  CHECK(result.kernel.lengthscales[0] <= config.upper_bound);
  CHECK(std::isfinite(result.lml));
}

TEST_CASE("more restarts never lower the best likelihood") {
  gpal::rng::Engine engine(103);
  const Spec truth{Family::Matern32, Eigen::VectorXd::Constant(2, 0.15)};
  const Eigen::MatrixXd X = test::random_points(12, 2, engine);
  gp::Observations obs{X, sample_path(truth, X, engine)};

  gp::OptimizerConfig one;
  one.restarts = 1;
  one.seed = 7;
  gp::OptimizerConfig ten;
  ten.restarts = 10;
  ten.seed = 7;
  const auto single = gp::optimize_lengthscales(obs, Family::Matern32, one);
  const auto multi = gp::optimize_lengthscales(obs, Family::Matern32, ten);
  CHECK(multi.lml >= single.lml);
}

TEST_CASE("optimization is deterministic given the seed") {
  gpal::rng::Engine engine(107);
  const Spec truth{Family::SquaredExponential, Eigen::VectorXd::Constant(2, 0.4)};
  const Eigen::MatrixXd X = test::random_points(10, 2, engine);
  gp::Observations obs{X, sample_path(truth, X, engine)};

  gp::OptimizerConfig config;
  config.seed = 99;
  const auto a = gp::optimize_lengthscales(obs, Family::SquaredExponential, config);
  const auto b = gp::optimize_lengthscales(obs, Family::SquaredExponential, config);
  CHECK(a.kernel.lengthscales == b.kernel.lengthscales);
  CHECK(a.lml == b.lml);
  CHECK(a.best_restart == b.best_restart);
}

TEST_CASE("result is at least as good as every restart's initial point") {
  gpal::rng::Engine engine(109);
  const Spec truth{Family::SquaredExponential, Eigen::VectorXd::Constant(1, 0.2)};
  const Eigen::MatrixXd X = test::random_points(15, 1, engine);
  gp::Observations obs{X, sample_path(truth, X, engine)};

  gp::OptimizerConfig config;
  config.seed = 11;
  config.restarts = 4;
  const Eigen::VectorXd incumbent = Eigen::VectorXd::Constant(1, 1.7);
  const auto result =
      gp::optimize_lengthscales(obs, Family::SquaredExponential, config, incumbent);

  // Replays the restart initializations: the incumbent plus log-uniform draws.
  gpal::rng::Engine restarts(config.seed);
  const double lo = std::log(config.lower_bound);
  const double hi = std::log(config.upper_bound);
  std::vector<Eigen::VectorXd> starts{incumbent};
  for (int r = 1; r < config.restarts; ++r) {
    Eigen::VectorXd l(1);
    l[0] = std::exp(lo + (hi - lo) * gpal::rng::uniform01(restarts));
    starts.push_back(l);
  }
  for (const auto& start : starts) {
    const double initial =
        gp::log_marginal_likelihood(obs, Spec{Family::SquaredExponential, start});
    CHECK(result.lml >= initial - 1e-12);
  }
}

TEST_CASE("optimizer validates inputs") {
  gp::Observations single;
  single.X.resize(1, 1);
  single.X << 0.5;
  single.y = Eigen::VectorXd::Constant(1, 1.0);
  gp::OptimizerConfig config;
  CHECK_THROWS_AS(gp::optimize_lengthscales(single, Family::Matern32, config),
                  std::invalid_argument);

  gp::OptimizerConfig bad;
  bad.lower_bound = 2.0;
  bad.upper_bound = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  gp::OptimizerConfig zero_restarts;
  zero_restarts.restarts = 0;
  CHECK_THROWS_AS(zero_restarts.validate(), std::invalid_argument);
}
