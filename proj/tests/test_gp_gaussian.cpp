#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "lgcpd/error.hpp"
#include "lgcpd/gp_gaussian.hpp"

using namespace lgcpd;

namespace {

PriorPtr unit_prior(double mean = 0.0) {
  // k(0) = 1 everywhere, short length-scales so distant points decorrelate
  return make_prior(ConstantMean{mean},
                    CovStructure::additive({KernelFamily::Matern32, 0.05, 0.5}, {KernelFamily::SqExp, 0.05, 0.5}));
}

}  // namespace

TEST_CASE("scalar posterior mean") {
  const std::vector<SpaceTimePoint> d{{0.5, 0.5, 0.5}};
  const auto post = fit_gaussian({unit_prior(), 1.0}, d, Eigen::VectorXd::Constant(1, 2.0));
  const auto pred = post.predict(d, PredictKind::Marginal);
  CHECK(pred.mean[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pred.variance[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("zero residual gives the prior mean") {
  std::mt19937_64 rng(2);
  const auto prior = testing::study_prior();
  const auto d = testing::random_points(rng, 8);
  const auto q = testing::random_points(rng, 5);
  const auto post = fit_gaussian({prior, 0.3}, d, prior->mean(d));
  const auto pred = post.predict(q, PredictKind::MeanOnly);
  CHECK((pred.mean - prior->mean(q)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("far query keeps prior variance") {
  const std::vector<SpaceTimePoint> d{{0, 0, 0}};
  const std::vector<SpaceTimePoint> q{{50, 50, 50}};
  const auto post = fit_gaussian({unit_prior(), 0.5}, d, Eigen::VectorXd::Constant(1, 3.0));
  CHECK(post.predict(q, PredictKind::Marginal).variance[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("interpolation limit") {
  std::mt19937_64 rng(5);
  const auto prior = testing::constant_prior(0.0, 0.5, 0.5, 1.0);
  const auto d = testing::random_points(rng, 6);
  Eigen::VectorXd y = Eigen::VectorXd::Random(6);
  const auto post = fit_gaussian({prior, 1e-10}, d, y);
  CHECK((post.predict(d, PredictKind::MeanOnly).mean - y).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("prior_predict and duplicate queries") {
  const auto prior = unit_prior(0.7);
  const std::vector<SpaceTimePoint> q{{0.2, 0.2, 0.2}, {0.2, 0.2, 0.2}};
  const auto p = prior_predict(*prior, q, PredictKind::Full);
  CHECK(p.covariance(0, 0) == doctest::Approx(1.0));
  CHECK(p.covariance.row(0) == p.covariance.row(1));
  const auto post = fit_gaussian({prior, 0.4}, std::vector<SpaceTimePoint>{{0.21, 0.2, 0.2}}, Eigen::VectorXd::Ones(1));
  const auto f = post.predict(q, PredictKind::Full);
  CHECK(f.mean[0] == f.mean[1]);
  CHECK(f.covariance.row(0) == f.covariance.row(1));
}

TEST_CASE("posterior variance properties") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto prior = testing::study_prior(trial % 2 ? CovMode::Additive : CovMode::Separable, 0.3 + 0.05 * (trial % 10));
    const auto d = testing::random_points(rng, 1 + rng() % 15);
    const auto q = testing::random_points(rng, 10);
    const double noise = 0.05 + 0.1 * (trial % 7);
    Eigen::VectorXd y1 = Eigen::VectorXd::Random(static_cast<Eigen::Index>(d.size())) * 3;
    Eigen::VectorXd y2 = Eigen::VectorXd::Random(static_cast<Eigen::Index>(d.size())) * 3;
    const auto p1 = fit_gaussian({prior, noise}, d, y1);
    const auto p2 = fit_gaussian({prior, noise}, d, y2);
    const auto marg = p1.predict(q, PredictKind::Marginal);
    const auto full = p1.predict(q, PredictKind::Full);
    const auto full2 = p2.predict(q, PredictKind::Full);
    const auto prior_var = prior->variance(q);
    for (Eigen::Index i = 0; i < prior_var.size(); ++i) {
      CHECK(marg.variance[i] <= prior_var[i] + 1e-10);
      CHECK(std::abs(full.covariance(i, i) - marg.variance[i]) <= 1e-10);
    }
    CHECK(full.covariance == full2.covariance);
  }
}

TEST_CASE("log marginal matches the multivariate normal density") {
  std::mt19937_64 rng(9);
  const auto prior = testing::study_prior();
  const auto d = testing::random_points(rng, 7);
  const Eigen::VectorXd y = Eigen::VectorXd::Random(7);
  const double noise = 0.3;
  const auto post = fit_gaussian({prior, noise}, d, y);
  const Eigen::MatrixXd a = prior->cov(d) + noise * Eigen::MatrixXd::Identity(7, 7);
  const Eigen::VectorXd r = y - prior->mean(d);
  const double expected = -0.5 * r.dot(a.inverse() * r) - 0.5 * std::log(a.determinant()) - 3.5 * std::log(2 * M_PI);
  CHECK(post.log_marginal() == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("sample_prior moments and determinism") {
  const std::vector<SpaceTimePoint> one{{0.3, 0.3, 0.3}};
  const auto prior = make_prior(ConstantMean{2.0}, CovStructure::additive({KernelFamily::Matern32, 0.5, 1.0},
                                                                          {KernelFamily::SqExp, 0.5, 1.0}));
  const auto draws = sample_prior(*prior, one, 10000, 42);
  const double mean = draws.mean();
  const double var = (draws.array() - mean).square().sum() / (draws.size() - 1);
  CHECK(std::abs(mean - 2.0) <= 3.0 * std::sqrt(2.0) / 100);
  CHECK(std::abs(var - 2.0) <= 0.2);
  CHECK(sample_prior(*prior, one, 10, 42) == sample_prior(*prior, one, 10, 42));
  CHECK(sample_prior(*prior, one, 10, 42) != sample_prior(*prior, one, 10, 43));
}

TEST_CASE("closed-form KL examples") {
  const std::vector<SpaceTimePoint> d{{0.5, 0.5, 0.5}};
  const auto prior = unit_prior();
  CHECK(kl_gaussian_closed_form({prior, 1.0}, d, Eigen::VectorXd::Zero(1)) ==
        doctest::Approx(0.5 * (std::log(2.0) + 0.5 - 1.0)).epsilon(1e-12));
  CHECK(0.5 * (std::log(2.0) + 0.5 - 1.0) == doctest::Approx(0.096574).epsilon(1e-5));
  std::mt19937_64 rng(4);
  const auto pts = testing::random_points(rng, 10);
  CHECK(kl_gaussian_closed_form({testing::study_prior(), 1e10}, pts, Eigen::VectorXd::Random(10)) < 1e-6);
}

TEST_CASE("closed-form KL matches the generic Gaussian KL and is nonnegative") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.1, 1.5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    const auto prior = testing::study_prior(trial % 2 ? CovMode::Additive : CovMode::Separable, u(rng), u(rng), u(rng));
    const auto d = testing::random_points(rng, n);
    const double noise = u(rng);
    const Eigen::VectorXd y = prior->mean(d) + Eigen::VectorXd::Random(static_cast<Eigen::Index>(n)) * 2;
    const double kl = kl_gaussian_closed_form({prior, noise}, d, y);
    CHECK(kl >= 0.0);
    if (trial < 100) {
      const double oracle = testing::gaussian_posterior_kl(prior->cov(d), y - prior->mean(d), noise);
      CHECK(testing::rel_diff(kl, oracle) <= 1e-6);
    }
  }
}
