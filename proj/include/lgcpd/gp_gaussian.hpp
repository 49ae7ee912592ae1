#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "lgcpd/prior.hpp"

namespace lgcpd {

/// GP prior with the Gaussian observation model y_i | f_i ~ N(f_i, noise_variance).
struct GaussianModel {
  PriorPtr prior;
  double noise_variance = 1.0;
};

/// Exact posterior of a Gaussian-likelihood GP, factorized as chol(K + s^2 I).
class GaussianPosterior final : public PosteriorProcess {
 public:
  GaussianPosterior(const GaussianModel& model, std::span<const SpaceTimePoint> design,
                    const Eigen::VectorXd& y);

  const GpPrior& prior() const override { return *prior_; }
  Prediction predict(std::span<const SpaceTimePoint> query, PredictKind kind) const override;
  Eigen::MatrixXd predict_cov(std::span<const SpaceTimePoint> a,
                              std::span<const SpaceTimePoint> b) const override;

  const std::vector<SpaceTimePoint>& train_points() const { return points_; }
  /// (K + s^2 I)^{-1} (y - mu(d))
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const Eigen::LLT<Eigen::MatrixXd>& chol() const { return chol_; }
  double log_marginal() const { return log_marginal_; }

 private:
  PriorPtr prior_;
  std::vector<SpaceTimePoint> points_;
  Eigen::VectorXd alpha_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  double log_marginal_ = 0.0;
};

GaussianPosterior fit_gaussian(const GaussianModel& model, std::span<const SpaceTimePoint> design,
                               const Eigen::VectorXd& y);

/// Prior moments on a query set (the zero-data posterior).
Prediction prior_predict(const GpPrior& prior, std::span<const SpaceTimePoint> query,
                         PredictKind kind);

/// `count` joint draws from N(mu(points), K(points) + jitter I), one per column.
Eigen::MatrixXd sample_prior(const GpPrior& prior, std::span<const SpaceTimePoint> points,
                             std::size_t count, std::uint64_t seed);

/// KL(posterior || prior) over the design points for a Gaussian likelihood,
///   0.5 [log|K K1^{-1}| + tr(K1 K^{-1}) + mu1' K^{-1} mu1 - n],
/// with mu1 = K (K + s^2 I)^{-1} r the posterior mean shift and
/// K1 = K - K (K + s^2 I)^{-1} K. Every term is rewritten in terms of
/// A = K + s^2 I, so K itself is never inverted.
double kl_gaussian_closed_form(const Eigen::MatrixXd& k, const Eigen::VectorXd& residual,
                               double noise_variance);

double kl_gaussian_closed_form(const GaussianModel& model, std::span<const SpaceTimePoint> design,
                               const Eigen::VectorXd& y);

}  // namespace lgcpd
