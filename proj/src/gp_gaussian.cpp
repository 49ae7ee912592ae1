#include "lgcpd/gp_gaussian.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "lgcpd/error.hpp"
#include "lgcpd/rng.hpp"

namespace lgcpd {

GaussianPosterior::GaussianPosterior(const GaussianModel& model,
                                     std::span<const SpaceTimePoint> design,
                                     const Eigen::VectorXd& y)
    : prior_(model.prior), points_(design.begin(), design.end()) {
  require(prior_ != nullptr, "Gaussian model needs a prior");
  require(model.noise_variance > 0.0, "noise variance must be positive");
  require(!points_.empty(), "design must not be empty");
  require(static_cast<std::size_t>(y.size()) == points_.size(), "y length must equal design size");

  const auto n = static_cast<Eigen::Index>(points_.size());
  Eigen::MatrixXd a = prior_->cov(points_);
  a.diagonal().array() += model.noise_variance;
  chol_.compute(a);
  if (chol_.info() != Eigen::Success) fail(ErrorCode::Numerical, "Cholesky of K + noise failed");

  const Eigen::VectorXd r = y - prior_->mean(points_);
  alpha_ = chol_.solve(r);
  const Eigen::MatrixXd l = chol_.matrixL();
  log_marginal_ = -0.5 * r.dot(alpha_) - l.diagonal().array().log().sum() -
                  0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

Prediction GaussianPosterior::predict(std::span<const SpaceTimePoint> query,
                                      PredictKind kind) const {
  Prediction out;
  const Eigen::MatrixXd kdq = prior_->cov(points_, query);
  out.mean = prior_->mean(query) + kdq.transpose() * alpha_;
  if (kind == PredictKind::MeanOnly) return out;
  const Eigen::MatrixXd v = chol_.matrixL().solve(kdq);
  if (kind == PredictKind::Full) {
    out.covariance = prior_->cov(query) - v.transpose() * v;
    Eigen::VectorXd d = out.covariance.diagonal();
    out.clamped = clamp_nonnegative(d);
    out.covariance.diagonal() = d;
  } else {
    out.variance = prior_->variance(query) - v.colwise().squaredNorm().transpose();
    out.clamped = clamp_nonnegative(out.variance);
  }
  return out;
}

Eigen::MatrixXd GaussianPosterior::predict_cov(std::span<const SpaceTimePoint> a,
                                               std::span<const SpaceTimePoint> b) const {
  const Eigen::MatrixXd va = chol_.matrixL().solve(prior_->cov(points_, a));
  const Eigen::MatrixXd vb = chol_.matrixL().solve(prior_->cov(points_, b));
  return prior_->cov(a, b) - va.transpose() * vb;
}

GaussianPosterior fit_gaussian(const GaussianModel& model, std::span<const SpaceTimePoint> design,
                               const Eigen::VectorXd& y) {
  return GaussianPosterior(model, design, y);
}

Prediction prior_predict(const GpPrior& prior, std::span<const SpaceTimePoint> query,
                         PredictKind kind) {
  Prediction out;
  out.mean = prior.mean(query);
  if (kind == PredictKind::Full) out.covariance = prior.cov(query);
  if (kind == PredictKind::Marginal) out.variance = prior.variance(query);
  return out;
}

Eigen::MatrixXd sample_prior(const GpPrior& prior, std::span<const SpaceTimePoint> points,
                             std::size_t count, std::uint64_t seed) {
  require(count >= 1, "sample count must be >= 1");
  require(!points.empty(), "cannot sample on an empty point set");
  Eigen::MatrixXd k = prior.cov(points);
  k.diagonal().array() += prior.jitter();
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) fail(ErrorCode::Numerical, "Cholesky of prior covariance failed");

  Rng rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(k.rows(), static_cast<Eigen::Index>(count));
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = normal(rng);

  Eigen::MatrixXd draws = llt.matrixL() * z;
  draws.colwise() += prior.mean(points);
  return draws;
}

double kl_gaussian_closed_form(const Eigen::MatrixXd& k, const Eigen::VectorXd& residual,
                               double noise_variance) {
  require(noise_variance > 0.0, "noise variance must be positive");
  require(k.rows() == k.cols() && k.rows() == residual.size() && k.rows() >= 1,
          "KL needs a square covariance matching the residual");
  const auto n = static_cast<double>(k.rows());

  Eigen::MatrixXd a = k;
  a.diagonal().array() += noise_variance;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) fail(ErrorCode::Numerical, "Cholesky of K + noise failed");
  const Eigen::MatrixXd l = llt.matrixL();

  // log|K K1^{-1}| = log|I + K / s^2|, since K1^{-1} = K^{-1} + I / s^2.
  const double log_det_ratio = 2.0 * l.diagonal().array().log().sum() - n * std::log(noise_variance);
  // tr(K1 K^{-1}) = n - tr(A^{-1} K).
  const double trace_term = n - llt.solve(k).trace();
  // mu1' K^{-1} mu1 = alpha' K alpha with alpha = A^{-1} r.
  const Eigen::VectorXd alpha = llt.solve(residual);
  const double quad = alpha.dot(k * alpha);

  const double kl = 0.5 * (log_det_ratio + trace_term + quad - n);
  if (kl < -1e-8 * (1.0 + std::abs(log_det_ratio) + quad))
    fail(ErrorCode::Numerical, "Gaussian KL came out negative beyond round-off");
  return std::max(kl, 0.0);
}

double kl_gaussian_closed_form(const GaussianModel& model, std::span<const SpaceTimePoint> design,
                               const Eigen::VectorXd& y) {
  require(model.prior != nullptr, "Gaussian model needs a prior");
  require(static_cast<std::size_t>(y.size()) == design.size(), "y length must equal design size");
  return kl_gaussian_closed_form(model.prior->cov(design), y - model.prior->mean(design),
                                 model.noise_variance);
}

}  // namespace lgcpd
