#include "lgcpd/lgcp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lgcpd/error.hpp"
#include "lgcpd/quadrature.hpp"

namespace lgcpd {

namespace {

Eigen::VectorXd grad_vec(const ObservationModel& obs, const Eigen::VectorXd& y, const Eigen::VectorXd& f) {
  Eigen::VectorXd g(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) g[i] = log_lik_grad(obs, static_cast<std::size_t>(i), y[i], f[i]);
  return g;
}

Eigen::VectorXd w_vec(const ObservationModel& obs, const Eigen::VectorXd& y, const Eigen::VectorXd& f) {
  Eigen::VectorXd w(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) w[i] = log_lik_neg_hess(obs, static_cast<std::size_t>(i), y[i], f[i]);
  return w;
}

Eigen::LLT<Eigen::MatrixXd> factor_b(const Eigen::MatrixXd& k, const Eigen::VectorXd& sqrt_w) {
  Eigen::MatrixXd b = sqrt_w.asDiagonal() * k * sqrt_w.asDiagonal();
  b.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success) fail(ErrorCode::Numerical, "Cholesky of I + W^1/2 K W^1/2 failed");
  return llt;
}

constexpr double kMaxLatentStep = 5.0;

}  // namespace

LatentPosterior::LatentPosterior(const LgcpModel& model, std::span<const SpaceTimePoint> design,
                                 const Eigen::VectorXd& y, const NewtonOptions& options)
    : prior_(model.prior), obs_(model.obs), points_(design.begin(), design.end()), y_(y) {
  require(prior_ != nullptr, "LGCP model needs a prior");
  require(!points_.empty(), "design must not be empty");
  require(static_cast<std::size_t>(y.size()) == points_.size(), "y length must equal design size");
  obs_.validate();
  check_counts(obs_, y_);

  const auto n = static_cast<Eigen::Index>(points_.size());
  mu_ = prior_->mean(points_);
  k_ = prior_->cov(points_);

  // log posterior up to a constant, in the a-parameterization f = mu + K a.
  auto psi = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& f) {
    const double v = log_lik_sum(obs_, y_, f) - 0.5 * a.dot(f - mu_);
    return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
  };
  // Rounding noise of psi: its terms can be much larger than psi itself.
  auto psi_noise = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& f) {
    double mag = std::abs(a.dot(f - mu_));
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      if (obs_.kind == ObservationKind::Gaussian) {
        mag += (y_[i] * y_[i] + f[i] * f[i]) / obs_.noise_variance;
      } else {
        mag += std::abs(y_[i] * f[i]) + obs_.volume(static_cast<std::size_t>(i)) * std::exp(f[i]) +
               std::lgamma(y_[i] + 1.0);
      }
    }
    return 1e-12 + 16.0 * std::numeric_limits<double>::epsilon() * mag;
  };

  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd f = mu_;
  double psi_old = psi(a, f);
  bool converged = false;
  for (iterations_ = 0; iterations_ <= options.max_iterations; ++iterations_) {
    const Eigen::VectorXd g = grad_vec(obs_, y_, f);
    gradient_norm_ = (g - a).cwiseAbs().maxCoeff();
    if (gradient_norm_ < options.tolerance) {
      converged = true;
      break;
    }
    if (iterations_ == options.max_iterations) break;

    // Newton step da = (I + W K)^{-1} r = r - S B^{-1} S K r, with r = grad - a.
    const Eigen::VectorXd w = w_vec(obs_, y_, f);
    const Eigen::VectorXd s = w.cwiseSqrt();
    const auto llt = factor_b(k_, s);
    const Eigen::VectorXd r = g - a;
    const Eigen::VectorXd c = llt.matrixL().solve(s.cwiseProduct(k_ * r));
    const Eigen::VectorXd step = r - s.cwiseProduct(llt.matrixU().solve(c));

    // Cap the latent move, then halve until the log posterior does not decrease.
    const double max_move = (k_ * step).cwiseAbs().maxCoeff();
    double scale = max_move > kMaxLatentStep ? kMaxLatentStep / max_move : 1.0;
    bool moved = false;
    for (int h = 0; h <= options.max_halvings; ++h, scale *= 0.5) {
      const Eigen::VectorXd a_try = a + scale * step;
      const Eigen::VectorXd f_try = mu_ + k_ * a_try;
      const double psi_try = psi(a_try, f_try);
      if (psi_try >= psi_old - std::max(1e-12 * (1.0 + std::abs(psi_old)), psi_noise(a, f))) {
        a = a_try;
        f = f_try;
        psi_old = psi_try;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  if (!converged) {
    fail(ErrorCode::Numerical, "Newton MAP did not converge (gradient max-norm " +
                                   std::to_string(gradient_norm_) + " after " +
                                   std::to_string(iterations_) + " iterations)");
  }

  a_ = a;
  f_hat_ = f;
  w_ = w_vec(obs_, y_, f_hat_);
  sqrt_w_ = w_.cwiseSqrt();
  chol_b_ = factor_b(k_, sqrt_w_);
  const Eigen::MatrixXd l = chol_b_.matrixL();
  log_marginal_ = log_lik_sum(obs_, y_, f_hat_) - 0.5 * a_.dot(f_hat_ - mu_) -
                  l.diagonal().array().log().sum();
}

Prediction LatentPosterior::predict(std::span<const SpaceTimePoint> query, PredictKind kind) const {
  Prediction out;
  const Eigen::MatrixXd kdq = prior_->cov(points_, query);
  out.mean = prior_->mean(query) + kdq.transpose() * a_;
  if (kind == PredictKind::MeanOnly) return out;
  const Eigen::MatrixXd v = chol_b_.matrixL().solve(sqrt_w_.asDiagonal() * kdq);
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

Eigen::MatrixXd LatentPosterior::predict_cov(std::span<const SpaceTimePoint> a,
                                             std::span<const SpaceTimePoint> b) const {
  const auto lower = chol_b_.matrixL();
  const Eigen::MatrixXd va = lower.solve(sqrt_w_.asDiagonal() * prior_->cov(points_, a));
  const Eigen::MatrixXd vb = lower.solve(sqrt_w_.asDiagonal() * prior_->cov(points_, b));
  return prior_->cov(a, b) - va.transpose() * vb;
}

LatentPosterior map_estimate(const LgcpModel& model, std::span<const SpaceTimePoint> design,
                             const Eigen::VectorXd& y, const NewtonOptions& options) {
  return LatentPosterior(model, design, y, options);
}

double kl_lemma1(const LatentPosterior& post, int quadrature_nodes) {
  const auto& pts = post.design();
  const Prediction marg = post.predict(pts, PredictKind::Marginal);
  const auto& obs = post.observation();
  const auto& y = post.y();
  double expected_loglik = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    expected_loglik += normal_expectation(marg.mean[ii], marg.variance[ii], quadrature_nodes,
                                          [&](double f) { return log_lik(obs, i, y[ii], f); });
  }
  const double kl = expected_loglik - post.log_marginal();
  return kl < 0.0 ? 0.0 : kl;
}

std::pair<double, double> intensity_moments(double latent_mean, double latent_var) {
  if (latent_var < 0.0) fail(ErrorCode::InvalidArgument, "negative latent variance");
  const double mean = std::exp(latent_mean + 0.5 * latent_var);
  const double var = std::expm1(latent_var) * std::exp(2.0 * latent_mean + latent_var);
  return {mean, var};
}

Eigen::MatrixXd inverse_k_plus_winv_direct(const Eigen::MatrixXd& k, const Eigen::VectorXd& w) {
  Eigen::MatrixXd a = k;
  a.diagonal() += w.cwiseInverse();
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) fail(ErrorCode::Numerical, "Cholesky of K + W^-1 failed");
  return llt.solve(Eigen::MatrixXd::Identity(k.rows(), k.cols()));
}

Eigen::MatrixXd inverse_k_plus_winv_woodbury(const Eigen::MatrixXd& k, const Eigen::VectorXd& w) {
  const Eigen::VectorXd s = w.cwiseSqrt();
  const auto llt = factor_b(k, s);
  const Eigen::MatrixXd sk = s.asDiagonal() * k;
  const Eigen::MatrixXd inner = k - sk.transpose() * llt.solve(sk);  // (K^{-1} + W)^{-1}
  Eigen::MatrixXd out = w.asDiagonal() * inner * w.asDiagonal();
  out = Eigen::MatrixXd(w.asDiagonal()) - out;
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd inverse_k_plus_winv_symmetric(const Eigen::MatrixXd& k, const Eigen::VectorXd& w) {
  const Eigen::VectorXd s = w.cwiseSqrt();
  const auto llt = factor_b(k, s);
  Eigen::MatrixXd out = llt.solve(Eigen::MatrixXd(s.asDiagonal()));
  out = s.asDiagonal() * out;
  return 0.5 * (out + out.transpose());
}

}  // namespace lgcpd
