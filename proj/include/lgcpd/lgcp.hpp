#pragma once

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "lgcpd/likelihood.hpp"
#include "lgcpd/prior.hpp"

namespace lgcpd {

/// Latent GP prior plus observation model.
struct LgcpModel {
  PriorPtr prior;
  ObservationModel obs;
};

struct NewtonOptions {
  double tolerance = 1e-8;  // max-norm of the log-posterior gradient
  int max_iterations = 100;
  int max_halvings = 30;
};

/// Laplace approximation N(f_hat, (K^{-1} + W)^{-1}) of the latent posterior at
/// the design points, extended to any query set through the GP prior.
///
/// Internally f_hat = mu + K a with a = K^{-1}(f_hat - mu), and predictive
/// solves go through B = I + W^{1/2} K W^{1/2}, which stays well conditioned
/// when W has entries near zero.
class LatentPosterior final : public PosteriorProcess {
 public:
  LatentPosterior(const LgcpModel& model, std::span<const SpaceTimePoint> design,
                  const Eigen::VectorXd& y, const NewtonOptions& options = {});

  const GpPrior& prior() const override { return *prior_; }
  Prediction predict(std::span<const SpaceTimePoint> query, PredictKind kind) const override;
  Eigen::MatrixXd predict_cov(std::span<const SpaceTimePoint> a,
                              std::span<const SpaceTimePoint> b) const override;

  const std::vector<SpaceTimePoint>& design() const { return points_; }
  const ObservationModel& observation() const { return obs_; }
  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::VectorXd& f_hat() const { return f_hat_; }
  /// Negative Hessian diagonal of the log likelihood at f_hat.
  const Eigen::VectorXd& w() const { return w_; }
  /// Cholesky factor of B = I + W^{1/2} K W^{1/2} at f_hat.
  const Eigen::LLT<Eigen::MatrixXd>& chol_b() const { return chol_b_; }
  /// Laplace approximation to log p(y).
  double log_marginal() const { return log_marginal_; }
  /// Max-norm of the log-posterior gradient at f_hat.
  double gradient_norm() const { return gradient_norm_; }
  int iterations() const { return iterations_; }

 private:
  PriorPtr prior_;
  ObservationModel obs_;
  std::vector<SpaceTimePoint> points_;
  Eigen::VectorXd y_;
  Eigen::VectorXd mu_;
  Eigen::MatrixXd k_;
  Eigen::VectorXd a_;
  Eigen::VectorXd f_hat_;
  Eigen::VectorXd w_;
  Eigen::VectorXd sqrt_w_;
  Eigen::LLT<Eigen::MatrixXd> chol_b_;
  double log_marginal_ = 0.0;
  double gradient_norm_ = 0.0;
  int iterations_ = 0;
};

/// Newton MAP fit plus Laplace evidence. Throws Numerical on non-convergence.
LatentPosterior map_estimate(const LgcpModel& model, std::span<const SpaceTimePoint> design,
                             const Eigen::VectorXd& y, const NewtonOptions& options = {});

inline Prediction laplace_predict(const LatentPosterior& post, std::span<const SpaceTimePoint> query,
                                  PredictKind kind) {
  return post.predict(query, kind);
}

/// KL(posterior || prior) of the latent process as
///   sum_i E_{q_i}[log p(y_i | f_i)] - log p(y),
/// with q_i the marginal Laplace posterior at design point i, each expectation
/// by Gauss-Hermite quadrature and log p(y) the Laplace evidence.
double kl_lemma1(const LatentPosterior& post, int quadrature_nodes = 31);

/// The intensity e^f carries the same KL as the latent f (change of variables).
inline double kl_intensity(const LatentPosterior& post, int quadrature_nodes = 31) {
  return kl_lemma1(post, quadrature_nodes);
}

/// Mean and variance of lambda = e^f for f ~ N(latent_mean, latent_var).
std::pair<double, double> intensity_moments(double latent_mean, double latent_var);

/// (K + W^{-1})^{-1} by factorizing K + W^{-1} directly.
Eigen::MatrixXd inverse_k_plus_winv_direct(const Eigen::MatrixXd& k, const Eigen::VectorXd& w);
/// (K + W^{-1})^{-1} = W - W (K^{-1} + W)^{-1} W, with (K^{-1} + W)^{-1}
/// evaluated as K - K S B^{-1} S K (S = W^{1/2}) so K is never inverted.
Eigen::MatrixXd inverse_k_plus_winv_woodbury(const Eigen::MatrixXd& k, const Eigen::VectorXd& w);
/// (K + W^{-1})^{-1} = S B^{-1} S, the form used for prediction.
Eigen::MatrixXd inverse_k_plus_winv_symmetric(const Eigen::MatrixXd& k, const Eigen::VectorXd& w);

}  // namespace lgcpd
