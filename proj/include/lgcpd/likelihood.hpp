#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "lgcpd/rng.hpp"

namespace lgcpd {

enum class ObservationKind { Poisson, NegativeBinomial, Gaussian };

/// Observation model p(y_i | f_i). The Negative-Binomial form has mean
/// V_i e^{f_i} and variance mean + mean^2 / r.
struct ObservationModel {
  ObservationKind kind = ObservationKind::Poisson;
  double dispersion = 1.0;      // r, Negative-Binomial only
  std::vector<double> volumes;  // V_i; empty = all 1, one entry = broadcast
  double noise_variance = 1.0;  // Gaussian only

  static ObservationModel poisson();
  static ObservationModel negative_binomial(double r, std::vector<double> volumes = {});
  static ObservationModel gaussian(double noise_variance);

  void validate() const;
  double volume(std::size_t i) const;
  bool counts() const { return kind != ObservationKind::Gaussian; }
};

/// Per-site log likelihood and its first two derivatives in f.
double log_lik(const ObservationModel& obs, std::size_t i, double y, double f);
double log_lik_grad(const ObservationModel& obs, std::size_t i, double y, double f);
/// -d^2/df^2 log p(y | f); strictly positive for all three kinds.
double log_lik_neg_hess(const ObservationModel& obs, std::size_t i, double y, double f);

double log_lik_sum(const ObservationModel& obs, const Eigen::VectorXd& y, const Eigen::VectorXd& f);

/// Throws InvalidArgument unless every y_i is a nonnegative integer (count kinds only).
void check_counts(const ObservationModel& obs, const Eigen::VectorXd& y);

/// Draws y_i ~ p(y | f_i) independently for each site.
Eigen::VectorXd sample_counts(const ObservationModel& obs, const Eigen::VectorXd& latent, Rng& rng);

}  // namespace lgcpd
