#include "lgcpd/likelihood.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "lgcpd/error.hpp"

namespace lgcpd {

ObservationModel ObservationModel::poisson() { return {}; }

ObservationModel ObservationModel::negative_binomial(double r, std::vector<double> volumes) {
  ObservationModel m;
  m.kind = ObservationKind::NegativeBinomial;
  m.dispersion = r;
  m.volumes = std::move(volumes);
  m.validate();
  return m;
}

ObservationModel ObservationModel::gaussian(double noise_variance) {
  ObservationModel m;
  m.kind = ObservationKind::Gaussian;
  m.noise_variance = noise_variance;
  m.validate();
  return m;
}

void ObservationModel::validate() const {
  require(dispersion > 0.0, "Negative-Binomial dispersion must be positive");
  require(noise_variance > 0.0, "noise variance must be positive");
  for (double v : volumes) require(v > 0.0, "sampling volumes must be positive");
}

double ObservationModel::volume(std::size_t i) const {
  if (volumes.empty()) return 1.0;
  if (volumes.size() == 1) return volumes.front();
  require(i < volumes.size(), "site index beyond the volume list");
  return volumes[i];
}

double log_lik(const ObservationModel& obs, std::size_t i, double y, double f) {
  switch (obs.kind) {
    case ObservationKind::Poisson:
      return y * f - std::exp(f) - std::lgamma(y + 1.0);
    case ObservationKind::NegativeBinomial: {
      const double r = obs.dispersion;
      const double log_mu = std::log(obs.volume(i)) + f;
      // log(r + mu) evaluated without overflow for large f.
      const double log_r_mu = std::max(std::log(r), log_mu) +
                              std::log1p(std::exp(-std::abs(std::log(r) - log_mu)));
      return std::lgamma(y + r) - std::lgamma(r) - std::lgamma(y + 1.0) +
             r * (std::log(r) - log_r_mu) + y * (log_mu - log_r_mu);
    }
    case ObservationKind::Gaussian: {
      const double d = y - f;
      return -0.5 * std::log(2.0 * std::numbers::pi * obs.noise_variance) -
             0.5 * d * d / obs.noise_variance;
    }
  }
  return 0.0;
}

double log_lik_grad(const ObservationModel& obs, std::size_t i, double y, double f) {
  switch (obs.kind) {
    case ObservationKind::Poisson:
      return y - std::exp(f);
    case ObservationKind::NegativeBinomial: {
      const double r = obs.dispersion;
      const double mu = obs.volume(i) * std::exp(f);
      // mu / (r + mu) written as a logistic to stay finite.
      const double share = 1.0 / (1.0 + r / mu);
      return y - (y + r) * share;
    }
    case ObservationKind::Gaussian:
      return (y - f) / obs.noise_variance;
  }
  return 0.0;
}

double log_lik_neg_hess(const ObservationModel& obs, std::size_t i, double y, double f) {
  switch (obs.kind) {
    case ObservationKind::Poisson:
      return std::exp(f);
    case ObservationKind::NegativeBinomial: {
      const double r = obs.dispersion;
      const double mu = obs.volume(i) * std::exp(f);
      const double share = 1.0 / (1.0 + r / mu);  // mu / (r + mu)
      return (y + r) * share * (1.0 - share);
    }
    case ObservationKind::Gaussian:
      return 1.0 / obs.noise_variance;
  }
  return 0.0;
}

double log_lik_sum(const ObservationModel& obs, const Eigen::VectorXd& y, const Eigen::VectorXd& f) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) s += log_lik(obs, static_cast<std::size_t>(i), y[i], f[i]);
  return s;
}

void check_counts(const ObservationModel& obs, const Eigen::VectorXd& y) {
  if (!obs.counts()) return;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(y[i] >= 0.0) || y[i] != std::floor(y[i]))
      fail(ErrorCode::InvalidArgument, "counts must be nonnegative integers");
  }
}

namespace {

constexpr double kMaxPoissonMean = 1e12;

double draw_poisson(double mean, Rng& rng) {
  if (!(mean > 0.0)) return 0.0;
  if (mean > kMaxPoissonMean) fail(ErrorCode::Numerical, "intensity overflow while drawing counts");
  std::poisson_distribution<long long> pois(mean);
  return static_cast<double>(pois(rng));
}

}  // namespace

Eigen::VectorXd sample_counts(const ObservationModel& obs, const Eigen::VectorXd& latent, Rng& rng) {
  Eigen::VectorXd y(latent.size());
  for (Eigen::Index i = 0; i < latent.size(); ++i) {
    const double f = latent[i];
    switch (obs.kind) {
      case ObservationKind::Poisson:
        y[i] = draw_poisson(std::exp(f), rng);
        break;
      case ObservationKind::NegativeBinomial: {
        // Gamma-Poisson mixture: rate ~ Gamma(shape r, scale mu / r).
        const double mu = obs.volume(static_cast<std::size_t>(i)) * std::exp(f);
        if (!(mu > 0.0)) {
          y[i] = 0.0;
          break;
        }
        std::gamma_distribution<double> gamma(obs.dispersion, mu / obs.dispersion);
        y[i] = draw_poisson(gamma(rng), rng);
        break;
      }
      case ObservationKind::Gaussian: {
        std::normal_distribution<double> normal(f, std::sqrt(obs.noise_variance));
        y[i] = normal(rng);
        break;
      }
    }
  }
  return y;
}

}  // namespace lgcpd
