#pragma once

#include <memory>
#include <span>

#include <Eigen/Dense>

#include "lgcpd/domain.hpp"
#include "lgcpd/kernels.hpp"

namespace lgcpd {

/// A Gaussian process over the study domain: mean and covariance on finite
/// point sets. Implementations are immutable and thread-safe.
class GpPrior {
 public:
  virtual ~GpPrior() = default;

  virtual Eigen::VectorXd mean(std::span<const SpaceTimePoint> points) const = 0;
  virtual Eigen::MatrixXd cov(std::span<const SpaceTimePoint> a,
                              std::span<const SpaceTimePoint> b) const = 0;
  /// Marginal variances, i.e. the diagonal of cov(points, points).
  virtual Eigen::VectorXd variance(std::span<const SpaceTimePoint> points) const = 0;
  /// Diagonal jitter added before factorizing a bare prior covariance.
  virtual double jitter() const = 0;

  Eigen::MatrixXd cov(std::span<const SpaceTimePoint> points) const { return cov(points, points); }
};

using PriorPtr = std::shared_ptr<const GpPrior>;

/// Mean function plus stationary covariance structure with fixed hyperparameters.
class StationaryPrior final : public GpPrior {
 public:
  StationaryPrior(MeanFunction mean, CovStructure cov);

  Eigen::VectorXd mean(std::span<const SpaceTimePoint> points) const override;
  Eigen::MatrixXd cov(std::span<const SpaceTimePoint> a,
                      std::span<const SpaceTimePoint> b) const override;
  Eigen::VectorXd variance(std::span<const SpaceTimePoint> points) const override;
  double jitter() const override { return 1e-8 * cov_.total_variance(); }

  const MeanFunction& mean_function() const { return mean_; }
  const CovStructure& cov_structure() const { return cov_; }

 private:
  MeanFunction mean_;
  CovStructure cov_;
};

PriorPtr make_prior(MeanFunction mean, CovStructure cov);

/// Result of a predictive query. Exactly one of variance / covariance is filled.
struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  Eigen::MatrixXd covariance;
  /// Number of marginal variances that came out negative from cancellation and were clamped to 0.
  std::size_t clamped = 0;
};

/// MeanOnly skips the variance computation entirely.
enum class PredictKind { MeanOnly, Marginal, Full };

/// A fitted (exact or approximate) Gaussian posterior over the latent field.
class PosteriorProcess {
 public:
  virtual ~PosteriorProcess() = default;

  virtual const GpPrior& prior() const = 0;
  virtual Prediction predict(std::span<const SpaceTimePoint> query, PredictKind kind) const = 0;
  virtual Eigen::MatrixXd predict_cov(std::span<const SpaceTimePoint> a,
                                      std::span<const SpaceTimePoint> b) const = 0;
};

/// Treats a fitted posterior as the prior of a new design problem, so that
/// sampling and fitting downstream are conditioned on existing data.
class ConditionedPrior final : public GpPrior {
 public:
  explicit ConditionedPrior(std::shared_ptr<const PosteriorProcess> posterior);

  Eigen::VectorXd mean(std::span<const SpaceTimePoint> points) const override;
  Eigen::MatrixXd cov(std::span<const SpaceTimePoint> a,
                      std::span<const SpaceTimePoint> b) const override;
  Eigen::VectorXd variance(std::span<const SpaceTimePoint> points) const override;
  double jitter() const override { return posterior_->prior().jitter(); }

 private:
  std::shared_ptr<const PosteriorProcess> posterior_;
};

/// Clamps negative entries to zero and returns how many were clamped.
std::size_t clamp_nonnegative(Eigen::Ref<Eigen::VectorXd> v);

}  // namespace lgcpd
