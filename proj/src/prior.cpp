#include "lgcpd/prior.hpp"

#include "lgcpd/error.hpp"

namespace lgcpd {

StationaryPrior::StationaryPrior(MeanFunction mean, CovStructure cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {}

Eigen::VectorXd StationaryPrior::mean(std::span<const SpaceTimePoint> points) const {
  Eigen::VectorXd m(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) m[static_cast<Eigen::Index>(i)] = mean_eval(points[i], mean_);
  return m;
}

Eigen::MatrixXd StationaryPrior::cov(std::span<const SpaceTimePoint> a,
                                     std::span<const SpaceTimePoint> b) const {
  return cov_matrix(a, b, cov_);
}

Eigen::VectorXd StationaryPrior::variance(std::span<const SpaceTimePoint> points) const {
  return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(points.size()), cov_.total_variance());
}

PriorPtr make_prior(MeanFunction mean, CovStructure cov) {
  return std::make_shared<StationaryPrior>(std::move(mean), std::move(cov));
}

ConditionedPrior::ConditionedPrior(std::shared_ptr<const PosteriorProcess> posterior)
    : posterior_(std::move(posterior)) {
  require(posterior_ != nullptr, "conditioned prior needs a posterior");
}

Eigen::VectorXd ConditionedPrior::mean(std::span<const SpaceTimePoint> points) const {
  return posterior_->predict(points, PredictKind::MeanOnly).mean;
}

Eigen::MatrixXd ConditionedPrior::cov(std::span<const SpaceTimePoint> a,
                                      std::span<const SpaceTimePoint> b) const {
  return posterior_->predict_cov(a, b);
}

Eigen::VectorXd ConditionedPrior::variance(std::span<const SpaceTimePoint> points) const {
  return posterior_->predict(points, PredictKind::Marginal).variance;
}

std::size_t clamp_nonnegative(Eigen::Ref<Eigen::VectorXd> v) {
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] < 0.0) {
      v[i] = 0.0;
      ++n;
    }
  }
  return n;
}

}  // namespace lgcpd
