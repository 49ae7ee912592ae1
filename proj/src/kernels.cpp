#include "lgcpd/kernels.hpp"

#include <cmath>

#include "lgcpd/error.hpp"

namespace lgcpd {

namespace {

void check_spec(const KernelSpec& spec) {
  require(spec.lengthscale > 0.0, "kernel lengthscale must be positive");
  require(spec.variance > 0.0, "kernel variance must be positive");
}

}  // namespace

double matern32(double distance, const KernelSpec& spec) {
  if (distance < 0.0) fail(ErrorCode::InvalidArgument, "negative distance");
  const double r = std::sqrt(3.0) * distance / spec.lengthscale;
  return spec.variance * (1.0 + r) * std::exp(-r);
}

double sqexp(double distance, const KernelSpec& spec) {
  if (distance < 0.0) fail(ErrorCode::InvalidArgument, "negative distance");
  const double r = distance / spec.lengthscale;
  return spec.variance * std::exp(-r * r);
}

double KernelSpec::operator()(double distance) const {
  return family == KernelFamily::Matern32 ? matern32(distance, *this) : sqexp(distance, *this);
}

CovStructure::CovStructure(CovMode mode, KernelSpec spatial, KernelSpec temporal)
    : mode_(mode), spatial_(spatial), temporal_(temporal) {
  check_spec(spatial_);
  check_spec(temporal_);
  require(mode_ != CovMode::Separable || spatial_.variance == 1.0,
          "separable covariance requires spatial variance 1");
}

CovStructure CovStructure::separable(KernelSpec spatial, KernelSpec temporal) {
  spatial.variance = 1.0;
  return CovStructure(CovMode::Separable, spatial, temporal);
}

CovStructure CovStructure::additive(KernelSpec spatial, KernelSpec temporal) {
  return CovStructure(CovMode::Additive, spatial, temporal);
}

double CovStructure::operator()(const SpaceTimePoint& a, const SpaceTimePoint& b) const {
  const double ds = std::hypot(a.s1 - b.s1, a.s2 - b.s2);
  const double dt = std::abs(a.t - b.t);
  const double ks = spatial_(ds);
  const double kt = temporal_(dt);
  return mode_ == CovMode::Separable ? ks * kt : ks + kt;
}

double CovStructure::total_variance() const {
  return mode_ == CovMode::Separable ? spatial_.variance * temporal_.variance
                                     : spatial_.variance + temporal_.variance;
}

Eigen::MatrixXd cov_matrix(std::span<const SpaceTimePoint> a, std::span<const SpaceTimePoint> b,
                           const CovStructure& cov) {
  Eigen::MatrixXd k(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  const bool same = a.data() == b.data() && a.size() == b.size();
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    for (Eigen::Index j = same ? i : 0; j < k.cols(); ++j) {
      k(i, j) = cov(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)]);
      if (same) k(j, i) = k(i, j);
    }
  }
  return k;
}

TabulatedMean::TabulatedMean(const Grid& grid, std::vector<double> values) {
  require(values.size() == grid.cells.size(), "tabulated mean needs one value per grid cell");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(std::isfinite(values[i]), "tabulated mean values must be finite");
    const auto& p = grid.cells[i];
    table_[{p.s1, p.s2, p.t}] = values[i];
  }
}

double TabulatedMean::at(const SpaceTimePoint& p) const {
  auto it = table_.find({p.s1, p.s2, p.t});
  if (it == table_.end()) fail(ErrorCode::InvalidArgument, "tabulated mean queried off its grid");
  return it->second;
}

double mean_eval(const SpaceTimePoint& p, const MeanFunction& m) {
  struct Visitor {
    const SpaceTimePoint& p;
    double operator()(const ConcaveQuadraticTime& q) const {
      const double d = p.t - q.b;
      return q.a - q.c * d * d;
    }
    double operator()(const ConstantMean& c) const { return c.value; }
    double operator()(const TabulatedMean& t) const { return t.at(p); }
  };
  return std::visit(Visitor{p}, m);
}

}  // namespace lgcpd
