#pragma once

#include <map>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "lgcpd/domain.hpp"

namespace lgcpd {

enum class KernelFamily { Matern32, SqExp };

struct KernelSpec {
  KernelFamily family = KernelFamily::Matern32;
  double lengthscale = 1.0;
  double variance = 1.0;

  /// Kernel value at a nonnegative distance.
  double operator()(double distance) const;
};

/// sigma^2 (1 + sqrt(3) d / l) exp(-sqrt(3) d / l)
double matern32(double distance, const KernelSpec& spec);
/// sigma^2 exp(-d^2 / l^2)
double sqexp(double distance, const KernelSpec& spec);

enum class CovMode { Separable, Additive };

/// Spatiotemporal covariance: k_s(|s - s'|) * k_t(|t - t'|) or k_s + k_t.
/// In separable mode the spatial variance is pinned to 1 for identifiability.
class CovStructure {
 public:
  CovStructure(CovMode mode, KernelSpec spatial, KernelSpec temporal);

  static CovStructure separable(KernelSpec spatial, KernelSpec temporal);
  static CovStructure additive(KernelSpec spatial, KernelSpec temporal);

  CovMode mode() const { return mode_; }
  const KernelSpec& spatial() const { return spatial_; }
  const KernelSpec& temporal() const { return temporal_; }

  double operator()(const SpaceTimePoint& a, const SpaceTimePoint& b) const;
  /// k(x, x), the same for every x.
  double total_variance() const;

 private:
  CovMode mode_;
  KernelSpec spatial_;
  KernelSpec temporal_;
};

Eigen::MatrixXd cov_matrix(std::span<const SpaceTimePoint> a, std::span<const SpaceTimePoint> b,
                           const CovStructure& cov);

struct ConcaveQuadraticTime {
  double a = 2.0;
  double b = 0.5;
  double c = 30.0;
};

struct ConstantMean {
  double value = 0.0;
};

/// Values attached to grid cell centers; evaluation off the grid is an error.
class TabulatedMean {
 public:
  TabulatedMean(const Grid& grid, std::vector<double> values);
  double at(const SpaceTimePoint& p) const;

 private:
  std::map<std::array<double, 3>, double> table_;
};

using MeanFunction = std::variant<ConcaveQuadraticTime, ConstantMean, TabulatedMean>;

double mean_eval(const SpaceTimePoint& p, const MeanFunction& m);

}  // namespace lgcpd
