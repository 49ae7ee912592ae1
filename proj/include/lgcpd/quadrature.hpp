#pragma once

#include <vector>

namespace lgcpd {

/// Gauss-Hermite rule for the weight exp(-x^2) (physicists' convention).
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached rule with n nodes (Golub-Welsch). Thread-safe.
const GaussHermite& gauss_hermite(int n);

/// E[g(F)] for F ~ N(mean, variance) using an n-node rule.
template <class Fn>
double normal_expectation(double mean, double variance, int n, Fn&& g);

}  // namespace lgcpd

#include <cmath>
#include <numbers>

namespace lgcpd {

template <class Fn>
double normal_expectation(double mean, double variance, int n, Fn&& g) {
  const auto& rule = gauss_hermite(n);
  const double scale = std::sqrt(2.0 * variance);
  double s = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) s += rule.weights[k] * g(mean + scale * rule.nodes[k]);
  return s / std::sqrt(std::numbers::pi);
}

}  // namespace lgcpd
