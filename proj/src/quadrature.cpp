#include "lgcpd/quadrature.hpp"

#include <map>
#include <memory>
#include <mutex>

#include <Eigen/Eigenvalues>

#include "lgcpd/error.hpp"

namespace lgcpd {

namespace {

GaussHermite build_rule(int n) {
  // Symmetric Jacobi matrix of the Hermite recurrence: off-diagonal sqrt(k / 2).
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(j);
  GaussHermite rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double v0 = eig.eigenvectors()(0, k);
    rule.nodes[static_cast<std::size_t>(k)] = eig.eigenvalues()[k];
    rule.weights[static_cast<std::size_t>(k)] = std::sqrt(std::numbers::pi) * v0 * v0;
  }
  return rule;
}

}  // namespace

const GaussHermite& gauss_hermite(int n) {
  require(n >= 1 && n <= 200, "Gauss-Hermite node count must be in [1, 200]");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussHermite>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussHermite>(build_rule(n));
  return *slot;
}

}  // namespace lgcpd
