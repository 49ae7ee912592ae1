#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lgcpd/domain.hpp"
#include "lgcpd/kernels.hpp"
#include "lgcpd/lgcp.hpp"
#include "lgcpd/prior.hpp"

namespace testing {

inline std::vector<lgcpd::SpaceTimePoint> random_points(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<lgcpd::SpaceTimePoint> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  return pts;
}

inline lgcpd::PriorPtr study_prior(lgcpd::CovMode mode = lgcpd::CovMode::Additive, double l_s = 0.8,
                                   double l_t = 1.5, double sigma2_t = 2.0, double sigma2_s = 2.0) {
  const lgcpd::KernelSpec s{lgcpd::KernelFamily::Matern32, l_s, sigma2_s};
  const lgcpd::KernelSpec t{lgcpd::KernelFamily::SqExp, l_t, sigma2_t};
  auto cov = mode == lgcpd::CovMode::Separable ? lgcpd::CovStructure::separable(s, t)
                                               : lgcpd::CovStructure::additive(s, t);
  return lgcpd::make_prior(lgcpd::ConcaveQuadraticTime{}, cov);
}

inline lgcpd::PriorPtr constant_prior(double mean, double l_s = 0.5, double l_t = 0.5, double var = 1.0) {
  const lgcpd::KernelSpec s{lgcpd::KernelFamily::Matern32, l_s, var / 2};
  const lgcpd::KernelSpec t{lgcpd::KernelFamily::SqExp, l_t, var / 2};
  return lgcpd::make_prior(lgcpd::ConstantMean{mean}, lgcpd::CovStructure::additive(s, t));
}

/// KL(N(m1, S1) || N(m0, S0)) by the textbook formula, in long double.
inline double gaussian_kl(const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1, const Eigen::VectorXd& m0,
                          const Eigen::MatrixXd& s0) {
  using ML = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using VL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const ML a0 = s0.cast<long double>(), a1 = s1.cast<long double>();
  const VL dm = (m1 - m0).cast<long double>();
  const Eigen::LLT<ML> c0(a0), c1(a1);
  long double logdet0 = 0, logdet1 = 0;
  for (Eigen::Index i = 0; i < a0.rows(); ++i) {
    logdet0 += 2 * std::log(c0.matrixL()(i, i));
    logdet1 += 2 * std::log(c1.matrixL()(i, i));
  }
  const long double tr = c0.solve(a1).trace();
  const long double quad = dm.dot(c0.solve(dm));
  return static_cast<double>(0.5L * (tr + quad - static_cast<long double>(a0.rows()) + logdet0 - logdet1));
}

/// KL of the Gaussian-likelihood posterior from the prior at the design
/// points, from explicit posterior moments in long double.
inline double gaussian_posterior_kl(const Eigen::MatrixXd& k, const Eigen::VectorXd& residual, double noise) {
  using ML = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using VL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const auto n = k.rows();
  const ML kl = k.cast<long double>();
  const ML a = kl + static_cast<long double>(noise) * ML::Identity(n, n);
  const Eigen::LLT<ML> ca(a);
  const ML k1 = kl - kl * ca.solve(kl);
  const VL m1 = kl * ca.solve(VL(residual.cast<long double>()));
  const Eigen::LLT<ML> c0(kl), c1(k1);
  long double logdet0 = 0, logdet1 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    logdet0 += 2 * std::log(c0.matrixL()(i, i));
    logdet1 += 2 * std::log(c1.matrixL()(i, i));
  }
  const long double tr = c0.solve(k1).trace();
  const long double quad = m1.dot(c0.solve(m1));
  return static_cast<double>(0.5L * (tr + quad - static_cast<long double>(n) + logdet0 - logdet1));
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace testing

namespace testing {

/// KL(posterior || prior) for one or two Poisson sites with prior N(mu, k),
/// by trapezoidal quadrature of the exact posterior on `nodes` points per axis
/// spanning mu_i +- 10 sd_i.
inline double brute_force_poisson_kl(const Eigen::VectorXd& mu, const Eigen::MatrixXd& k, const Eigen::VectorXd& y,
                                     int nodes) {
  const auto n = mu.size();
  auto loglik = [&](int i, double f) { return y[i] * f - std::exp(f) - std::lgamma(y[i] + 1.0); };
  std::vector<std::vector<double>> axis(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double sd = std::sqrt(k(i, i));
    const double lo = mu[i] - 10 * sd, hi = mu[i] + 10 * sd, h = (hi - lo) / (nodes - 1);
    for (int j = 0; j < nodes; ++j) {
      axis[i].push_back(lo + h * j);
      w[i].push_back((j == 0 || j == nodes - 1) ? h / 2 : h);
    }
  }
  const Eigen::MatrixXd kinv = k.inverse();
  const double log_norm = -0.5 * (n * std::log(2 * M_PI) + std::log(k.determinant()));
  // log p(y) = log sum w prior lik ; E_post[log lik] = sum w prior lik loglik / p(y)
  double max_log = -INFINITY;
  std::vector<double> logs, lls, ws;
  auto visit = [&](const Eigen::VectorXd& f, double weight) {
    const Eigen::VectorXd d = f - mu;
    double ll = 0;
    for (int i = 0; i < n; ++i) ll += loglik(i, f[i]);
    const double lp = log_norm - 0.5 * d.dot(kinv * d) + ll;
    logs.push_back(lp + std::log(weight));
    lls.push_back(ll);
    max_log = std::max(max_log, logs.back());
  };
  Eigen::VectorXd f(n);
  if (n == 1) {
    for (int a = 0; a < nodes; ++a) {
      f[0] = axis[0][a];
      visit(f, w[0][a]);
    }
  } else {
    logs.reserve(static_cast<std::size_t>(nodes) * nodes);
    lls.reserve(logs.capacity());
    for (int a = 0; a < nodes; ++a)
      for (int b = 0; b < nodes; ++b) {
        f[0] = axis[0][a];
        f[1] = axis[1][b];
        visit(f, w[0][a] * w[1][b]);
      }
  }
  double z = 0, e = 0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const double p = std::exp(logs[i] - max_log);
    z += p;
    e += p * lls[i];
  }
  const double log_py = max_log + std::log(z);
  return e / z - log_py;
}

}  // namespace testing
