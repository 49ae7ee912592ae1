// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--expect-fail ID]... [--only ID]...
// Exit status is 0 when every criterion passes except those listed with
// --expect-fail; those are still reported as FAIL.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "lgcpd/designs.hpp"
#include "lgcpd/evaluation.hpp"
#include "lgcpd/gp_gaussian.hpp"
#include "lgcpd/lgcp.hpp"
#include "lgcpd/lgcpd.h"
#include "lgcpd/likelihood.hpp"

using namespace lgcpd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Check {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

__attribute__((format(printf, 1, 2))) std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

// Random prior from the simulation family: Matern 3/2 in space, squared
// exponential in time, length-scales and variances drawn from the study ranges.
PriorPtr random_family_prior(std::mt19937_64& rng, MeanFunction mean) {
  std::uniform_real_distribution<double> ls(0.2, 1.6), lt(0.2, 1.5);
  const double s2t[] = {0.5, 1.0, 2.0};
  const KernelSpec s{KernelFamily::Matern32, ls(rng), 2.0};
  const KernelSpec t{KernelFamily::SqExp, lt(rng), s2t[rng() % 3]};
  const auto cov = rng() % 2 ? CovStructure::additive(s, t) : CovStructure::separable(s, t);
  return make_prior(mean, cov);
}

// Setup of the simulation study: unit cube, grid 10x10x8, additive prior with
// l_s = 0.8, l_t = 1.5, sigma2_s = sigma2_t = 2 and the concave quadratic mean.
struct StudySetup {
  Domain domain = Domain::unit_cube();
  Grid grid = discretize(Domain::unit_cube(), {10, 10, 8});
  PriorPtr prior = testing::study_prior(CovMode::Additive, 0.8, 1.5, 2.0, 2.0);
};

std::vector<NamedDesign> base_and_rejection(const StudySetup& s, const std::vector<std::string>& bases,
                                            std::size_t n, std::uint64_t seed) {
  const InclusionProbability p(InclusionVariant::ScaledLatentMean, s.prior, s.grid, 1.0);
  const InclusionFn fn = [&p](const SpaceTimePoint& x) { return p(x); };
  std::vector<NamedDesign> out;
  for (const auto& b : bases) {
    DesignRequest req;
    req.generator = b;
    req.n = n;
    req.seed = seed;
    out.push_back({b, generate_design(req, s.domain)});
    req.generator = b + "_rej";
    out.push_back({b + "_rej", generate_design(req, s.domain, &fn)});
  }
  return out;
}

std::vector<double> fit_gradients;  // gradient max-norms of every explicit Laplace fit

// ---------------------------------------------------------------------------

Outcome gaussian_closed_form() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> noise(0.05, 2.0);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const auto n = 1 + rng() % 20;
    const auto prior = random_family_prior(rng, ConstantMean{0.0});
    const auto pts = testing::random_points(rng, n);
    Eigen::MatrixXd k = prior->cov(pts);
    const double s2 = noise(rng);
    const Eigen::VectorXd r = sample_prior(*prior, pts, 1, rng()).col(0) +
                              std::sqrt(s2) * Eigen::VectorXd::NullaryExpr(static_cast<Eigen::Index>(n), [&] {
                                return std::normal_distribution<double>()(rng);
                              });
    const double fast = kl_gaussian_closed_form(k, r, s2);
    const double oracle = testing::gaussian_posterior_kl(k, r, s2);
    worst = std::max(worst, testing::rel_diff(fast, oracle));
  }
  return {worst <= 1e-8, fmt("max relative difference %.3g over 100 instances (tol 1e-8)", worst)};
}

Outcome lemma1_gaussian() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> noise(0.05, 2.0);
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    const auto n = 1 + rng() % 20;
    const auto prior = random_family_prior(rng, ConcaveQuadraticTime{});
    const auto pts = testing::random_points(rng, n);
    const double s2 = noise(rng);
    const auto obs = ObservationModel::gaussian(s2);
    const Eigen::VectorXd f = sample_prior(*prior, pts, 1, rng()).col(0);
    Rng yr(rng());
    const Eigen::VectorXd y = sample_counts(obs, f, yr);
    const LatentPosterior post({prior, obs}, pts, y);
    fit_gradients.push_back(post.gradient_norm());
    const double lemma = kl_lemma1(post);
    const double closed = kl_gaussian_closed_form({prior, s2}, pts, y);
    worst = std::max(worst, testing::rel_diff(lemma, closed));
  }
  return {worst <= 1e-6, fmt("max relative difference %.3g over 50 instances (tol 1e-6)", worst)};
}

Outcome lemma1_poisson_brute_force() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> mu_dist(0.0, 2.0);
  double worst = 0;
  int passed = 0;
  std::ostringstream misses;
  for (int i = 0; i < 20; ++i) {
    const std::size_t n = i < 10 ? 1 : 2;
    const double mu = mu_dist(rng);
    const auto prior = make_prior(ConstantMean{mu}, CovStructure::additive({KernelFamily::Matern32, 0.8, 2.0},
                                                                           {KernelFamily::SqExp, 1.5, 2.0}));
    const auto pts = testing::random_points(rng, n);
    const Eigen::VectorXd f = sample_prior(*prior, pts, 1, rng()).col(0);
    Rng yr(rng());
    const Eigen::VectorXd y = sample_counts(ObservationModel::poisson(), f, yr);
    const LatentPosterior post({prior, ObservationModel::poisson()}, pts, y);
    fit_gradients.push_back(post.gradient_norm());
    const double laplace = kl_lemma1(post);
    const double oracle = testing::brute_force_poisson_kl(prior->mean(pts), prior->cov(pts), y, 4001);
    const double rel = std::abs(laplace - oracle) / oracle;
    worst = std::max(worst, rel);
    if (rel <= 0.05) {
      ++passed;
    } else {
      misses << " [n=" << n << " y=" << y.transpose() << " " << fmt("%.1f%%", 100 * rel) << "]";
    }
  }
  return {passed == 20, fmt("%d/20 instances within 5%% (max %.1f%%);", passed, 100 * worst) + misses.str()};
}

Outcome zero_information() {
  StudySetup s;
  const auto prior = make_prior(ConstantMean{-20.0}, CovStructure::additive({KernelFamily::Matern32, 0.8, 2.0},
                                                                          {KernelFamily::SqExp, 1.5, 2.0}));
  const LgcpModel model{prior, ObservationModel::poisson()};
  const auto designs = base_and_rejection(s, {"random", "halton", "sobol"}, 50, 1);
  EvalOptions o;
  o.replicates = 50;
  o.seed = 4;
  o.threads = 4;
  std::vector<NamedDesign> plain;
  for (const auto& d : designs)
    if (d.name.find("_rej") == std::string::npos) plain.push_back(d);
  const auto cmp = compare_designs(model, plain, {Criterion::ApvLatent, Criterion::ApvIntensity, Criterion::Kl},
                                   s.grid, o);
  Outcome out;
  double worst_apv = 0, worst_kl_ratio = 0;
  for (const auto& row : cmp.rows) {
    const auto c = row.estimate.criterion;
    if (c == Criterion::Kl) {
      const double bound = std::max(1e-3, 2 * row.estimate.std_error);
      worst_kl_ratio = std::max(worst_kl_ratio, row.estimate.value / bound);
      out.pass &= row.estimate.value <= bound;
    } else {
      const double prior_value = prior_apv(*prior, s.grid, c);
      const double rel = std::abs(row.estimate.value - prior_value) / prior_value;
      worst_apv = std::max(worst_apv, rel);
      out.pass &= rel <= 0.01;
    }
  }
  out.detail = fmt("max |APV - prior APV| / prior APV = %.3g (tol 0.01); max KL / bound = %.3g (tol 1)",
                   worst_apv, worst_kl_ratio);
  return out;
}

Outcome rejection_benefit_poisson() {
  StudySetup s;
  const LgcpModel model{s.prior, ObservationModel::poisson()};
  EvalOptions o;
  o.replicates = 50;
  o.seed = 5;
  o.threads = 4;
  const auto cmp = compare_designs(model, base_and_rejection(s, {"random", "halton", "sobol"}, 50, 5),
                                   {Criterion::ApvIntensity}, s.grid, o);
  Outcome out;
  for (const std::string b : {"random", "halton", "sobol"}) {
    const auto& base = cmp.row(b, Criterion::ApvIntensity);
    const auto& rej = cmp.row(b + "_rej", Criterion::ApvIntensity);
    const double diff = *rej.paired_diff_mean, se = *rej.paired_diff_se;
    const double lo = diff - 1.96 * se, hi = diff + 1.96 * se;
    const double red = *rej.reduction_vs_base_pct;
    const bool ok = rej.estimate.value < base.estimate.value && lo > 0 && red >= 5 && red <= 50;
    out.pass &= ok;
    out.detail += fmt("%s: %.4g -> %.4g, reduction %.1f%%, 95%% CI of difference [%.3g, %.3g]; ", b.c_str(),
                      base.estimate.value, rej.estimate.value, red, lo, hi);
  }
  return out;
}

Outcome gaussian_reversal() {
  StudySetup s;
  const LgcpModel model{s.prior, ObservationModel::gaussian(0.5)};
  EvalOptions o;
  o.replicates = 50;
  o.seed = 6;
  o.threads = 4;
  const auto cmp = compare_designs(model, base_and_rejection(s, {"random", "halton"}, 50, 6),
                                   {Criterion::ApvLatent}, s.grid, o);
  Outcome out;
  for (const std::string b : {"random", "halton"}) {
    const auto& base = cmp.row(b, Criterion::ApvLatent);
    const auto& rej = cmp.row(b + "_rej", Criterion::ApvLatent);
    // diff = base - rej; the reversal needs the whole interval below zero
    const double diff = *rej.paired_diff_mean, se = *rej.paired_diff_se;
    const double lo = diff - 1.96 * se, hi = diff + 1.96 * se;
    out.pass &= rej.estimate.value > base.estimate.value && hi < 0;
    out.detail += fmt("%s: %.4g -> %.4g, 95%% CI of base - rej [%.3g, %.3g]; ", b.c_str(), base.estimate.value,
                      rej.estimate.value, lo, hi);
  }
  return out;
}

Outcome inhibitory_constraints() {
  const std::pair<std::size_t, double> cases[] = {{50, 0.21}, {100, 0.15}, {150, 0.1}};
  Outcome out;
  for (const auto& [n, delta] : cases) {
    double closest = INFINITY;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto d = simple_inhibitory(n, delta, Domain::unit_cube(), seed);
      if (d.size() != n) out.pass = false;
      for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = i + 1; j < d.size(); ++j) closest = std::min(closest, distance(d.points[i], d.points[j]));
    }
    out.pass &= closest >= delta;
    out.detail += fmt("n=%zu delta=%.2f min distance %.4f; ", n, delta, closest);
  }
  return out;
}

Outcome degenerate_thinning() {
  const auto domain = Domain::unit_cube();
  const InclusionFn one = [](const SpaceTimePoint&) { return 1.0; };
  Outcome out;
  int matched = 0, total = 0;
  for (const auto& base : base_generator_names())
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      DesignRequest req;
      req.generator = base;
      req.n = 40;
      req.seed = seed;
      const auto plain = generate_design(req, domain);
      req.generator = base + "_rej";
      const auto thinned = generate_design(req, domain, &one);
      ++total;
      if (plain.points == thinned.points) {
        ++matched;
      } else {
        out.pass = false;
        out.detail += base + " differs; ";
      }
    }
  const auto candidates = discretize(domain, {10, 10, 10}).cells;
  const bool coffee = space_fill_rejection(40, candidates, domain, one, 7).points ==
                      coffee_house(40, candidates, domain).points;
  out.pass &= coffee;
  out.detail += fmt("%d/%d base/rejection pairs identical; space_fill_rejection %s coffee_house", matched, total,
                    coffee ? "==" : "!=");
  return out;
}

Outcome woodbury() {
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0, smallest_w = 1;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 1 + rng() % 30;
    const auto prior = random_family_prior(rng, ConstantMean{0.0});
    const Eigen::MatrixXd k = prior->cov(testing::random_points(rng, n));
    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    for (auto& x : w) x = std::pow(10.0, -12.0 + 14.0 * u(rng));
    if (trial % 10 == 0) w[0] = 1e-12;
    smallest_w = std::min(smallest_w, w.minCoeff());
    const Eigen::MatrixXd a = inverse_k_plus_winv_woodbury(k, w);
    const Eigen::MatrixXd b = inverse_k_plus_winv_symmetric(k, w);
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff()));
  }
  return {worst <= 1e-8, fmt("max scaled difference %.3g over 100 instances, smallest W %.1g (tol 1e-8)", worst,
                             smallest_w)};
}

Outcome derivatives_and_stationarity() {
  std::vector<ObservationModel> models{ObservationModel::poisson()};
  for (double r : {0.3, 1.0, 5.0, 50.0, 1e4})
    for (double v : {1.0, 2.5}) models.push_back(ObservationModel::negative_binomial(r, {v}));
  double worst_g = 0, worst_h = 0;
  for (const auto& obs : models)
    for (double y : {0.0, 1.0, 2.0, 5.0, 20.0, 100.0, 1000.0})
      for (double f = -5.0; f <= 7.0; f += 0.75) {
        const double h = 1e-4 * std::max(1.0, std::abs(f));
        // fourth-order central differences
        auto d = [&](auto&& fn) {
          return (-fn(f + 2 * h) + 8 * fn(f + h) - 8 * fn(f - h) + fn(f - 2 * h)) / (12 * h);
        };
        const double g = log_lik_grad(obs, 0, y, f);
        const double fd_g = d([&](double x) { return log_lik(obs, 0, y, x); });
        const double hess = -log_lik_neg_hess(obs, 0, y, f);
        const double fd_h = d([&](double x) { return log_lik_grad(obs, 0, y, x); });
        worst_g = std::max(worst_g, std::abs(g - fd_g) / std::max(1.0, std::abs(g)));
        worst_h = std::max(worst_h, std::abs(hess - fd_h) / std::max(1.0, std::abs(hess)));
      }

  std::mt19937_64 rng(1010);
  for (int i = 0; i < 100; ++i) {
    const auto n = 1 + rng() % 60;
    const auto prior = random_family_prior(rng, ConcaveQuadraticTime{});
    const auto obs = i % 2 ? ObservationModel::poisson() : ObservationModel::negative_binomial(0.5 + i % 7, {1.5});
    const auto pts = testing::random_points(rng, n);
    const Eigen::VectorXd f = sample_prior(*prior, pts, 1, rng()).col(0);
    Rng yr(rng());
    const Eigen::VectorXd y = sample_counts(obs, f, yr);
    fit_gradients.push_back(LatentPosterior({prior, obs}, pts, y).gradient_norm());
  }
  const double worst_stat = *std::max_element(fit_gradients.begin(), fit_gradients.end());
  const bool ok = worst_g <= 1e-5 && worst_h <= 1e-5 && worst_stat < 1e-8;
  return {ok, fmt("gradient rel err %.2g, Hessian rel err %.2g (tol 1e-5); max MAP gradient %.2g over %zu fits "
                  "(tol 1e-8)",
                  worst_g, worst_h, worst_stat, fit_gradients.size())};
}

Outcome nb_poisson_limit() {
  const auto obs = ObservationModel::negative_binomial(1e9);
  const Eigen::VectorXd f = Eigen::VectorXd::Constant(100000, std::log(6.0));
  Rng rng(1111);
  const Eigen::VectorXd y = sample_counts(obs, f, rng);
  const double mean = y.mean();
  const double var = (y.array() - mean).square().sum() / static_cast<double>(y.size() - 1);
  const double ratio = var / mean;
  return {ratio >= 0.97 && ratio <= 1.03, fmt("variance/mean = %.4f over 1e5 draws (range [0.97, 1.03])", ratio)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "lgcpd_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto cfg = root / "study.cfg";
  std::ofstream(cfg) << "grid = 6 6 5\nl_s = 0.4\nl_s = 1.2\ndesign = halton\ncriterion = apv_intensity\n"
                        "n = 20\nreplicates = 10\nseed = 12\n";
  struct Run {
    const char* dir;
    unsigned threads;
  };
  const Run runs[] = {{"serial_a", 1}, {"serial_b", 1}, {"parallel_a", 4}, {"parallel_b", 4}};
  for (const auto& r : runs) {
    size_t failed = 0;
    if (lgcpd_simstudy(cfg.c_str(), (root / r.dir).c_str(), r.threads, &failed) != LGCPD_OK || failed != 0)
      return {false, std::string("simstudy failed: ") + lgcpd_last_error()};
  }
  Outcome out;
  std::size_t cells = 0;
  for (const char* file : {"cells.csv", "aggregated.csv"}) {
    const auto ref = slurp(root / "serial_a" / file);
    if (ref.empty()) out.pass = false;
    for (const auto& r : runs) out.pass &= slurp(root / r.dir / file) == ref;
    if (std::string(file) == "cells.csv") cells = static_cast<std::size_t>(std::count(ref.begin(), ref.end(), '\n')) - 2;
  }
  out.pass &= cells == 2;
  out.detail = fmt("%zu cells; two serial and two 4-thread runs %s", cells,
                   out.pass ? "byte-identical" : "differ");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected_failures, only;
  for (int i = 1; i < argc; ++i) {
    const bool has_value = i + 1 < argc;
    if (std::strcmp(argv[i], "--expect-fail") == 0 && has_value) {
      expected_failures.insert(std::atoi(argv[++i]));
    } else if (std::strcmp(argv[i], "--only") == 0 && has_value) {
      only.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--expect-fail ID]... [--only ID]...\n", argv[0]);
      return 2;
    }
  }

  const std::vector<Check> criteria{
      {1, "Gaussian KL closed form vs generic Gaussian KL", 10, gaussian_closed_form},
      {2, "KL via posterior marginals, Gaussian likelihood", 30, lemma1_gaussian},
      {3, "KL via Laplace vs dense-quadrature oracle, Poisson", 120, lemma1_poisson_brute_force},
      {4, "zero-information limit", 60, zero_information},
      {5, "rejection sampling lowers intensity APV (Poisson)", 900, rejection_benefit_poisson},
      {6, "rejection sampling raises APV (Gaussian)", 300, gaussian_reversal},
      {7, "inhibitory distance constraints", 60, inhibitory_constraints},
      {8, "thinning with p = 1 is the identity", 60, degenerate_thinning},
      {9, "Woodbury routes agree", 10, woodbury},
      {10, "likelihood derivatives and MAP stationarity", 60, derivatives_and_stationarity},
      {11, "Negative-Binomial to Poisson limit", 10, nb_poisson_limit},
      {12, "simstudy output is deterministic", 120, determinism},
  };

  int unexpected = 0, failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_s) {
      out.pass = false;
      out.detail += " runtime over budget";
    }
    const bool expected = expected_failures.count(c.id) > 0;
    std::printf("%s %2d %s (%.1fs / %.0fs): %s%s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, secs, c.budget_s,
                out.detail.c_str(), !out.pass && expected ? " [expected failure]" : "");
    std::fflush(stdout);
    if (!out.pass) {
      ++failed;
      if (!expected) ++unexpected;
    }
  }
  std::printf("%d criteria failed, %d unexpectedly\n", failed, unexpected);
  return unexpected == 0 ? 0 : 1;
}
