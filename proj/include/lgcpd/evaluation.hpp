#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lgcpd/designs.hpp"
#include "lgcpd/lgcp.hpp"

namespace lgcpd {

enum class Criterion { ApvLatent, ApvIntensity, Kl };

std::string to_string(Criterion c);
Criterion parse_criterion(const std::string& name);

struct UtilityEstimate {
  Criterion criterion = Criterion::ApvLatent;
  double value = 0.0;
  double std_error = 0.0;  // sample sd of the replicates / sqrt(M)
  std::size_t replicate_count = 0;  // M, successful replicates only
  std::vector<double> replicates;   // NaN marks a failed replicate
  std::size_t failures = 0;
  Provenance design_provenance;
};

struct EvalOptions {
  std::size_t replicates = 50;
  std::uint64_t seed = 1;
  int quadrature_nodes = 31;
  double max_failure_rate = 0.05;
  double max_clamp_fraction = 0.001;
  unsigned threads = 1;
  /// When false, designs over the failure thresholds are marked in
  /// ComparisonRow::status instead of failing the whole comparison.
  bool throw_on_failure = true;
  NewtonOptions newton;
};

/// Prior-only APV: grid average of the prior variance of f (or of e^f).
double prior_apv(const GpPrior& prior, const Grid& grid, Criterion target);

/// Monte Carlo expected APV loss of the latent field or the intensity.
UtilityEstimate expected_apv(const LgcpModel& model, const Design& design, const Grid& grid,
                             Criterion target, const EvalOptions& options);

/// Monte Carlo expected KL divergence from prior to posterior.
UtilityEstimate expected_kl(const LgcpModel& model, const Design& design, const EvalOptions& options);

/// Replaces the model's prior by its posterior given existing data, so that
/// later sampling and fitting are conditioned on it.
LgcpModel condition_on_data(const LgcpModel& model, std::span<const SpaceTimePoint> existing_design,
                            const Eigen::VectorXd& existing_y, const NewtonOptions& newton = {});

struct NamedDesign {
  std::string name;
  Design design;
};

struct ComparisonRow {
  std::string design_name;
  UtilityEstimate estimate;
  /// 100 (base - value) / base against the design named without "_rej".
  std::optional<double> reduction_vs_base_pct;
  /// Mean and standard error of the paired per-replicate difference base - value.
  std::optional<double> paired_diff_mean;
  std::optional<double> paired_diff_se;
  std::string status = "ok";
};

struct Comparison {
  std::vector<ComparisonRow> rows;  // design-major, criterion-minor

  const ComparisonRow& row(const std::string& design, Criterion c) const;
};

/// Evaluates all designs under common random numbers: each replicate draws one
/// latent field on the union of the design points and one count per site, and
/// every design sees its own subset of that draw.
Comparison compare_designs(const LgcpModel& model, const std::vector<NamedDesign>& designs,
                           const std::vector<Criterion>& criteria, const Grid& grid,
                           const EvalOptions& options);

}  // namespace lgcpd
