#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lgcpd/designs.hpp"
#include "lgcpd/domain.hpp"
#include "lgcpd/evaluation.hpp"
#include "lgcpd/kernels.hpp"
#include "lgcpd/likelihood.hpp"

namespace lgcpd {

/// Simulation-study configuration. Parsed from flat "key = value" text; list
/// keys (cov_mode, l_s, l_t, sigma2_t, design, criterion, n) may repeat.
struct ExperimentConfig {
  Bounds bounds;
  std::string mask_file;
  Resolution grid{10, 10, 8};
  Resolution candidate_grid{10, 10, 10};

  std::vector<CovMode> cov_modes{CovMode::Additive};
  KernelFamily spatial_kernel = KernelFamily::Matern32;
  KernelFamily temporal_kernel = KernelFamily::SqExp;
  double sigma2_s = 2.0;
  std::vector<double> l_s{0.8};
  std::vector<double> l_t{1.5};
  std::vector<double> sigma2_t{2.0};
  MeanFunction mean = ConcaveQuadraticTime{};
  ObservationModel observation = ObservationModel::poisson();

  std::vector<std::string> designs{"random", "random_rej"};
  InclusionVariant inclusion = InclusionVariant::ScaledLatentMean;
  double p_max = 1.0;
  std::vector<Criterion> criteria{Criterion::ApvIntensity};
  std::vector<std::size_t> n{50};
  double close_pair_fraction = 0.5;

  std::size_t replicates = 50;
  std::uint64_t seed = 1;
  int quadrature_nodes = 31;
  double max_failure_rate = 0.05;
  std::string output_dir = ".";

  /// Canonical "key=value" lines; every key except output_dir.
  std::string canonical() const;
  /// 64-bit FNV-1a of canonical(), as 16 hex digits.
  std::string hash() const;
};

/// Throws Usage on unknown keys, malformed values or empty lists.
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::string& path);

struct ExperimentCell {
  CovMode cov_mode;
  double l_t;
  double sigma2_t;
  double l_s;
  std::size_t n;
  std::string design;
  Criterion criterion;
};

/// All cells in output order: cov mode, l_t, sigma2_t, l_s, n, design, criterion.
std::vector<ExperimentCell> enumerate_cells(const ExperimentConfig& config);

struct CellResult {
  ExperimentCell cell;
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t replicates = 0;
  std::optional<double> reduction_vs_base_pct;
  std::string status = "ok";
};

/// Mean over l_s of the successful cells sharing every other coordinate.
struct AggregatedResult {
  CovMode cov_mode;
  double l_t;
  double sigma2_t;
  std::size_t n;
  std::string design;
  Criterion criterion;
  double estimate = 0.0;
  double std_error = 0.0;  // sqrt(sum se^2) / cells
  std::size_t replicates = 0;  // minimum over cells
  std::optional<double> reduction_vs_base_pct;  // mean over cells reporting one
  std::size_t cells = 0;
};

struct ExperimentResult {
  std::string config_hash;
  std::vector<CellResult> cells;
  std::vector<AggregatedResult> aggregated;
  std::size_t failed_cells = 0;
};

/// Runs every cell. Hyperparameter cells run as a parallel work queue on
/// `threads` workers; results do not depend on the thread count. Per-cell
/// failures are logged to `log` (if given) and marked in the status column.
ExperimentResult run_simulation_study(const ExperimentConfig& config, unsigned threads = 1,
                                      std::ostream* log = nullptr);

std::vector<AggregatedResult> aggregate_over_ls(const std::vector<CellResult>& cells);

void write_cells_csv(std::ostream& os, const ExperimentResult& result);
void write_aggregated_csv(std::ostream& os, const ExperimentResult& result);
/// Writes cells.csv and aggregated.csv into config.output_dir.
void write_experiment_outputs(const ExperimentConfig& config, const ExperimentResult& result);

std::string to_string(CovMode m);
std::string to_string(KernelFamily f);

}  // namespace lgcpd
