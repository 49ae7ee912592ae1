#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lgcpd/domain.hpp"
#include "lgcpd/prior.hpp"

namespace lgcpd {

/// Where a design came from: generator, parameters, seed and the acceptance
/// trace (indices into the base generator's proposal stream).
struct Provenance {
  std::string generator;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> params;
  std::size_t proposals = 0;
  std::size_t restarts = 0;
  std::vector<std::size_t> accepted;
};

struct Design {
  std::vector<SpaceTimePoint> points;
  Provenance provenance;

  std::size_t size() const { return points.size(); }
};

/// Acceptance probability in [0, 1] for a candidate location.
using InclusionFn = std::function<double(const SpaceTimePoint&)>;

enum class InclusionVariant { ScaledLatentMean, ExpectedIntensity, TruncatedExpectedIntensity };

/// Inclusion probability derived from the mean and variance of a GP (prior,
/// or posterior given earlier data):
///   ScaledLatentMean            p ~ mu(x), min-max scaled over the grid,
///   ExpectedIntensity           p ~ exp(mu(x) + 2 sigma^2(x)),
///   TruncatedExpectedIntensity  p ~ min(p_max, exp(mu(x) + 2 sigma^2(x))).
/// The normalizer is the grid maximum of the unnormalized value, so p reaches 1
/// on the grid; values off the grid are clamped into [0, 1].
class InclusionProbability {
 public:
  InclusionProbability(InclusionVariant variant, PriorPtr source, const Grid& grid, double p_max = 1.0);

  double operator()(const SpaceTimePoint& p) const;

  InclusionVariant variant() const { return variant_; }
  double p_max() const { return p_max_; }
  double normalizer() const { return normalizer_; }

 private:
  double unnormalized(double mean, double var) const;

  InclusionVariant variant_;
  PriorPtr source_;
  double p_max_;
  double offset_ = 0.0;
  double normalizer_ = 1.0;
};

std::string to_string(InclusionVariant v);
InclusionVariant parse_inclusion_variant(const std::string& name);

/// Sequential source of admissible candidate locations (domain coordinates).
/// Streams may react to acceptances (inhibitory designs) and may ask for a
/// restart by returning nullopt.
class ProposalStream {
 public:
  virtual ~ProposalStream() = default;
  virtual std::optional<SpaceTimePoint> next() = 0;
  virtual void on_accept(const SpaceTimePoint&) {}
  /// Reset to a fresh state for restart number `attempt` (0 = first run).
  virtual void reset(std::size_t attempt) = 0;
  virtual bool restartable() const { return false; }
};

std::unique_ptr<ProposalStream> random_stream(const Domain& domain, std::uint64_t seed);
std::unique_ptr<ProposalStream> halton_stream(const Domain& domain, std::uint64_t offset);
std::unique_ptr<ProposalStream> sobol_stream(const Domain& domain, std::uint64_t offset);
std::unique_ptr<ProposalStream> fibonacci_stream(const Domain& domain, std::size_t n);
std::unique_ptr<ProposalStream> inhibitory_stream(const Domain& domain, double delta, std::uint64_t seed);
std::unique_ptr<ProposalStream> close_pairs_stream(const Domain& domain, std::size_t n, std::size_t k,
                                                   double delta, std::uint64_t seed);
std::unique_ptr<ProposalStream> min_dist_stream(const Domain& domain, const Grid& grid, double delta,
                                                std::uint64_t seed);

struct DrawOptions {
  std::size_t max_attempts = 0;  // 0 = 1000 * n
  std::size_t max_restarts = 20;
};

/// Pulls proposals from `stream` until n are accepted. With an inclusion
/// function each proposal is kept with probability p(x) using an RNG stream
/// separate from the base generator, so p = 1 reproduces the base design.
Design draw_design(ProposalStream& stream, std::size_t n, const InclusionFn* inclusion,
                   std::uint64_t seed, const DrawOptions& options = {});

Design random_design(std::size_t n, const Domain& domain, std::uint64_t seed);
Design halton(std::size_t n, const Domain& domain, std::uint64_t offset = 0);
Design sobol(std::size_t n, const Domain& domain, std::uint64_t offset = 0);
Design fibonacci_lattice_3d(std::size_t n, const Domain& domain);
Design simple_inhibitory(std::size_t n, double delta, const Domain& domain, std::uint64_t seed);
Design inhibitory_close_pairs(std::size_t n, std::size_t k, double delta, const Domain& domain,
                              std::uint64_t seed);
Design min_dist_discrete(std::size_t n, double delta, const Grid& grid, const Domain& domain,
                         std::uint64_t seed);

/// delta_k = delta * sqrt(n / (n - k)).
double close_pair_delta(std::size_t n, std::size_t k, double delta);
/// Default inhibition distance: (50, .21), (100, .15), (150, .1) interpolated
/// linearly in 1/sqrt(n), scaled proportionally to 1/sqrt(n) outside that range.
double default_delta(std::size_t n);

/// Greedy maximin ("coffee-house") selection from a candidate set, starting at
/// the candidate nearest the lower domain corner. Distances are measured in
/// unit-cube coordinates; ties go to the lowest candidate index.
Design coffee_house(std::size_t n, const std::vector<SpaceTimePoint>& candidates, const Domain& domain);

/// Coffee-house with rejection: at each step try candidates in decreasing
/// order of their maximin distance, accepting each with probability p(x); the
/// first point (nearest the corner) is taken unconditionally.
Design space_fill_rejection(std::size_t n, const std::vector<SpaceTimePoint>& candidates,
                            const Domain& domain, const InclusionFn& inclusion, std::uint64_t seed);

/// Everything needed to build a named design.
struct DesignRequest {
  std::string generator = "random";  // base name, optionally suffixed "_rej"
  std::size_t n = 50;
  std::uint64_t seed = 1;
  std::optional<double> delta;        // inhibitory designs; default_delta(n) if unset
  double close_pair_fraction = 0.5;   // k = floor(fraction * n)
  std::uint64_t offset = 0;           // quasi-random index offset
  Resolution candidate_resolution{10, 10, 10};  // min_dist / space_fill candidate grid
  std::size_t max_attempts = 0;
};

/// Base generator names: random halton sobol fibo_lat min_dran close_pair min_dist space_fill.
const std::vector<std::string>& base_generator_names();
/// Splits "halton_rej" into ("halton", true). Throws Usage for unknown names.
std::pair<std::string, bool> parse_generator_name(const std::string& name);

/// Builds the requested design; `inclusion` is required for "_rej" names.
Design generate_design(const DesignRequest& request, const Domain& domain,
                       const InclusionFn* inclusion = nullptr);

}  // namespace lgcpd
