#include "lgcpd/designs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "lgcpd/error.hpp"
#include "lgcpd/qmc.hpp"
#include "lgcpd/rng.hpp"

namespace lgcpd {

namespace {

constexpr std::size_t kMaxMaskRejections = 1'000'000;
constexpr std::size_t kMaxInhibitoryFailures = 100'000;

std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

SpaceTimePoint unit_point(const std::array<double, 3>& u) { return {u[0], u[1], u[2]}; }

double unit_distance(const Domain& domain, const SpaceTimePoint& a, const SpaceTimePoint& b) {
  return distance(domain.to_unit_cube(a), domain.to_unit_cube(b));
}

// ---------------------------------------------------------------------------
// Streams

class RandomStream final : public ProposalStream {
 public:
  RandomStream(const Domain& domain, std::uint64_t seed) : domain_(domain), seed_(seed) { reset(0); }

  std::optional<SpaceTimePoint> next() override {
    for (std::size_t tries = 0; tries < kMaxMaskRejections; ++tries) {
      const SpaceTimePoint u{uniform01(rng_), uniform01(rng_), uniform01(rng_)};
      const auto p = domain_.from_unit_cube(u);
      if (domain_.is_admissible(p)) return p;
    }
    fail(ErrorCode::Numerical, "mask too restrictive: no admissible random proposal");
  }
  void reset(std::size_t attempt) override { rng_ = make_rng(seed_, {attempt, 0x52414e44}); }

 private:
  Domain domain_;
  std::uint64_t seed_;
  Rng rng_;
};

/// Deterministic unit-cube sequence; masked points are skipped.
class SequenceStream final : public ProposalStream {
 public:
  using PointFn = std::function<std::array<double, 3>(std::uint64_t)>;

  SequenceStream(const Domain& domain, PointFn fn, std::uint64_t first)
      : domain_(domain), fn_(std::move(fn)), first_(first), index_(first) {}

  std::optional<SpaceTimePoint> next() override {
    for (std::size_t tries = 0; tries < kMaxMaskRejections; ++tries) {
      const auto p = domain_.from_unit_cube(unit_point(fn_(index_++)));
      if (domain_.is_admissible(p)) return p;
    }
    fail(ErrorCode::Numerical, "mask too restrictive: no admissible sequence point");
  }
  void reset(std::size_t) override { index_ = first_; }

 private:
  Domain domain_;
  PointFn fn_;
  std::uint64_t first_;
  std::uint64_t index_;
};

/// Uniform proposals that keep unit-cube distance >= delta to accepted points.
class InhibitoryStream : public ProposalStream {
 public:
  InhibitoryStream(const Domain& domain, double delta, std::uint64_t seed)
      : domain_(domain), delta_(delta), seed_(seed) {
    require(delta >= 0.0, "inhibition distance must be nonnegative");
    InhibitoryStream::reset(0);
  }

  std::optional<SpaceTimePoint> next() override {
    for (std::size_t tries = 0; tries < kMaxInhibitoryFailures; ++tries) {
      const SpaceTimePoint u{uniform01(rng_), uniform01(rng_), uniform01(rng_)};
      const auto p = domain_.from_unit_cube(u);
      if (domain_.is_admissible(p) && far_enough(u, delta_)) return p;
    }
    return std::nullopt;
  }
  void on_accept(const SpaceTimePoint& p) override { accepted_.push_back(domain_.to_unit_cube(p)); }
  void reset(std::size_t attempt) override {
    rng_ = make_rng(seed_, {attempt, 0x494e4842});
    accepted_.clear();
  }
  bool restartable() const override { return true; }

 protected:
  bool far_enough(const SpaceTimePoint& u, double delta) const {
    return std::all_of(accepted_.begin(), accepted_.end(),
                       [&](const SpaceTimePoint& a) { return distance(a, u) >= delta; });
  }

  Domain domain_;
  double delta_;
  std::uint64_t seed_;
  Rng rng_;
  std::vector<SpaceTimePoint> accepted_;  // unit-cube coordinates
};

/// n - k inhibitory parents at distance delta_k, then k points uniform in the
/// delta_k / 2 ball around a uniformly chosen parent.
class ClosePairsStream final : public InhibitoryStream {
 public:
  ClosePairsStream(const Domain& domain, std::size_t n, std::size_t k, double delta_k, std::uint64_t seed)
      : InhibitoryStream(domain, delta_k, seed), parents_(n - k) {}

  std::optional<SpaceTimePoint> next() override {
    if (accepted_.size() < parents_) return InhibitoryStream::next();
    std::normal_distribution<double> normal;
    const double radius = 0.5 * delta_;
    for (std::size_t tries = 0; tries < kMaxInhibitoryFailures; ++tries) {
      const auto parent = accepted_[static_cast<std::size_t>(uniform01(rng_) * static_cast<double>(parents_))];
      double g[3] = {normal(rng_), normal(rng_), normal(rng_)};
      const double norm = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
      if (norm == 0.0) continue;
      const double r = radius * std::cbrt(uniform01(rng_)) / norm;
      const SpaceTimePoint u{parent.s1 + r * g[0], parent.s2 + r * g[1], parent.t + r * g[2]};
      if (u.s1 < 0.0 || u.s1 > 1.0 || u.s2 < 0.0 || u.s2 > 1.0 || u.t < 0.0 || u.t > 1.0) continue;
      const auto p = domain_.from_unit_cube(u);
      if (domain_.is_admissible(p)) return p;
    }
    return std::nullopt;
  }

 private:
  std::size_t parents_;
};

/// Grid cell centers in random order without replacement, subject to the
/// inhibition distance against accepted points.
class MinDistStream final : public ProposalStream {
 public:
  MinDistStream(const Domain& domain, const Grid& grid, double delta, std::uint64_t seed)
      : domain_(domain), cells_(grid.cells), delta_(delta), seed_(seed) {
    require(delta >= 0.0, "inhibition distance must be nonnegative");
    reset(0);
  }

  std::optional<SpaceTimePoint> next() override {
    while (cursor_ < order_.size()) {
      const auto& p = cells_[order_[cursor_++]];
      const auto u = domain_.to_unit_cube(p);
      const bool ok = std::all_of(accepted_.begin(), accepted_.end(),
                                  [&](const SpaceTimePoint& a) { return distance(a, u) >= delta_; });
      if (ok) return p;
    }
    return std::nullopt;
  }
  void on_accept(const SpaceTimePoint& p) override { accepted_.push_back(domain_.to_unit_cube(p)); }
  void reset(std::size_t attempt) override {
    Rng rng = make_rng(seed_, {attempt, 0x4d494e44});
    order_.resize(cells_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    // Fisher-Yates with the portable uniform01 draw.
    for (std::size_t i = order_.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
      std::swap(order_[i - 1], order_[j]);
    }
    cursor_ = 0;
    accepted_.clear();
  }
  bool restartable() const override { return true; }

 private:
  Domain domain_;
  std::vector<SpaceTimePoint> cells_;
  double delta_;
  std::uint64_t seed_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::vector<SpaceTimePoint> accepted_;
};

const Sobol3& sobol_table() {
  static const Sobol3 table;
  return table;
}

}  // namespace

// ---------------------------------------------------------------------------
// Inclusion probabilities

InclusionProbability::InclusionProbability(InclusionVariant variant, PriorPtr source, const Grid& grid,
                                           double p_max)
    : variant_(variant), source_(std::move(source)), p_max_(p_max) {
  require(source_ != nullptr, "inclusion probability needs a mean/variance source");
  require(p_max_ > 0.0 && p_max_ <= 1.0, "p_max must lie in (0, 1]");
  require(!grid.cells.empty(), "inclusion probability needs a nonempty grid");
  const Eigen::VectorXd mean = source_->mean(grid.cells);
  if (variant_ == InclusionVariant::ScaledLatentMean) {
    offset_ = mean.minCoeff();
    normalizer_ = mean.maxCoeff() - offset_;
    if (!(normalizer_ > 0.0)) fail(ErrorCode::Numerical, "degenerate mean field: max equals min");
    return;
  }
  // Intensity variants are normalized in log space to avoid overflow.
  const Eigen::VectorXd var = source_->variance(grid.cells);
  double log_max = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < mean.size(); ++i) log_max = std::max(log_max, unnormalized(mean[i], var[i]));
  normalizer_ = log_max;
}

double InclusionProbability::unnormalized(double mean, double var) const {
  const double log_intensity = mean + 2.0 * var;
  if (variant_ == InclusionVariant::TruncatedExpectedIntensity) return std::min(std::log(p_max_), log_intensity);
  return log_intensity;
}

double InclusionProbability::operator()(const SpaceTimePoint& p) const {
  const std::span<const SpaceTimePoint> one(&p, 1);
  double value;
  if (variant_ == InclusionVariant::ScaledLatentMean) {
    value = (source_->mean(one)[0] - offset_) / normalizer_;
  } else {
    value = std::exp(unnormalized(source_->mean(one)[0], source_->variance(one)[0]) - normalizer_);
  }
  return std::clamp(value, 0.0, 1.0);
}

std::string to_string(InclusionVariant v) {
  switch (v) {
    case InclusionVariant::ScaledLatentMean: return "scaled_latent_mean";
    case InclusionVariant::ExpectedIntensity: return "expected_intensity";
    case InclusionVariant::TruncatedExpectedIntensity: return "truncated_expected_intensity";
  }
  return "";
}

InclusionVariant parse_inclusion_variant(const std::string& name) {
  for (auto v : {InclusionVariant::ScaledLatentMean, InclusionVariant::ExpectedIntensity,
                 InclusionVariant::TruncatedExpectedIntensity}) {
    if (to_string(v) == name) return v;
  }
  fail(ErrorCode::Usage, "unknown inclusion probability '" + name + "'");
}

// ---------------------------------------------------------------------------
// Stream factories

std::unique_ptr<ProposalStream> random_stream(const Domain& domain, std::uint64_t seed) {
  return std::make_unique<RandomStream>(domain, seed);
}

std::unique_ptr<ProposalStream> halton_stream(const Domain& domain, std::uint64_t offset) {
  return std::make_unique<SequenceStream>(domain, halton_point, 1 + offset);
}

std::unique_ptr<ProposalStream> sobol_stream(const Domain& domain, std::uint64_t offset) {
  return std::make_unique<SequenceStream>(
      domain, [](std::uint64_t i) { return sobol_table().point(i); }, 1 + offset);
}

std::unique_ptr<ProposalStream> fibonacci_stream(const Domain& domain, std::size_t n) {
  require(n >= 1, "design size must be >= 1");
  return std::make_unique<SequenceStream>(
      domain, [n](std::uint64_t i) { return fibonacci_point(i, n); }, 0);
}

std::unique_ptr<ProposalStream> inhibitory_stream(const Domain& domain, double delta, std::uint64_t seed) {
  return std::make_unique<InhibitoryStream>(domain, delta, seed);
}

std::unique_ptr<ProposalStream> close_pairs_stream(const Domain& domain, std::size_t n, std::size_t k,
                                                   double delta, std::uint64_t seed) {
  require(k > 0 && k < n, "close pairs need 0 < k < n");
  return std::make_unique<ClosePairsStream>(domain, n, k, close_pair_delta(n, k, delta), seed);
}

std::unique_ptr<ProposalStream> min_dist_stream(const Domain& domain, const Grid& grid, double delta,
                                                std::uint64_t seed) {
  return std::make_unique<MinDistStream>(domain, grid, delta, seed);
}

// ---------------------------------------------------------------------------
// Driver

Design draw_design(ProposalStream& stream, std::size_t n, const InclusionFn* inclusion, std::uint64_t seed,
                   const DrawOptions& options) {
  require(n >= 1, "design size must be >= 1");
  const std::size_t budget = options.max_attempts == 0 ? 1000 * n : options.max_attempts;
  require(budget >= n, "max_attempts must be >= n");

  for (std::size_t attempt = 0; attempt <= options.max_restarts; ++attempt) {
    stream.reset(attempt);
    Rng accept_rng = make_rng(seed, {attempt, 0x41434350});
    Design design;
    design.provenance.seed = seed;
    design.provenance.restarts = attempt;
    bool stuck = false;
    std::size_t proposals = 0;
    while (design.points.size() < n) {
      if (proposals >= budget) {
        fail(ErrorCode::Numerical, "rejection budget exceeded after " + std::to_string(budget) +
                                       " proposals (inclusion mass near zero?)");
      }
      const auto p = stream.next();
      if (!p) {
        stuck = true;
        break;
      }
      const std::size_t index = proposals++;
      if (inclusion != nullptr && !(uniform01(accept_rng) < (*inclusion)(*p))) continue;
      design.points.push_back(*p);
      design.provenance.accepted.push_back(index);
      stream.on_accept(*p);
    }
    design.provenance.proposals = proposals;
    if (!stuck) return design;
    if (!stream.restartable()) break;
  }
  fail(ErrorCode::Numerical, "design infeasible: could not place " + std::to_string(n) +
                                 " points within the restart limit");
}

namespace {

Design finish(Design d, std::string generator, std::map<std::string, std::string> params) {
  d.provenance.generator = std::move(generator);
  for (auto& [k, v] : params) d.provenance.params[k] = v;
  return d;
}

}  // namespace

Design random_design(std::size_t n, const Domain& domain, std::uint64_t seed) {
  auto s = random_stream(domain, seed);
  return finish(draw_design(*s, n, nullptr, seed), "random", {});
}

Design halton(std::size_t n, const Domain& domain, std::uint64_t offset) {
  auto s = halton_stream(domain, offset);
  return finish(draw_design(*s, n, nullptr, 0), "halton", {{"offset", std::to_string(offset)}});
}

Design sobol(std::size_t n, const Domain& domain, std::uint64_t offset) {
  auto s = sobol_stream(domain, offset);
  return finish(draw_design(*s, n, nullptr, 0), "sobol", {{"offset", std::to_string(offset)}});
}

Design fibonacci_lattice_3d(std::size_t n, const Domain& domain) {
  auto s = fibonacci_stream(domain, n);
  return finish(draw_design(*s, n, nullptr, 0), "fibo_lat", {});
}

Design simple_inhibitory(std::size_t n, double delta, const Domain& domain, std::uint64_t seed) {
  require(delta > 0.0, "inhibition distance must be positive");
  auto s = inhibitory_stream(domain, delta, seed);
  return finish(draw_design(*s, n, nullptr, seed), "min_dran", {{"delta", fmt_double(delta)}});
}

Design inhibitory_close_pairs(std::size_t n, std::size_t k, double delta, const Domain& domain,
                              std::uint64_t seed) {
  auto s = close_pairs_stream(domain, n, k, delta, seed);
  return finish(draw_design(*s, n, nullptr, seed), "close_pair",
                {{"delta", fmt_double(delta)}, {"k", std::to_string(k)},
                 {"delta_k", fmt_double(close_pair_delta(n, k, delta))}});
}

Design min_dist_discrete(std::size_t n, double delta, const Grid& grid, const Domain& domain,
                         std::uint64_t seed) {
  require(grid.size() >= n, "grid has fewer cells than the design size");
  auto s = min_dist_stream(domain, grid, delta, seed);
  return finish(draw_design(*s, n, nullptr, seed), "min_dist", {{"delta", fmt_double(delta)}});
}

double close_pair_delta(std::size_t n, std::size_t k, double delta) {
  require(k < n, "close pairs need k < n");
  return delta * std::sqrt(static_cast<double>(n) / static_cast<double>(n - k));
}

double default_delta(std::size_t n) {
  require(n >= 1, "design size must be >= 1");
  static constexpr std::array<std::pair<double, double>, 3> table{{{50, 0.21}, {100, 0.15}, {150, 0.1}}};
  const double x = 1.0 / std::sqrt(static_cast<double>(n));
  auto xs = [](double m) { return 1.0 / std::sqrt(m); };
  if (x >= xs(table[0].first)) return table[0].second * x / xs(table[0].first);
  if (x <= xs(table[2].first)) return table[2].second * x / xs(table[2].first);
  for (std::size_t i = 0; i + 1 < table.size(); ++i) {
    const double x0 = xs(table[i].first), x1 = xs(table[i + 1].first);
    if (x <= x0 && x >= x1) {
      const double w = (x - x1) / (x0 - x1);
      return table[i + 1].second + w * (table[i].second - table[i + 1].second);
    }
  }
  return table[1].second;
}

// ---------------------------------------------------------------------------
// Space filling

namespace {

std::size_t corner_candidate(const std::vector<SpaceTimePoint>& unit) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  const SpaceTimePoint origin{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < unit.size(); ++i) {
    const double d = distance(unit[i], origin);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

struct MaximinState {
  std::vector<SpaceTimePoint> unit;
  std::vector<double> min_dist;
  std::vector<bool> selected;

  MaximinState(const std::vector<SpaceTimePoint>& candidates, const Domain& domain)
      : min_dist(candidates.size(), std::numeric_limits<double>::infinity()),
        selected(candidates.size(), false) {
    unit.reserve(candidates.size());
    for (const auto& c : candidates) unit.push_back(domain.to_unit_cube(c));
  }

  void select(std::size_t i) {
    selected[i] = true;
    for (std::size_t j = 0; j < unit.size(); ++j) min_dist[j] = std::min(min_dist[j], distance(unit[i], unit[j]));
  }

  /// Unselected candidates by decreasing maximin distance, ties by index.
  std::vector<std::size_t> ranking() const {
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < unit.size(); ++j)
      if (!selected[j]) order.push_back(j);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return min_dist[a] > min_dist[b]; });
    return order;
  }
};

}  // namespace

Design coffee_house(std::size_t n, const std::vector<SpaceTimePoint>& candidates, const Domain& domain) {
  require(n >= 1, "design size must be >= 1");
  require(candidates.size() >= n, "coffee-house needs at least n candidates");
  MaximinState state(candidates, domain);
  Design design;
  std::size_t next = corner_candidate(state.unit);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      next = candidates.size();
      double best = -1.0;
      for (std::size_t j = 0; j < candidates.size(); ++j) {
        if (!state.selected[j] && state.min_dist[j] > best) {
          best = state.min_dist[j];
          next = j;
        }
      }
    }
    state.select(next);
    design.points.push_back(candidates[next]);
    design.provenance.accepted.push_back(next);
  }
  design.provenance.proposals = n;
  return finish(std::move(design), "space_fill", {{"candidates", std::to_string(candidates.size())}});
}

Design space_fill_rejection(std::size_t n, const std::vector<SpaceTimePoint>& candidates, const Domain& domain,
                            const InclusionFn& inclusion, std::uint64_t seed) {
  require(n >= 1, "design size must be >= 1");
  require(candidates.size() >= n, "space-filling rejection needs at least n candidates");
  MaximinState state(candidates, domain);
  Rng rng = make_rng(seed, {0, 0x41434350});
  Design design;
  design.provenance.seed = seed;

  const std::size_t first = corner_candidate(state.unit);
  state.select(first);
  design.points.push_back(candidates[first]);
  design.provenance.accepted.push_back(first);
  std::size_t tried = 1;
  while (design.points.size() < n) {
    const auto order = state.ranking();
    bool accepted = false;
    for (std::size_t k = 0; k < order.size() && !accepted; ++k) {
      ++tried;
      const auto j = order[k];
      if (uniform01(rng) < inclusion(candidates[j])) {
        state.select(j);
        design.points.push_back(candidates[j]);
        design.provenance.accepted.push_back(j);
        accepted = true;
      }
    }
    if (!accepted) {
      fail(ErrorCode::Numerical, "space-filling rejection exhausted all candidates at point " +
                                     std::to_string(design.points.size() + 1));
    }
  }
  design.provenance.proposals = tried;
  return finish(std::move(design), "space_fill_rej", {{"candidates", std::to_string(candidates.size())}});
}

// ---------------------------------------------------------------------------
// Named generators

const std::vector<std::string>& base_generator_names() {
  static const std::vector<std::string> names{"random",  "halton",     "sobol",    "fibo_lat",
                                              "min_dran", "close_pair", "min_dist", "space_fill"};
  return names;
}

std::pair<std::string, bool> parse_generator_name(const std::string& name) {
  std::string base = name;
  bool rejection = false;
  constexpr std::string_view suffix = "_rej";
  if (base.size() > suffix.size() && base.ends_with(suffix)) {
    base.resize(base.size() - suffix.size());
    rejection = true;
  }
  const auto& names = base_generator_names();
  if (std::find(names.begin(), names.end(), base) == names.end())
    fail(ErrorCode::Usage, "unknown design generator '" + name + "'");
  return {base, rejection};
}

Design generate_design(const DesignRequest& request, const Domain& domain, const InclusionFn* inclusion) {
  const auto [base, rejection] = parse_generator_name(request.generator);
  require(request.n >= 1, "design size must be >= 1");
  if (rejection && inclusion == nullptr)
    fail(ErrorCode::Usage, "generator '" + request.generator + "' needs an inclusion probability");
  const InclusionFn* thinning = rejection ? inclusion : nullptr;
  const double delta = request.delta.value_or(default_delta(request.n));
  std::map<std::string, std::string> params;

  if (base == "space_fill") {
    const auto grid = discretize(domain, request.candidate_resolution);
    params["candidate_resolution"] = std::to_string(request.candidate_resolution[0]) + "x" +
                                     std::to_string(request.candidate_resolution[1]) + "x" +
                                     std::to_string(request.candidate_resolution[2]);
    Design d = rejection ? space_fill_rejection(request.n, grid.cells, domain, *inclusion, request.seed)
                         : coffee_house(request.n, grid.cells, domain);
    d.provenance.seed = request.seed;
    return finish(std::move(d), request.generator, params);
  }

  std::unique_ptr<ProposalStream> stream;
  if (base == "random") {
    stream = random_stream(domain, request.seed);
  } else if (base == "halton") {
    stream = halton_stream(domain, request.offset);
    params["offset"] = std::to_string(request.offset);
  } else if (base == "sobol") {
    stream = sobol_stream(domain, request.offset);
    params["offset"] = std::to_string(request.offset);
  } else if (base == "fibo_lat") {
    stream = fibonacci_stream(domain, request.n);
  } else if (base == "min_dran") {
    require(delta > 0.0, "inhibition distance must be positive");
    stream = inhibitory_stream(domain, delta, request.seed);
    params["delta"] = fmt_double(delta);
  } else if (base == "close_pair") {
    const auto k = static_cast<std::size_t>(std::floor(request.close_pair_fraction * static_cast<double>(request.n)));
    stream = close_pairs_stream(domain, request.n, k, delta, request.seed);
    params["delta"] = fmt_double(delta);
    params["k"] = std::to_string(k);
    params["delta_k"] = fmt_double(close_pair_delta(request.n, k, delta));
  } else if (base == "min_dist") {
    const auto grid = discretize(domain, request.candidate_resolution);
    require(grid.size() >= request.n, "grid has fewer cells than the design size");
    stream = min_dist_stream(domain, grid, delta, request.seed);
    params["delta"] = fmt_double(delta);
  }
  DrawOptions options;
  options.max_attempts = request.max_attempts;
  Design d = draw_design(*stream, request.n, thinning, request.seed, options);
  return finish(std::move(d), request.generator, params);
}

}  // namespace lgcpd
