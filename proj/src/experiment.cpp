#include "lgcpd/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "lgcpd/error.hpp"
#include "lgcpd/io.hpp"
#include "lgcpd/parallel.hpp"
#include "lgcpd/rng.hpp"

namespace lgcpd {

std::string to_string(CovMode m) { return m == CovMode::Separable ? "separable" : "additive"; }

std::string to_string(KernelFamily f) { return f == KernelFamily::Matern32 ? "matern32" : "sqexp"; }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  fail(ErrorCode::Usage, "invalid value '" + value + "' for config key '" + key + "'");
}

double to_double(const std::string& key, const std::string& w) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(w, &pos);
  } catch (const std::exception&) {
    bad_value(key, w);
  }
  if (pos != w.size() || !std::isfinite(v)) bad_value(key, w);
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& w) {
  if (w.empty() || w.find_first_not_of("0123456789") != std::string::npos) bad_value(key, w);
  try {
    return std::stoull(w);
  } catch (const std::exception&) {
    bad_value(key, w);
  }
}

std::vector<double> doubles(const std::string& key, const std::string& value, std::size_t expected) {
  const auto ws = words(value);
  if (ws.size() != expected) bad_value(key, value);
  std::vector<double> out;
  for (const auto& w : ws) out.push_back(to_double(key, w));
  return out;
}

Resolution resolution(const std::string& key, const std::string& value) {
  const auto ws = words(value);
  if (ws.size() != 3) bad_value(key, value);
  Resolution r{};
  for (int a = 0; a < 3; ++a) {
    r[a] = static_cast<std::size_t>(to_uint(key, ws[a]));
    if (r[a] == 0) bad_value(key, value);
  }
  return r;
}

KernelFamily kernel_family(const std::string& key, const std::string& value) {
  if (value == "matern32") return KernelFamily::Matern32;
  if (value == "sqexp") return KernelFamily::SqExp;
  bad_value(key, value);
}

CovMode cov_mode(const std::string& key, const std::string& value) {
  if (value == "separable") return CovMode::Separable;
  if (value == "additive") return CovMode::Additive;
  bad_value(key, value);
}

std::string fmt(double x) { return format_double(x); }

std::string mean_text(const MeanFunction& m) {
  if (const auto* q = std::get_if<ConcaveQuadraticTime>(&m))
    return "quadratic " + fmt(q->a) + " " + fmt(q->b) + " " + fmt(q->c);
  if (const auto* c = std::get_if<ConstantMean>(&m)) return "constant " + fmt(c->value);
  return "tabulated";
}

std::string observation_text(const ObservationModel& o) {
  switch (o.kind) {
    case ObservationKind::Poisson: return "poisson";
    case ObservationKind::Gaussian: return "gaussian " + fmt(o.noise_variance);
    case ObservationKind::NegativeBinomial: {
      std::string s = "negbin " + fmt(o.dispersion);
      if (!o.volumes.empty()) s += " " + fmt(o.volumes.front());
      return s;
    }
  }
  return "";
}

std::string res_text(const Resolution& r) {
  return std::to_string(r[0]) + " " + std::to_string(r[1]) + " " + std::to_string(r[2]);
}

}  // namespace

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  os << "bounds=" << fmt(bounds.lo[0]) << ' ' << fmt(bounds.hi[0]) << ' ' << fmt(bounds.lo[1]) << ' '
     << fmt(bounds.hi[1]) << ' ' << fmt(bounds.lo[2]) << ' ' << fmt(bounds.hi[2]) << '\n';
  os << "mask_file=" << mask_file << '\n';
  os << "grid=" << res_text(grid) << '\n';
  os << "candidate_grid=" << res_text(candidate_grid) << '\n';
  for (auto m : cov_modes) os << "cov_mode=" << to_string(m) << '\n';
  os << "spatial_kernel=" << to_string(spatial_kernel) << '\n';
  os << "temporal_kernel=" << to_string(temporal_kernel) << '\n';
  os << "sigma2_s=" << fmt(sigma2_s) << '\n';
  for (double v : l_s) os << "l_s=" << fmt(v) << '\n';
  for (double v : l_t) os << "l_t=" << fmt(v) << '\n';
  for (double v : sigma2_t) os << "sigma2_t=" << fmt(v) << '\n';
  os << "mean=" << mean_text(mean) << '\n';
  os << "observation=" << observation_text(observation) << '\n';
  for (const auto& d : designs) os << "design=" << d << '\n';
  os << "inclusion=" << to_string(inclusion) << '\n';
  os << "p_max=" << fmt(p_max) << '\n';
  for (auto c : criteria) os << "criterion=" << to_string(c) << '\n';
  for (auto v : n) os << "n=" << v << '\n';
  os << "close_pair_fraction=" << fmt(close_pair_fraction) << '\n';
  os << "replicates=" << replicates << '\n';
  os << "seed=" << seed << '\n';
  os << "quadrature_nodes=" << quadrature_nodes << '\n';
  os << "max_failure_rate=" << fmt(max_failure_rate) << '\n';
  return os.str();
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig c;
  std::map<std::string, bool> list_seen;
  auto list_key = [&](const std::string& key, auto& vec) -> auto& {
    if (!list_seen[key]) {
      vec.clear();
      list_seen[key] = true;
    }
    return vec;
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::Usage, "config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "bounds") {
      const auto v = doubles(key, value, 6);
      for (int a = 0; a < 3; ++a) {
        c.bounds.lo[a] = v[2 * a];
        c.bounds.hi[a] = v[2 * a + 1];
        if (!(c.bounds.hi[a] > c.bounds.lo[a])) bad_value(key, value);
      }
    } else if (key == "mask_file") {
      c.mask_file = value;
    } else if (key == "grid") {
      c.grid = resolution(key, value);
    } else if (key == "candidate_grid") {
      c.candidate_grid = resolution(key, value);
    } else if (key == "cov_mode") {
      list_key(key, c.cov_modes).push_back(cov_mode(key, value));
    } else if (key == "spatial_kernel") {
      c.spatial_kernel = kernel_family(key, value);
    } else if (key == "temporal_kernel") {
      c.temporal_kernel = kernel_family(key, value);
    } else if (key == "sigma2_s") {
      c.sigma2_s = to_double(key, value);
      if (c.sigma2_s <= 0) bad_value(key, value);
    } else if (key == "l_s" || key == "l_t" || key == "sigma2_t") {
      auto& vec = key == "l_s" ? c.l_s : key == "l_t" ? c.l_t : c.sigma2_t;
      const double v = to_double(key, value);
      if (v <= 0) bad_value(key, value);
      list_key(key, vec).push_back(v);
    } else if (key == "mean") {
      const auto ws = words(value);
      if (ws.size() == 4 && ws[0] == "quadratic") {
        c.mean = ConcaveQuadraticTime{to_double(key, ws[1]), to_double(key, ws[2]), to_double(key, ws[3])};
      } else if (ws.size() == 2 && ws[0] == "constant") {
        c.mean = ConstantMean{to_double(key, ws[1])};
      } else {
        bad_value(key, value);
      }
    } else if (key == "observation") {
      const auto ws = words(value);
      try {
        if (ws.size() == 1 && ws[0] == "poisson") {
          c.observation = ObservationModel::poisson();
        } else if (ws.size() == 2 && ws[0] == "gaussian") {
          c.observation = ObservationModel::gaussian(to_double(key, ws[1]));
        } else if ((ws.size() == 2 || ws.size() == 3) && ws[0] == "negbin") {
          std::vector<double> vol;
          if (ws.size() == 3) vol.push_back(to_double(key, ws[2]));
          c.observation = ObservationModel::negative_binomial(to_double(key, ws[1]), vol);
        } else {
          bad_value(key, value);
        }
        c.observation.validate();
      } catch (const Error& e) {
        if (e.code() == ErrorCode::Usage) throw;
        bad_value(key, value);
      }
    } else if (key == "design") {
      parse_generator_name(value);
      list_key(key, c.designs).push_back(value);
    } else if (key == "inclusion") {
      c.inclusion = parse_inclusion_variant(value);
    } else if (key == "p_max") {
      c.p_max = to_double(key, value);
      if (c.p_max <= 0) bad_value(key, value);
    } else if (key == "criterion") {
      list_key(key, c.criteria).push_back(parse_criterion(value));
    } else if (key == "n") {
      const auto v = to_uint(key, value);
      if (v == 0) bad_value(key, value);
      list_key(key, c.n).push_back(static_cast<std::size_t>(v));
    } else if (key == "close_pair_fraction") {
      c.close_pair_fraction = to_double(key, value);
      if (c.close_pair_fraction < 0 || c.close_pair_fraction >= 1) bad_value(key, value);
    } else if (key == "replicates") {
      c.replicates = static_cast<std::size_t>(to_uint(key, value));
      if (c.replicates == 0) bad_value(key, value);
    } else if (key == "seed") {
      c.seed = to_uint(key, value);
    } else if (key == "quadrature_nodes") {
      const auto v = to_uint(key, value);
      if (v < 1 || v > 200) bad_value(key, value);
      c.quadrature_nodes = static_cast<int>(v);
    } else if (key == "max_failure_rate") {
      c.max_failure_rate = to_double(key, value);
      if (c.max_failure_rate < 0 || c.max_failure_rate > 1) bad_value(key, value);
    } else if (key == "output_dir") {
      c.output_dir = value;
    } else {
      fail(ErrorCode::Usage, "unknown config key '" + key + "'");
    }
  }
  if (c.cov_modes.empty() || c.l_s.empty() || c.l_t.empty() || c.sigma2_t.empty() || c.designs.empty() ||
      c.criteria.empty() || c.n.empty())
    fail(ErrorCode::Usage, "config parameter grids must be nonempty");
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config '" + path + "'");
  return parse_experiment_config(in);
}

std::vector<ExperimentCell> enumerate_cells(const ExperimentConfig& c) {
  std::vector<ExperimentCell> out;
  for (auto mode : c.cov_modes)
    for (double lt : c.l_t)
      for (double s2t : c.sigma2_t)
        for (double ls : c.l_s)
          for (auto n : c.n)
            for (const auto& d : c.designs)
              for (auto crit : c.criteria) out.push_back({mode, lt, s2t, ls, n, d, crit});
  return out;
}

namespace {

struct Group {
  CovMode mode;
  double l_t, sigma2_t, l_s;
  std::size_t n;
  std::size_t n_index;
};

LgcpModel group_model(const ExperimentConfig& c, const Group& g) {
  KernelSpec spatial{c.spatial_kernel, g.l_s, c.sigma2_s};
  KernelSpec temporal{c.temporal_kernel, g.l_t, g.sigma2_t};
  const auto cov = g.mode == CovMode::Separable ? CovStructure::separable(spatial, temporal)
                                                : CovStructure::additive(spatial, temporal);
  return {make_prior(c.mean, cov), c.observation};
}

std::uint64_t base_index(const std::string& name) {
  const auto base = parse_generator_name(name).first;
  const auto& names = base_generator_names();
  return static_cast<std::uint64_t>(std::find(names.begin(), names.end(), base) - names.begin());
}

std::vector<CellResult> run_group(const ExperimentConfig& c, const Domain& domain, const Grid& grid,
                                  const Group& g, std::size_t group_index, unsigned threads,
                                  std::string& log_text) {
  const std::size_t nc = c.criteria.size();
  std::vector<CellResult> rows;
  for (const auto& name : c.designs)
    for (auto crit : c.criteria) {
      CellResult r;
      r.cell = {g.mode, g.l_t, g.sigma2_t, g.l_s, g.n, name, crit};
      r.estimate = std::nan("");
      r.std_error = std::nan("");
      rows.push_back(r);
    }
  auto mark = [&](std::size_t design, const std::string& status) {
    for (std::size_t k = 0; k < nc; ++k) rows[design * nc + k].status = status;
    std::ostringstream os;
    os << "cell " << to_string(g.mode) << " l_t=" << fmt(g.l_t) << " sigma2_t=" << fmt(g.sigma2_t)
       << " l_s=" << fmt(g.l_s) << " n=" << g.n << " design=" << c.designs[design] << ": " << status << '\n';
    log_text += os.str();
  };

  try {
    const LgcpModel model = group_model(c, g);
    std::optional<InclusionProbability> inclusion;
    InclusionFn inclusion_fn;
    std::vector<NamedDesign> named;
    std::vector<std::size_t> named_index;
    for (std::size_t d = 0; d < c.designs.size(); ++d) {
      try {
        DesignRequest req;
        req.generator = c.designs[d];
        req.n = g.n;
        req.seed = derive_seed(c.seed, {0x44, g.n_index, base_index(c.designs[d])});
        req.close_pair_fraction = c.close_pair_fraction;
        req.candidate_resolution = c.candidate_grid;
        const InclusionFn* inc = nullptr;
        if (parse_generator_name(c.designs[d]).second) {
          if (!inclusion) {
            inclusion.emplace(c.inclusion, model.prior, grid, c.p_max);
            inclusion_fn = [&inclusion](const SpaceTimePoint& p) { return (*inclusion)(p); };
          }
          inc = &inclusion_fn;
        }
        named.push_back({c.designs[d], generate_design(req, domain, inc)});
        named_index.push_back(d);
      } catch (const Error& e) {
        mark(d, std::string("design failed: ") + e.what());
      }
    }
    if (named.empty()) return rows;

    EvalOptions opt;
    opt.replicates = c.replicates;
    opt.seed = derive_seed(c.seed, {0x45, group_index});
    opt.quadrature_nodes = c.quadrature_nodes;
    opt.max_failure_rate = c.max_failure_rate;
    opt.threads = threads;
    opt.throw_on_failure = false;
    const auto cmp = compare_designs(model, named, c.criteria, grid, opt);
    for (std::size_t i = 0; i < named.size(); ++i) {
      const std::size_t d = named_index[i];
      for (std::size_t k = 0; k < nc; ++k) {
        const auto& src = cmp.rows[i * nc + k];
        auto& dst = rows[d * nc + k];
        dst.status = src.status;
        if (src.status != "ok") continue;
        dst.estimate = src.estimate.value;
        dst.std_error = src.estimate.std_error;
        dst.replicates = src.estimate.replicate_count;
        dst.reduction_vs_base_pct = src.reduction_vs_base_pct;
      }
      if (cmp.rows[i * nc].status != "ok") mark(d, cmp.rows[i * nc].status);
    }
  } catch (const Error& e) {
    for (std::size_t d = 0; d < c.designs.size(); ++d) mark(d, e.what());
  }
  return rows;
}

void write_header(std::ostream& os, const ExperimentResult& r) { os << "# config_hash=" << r.config_hash << '\n'; }

std::string opt_text(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

}  // namespace

ExperimentResult run_simulation_study(const ExperimentConfig& c, unsigned threads, std::ostream* log) {
  const Domain domain = c.mask_file.empty() ? Domain(c.bounds) : load_mask_file(c.mask_file);
  const Grid grid = discretize(domain, c.grid);

  std::vector<Group> groups;
  for (auto mode : c.cov_modes)
    for (double lt : c.l_t)
      for (double s2t : c.sigma2_t)
        for (double ls : c.l_s)
          for (std::size_t ni = 0; ni < c.n.size(); ++ni) groups.push_back({mode, lt, s2t, ls, c.n[ni], ni});

  threads = std::max(1u, threads);
  const unsigned outer = static_cast<unsigned>(std::min<std::size_t>(threads, groups.size()));
  const unsigned inner = std::max(1u, threads / outer);
  std::vector<std::vector<CellResult>> per_group(groups.size());
  std::vector<std::string> logs(groups.size());
  parallel_for(groups.size(), outer, [&](std::size_t i) {
    per_group[i] = run_group(c, domain, grid, groups[i], i, inner, logs[i]);
  });

  ExperimentResult result;
  result.config_hash = c.hash();
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (log) *log << logs[i];
    for (auto& r : per_group[i]) {
      if (r.status != "ok") ++result.failed_cells;
      result.cells.push_back(std::move(r));
    }
  }
  result.aggregated = aggregate_over_ls(result.cells);
  return result;
}

std::vector<AggregatedResult> aggregate_over_ls(const std::vector<CellResult>& cells) {
  using Key = std::tuple<int, double, double, std::size_t, std::string, int>;
  std::map<Key, std::size_t> index;
  std::vector<AggregatedResult> out;
  std::vector<double> se2, reduction_sum;
  std::vector<std::size_t> reduction_count;
  for (const auto& r : cells) {
    const auto& cell = r.cell;
    const Key key{static_cast<int>(cell.cov_mode), cell.l_t, cell.sigma2_t, cell.n, cell.design,
                  static_cast<int>(cell.criterion)};
    auto [it, inserted] = index.try_emplace(key, out.size());
    if (inserted) {
      AggregatedResult a;
      a.cov_mode = cell.cov_mode;
      a.l_t = cell.l_t;
      a.sigma2_t = cell.sigma2_t;
      a.n = cell.n;
      a.design = cell.design;
      a.criterion = cell.criterion;
      a.replicates = std::numeric_limits<std::size_t>::max();
      out.push_back(a);
      se2.push_back(0.0);
      reduction_sum.push_back(0.0);
      reduction_count.push_back(0);
    }
    const std::size_t i = it->second;
    if (r.status != "ok") continue;
    auto& a = out[i];
    a.estimate += r.estimate;
    se2[i] += r.std_error * r.std_error;
    a.replicates = std::min(a.replicates, r.replicates);
    ++a.cells;
    if (r.reduction_vs_base_pct) {
      reduction_sum[i] += *r.reduction_vs_base_pct;
      ++reduction_count[i];
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& a = out[i];
    if (a.cells == 0) {
      a.estimate = a.std_error = std::nan("");
      a.replicates = 0;
      continue;
    }
    const double k = static_cast<double>(a.cells);
    a.estimate /= k;
    a.std_error = std::sqrt(se2[i]) / k;
    if (reduction_count[i] > 0) a.reduction_vs_base_pct = reduction_sum[i] / static_cast<double>(reduction_count[i]);
  }
  return out;
}

void write_cells_csv(std::ostream& os, const ExperimentResult& result) {
  write_header(os, result);
  os << "cov_mode,l_t,sigma2_t,l_s,n,design,criterion,estimate,std_error,M,reduction_vs_base_pct,status\n";
  for (const auto& r : result.cells) {
    const auto& c = r.cell;
    os << to_string(c.cov_mode) << ',' << fmt(c.l_t) << ',' << fmt(c.sigma2_t) << ',' << fmt(c.l_s) << ',' << c.n
       << ',' << c.design << ',' << to_string(c.criterion) << ',' << fmt(r.estimate) << ',' << fmt(r.std_error)
       << ',' << r.replicates << ',' << opt_text(r.reduction_vs_base_pct) << ',' << (r.status == "ok" ? "ok" : "failed")
       << '\n';
  }
}

void write_aggregated_csv(std::ostream& os, const ExperimentResult& result) {
  write_header(os, result);
  os << "cov_mode,l_t,sigma2_t,n,design,criterion,estimate,std_error,M,reduction_vs_base_pct,cells\n";
  for (const auto& a : result.aggregated) {
    os << to_string(a.cov_mode) << ',' << fmt(a.l_t) << ',' << fmt(a.sigma2_t) << ',' << a.n << ',' << a.design << ','
       << to_string(a.criterion) << ',' << fmt(a.estimate) << ',' << fmt(a.std_error) << ',' << a.replicates << ','
       << opt_text(a.reduction_vs_base_pct) << ',' << a.cells << '\n';
  }
}

void write_experiment_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory '" + config.output_dir + "': " + ec.message());
  auto write = [&](const std::string& file, auto&& writer) {
    const auto path = (std::filesystem::path(config.output_dir) / file).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
    writer(out, result);
    if (!out) fail(ErrorCode::Io, "failed writing '" + path + "'");
  };
  write("cells.csv", write_cells_csv);
  write("aggregated.csv", write_aggregated_csv);
}

}  // namespace lgcpd
