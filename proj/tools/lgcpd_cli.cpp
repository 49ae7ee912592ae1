// Batch command-line front end: design, evaluate, simstudy.
#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "lgcpd/lgcpd.h"

namespace {

constexpr int kUsage = 2;

struct Failure {
  int code;
};

int exit_code(lgcpd_status s) {
  switch (s) {
    case LGCPD_OK: return 0;
    case LGCPD_ERR_INVALID_ARGUMENT:
    case LGCPD_ERR_USAGE: return 2;
    case LGCPD_ERR_IO: return 3;
    case LGCPD_ERR_NUMERICAL: return 4;
    default: return 1;
  }
}

void check(lgcpd_status s) {
  if (s == LGCPD_OK) return;
  std::cerr << "error: " << lgcpd_last_error() << '\n';
  throw Failure{exit_code(s)};
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
  Handle& operator=(Handle&& o) noexcept {
    std::swap(p, o.p);
    return *this;
  }
  ~Handle() { Free(p); }
};
using DomainHandle = Handle<lgcpd_domain, lgcpd_domain_free>;
using ModelHandle = Handle<lgcpd_model, lgcpd_model_free>;
using DesignHandle = Handle<lgcpd_design, lgcpd_design_free>;
using ComparisonHandle = Handle<lgcpd_comparison, lgcpd_comparison_free>;

unsigned env_threads() {
  const char* v = std::getenv("LGCPD_THREADS");
  if (v == nullptr || *v == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) {
    std::cerr << "error: LGCPD_THREADS must be a positive integer\n";
    throw Failure{kUsage};
  }
  return static_cast<unsigned>(n);
}

struct DomainArgs {
  std::string mask;
  std::vector<double> lo{0, 0, 0};
  std::vector<double> hi{1, 1, 1};

  void add(CLI::App* app) {
    app->add_option("--mask", mask, "Raster mask file (overrides --lo/--hi)");
    app->add_option("--lo", lo, "Domain lower corner s1 s2 t")->expected(3);
    app->add_option("--hi", hi, "Domain upper corner s1 s2 t")->expected(3);
  }

  DomainHandle build() const {
    DomainHandle d;
    if (!mask.empty()) check(lgcpd_domain_load_mask(mask.c_str(), &d.p));
    else check(lgcpd_domain_create(lo.data(), hi.data(), &d.p));
    return d;
  }
};

struct ModelArgs {
  lgcpd_model_params p{};
  std::string cov_mode = "additive";
  std::string spatial_kernel = "matern32";
  std::string temporal_kernel = "sqexp";
  std::string observation = "poisson";
  std::string existing;

  ModelArgs() { lgcpd_model_params_default(&p); }

  void add(CLI::App* app) {
    app->add_option("--cov-mode", cov_mode, "separable or additive")->capture_default_str();
    app->add_option("--spatial-kernel", spatial_kernel, "matern32 or sqexp")->capture_default_str();
    app->add_option("--temporal-kernel", temporal_kernel, "matern32 or sqexp")->capture_default_str();
    app->add_option("--l-s", p.l_s, "Spatial length-scale")->capture_default_str();
    app->add_option("--sigma2-s", p.sigma2_s, "Spatial variance (additive mode)")->capture_default_str();
    app->add_option("--l-t", p.l_t, "Temporal length-scale")->capture_default_str();
    app->add_option("--sigma2-t", p.sigma2_t, "Temporal variance")->capture_default_str();
    app->add_option("--mean-a", p.mean_a, "Mean a - c (t - b)^2: a")->capture_default_str();
    app->add_option("--mean-b", p.mean_b, "Mean parameter b")->capture_default_str();
    app->add_option("--mean-c", p.mean_c, "Mean parameter c (0 gives the constant a)")->capture_default_str();
    app->add_option("--observation", observation, "poisson, negbin or gaussian")->capture_default_str();
    app->add_option("--noise", p.noise_variance, "Gaussian noise variance")->capture_default_str();
    app->add_option("--nb-r", p.nb_dispersion, "Negative-Binomial dispersion r")->capture_default_str();
    app->add_option("--nb-volume", p.nb_volume, "Negative-Binomial sampling volume")->capture_default_str();
    app->add_option("--existing", existing,
                    "CSV with header s1,s2,t,y of earlier observations; the prior is conditioned on them");
  }

  static lgcpd_kernel kernel(const std::string& s) {
    if (s == "matern32") return LGCPD_MATERN32;
    if (s == "sqexp") return LGCPD_SQEXP;
    std::cerr << "error: unknown kernel '" << s << "'\n";
    throw Failure{kUsage};
  }

  ModelHandle build() {
    if (cov_mode == "separable") p.cov_mode = LGCPD_SEPARABLE;
    else if (cov_mode == "additive") p.cov_mode = LGCPD_ADDITIVE;
    else {
      std::cerr << "error: unknown covariance mode '" << cov_mode << "'\n";
      throw Failure{kUsage};
    }
    p.spatial_kernel = kernel(spatial_kernel);
    p.temporal_kernel = kernel(temporal_kernel);
    if (observation == "poisson") p.observation = LGCPD_POISSON;
    else if (observation == "negbin") p.observation = LGCPD_NEGATIVE_BINOMIAL;
    else if (observation == "gaussian") p.observation = LGCPD_GAUSSIAN;
    else {
      std::cerr << "error: unknown observation model '" << observation << "'\n";
      throw Failure{kUsage};
    }
    ModelHandle m;
    check(lgcpd_model_create(&p, &m.p));
    if (existing.empty()) return m;

    std::ifstream in(existing);
    if (!in) {
      std::cerr << "error: cannot open '" << existing << "'\n";
      throw Failure{3};
    }
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "s1,s2,t,y") {
      std::cerr << "error: '" << existing << "' must start with header s1,s2,t,y\n";
      throw Failure{3};
    }
    std::vector<double> pts, y;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream row(line);
      double v[4];
      std::string extra;
      if (!(row >> v[0] >> v[1] >> v[2] >> v[3]) || (row >> extra)) {
        std::cerr << "error: malformed row in '" << existing << "'\n";
        throw Failure{3};
      }
      pts.insert(pts.end(), v, v + 3);
      y.push_back(v[3]);
    }
    DesignHandle d;
    check(lgcpd_design_from_points(pts.data(), y.size(), &d.p));
    ModelHandle conditioned;
    check(lgcpd_model_condition(m.p, d.p, y.data(), y.size(), &conditioned.p));
    return conditioned;
  }
};


}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian spatiotemporal survey design under log-Gaussian Cox process models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lgcpd_version()));

  // design
  auto* design = app.add_subcommand("design", "Generate a sampling design and write it as CSV");
  DomainArgs design_domain;
  ModelArgs design_model;
  lgcpd_design_request req{};
  lgcpd_design_request_default(&req);
  std::string generator = "random", inclusion = "scaled_latent_mean", design_out;
  std::vector<size_t> candidate_grid{10, 10, 10}, inclusion_grid{10, 10, 8};
  design->add_option("--generator", generator,
                     "random, halton, sobol, fibo_lat, min_dran, close_pair, min_dist, space_fill; "
                     "append _rej for the rejection-thinned variant")
      ->capture_default_str();
  design->add_option("--n", req.n, "Number of design points")->capture_default_str();
  design->add_option("--seed", req.seed, "Random seed")->capture_default_str();
  design->add_option("--delta", req.delta, "Inhibition distance in the unit cube (default depends on n)");
  design->add_option("--close-pair-fraction", req.close_pair_fraction, "Share k/n of close-pair points")
      ->capture_default_str();
  design->add_option("--offset", req.offset, "Index offset for Halton and Sobol")->capture_default_str();
  design->add_option("--candidate-grid", candidate_grid, "Candidate grid for min_dist and space_fill")->expected(3);
  design->add_option("--inclusion", inclusion,
                     "scaled_latent_mean, expected_intensity or truncated_expected_intensity")
      ->capture_default_str();
  design->add_option("--p-max", req.p_max, "Truncation level for truncated_expected_intensity")->capture_default_str();
  design->add_option("--inclusion-grid", inclusion_grid, "Grid over which inclusion is normalized")->expected(3);
  design->add_option("--out", design_out, "Output CSV; provenance goes to <out>.prov.json")->required();
  design_domain.add(design);
  design_model.add(design);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Estimate expected utilities of designs and write a comparison table");
  DomainArgs eval_domain;
  ModelArgs eval_model;
  lgcpd_eval_options opts{};
  lgcpd_eval_options_default(&opts);
  std::vector<std::string> design_files, design_names, criteria{"apv_latent", "apv_intensity", "kl"};
  std::vector<size_t> grid{10, 10, 8};
  std::string eval_out;
  evaluate->add_option("--design", design_files, "Design CSV (repeatable)")->required();
  evaluate->add_option("--name", design_names,
                       "Design names in --design order (default: file stem); a name ending in _rej is "
                       "compared with the design of the same name without it");
  evaluate->add_option("--criterion", criteria, "apv_latent, apv_intensity, kl (repeatable)")->capture_default_str();
  evaluate->add_option("--replicates,-M", opts.replicates, "Monte Carlo replicates")->capture_default_str();
  evaluate->add_option("--seed", opts.seed, "Root seed")->capture_default_str();
  evaluate->add_option("--quadrature-nodes", opts.quadrature_nodes, "Gauss-Hermite nodes")->capture_default_str();
  evaluate->add_option("--max-failure-rate", opts.max_failure_rate, "Tolerated share of failed replicates")
      ->capture_default_str();
  evaluate->add_option("--grid", grid, "Evaluation grid resolution")->expected(3);
  evaluate->add_option("--out", eval_out, "Output CSV (default: stdout)");
  eval_domain.add(evaluate);
  eval_model.add(evaluate);

  // simstudy
  auto* simstudy = app.add_subcommand("simstudy", "Run a simulation-study config; writes cells.csv and aggregated.csv");
  std::string config_path, sim_out;
  simstudy->add_option("--config", config_path, "Config file of key = value lines")->required();
  simstudy->add_option("--out", sim_out, "Output directory (overrides the config's output_dir)");
  app.footer("Thread count for evaluate and simstudy is read from LGCPD_THREADS (default 1).");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*design) {
      const auto domain = design_domain.build();
      req.generator = generator.c_str();
      req.inclusion = inclusion.c_str();
      for (int a = 0; a < 3; ++a) {
        req.candidate_resolution[a] = candidate_grid[a];
        req.inclusion_resolution[a] = inclusion_grid[a];
      }
      const bool rejection = generator.size() > 4 && generator.compare(generator.size() - 4, 4, "_rej") == 0;
      ModelHandle model;
      if (rejection) model = design_model.build();
      DesignHandle d;
      check(lgcpd_design_generate(&req, domain.p, model.p, &d.p));
      check(lgcpd_design_save(d.p, design_out.c_str()));
      std::cerr << "wrote " << lgcpd_design_size(d.p) << " points to " << design_out << '\n';
    } else if (*evaluate) {
      if (!design_names.empty() && design_names.size() != design_files.size()) {
        std::cerr << "error: --name must be given once per --design\n";
        return kUsage;
      }
      const auto domain = eval_domain.build();
      auto model = eval_model.build();
      std::vector<DesignHandle> designs;
      std::vector<const lgcpd_design*> raw;
      std::vector<std::string> names;
      for (size_t i = 0; i < design_files.size(); ++i) {
        DesignHandle d;
        check(lgcpd_design_load(design_files[i].c_str(), &d.p));
        raw.push_back(d.p);
        designs.push_back(std::move(d));
        names.push_back(design_names.empty() ? std::filesystem::path(design_files[i]).stem().string()
                                             : design_names[i]);
      }
      std::vector<const char*> cname, ccrit;
      for (const auto& n : names) cname.push_back(n.c_str());
      for (const auto& c : criteria) ccrit.push_back(c.c_str());
      for (int a = 0; a < 3; ++a) opts.grid_resolution[a] = grid[a];
      opts.threads = env_threads();
      ComparisonHandle cmp;
      check(lgcpd_compare(model.p, domain.p, raw.data(), cname.data(), raw.size(), ccrit.data(), ccrit.size(), &opts,
                          &cmp.p));
      check(lgcpd_comparison_save_csv(cmp.p, eval_out.empty() ? "/dev/stdout" : eval_out.c_str()));
    } else if (*simstudy) {
      size_t failed = 0;
      check(lgcpd_simstudy(config_path.c_str(), sim_out.empty() ? nullptr : sim_out.c_str(), env_threads(), &failed));
      if (failed > 0) std::cerr << failed << " cells failed; see the status column\n";
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
