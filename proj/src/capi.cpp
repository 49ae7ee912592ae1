#include "lgcpd/lgcpd.h"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <new>
#include <string>

#include "lgcpd/designs.hpp"
#include "lgcpd/error.hpp"
#include "lgcpd/evaluation.hpp"
#include "lgcpd/experiment.hpp"
#include "lgcpd/io.hpp"

struct lgcpd_domain {
  lgcpd::Domain domain;
};

struct lgcpd_model {
  lgcpd::LgcpModel model;
};

struct lgcpd_design {
  lgcpd::Design design;
};

struct lgcpd_comparison {
  lgcpd::Comparison comparison;
  std::vector<std::string> criterion_names;
};

namespace {

thread_local std::string last_error;

lgcpd_status status_of(lgcpd::ErrorCode code) {
  switch (code) {
    case lgcpd::ErrorCode::InvalidArgument: return LGCPD_ERR_INVALID_ARGUMENT;
    case lgcpd::ErrorCode::Usage: return LGCPD_ERR_USAGE;
    case lgcpd::ErrorCode::Io: return LGCPD_ERR_IO;
    case lgcpd::ErrorCode::Numerical: return LGCPD_ERR_NUMERICAL;
  }
  return LGCPD_ERR_INTERNAL;
}

template <class Fn>
lgcpd_status guarded(Fn&& fn) {
  last_error.clear();
  try {
    fn();
    return LGCPD_OK;
  } catch (const lgcpd::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return LGCPD_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  if (p == nullptr) lgcpd::fail(lgcpd::ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

lgcpd::KernelFamily family(lgcpd_kernel k) {
  switch (k) {
    case LGCPD_MATERN32: return lgcpd::KernelFamily::Matern32;
    case LGCPD_SQEXP: return lgcpd::KernelFamily::SqExp;
  }
  lgcpd::fail(lgcpd::ErrorCode::InvalidArgument, "unknown kernel family");
}

lgcpd::Resolution res(const size_t r[3]) { return {r[0], r[1], r[2]}; }

}  // namespace

extern "C" {

const char* lgcpd_version(void) { return "0.1.0"; }

const char* lgcpd_last_error(void) { return last_error.c_str(); }

void lgcpd_model_params_default(lgcpd_model_params* p) {
  if (p == nullptr) return;
  p->cov_mode = LGCPD_ADDITIVE;
  p->spatial_kernel = LGCPD_MATERN32;
  p->l_s = 0.8;
  p->sigma2_s = 2.0;
  p->temporal_kernel = LGCPD_SQEXP;
  p->l_t = 1.5;
  p->sigma2_t = 2.0;
  p->mean_a = 2.0;
  p->mean_b = 0.5;
  p->mean_c = 30.0;
  p->observation = LGCPD_POISSON;
  p->noise_variance = 0.5;
  p->nb_dispersion = 10.0;
  p->nb_volume = 1.0;
}

void lgcpd_design_request_default(lgcpd_design_request* r) {
  if (r == nullptr) return;
  r->generator = "random";
  r->n = 50;
  r->seed = 1;
  r->delta = 0.0;
  r->close_pair_fraction = 0.5;
  r->offset = 0;
  r->candidate_resolution[0] = r->candidate_resolution[1] = r->candidate_resolution[2] = 10;
  r->inclusion = "scaled_latent_mean";
  r->p_max = 1.0;
  r->inclusion_resolution[0] = r->inclusion_resolution[1] = 10;
  r->inclusion_resolution[2] = 8;
}

void lgcpd_eval_options_default(lgcpd_eval_options* o) {
  if (o == nullptr) return;
  o->replicates = 50;
  o->seed = 1;
  o->quadrature_nodes = 31;
  o->max_failure_rate = 0.05;
  o->threads = 1;
  o->grid_resolution[0] = o->grid_resolution[1] = 10;
  o->grid_resolution[2] = 8;
}

lgcpd_status lgcpd_domain_create(const double lo[3], const double hi[3], lgcpd_domain** out) {
  return guarded([&] {
    need(lo, "lo");
    need(hi, "hi");
    need(out, "out");
    lgcpd::Bounds b;
    for (int a = 0; a < 3; ++a) {
      b.lo[a] = lo[a];
      b.hi[a] = hi[a];
    }
    *out = new lgcpd_domain{lgcpd::Domain(b)};
  });
}

lgcpd_status lgcpd_domain_load_mask(const char* path, lgcpd_domain** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new lgcpd_domain{lgcpd::load_mask_file(path)};
  });
}

void lgcpd_domain_free(lgcpd_domain* domain) { delete domain; }

lgcpd_status lgcpd_model_create(const lgcpd_model_params* p, lgcpd_model** out) {
  return guarded([&] {
    need(p, "params");
    need(out, "out");
    const lgcpd::KernelSpec spatial{family(p->spatial_kernel), p->l_s, p->sigma2_s};
    const lgcpd::KernelSpec temporal{family(p->temporal_kernel), p->l_t, p->sigma2_t};
    lgcpd::require(p->cov_mode == LGCPD_SEPARABLE || p->cov_mode == LGCPD_ADDITIVE, "unknown covariance mode");
    const auto cov = p->cov_mode == LGCPD_SEPARABLE ? lgcpd::CovStructure::separable(spatial, temporal)
                                                    : lgcpd::CovStructure::additive(spatial, temporal);
    lgcpd::MeanFunction mean = lgcpd::ConstantMean{p->mean_a};
    if (p->mean_c != 0.0) mean = lgcpd::ConcaveQuadraticTime{p->mean_a, p->mean_b, p->mean_c};
    lgcpd::ObservationModel obs;
    switch (p->observation) {
      case LGCPD_POISSON: obs = lgcpd::ObservationModel::poisson(); break;
      case LGCPD_NEGATIVE_BINOMIAL:
        obs = lgcpd::ObservationModel::negative_binomial(p->nb_dispersion, {p->nb_volume});
        break;
      case LGCPD_GAUSSIAN: obs = lgcpd::ObservationModel::gaussian(p->noise_variance); break;
      default: lgcpd::fail(lgcpd::ErrorCode::InvalidArgument, "unknown observation model");
    }
    obs.validate();
    *out = new lgcpd_model{{lgcpd::make_prior(mean, cov), obs}};
  });
}

lgcpd_status lgcpd_model_condition(const lgcpd_model* model, const lgcpd_design* design, const double* y,
                                   size_t count, lgcpd_model** out) {
  return guarded([&] {
    need(model, "model");
    need(design, "design");
    need(out, "out");
    lgcpd::require(count == design->design.size(), "observation count must match the design size");
    if (count > 0) need(y, "y");
    Eigen::VectorXd obs(static_cast<Eigen::Index>(count));
    for (size_t i = 0; i < count; ++i) obs[static_cast<Eigen::Index>(i)] = y[i];
    *out = new lgcpd_model{lgcpd::condition_on_data(model->model, design->design.points, obs)};
  });
}

void lgcpd_model_free(lgcpd_model* model) { delete model; }

lgcpd_status lgcpd_design_generate(const lgcpd_design_request* r, const lgcpd_domain* domain,
                                   const lgcpd_model* model, lgcpd_design** out) {
  return guarded([&] {
    need(r, "request");
    need(r->generator, "generator");
    need(domain, "domain");
    need(out, "out");
    lgcpd::DesignRequest req;
    req.generator = r->generator;
    req.n = r->n;
    req.seed = r->seed;
    if (r->delta > 0.0) req.delta = r->delta;
    req.close_pair_fraction = r->close_pair_fraction;
    req.offset = r->offset;
    req.candidate_resolution = res(r->candidate_resolution);
    const bool rejection = lgcpd::parse_generator_name(req.generator).second;
    if (!rejection) {
      *out = new lgcpd_design{lgcpd::generate_design(req, domain->domain)};
      return;
    }
    need(model, "model");
    need(r->inclusion, "inclusion");
    const auto grid = lgcpd::discretize(domain->domain, res(r->inclusion_resolution));
    const lgcpd::InclusionProbability p(lgcpd::parse_inclusion_variant(r->inclusion), model->model.prior, grid,
                                        r->p_max);
    const lgcpd::InclusionFn fn = [&p](const lgcpd::SpaceTimePoint& x) { return p(x); };
    auto design = lgcpd::generate_design(req, domain->domain, &fn);
    design.provenance.params["inclusion"] = r->inclusion;
    design.provenance.params["p_max"] = lgcpd::format_double(r->p_max);
    *out = new lgcpd_design{std::move(design)};
  });
}

lgcpd_status lgcpd_design_from_points(const double* points, size_t count, lgcpd_design** out) {
  return guarded([&] {
    need(out, "out");
    if (count > 0) need(points, "points");
    lgcpd::Design d;
    d.provenance.generator = "external";
    for (size_t i = 0; i < count; ++i) {
      const lgcpd::SpaceTimePoint p{points[3 * i], points[3 * i + 1], points[3 * i + 2]};
      lgcpd::require(std::isfinite(p.s1) && std::isfinite(p.s2) && std::isfinite(p.t), "coordinates must be finite");
      d.points.push_back(p);
    }
    *out = new lgcpd_design{std::move(d)};
  });
}

lgcpd_status lgcpd_design_load(const char* path, lgcpd_design** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new lgcpd_design{lgcpd::load_design(path)};
  });
}

lgcpd_status lgcpd_design_save(const lgcpd_design* design, const char* path) {
  return guarded([&] {
    need(design, "design");
    need(path, "path");
    lgcpd::save_design(path, design->design);
  });
}

size_t lgcpd_design_size(const lgcpd_design* design) { return design == nullptr ? 0 : design->design.size(); }

lgcpd_status lgcpd_design_point(const lgcpd_design* design, size_t index, double out[3]) {
  return guarded([&] {
    need(design, "design");
    need(out, "out");
    lgcpd::require(index < design->design.size(), "point index out of range");
    const auto& p = design->design.points[index];
    out[0] = p.s1;
    out[1] = p.s2;
    out[2] = p.t;
  });
}

void lgcpd_design_free(lgcpd_design* design) { delete design; }

lgcpd_status lgcpd_compare(const lgcpd_model* model, const lgcpd_domain* domain, const lgcpd_design* const* designs,
                           const char* const* names, size_t design_count, const char* const* criteria,
                           size_t criterion_count, const lgcpd_eval_options* options, lgcpd_comparison** out) {
  return guarded([&] {
    need(model, "model");
    need(domain, "domain");
    need(out, "out");
    need(options, "options");
    lgcpd::require(design_count > 0 && criterion_count > 0, "need at least one design and one criterion");
    need(designs, "designs");
    need(names, "names");
    need(criteria, "criteria");
    std::vector<lgcpd::NamedDesign> named;
    for (size_t i = 0; i < design_count; ++i) {
      need(designs[i], "design");
      need(names[i], "design name");
      named.push_back({names[i], designs[i]->design});
    }
    std::vector<lgcpd::Criterion> crit;
    for (size_t i = 0; i < criterion_count; ++i) {
      need(criteria[i], "criterion");
      crit.push_back(lgcpd::parse_criterion(criteria[i]));
    }
    lgcpd::EvalOptions opt;
    opt.replicates = options->replicates;
    opt.seed = options->seed;
    opt.quadrature_nodes = options->quadrature_nodes;
    opt.max_failure_rate = options->max_failure_rate;
    opt.threads = options->threads;
    const auto grid = lgcpd::discretize(domain->domain, res(options->grid_resolution));
    auto result = std::make_unique<lgcpd_comparison>();
    result->comparison = lgcpd::compare_designs(model->model, named, crit, grid, opt);
    for (const auto& row : result->comparison.rows) result->criterion_names.push_back(lgcpd::to_string(row.estimate.criterion));
    *out = result.release();
  });
}

size_t lgcpd_comparison_rows(const lgcpd_comparison* c) { return c == nullptr ? 0 : c->comparison.rows.size(); }

lgcpd_status lgcpd_comparison_row(const lgcpd_comparison* c, size_t row, const char** design_name,
                                  const char** criterion, double* estimate, double* std_error, size_t* replicates,
                                  double* reduction_pct) {
  return guarded([&] {
    need(c, "comparison");
    lgcpd::require(row < c->comparison.rows.size(), "row index out of range");
    const auto& r = c->comparison.rows[row];
    if (design_name) *design_name = r.design_name.c_str();
    if (criterion) *criterion = c->criterion_names[row].c_str();
    if (estimate) *estimate = r.estimate.value;
    if (std_error) *std_error = r.estimate.std_error;
    if (replicates) *replicates = r.estimate.replicate_count;
    if (reduction_pct)
      *reduction_pct = r.reduction_vs_base_pct.value_or(std::numeric_limits<double>::quiet_NaN());
  });
}

lgcpd_status lgcpd_comparison_save_csv(const lgcpd_comparison* c, const char* path) {
  return guarded([&] {
    need(c, "comparison");
    need(path, "path");
    std::ofstream out(path, std::ios::binary);
    if (!out) lgcpd::fail(lgcpd::ErrorCode::Io, std::string("cannot open '") + path + "' for writing");
    lgcpd::write_comparison_csv(out, c->comparison);
    if (!out) lgcpd::fail(lgcpd::ErrorCode::Io, std::string("failed writing '") + path + "'");
  });
}

void lgcpd_comparison_free(lgcpd_comparison* c) { delete c; }

lgcpd_status lgcpd_simstudy(const char* config_path, const char* output_dir, unsigned threads, size_t* failed_cells) {
  return guarded([&] {
    need(config_path, "config path");
    auto config = lgcpd::load_experiment_config(config_path);
    if (output_dir != nullptr) config.output_dir = output_dir;
    const auto result = lgcpd::run_simulation_study(config, threads, &std::cerr);
    lgcpd::write_experiment_outputs(config, result);
    if (failed_cells) *failed_cells = result.failed_cells;
  });
}

}  // extern "C"
