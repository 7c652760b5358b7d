/* Copyright 2026 The Mechagency Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#define MECHAGENCY_BUILDING_LIBRARY
#include "mechagency/mechagency.h"

#include <algorithm>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <thread>
#include <utility>

#include <nlohmann/json.hpp>

#include "mechagency/abstraction.hpp"
#include "mechagency/errors.hpp"
#include "mechagency/examples.hpp"
#include "mechagency/experiment.hpp"
#include "mechagency/model_json.hpp"
#include "mechagency/voting.hpp"

using nlohmann::json;
namespace mca = mechagency;

struct mca_context {
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned threads = 1;
  std::string last_error;
};

struct mca_result {
  std::string text;
  bool verdict = false;
};

struct mca_model {
  std::shared_ptr<const mca::MechanizedSCM> model;
};

namespace {

mca_status status_of(mca::ErrorCode c) {
  using E = mca::ErrorCode;
  switch (c) {
    case E::invalid_argument: return MCA_INVALID_ARGUMENT;
    case E::non_finite_domain: return MCA_NON_FINITE_DOMAIN;
    case E::no_convergence: return MCA_NO_CONVERGENCE;
    case E::incomplete_solution: return MCA_INCOMPLETE_SOLUTION;
    case E::empty_domain: return MCA_EMPTY_DOMAIN;
    case E::empty_response_set: return MCA_EMPTY_RESPONSE_SET;
    case E::missing_variables: return MCA_MISSING_VARIABLES;
    case E::partial_collection: return MCA_PARTIAL_COLLECTION;
    case E::too_many_settings: return MCA_TOO_MANY_SETTINGS;
    case E::negative_preference: return MCA_NEGATIVE_PREFERENCE;
    case E::invalid_config: return MCA_INVALID_CONFIG;
    case E::degenerate_design: return MCA_DEGENERATE_DESIGN;
    case E::shape_mismatch: return MCA_SHAPE_MISMATCH;
    case E::non_finite: return MCA_NON_FINITE;
    case E::unknown_example: return MCA_UNKNOWN_EXAMPLE;
    case E::io: return MCA_IO;
  }
  return MCA_INTERNAL;
}

template <class F>
mca_status guarded(mca_context* ctx, F&& f) {
  if (ctx) ctx->last_error.clear();
  auto fail = [&](mca_status s, const char* what) {
    if (ctx) ctx->last_error = what;
    return s;
  };
  try {
    f();
    return MCA_OK;
  } catch (const mca::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const json::exception& e) {
    return fail(MCA_INVALID_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MCA_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MCA_INTERNAL, e.what());
  } catch (...) {
    return fail(MCA_INTERNAL, "unknown exception");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw mca::Error(mca::ErrorCode::invalid_argument, what);
}

mca_result* make_result(const json& j, bool verdict) {
  auto* r = new mca_result;
  r->text = j.dump(2);
  r->verdict = verdict;
  return r;
}

mca::RegistryOptions registry_options(const mca_context* ctx, double grid_step) {
  mca::RegistryOptions o;
  o.grid_step = grid_step;
  o.seed = ctx->seed;
  o.threads = ctx->threads;
  return o;
}

mca::Setting setting_from(const json& j) {
  if (!j.is_object()) {
    throw mca::Error(mca::ErrorCode::invalid_argument,
                     "intervention must be a JSON object");
  }
  mca::Setting s;
  for (const auto& [k, v] : j.items()) {
    if (v.is_number()) {
      s.set(k, mca::Value{v.get<double>()});
    } else {
      s.set(k, mca::Value(v.get<std::vector<double>>()));
    }
  }
  return s;
}

json outcome_table(const mca::Distribution& d) {
  json out = json::array();
  for (const auto& o : d.outcomes()) {
    out.push_back({{"setting", mca::setting_json(o.setting)}, {"p", o.p}});
  }
  return out;
}

}  // namespace

extern "C" {

const char* mca_version(void) { return "0.1.0"; }

const char* mca_status_string(mca_status status) {
  switch (status) {
    case MCA_OK: return "ok";
    case MCA_INTERNAL: return "internal";
    default: break;
  }
  if (status < MCA_OK || status > MCA_INTERNAL) return "unknown status";
  return mca::to_string(static_cast<mca::ErrorCode>(status - 1));
}

mca_status mca_context_create(mca_context** out) {
  if (!out) return MCA_INVALID_ARGUMENT;
  *out = new (std::nothrow) mca_context;
  return *out ? MCA_OK : MCA_INTERNAL;
}

void mca_context_destroy(mca_context* ctx) { delete ctx; }

const char* mca_context_last_error(const mca_context* ctx) {
  return ctx ? ctx->last_error.c_str() : "null context";
}

mca_status mca_context_set_seed(mca_context* ctx, uint64_t seed) {
  if (!ctx) return MCA_INVALID_ARGUMENT;
  ctx->seed = seed;
  ctx->seed_set = true;
  return MCA_OK;
}

mca_status mca_context_set_threads(mca_context* ctx, unsigned threads) {
  if (!ctx) return MCA_INVALID_ARGUMENT;
  ctx->threads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  return MCA_OK;
}

const char* mca_result_json(const mca_result* r) { return r ? r->text.c_str() : ""; }

int mca_result_verdict(const mca_result* r) { return r && r->verdict ? 1 : 0; }

void mca_result_destroy(mca_result* r) { delete r; }

mca_status mca_examples_list(mca_context* ctx, mca_result** out) {
  return guarded(ctx, [&] {
    require(out, "null output");
    *out = make_result(mca::example_names(), true);
  });
}

mca_status mca_models_list(mca_context* ctx, mca_result** out) {
  return guarded(ctx, [&] {
    require(out, "null output");
    *out = make_result(mca::model_names(), true);
  });
}

mca_status mca_examples_run(mca_context* ctx, const char* name, double grid_step,
                            mca_result** out) {
  return guarded(ctx, [&] {
    require(ctx && name && out, "null argument");
    json j = mca::run_example(name, registry_options(ctx, grid_step));
    const bool verdict = j.value("verdict", false);
    *out = make_result(j, verdict);
  });
}

mca_status mca_abstraction_check(mca_context* ctx, const char* low, const char* high,
                                 double grid_step, const char* subsets,
                                 mca_result** out) {
  return guarded(ctx, [&] {
    require(ctx && low && high && out, "null argument");
    const auto opts = registry_options(ctx, grid_step);
    auto pair = mca::make_pair(low, high, opts);
    if (!pair) {
      throw mca::Error(mca::ErrorCode::unknown_example,
                       std::string("no abstraction maps from '") + low + "' to '" +
                           high + "'");
    }
    const std::string policy = subsets ? subsets : "default";
    if (policy == "all") {
      pair->policy = mca::SubsetPolicy::all;
    } else if (policy == "full") {
      pair->policy = mca::SubsetPolicy::full;
    } else if (policy != "default") {
      throw mca::Error(mca::ErrorCode::invalid_argument,
                       "subsets must be one of default, all, full");
    }
    const auto suite = pair->suite();
    mca::AbstractionOptions ao;
    ao.threads = ctx->threads;
    const auto report = mca::check_abstraction(*pair->low, *pair->high, pair->maps,
                                               suite, ao);
    json j = mca::to_json(report);
    j["low"] = low;
    j["high"] = high;
    j["subsets"] = policy;
    *out = make_result(j, report.verdict);
  });
}

mca_status mca_experiment_run(mca_context* ctx, const char* mechanism,
                              const char* config_json, const char* out_dir,
                              const char* command, mca_result** out) {
  return guarded(ctx, [&] {
    require(ctx && out, "null argument");
    mca::ExperimentConfig cfg;
    if (config_json && *config_json) {
      cfg = mca::ExperimentConfig::from_json(json::parse(config_json));
    }
    if (mechanism && *mechanism) cfg.mechanism = mca::voting::parse_mechanism(mechanism);
    if (ctx->seed_set) cfg.seed = ctx->seed;
    cfg.threads = ctx->threads;
    auto r = mca::run_experiment(cfg, out_dir ? out_dir : "", command ? command : "");
    *out = make_result(r.report, r.verdict);
  });
}

mca_status mca_model_from_registry(mca_context* ctx, const char* name,
                                   double grid_step, mca_model** out) {
  return guarded(ctx, [&] {
    require(ctx && name && out, "null argument");
    auto m = std::make_unique<mca_model>();
    m->model = mca::make_model(name, registry_options(ctx, grid_step));
    *out = m.release();
  });
}

mca_status mca_model_load_json(mca_context* ctx, const char* text, mca_model** out) {
  return guarded(ctx, [&] {
    require(text && out, "null argument");
    auto m = std::make_unique<mca_model>();
    m->model = std::make_shared<const mca::MechanizedSCM>(
        mca::model_from_json(json::parse(text)));
    *out = m.release();
  });
}

mca_status mca_model_to_json(mca_context* ctx, const mca_model* m, mca_result** out) {
  return guarded(ctx, [&] {
    require(m && out, "null argument");
    *out = make_result(mca::model_to_json(*m->model), true);
  });
}

mca_status mca_model_solve(mca_context* ctx, const mca_model* m,
                           const char* intervention_json, mca_result** out) {
  return guarded(ctx, [&] {
    require(m && out, "null argument");
    const mca::Setting y =
        intervention_json && *intervention_json
            ? setting_from(json::parse(intervention_json))
            : mca::Setting{};
    const auto sols = mca::solve_enumerate(m->model->mech_model(), y);
    json solutions = json::array();
    for (const auto& s : sols) {
      const auto induced = mca::induce_scm(*m->model, s);
      solutions.push_back({{"mechanisms", mca::setting_json(s)},
                           {"distribution", outcome_table(mca::distribution(induced))}});
    }
    json j{{"intervention", mca::setting_json(y)},
           {"count", sols.size()},
           {"solutions", std::move(solutions)}};
    *out = make_result(j, !sols.empty());
  });
}

void mca_model_destroy(mca_model* m) { delete m; }

mca_status mca_ne_from_params(mca_context* ctx, size_t n, const double* alpha,
                              const double* delta, double* q_out, double* total_out) {
  return guarded(ctx, [&] {
    require(n == 0 || (alpha && delta && q_out), "null argument");
    mca::voting::CountryParams p;
    p.alpha.assign(alpha, alpha + n);
    p.delta.assign(delta, delta + n);
    const auto r = mca::voting::ne_from_params(p);
    std::copy(r.q.begin(), r.q.end(), q_out);
    if (total_out) *total_out = r.Q_W;
  });
}

}  // extern "C"
