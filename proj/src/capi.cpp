// Copyright 2026 The eqdf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "eqdf.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <map>
#include <memory>
#include <new>
#include <string>

#include "eqdf/config.hpp"
#include "eqdf/error.hpp"
#include "eqdf/metrics.hpp"
#include "eqdf/model.hpp"
#include "eqdf/pipeline.hpp"
#include "eqdf/rejection.hpp"

struct eqdf_session {
  eqdf::RunContext ctx;
};

struct eqdf_model {
  eqdf::Classifier model;
};

namespace {

thread_local std::string g_last_error;

template <class F>
eqdf_status guarded(F&& f) noexcept {
  try {
    f();
    g_last_error.clear();
    return EQDF_OK;
  } catch (const eqdf::Error& e) {
    g_last_error = e.what();
    return static_cast<eqdf_status>(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return EQDF_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EQDF_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return EQDF_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw eqdf::UsageError(std::string(what) + " must not be null");
}

eqdf::Tensor input_batch(const eqdf_model* m, const double* x, std::size_t n) {
  need(m, "model");
  need(x, "input");
  if (n == 0) throw eqdf::UsageError("batch must not be empty");
  const std::size_t len = m->model.input_len();
  eqdf::Tensor t({n, len});
  std::memcpy(t.data.data(), x, n * len * sizeof(double));
  return t;
}

}  // namespace

extern "C" {

const char* eqdf_version(void) { return eqdf::kToolkitVersion; }

const char* eqdf_last_error(void) { return g_last_error.c_str(); }

eqdf_status eqdf_session_create(eqdf_session** out) {
  return guarded([&] {
    need(out, "out");
    *out = new eqdf_session;
  });
}

void eqdf_session_destroy(eqdf_session* s) { delete s; }

eqdf_status eqdf_session_load_config(eqdf_session* s, const char* path) {
  return guarded([&] {
    need(s, "session");
    need(path, "path");
    s->ctx.cfg = eqdf::load_config(path);
  });
}

eqdf_status eqdf_session_parse_config(eqdf_session* s, const char* text) {
  return guarded([&] {
    need(s, "session");
    need(text, "text");
    s->ctx.cfg = eqdf::parse_config(text, "<config>");
  });
}

eqdf_status eqdf_session_set_out(eqdf_session* s, const char* dir) {
  return guarded([&] {
    need(s, "session");
    need(dir, "dir");
    if (!*dir) throw eqdf::UsageError("output directory must not be empty");
    s->ctx.out = dir;
  });
}

eqdf_status eqdf_session_set_seed(eqdf_session* s, uint64_t seed) {
  return guarded([&] {
    need(s, "session");
    s->ctx.cfg.seed = seed;
    s->ctx.cfg.sync();
  });
}

eqdf_status eqdf_session_set_threads(eqdf_session* s, unsigned threads) {
  return guarded([&] {
    need(s, "session");
    if (threads == 0) throw eqdf::UsageError("threads must be at least 1");
    s->ctx.cfg.threads = threads;
  });
}

eqdf_status eqdf_session_set_force(eqdf_session* s, int force) {
  return guarded([&] {
    need(s, "session");
    s->ctx.force = force != 0;
  });
}

eqdf_status eqdf_session_set_logger(eqdf_session* s, eqdf_log_fn fn, void* user) {
  return guarded([&] {
    need(s, "session");
    if (fn)
      s->ctx.log = [fn, user](const std::string& line) { fn(line.c_str(), user); };
    else
      s->ctx.log = nullptr;
  });
}

eqdf_status eqdf_session_config_text(const eqdf_session* s, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(s, "session");
    const std::string text = eqdf::format_config(s->ctx.cfg);
    if (needed) *needed = text.size() + 1;
    if (!buf) return;
    if (cap < text.size() + 1) throw eqdf::UsageError("buffer too small for configuration text");
    std::memcpy(buf, text.c_str(), text.size() + 1);
  });
}

eqdf_status eqdf_run_stage(eqdf_session* s, eqdf_stage stage) {
  return guarded([&] {
    need(s, "session");
    if (s->ctx.out.empty()) throw eqdf::UsageError("no output directory set");
    s->ctx.cfg.sync();
    switch (stage) {
      case EQDF_STAGE_SYNTH: eqdf::run_synth(s->ctx); break;
      case EQDF_STAGE_ZOO: eqdf::run_zoo(s->ctx); break;
      case EQDF_STAGE_ATTACK_SWEEP: eqdf::run_attack_sweep(s->ctx); break;
      case EQDF_STAGE_REJECT_SWEEP: eqdf::run_reject_sweep(s->ctx); break;
      case EQDF_STAGE_REPORT: eqdf::run_report(s->ctx); break;
      case EQDF_STAGE_ALL: eqdf::run_all(s->ctx); break;
      default: throw eqdf::UsageError("unknown stage " + std::to_string(static_cast<int>(stage)));
    }
  });
}

eqdf_status eqdf_model_load(const char* path, eqdf_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto m = std::make_unique<eqdf_model>();
    m->model = eqdf::load_checkpoint(path);
    *out = m.release();
  });
}

void eqdf_model_destroy(eqdf_model* m) { delete m; }

eqdf_status eqdf_model_info(const eqdf_model* m, size_t* num_classes, size_t* input_len, size_t* feature_dim) {
  return guarded([&] {
    need(m, "model");
    if (num_classes) *num_classes = m->model.num_classes();
    if (input_len) *input_len = m->model.input_len();
    if (feature_dim) *feature_dim = m->model.feature_dim();
  });
}

eqdf_status eqdf_model_predict(const eqdf_model* m, const double* x, size_t n, int* labels) {
  return guarded([&] {
    need(labels, "labels");
    const auto pred = eqdf::predict(m->model, input_batch(m, x, n));
    std::copy(pred.begin(), pred.end(), labels);
  });
}

eqdf_status eqdf_model_logits(const eqdf_model* m, const double* x, size_t n, double* logits) {
  return guarded([&] {
    need(logits, "logits");
    const eqdf::Tensor out = m->model.logits(input_batch(m, x, n));
    std::memcpy(logits, out.data.data(), out.size() * sizeof(double));
  });
}

eqdf_status eqdf_model_features(const eqdf_model* m, const double* x, size_t n, double* features) {
  return guarded([&] {
    need(features, "features");
    const eqdf::Tensor out = m->model.extract(input_batch(m, x, n));
    std::memcpy(features, out.data.data(), out.size() * sizeof(double));
  });
}

eqdf_status eqdf_binomial_two_sided_p(uint64_t k, uint64_t n, double* p) {
  return guarded([&] {
    need(p, "p");
    *p = eqdf::binomial_two_sided_p(k, n);
  });
}

eqdf_status eqdf_trapezoid_auc(const double* x, const double* y, size_t n, int normalize, double* auc) {
  return guarded([&] {
    need(x, "x");
    need(y, "y");
    need(auc, "auc");
    *auc = eqdf::trapezoid_auc({x, n}, {y, n}, normalize != 0);
  });
}

eqdf_status eqdf_pearson(const double* x, const double* y, size_t n, double* r, int* defined) {
  return guarded([&] {
    need(x, "x");
    need(y, "y");
    need(r, "r");
    const auto v = eqdf::pearson({x, n}, {y, n});
    *r = v.value_or(std::numeric_limits<double>::quiet_NaN());
    if (defined) *defined = v.has_value();
  });
}

eqdf_status eqdf_max_gap(const double* values, size_t n, double* gap) {
  return guarded([&] {
    need(values, "values");
    need(gap, "gap");
    std::map<std::string, double> m;
    for (size_t i = 0; i < n; ++i) m.emplace(std::to_string(i), values[i]);
    *gap = eqdf::max_gap(m);
  });
}

}  // extern "C"
