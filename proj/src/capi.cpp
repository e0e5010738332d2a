#include "distcurv.h"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <string>

#include "distcurv/models.hpp"
#include "distcurv/runner.hpp"
#include "distcurv/util.hpp"

namespace dc = distcurv;
namespace ex = dc::expr;
namespace fl = dc::fields;
namespace rn = dc::runner;

struct distcurv_model {
  dc::models::Model impl;
};

namespace {

thread_local int g_error_code = 0;
thread_local std::string g_error_message;

std::atomic<int> g_threads{0};

void set_error(int code, const std::string& message) {
  g_error_code = code;
  g_error_message = message;
}

// Runs fn, translating exceptions into status codes + error state.  fn
// returns the status for the non-throwing path.
template <typename Fn>
int guarded(Fn&& fn) noexcept {
  try {
    return fn();
  } catch (const dc::Error& e) {
    int code = dc::error_exit_code(e.code());
    set_error(code, e.what());
    return code;
  } catch (const std::exception& e) {
    set_error(DISTCURV_DEGENERACY, e.what());
    return DISTCURV_DEGENERACY;
  } catch (...) {
    set_error(DISTCURV_DEGENERACY, "unknown failure");
    return DISTCURV_DEGENERACY;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// *out gets the report; fails (impossibly) only on allocation.
int deliver(char** out, const std::string& s) {
  if (!out) {
    set_error(DISTCURV_VALIDATION, "out parameter is NULL");
    return DISTCURV_VALIDATION;
  }
  *out = dup_string(s);
  if (!*out) {
    set_error(DISTCURV_DEGENERACY, "allocation failed");
    return DISTCURV_DEGENERACY;
  }
  return DISTCURV_OK;
}

const distcurv_model& require_model(const distcurv_model* m) {
  if (!m) dc::fail(dc::ErrorCode::validation, "model handle is NULL");
  return *m;
}

std::string require_string(const char* s, const char* what) {
  if (!s) dc::fail(dc::ErrorCode::validation, std::string(what) + " is NULL");
  return s;
}

fl::GridSpec make_grid(int n1, int n2, int n3) {
  if (n1 <= 0 || n2 <= 0 || n3 <= 0)
    dc::fail(dc::ErrorCode::validation, "grid counts must be positive");
  return fl::GridSpec{{n1, n2, n3}};
}

dc::prescribe::Method parse_method(const std::string& name) {
  if (name == "sectional") return dc::prescribe::Method::sectional;
  if (name == "sectional-bicontact")
    return dc::prescribe::Method::sectional_bicontact;
  if (name == "gaussian") return dc::prescribe::Method::gaussian;
  dc::fail(dc::ErrorCode::validation,
           "unknown method '" + name +
               "'; expected sectional, sectional-bicontact, or gaussian");
}

}  // namespace

extern "C" {

const char* distcurv_version(void) { return "1.0.0"; }

char* distcurv_builtin_models(void) {
  std::string all;
  for (const std::string& name : dc::models::builtin_names()) {
    all += name;
    all += '\n';
  }
  return dup_string(all);
}

distcurv_model* distcurv_open_builtin(const char* name) {
  distcurv_model* handle = nullptr;
  guarded([&]() -> int {
    handle = new distcurv_model{
        dc::models::builtin(require_string(name, "model name"))};
    return DISTCURV_OK;
  });
  return handle;
}

distcurv_model* distcurv_open_file(const char* path) {
  distcurv_model* handle = nullptr;
  guarded([&]() -> int {
    handle = new distcurv_model{
        dc::models::load_model(require_string(path, "model path"))};
    return DISTCURV_OK;
  });
  return handle;
}

void distcurv_close(distcurv_model* model) { delete model; }

const char* distcurv_model_name(const distcurv_model* model) {
  return model ? model->impl.name.c_str() : nullptr;
}

int distcurv_last_error_code(void) { return g_error_code; }

const char* distcurv_last_error_message(void) {
  return g_error_message.c_str();
}

void distcurv_set_threads(int threads) {
  g_threads.store(threads > 0 ? threads : 0);
}

void distcurv_free(char* s) { std::free(s); }

int distcurv_curvature(const distcurv_model* model, const char* dist, int n1,
                       int n2, int n3, const char* stretch, const char* format,
                       char** out) {
  if (out) *out = nullptr;
  return guarded([&]() -> int {
    const distcurv_model& m = require_model(model);
    std::string fmt = require_string(format, "format");
    if (fmt != "csv" && fmt != "json")
      dc::fail(dc::ErrorCode::validation,
               "format must be 'csv' or 'json', got '" + fmt + "'");
    ex::ExprPtr a = stretch ? ex::parse(stretch) : nullptr;
    rn::CurvatureRun run = rn::run_curvature(
        m.impl, require_string(dist, "dist"), make_grid(n1, n2, n3), a,
        rn::effective_threads(g_threads.load()));
    return deliver(out, fmt == "csv" ? rn::to_csv(run) : rn::to_json(run));
  });
}

int distcurv_check(const distcurv_model* model, const char* const* contacts,
                   size_t n_contacts, const char* const* pairs, size_t n_pairs,
                   int n1, int n2, int n3, const char* format, char** out) {
  if (out) *out = nullptr;
  return guarded([&]() -> int {
    const distcurv_model& m = require_model(model);
    std::string fmt = require_string(format, "format");
    if (fmt != "text" && fmt != "json")
      dc::fail(dc::ErrorCode::validation,
               "format must be 'text' or 'json', got '" + fmt + "'");
    if (n_contacts > 0 && !contacts)
      dc::fail(dc::ErrorCode::validation, "contacts array is NULL");
    if (n_pairs > 0 && !pairs)
      dc::fail(dc::ErrorCode::validation, "pairs array is NULL");
    std::vector<std::string> contact_names;
    for (size_t i = 0; i < n_contacts; ++i)
      contact_names.push_back(require_string(contacts[i], "contact name"));
    std::vector<std::pair<std::string, std::string>> pair_names;
    for (size_t i = 0; i < n_pairs; ++i)
      pair_names.emplace_back(require_string(pairs[2 * i], "pair name"),
                              require_string(pairs[2 * i + 1], "pair name"));
    rn::CheckRun run =
        rn::run_checks(m.impl, contact_names, pair_names, make_grid(n1, n2, n3));
    int rc = deliver(out, fmt == "text" ? rn::to_text(run) : rn::to_json(run));
    if (rc != DISTCURV_OK) return rc;
    if (!run.ok) {
      set_error(DISTCURV_PROPERTY_VIOLATION, "a checked property fails");
      return DISTCURV_PROPERTY_VIOLATION;
    }
    return DISTCURV_OK;
  });
}

int distcurv_prescribe(const distcurv_model* model, const char* dist,
                       const char* method, const char* eta, const char* target,
                       int n1, int n2, int n3, double tolerance,
                       int emit_fields, const char* format, char** out) {
  if (out) *out = nullptr;
  return guarded([&]() -> int {
    const distcurv_model& m = require_model(model);
    std::string fmt = require_string(format, "format");
    if (fmt != "text" && fmt != "json")
      dc::fail(dc::ErrorCode::validation,
               "format must be 'text' or 'json', got '" + fmt + "'");
    rn::PrescribeRun run = rn::run_prescribe(
        m.impl, require_string(dist, "dist"),
        parse_method(require_string(method, "method")), eta ? eta : "",
        ex::parse(require_string(target, "target")), make_grid(n1, n2, n3),
        tolerance);
    return deliver(out, fmt == "text" ? rn::to_text(run)
                                      : rn::to_json(run, emit_fields != 0));
  });
}

int distcurv_validate(const char* suite, int samples, unsigned long long seed,
                      double tol, const char* format, char** out) {
  if (out) *out = nullptr;
  return guarded([&]() -> int {
    std::string fmt = require_string(format, "format");
    if (fmt != "text" && fmt != "json")
      dc::fail(dc::ErrorCode::validation,
               "format must be 'text' or 'json', got '" + fmt + "'");
    rn::SuiteRun run =
        rn::run_validate(require_string(suite, "suite"), samples, seed, tol);
    int rc = deliver(out, fmt == "text" ? rn::to_text(run) : rn::to_json(run));
    if (rc != DISTCURV_OK) return rc;
    if (!run.ok) {
      set_error(DISTCURV_PROPERTY_VIOLATION,
                "max deviation " + dc::g17(run.max_dev) + " exceeds " +
                    dc::g17(tol));
      return DISTCURV_PROPERTY_VIOLATION;
    }
    return DISTCURV_OK;
  });
}

}  // extern "C"
