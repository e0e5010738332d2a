// distcurv: curvature of plane distributions from the command line.
//
// Exit codes: 0 ok, 1 a checked/required property fails, 2 usage or model
// validation, 3 numeric degeneracy, 4 not contact, 5 no positive root,
// 6 search schedule exhausted, 7 method not applicable.

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "distcurv.h"

namespace {

distcurv_model* open_model(const std::string& name_or_path) {
  if (std::filesystem::exists(name_or_path))
    return distcurv_open_file(name_or_path.c_str());
  return distcurv_open_builtin(name_or_path.c_str());
}

int report_api_error() {
  std::fprintf(stderr, "error: %s\n", distcurv_last_error_message());
  return distcurv_last_error_code();
}

void print_owned(char* s) {
  if (!s) return;
  std::fputs(s, stdout);
  distcurv_free(s);
}

std::array<int, 3> normalize_grid(const std::vector<int>& grid) {
  if (grid.size() == 1) return {grid[0], grid[0], grid[0]};
  if (grid.size() == 3) return {grid[0], grid[1], grid[2]};
  std::fprintf(stderr, "error: --grid takes one count or three\n");
  std::exit(DISTCURV_VALIDATION);
}

struct ModelGuard {
  distcurv_model* m;
  explicit ModelGuard(distcurv_model* handle) : m(handle) {}
  ~ModelGuard() { distcurv_close(m); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curvature of plane distributions on three-manifold charts"};
  app.set_version_flag("--version", distcurv_version());
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads,
                 "worker threads for grid evaluation (0 = auto, or set "
                 "DISTCURV_THREADS)");

  // ---- models ----
  CLI::App* models = app.add_subcommand("models", "list the builtin models");

  // ---- curvature ----
  CLI::App* curvature = app.add_subcommand(
      "curvature", "tabulate K, Ke, KG, c, and B over a grid");
  std::string cv_model, cv_dist, cv_a, cv_out = "csv";
  std::vector<int> cv_grid{16};
  curvature->add_option("--model", cv_model, "builtin name or JSON model file")
      ->required();
  curvature->add_option("--dist", cv_dist, "distribution name in the model")
      ->required();
  curvature->add_option("--grid", cv_grid, "per-axis sample counts")
      ->expected(1, 3);
  curvature->add_option(
      "--a", cv_a, "stretch field in u1,u2,u3 applied before the report");
  curvature->add_option("--out", cv_out, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  curvature->fallthrough();

  // ---- check ----
  CLI::App* check = app.add_subcommand(
      "check", "assert contact / bi-contact properties of named structures");
  std::string ck_model, ck_out = "text";
  std::vector<std::string> ck_contacts, ck_pairs;
  std::vector<int> ck_grid{16};
  check->add_option("--model", ck_model, "builtin name or JSON model file")
      ->required();
  check->add_option("--contact", ck_contacts,
                    "name that must be a contact structure (repeatable)");
  check->add_option("--bicontact", ck_pairs,
                    "two names that must form a bi-contact pair")
      ->expected(2)
      ->allow_extra_args(false);
  check->add_option("--grid", ck_grid, "per-axis sample counts")
      ->expected(1, 3);
  check->add_option("--out", ck_out, "text or json")
      ->check(CLI::IsMember({"text", "json"}));
  check->fallthrough();

  // ---- prescribe ----
  CLI::App* prescribe = app.add_subcommand(
      "prescribe", "stretch the metric until a curvature matches a target");
  std::string pr_model, pr_dist, pr_method, pr_eta, pr_target,
      pr_out = "text";
  std::vector<int> pr_grid{16};
  double pr_tol = 1e-4;
  bool pr_emit = false;
  prescribe->add_option("--model", pr_model, "builtin name or JSON model file")
      ->required();
  prescribe->add_option("--dist", pr_dist, "distribution name in the model")
      ->required();
  prescribe
      ->add_option("--method", pr_method,
                   "sectional, sectional-bicontact, or gaussian")
      ->required();
  prescribe->add_option(
      "--eta", pr_eta, "second structure (sectional-bicontact only)");
  prescribe->add_option("--target", pr_target, "target value in u1,u2,u3")
      ->required();
  prescribe->add_option("--grid", pr_grid, "per-axis sample counts")
      ->expected(1, 3);
  prescribe->add_option("--tol", pr_tol, "max allowed residual");
  prescribe->add_flag("--emit-fields", pr_emit,
                      "include the stretch field and final metric in JSON");
  prescribe->add_option("--out", pr_out, "text or json")
      ->check(CLI::IsMember({"text", "json"}));
  prescribe->fallthrough();

  // ---- validate ----
  CLI::App* validate = app.add_subcommand(
      "validate", "run a self-check suite against the coordinate computation");
  std::string va_suite, va_out = "text";
  int va_samples = 200;
  unsigned long long va_seed = 7;
  double va_tol = 1e-4;
  validate
      ->add_option("--suite", va_suite,
                   "lemma31, lemma32, lemma33, frame-invariance, or fd")
      ->required();
  validate->add_option("--samples", va_samples, "sample points per case");
  validate->add_option("--seed", va_seed, "RNG seed");
  validate->add_option("--tol", va_tol, "max allowed deviation");
  validate->add_option("--out", va_out, "text or json")
      ->check(CLI::IsMember({"text", "json"}));
  validate->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return DISTCURV_VALIDATION;
  }

  distcurv_set_threads(threads);

  if (*models) {
    char* names = distcurv_builtin_models();
    print_owned(names);
    return DISTCURV_OK;
  }

  if (*curvature) {
    ModelGuard m(open_model(cv_model));
    if (!m.m) return report_api_error();
    std::array<int, 3> n = normalize_grid(cv_grid);
    char* out = nullptr;
    int rc = distcurv_curvature(m.m, cv_dist.c_str(), n[0], n[1], n[2],
                                cv_a.empty() ? nullptr : cv_a.c_str(),
                                cv_out.c_str(), &out);
    print_owned(out);
    return rc == DISTCURV_OK ? DISTCURV_OK : report_api_error();
  }

  if (*check) {
    ModelGuard m(open_model(ck_model));
    if (!m.m) return report_api_error();
    if (ck_pairs.size() % 2 != 0) {
      std::fprintf(stderr, "error: --bicontact needs name pairs\n");
      return DISTCURV_VALIDATION;
    }
    std::vector<const char*> contacts;
    for (const std::string& s : ck_contacts) contacts.push_back(s.c_str());
    std::vector<const char*> pairs;
    for (const std::string& s : ck_pairs) pairs.push_back(s.c_str());
    std::array<int, 3> n = normalize_grid(ck_grid);
    char* out = nullptr;
    int rc = distcurv_check(m.m, contacts.data(), contacts.size(),
                            pairs.data(), pairs.size() / 2, n[0], n[1], n[2],
                            ck_out.c_str(), &out);
    print_owned(out);
    return rc == DISTCURV_OK ? DISTCURV_OK : report_api_error();
  }

  if (*prescribe) {
    ModelGuard m(open_model(pr_model));
    if (!m.m) return report_api_error();
    std::array<int, 3> n = normalize_grid(pr_grid);
    char* out = nullptr;
    int rc = distcurv_prescribe(m.m, pr_dist.c_str(), pr_method.c_str(),
                                pr_eta.empty() ? nullptr : pr_eta.c_str(),
                                pr_target.c_str(), n[0], n[1], n[2], pr_tol,
                                pr_emit ? 1 : 0, pr_out.c_str(), &out);
    print_owned(out);
    return rc == DISTCURV_OK ? DISTCURV_OK : report_api_error();
  }

  if (*validate) {
    char* out = nullptr;
    int rc = distcurv_validate(va_suite.c_str(), va_samples, va_seed, va_tol,
                               va_out.c_str(), &out);
    print_owned(out);
    return rc == DISTCURV_OK ? DISTCURV_OK : report_api_error();
  }

  return DISTCURV_VALIDATION;
}
