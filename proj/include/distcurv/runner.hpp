#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "distcurv/fields.hpp"
#include "distcurv/models.hpp"
#include "distcurv/prescribe.hpp"
#include "distcurv/riemann.hpp"

// One layer below the CLI: each subcommand is a plain function from parsed
// arguments to a report struct, plus deterministic text/CSV/JSON renderers.
// Nothing here touches argv or stdout, so the C API reuses it unchanged.
namespace distcurv::runner {

// Thread-count resolution: explicit request > DISTCURV_THREADS > hardware.
// Always returns at least 1.
int effective_threads(int requested);

// ---------------------------------------------------------------------------
// curvature: evaluate the adapted-frame curvature report over a grid.

struct CurvatureRun {
  std::string model;
  std::string dist;
  fields::GridSpec grid;
  std::vector<Vec3> points;                      // chart grid order
  std::vector<riemann::CurvatureReport> reports; // parallel to points
};

// `a` is the optional stretch field applied along the adapted transversal
// before reporting; pass nullptr for the unstretched metric.  The frame is
// the model's shipped orthonormal frame for `dist` when it has one, else the
// Gram-Schmidt frame.  Rows are assembled in grid order regardless of the
// thread count.
CurvatureRun run_curvature(const models::Model& m, const std::string& dist,
                           const fields::GridSpec& grid,
                           const expr::ExprPtr& a, int threads);

// Header row plus one line per grid point, every float as %.17g.  Two runs of
// the same invocation produce byte-identical output.
std::string to_csv(const CurvatureRun& run);
std::string to_json(const CurvatureRun& run);

// ---------------------------------------------------------------------------
// check: assert contact / bi-contact properties of named distributions.

struct CheckEntry {
  std::string kind;   // "contact" | "bicontact"
  std::string names;  // "xi" or "alpha beta"
  bool ok = false;
  int sign = 0;         // invariant sign (first structure when bicontact)
  int sign_second = 0;  // bicontact only
  double min_abs = 0.0; // min |invariant| over the grid
  double min_measure = 1.0;  // bicontact transversality floor
  Vec3 argmin{};
};

struct CheckRun {
  std::string model;
  std::vector<CheckEntry> entries;
  bool ok = false;  // all entries ok
};

CheckRun run_checks(const models::Model& m,
                    const std::vector<std::string>& contact_names,
                    const std::vector<std::pair<std::string, std::string>>&
                        bicontact_pairs,
                    const fields::GridSpec& grid);
std::string to_text(const CheckRun& run);
std::string to_json(const CheckRun& run);

// ---------------------------------------------------------------------------
// prescribe: wrap the pipelines with model/name resolution.

struct PrescribeRun {
  std::string model;
  std::string dist;
  prescribe::Method method = prescribe::Method::sectional;
  std::string target;  // as given on the command line
  fields::GridSpec grid;
  double tolerance = 1e-4;
  prescribe::PrescriptionResult result;
};

// `eta` names the second structure and is consulted only by the bi-contact
// method, which also requires the model to ship an adapted frame for the
// pair.  Throws Error on every failure path; see util.hpp for the code ->
// exit-code mapping.
PrescribeRun run_prescribe(const models::Model& m, const std::string& dist,
                           prescribe::Method method, const std::string& eta,
                           const expr::ExprPtr& target,
                           const fields::GridSpec& grid, double tolerance);
std::string to_text(const PrescribeRun& run);
// `emit_fields` additionally serializes the stretch field and the final
// metric entries; both can be large for composed frames.
std::string to_json(const PrescribeRun& run, bool emit_fields = false);

// ---------------------------------------------------------------------------
// validate: self-check suites, formula against coordinate oracle.

struct SuiteCaseResult {
  std::string name;
  double max_dev = 0.0;
  Vec3 argmax{};
  double worst_formula = 0.0;
  double worst_oracle = 0.0;
  int samples = 0;
};

struct SuiteRun {
  std::string suite;
  int samples = 0;
  std::uint64_t seed = 0;
  double tol = 0.0;
  std::vector<SuiteCaseResult> cases;
  double max_dev = 0.0;
  bool ok = false;
};

// Suites: "lemma31" (sectional formula), "lemma32" (extrinsic formula),
// "lemma33" (total formula), "frame-invariance" (coefficients under frame
// rotation/reflection), "fd" (symbolic derivatives against central
// differences on generated expressions).  Deviations are relative:
// |formula - oracle| / (1 + |oracle|).
SuiteRun run_validate(const std::string& suite, int samples,
                      std::uint64_t seed, double tol);
std::string to_text(const SuiteRun& run);
std::string to_json(const SuiteRun& run);

}  // namespace distcurv::runner
