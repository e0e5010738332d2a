#include "distcurv/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "distcurv/framecalc.hpp"

namespace distcurv::runner {

namespace ex = expr;
namespace fl = fields;
namespace fc = framecalc;
namespace rm = riemann;
namespace md = models;

using nlohmann::json;

int effective_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DISTCURV_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

std::string point_str(const Vec3& p) {
  return "(" + g17(p[0]) + ", " + g17(p[1]) + ", " + g17(p[2]) + ")";
}

json point_json(const Vec3& p) { return json::array({p[0], p[1], p[2]}); }

// Contiguous-block work splitter; rethrows the first worker exception.
template <typename Fn>
void parallel_for(std::size_t n, int threads, const Fn& fn) {
  std::size_t t = std::max(1, threads);
  t = std::min(t, n == 0 ? std::size_t{1} : n);
  if (t <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  std::mutex mu;
  std::exception_ptr first_error;
  std::size_t chunk = (n + t - 1) / t;
  for (std::size_t i = 0; i < t; ++i) {
    std::size_t b = i * chunk;
    std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&, b, e] {
      try {
        fn(b, e);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

const fl::Chart& require_chart(const md::Model& m) {
  if (!m.has_chart)
    fail(ErrorCode::validation,
         "model '" + m.name + "' has no chart; this command needs one");
  return m.chart;
}

}  // namespace

// ---------------------------------------------------------------------------
// curvature

CurvatureRun run_curvature(const md::Model& m, const std::string& dist,
                           const fl::GridSpec& grid, const ex::ExprPtr& a,
                           int threads) {
  const fl::Chart& chart = require_chart(m);
  fl::Distribution d = md::resolve_distribution(m, dist);
  fl::Frame frame = md::adapted_frame(m, d);
  fc::FrameDataField field(m.g, frame);
  ex::ExprPtr stretch = a ? a : ex::num(1.0);
  std::array<ex::ExprPtr, 1> roots{stretch};
  ex::EvalTape a_tape(roots);

  CurvatureRun run;
  run.model = m.name;
  run.dist = dist;
  run.grid = grid;
  run.points = chart.grid_points(grid);
  run.reports.resize(run.points.size());

  parallel_for(run.points.size(), threads, [&](std::size_t b, std::size_t e) {
    ex::EvalTape::Scratch scratch;
    double av = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const Vec3& p = run.points[i];
      a_tape.eval(p, scratch, {&av, 1});
      if (!(av > 0.0) || !std::isfinite(av))
        fail(ErrorCode::domain_error,
             "stretch field is not positive at " + point_str(p));
      run.reports[i] = fc::report_from_frame_data(field.data_at(p, scratch), av);
    }
  });
  return run;
}

std::string to_csv(const CurvatureRun& run) {
  std::string out = "u1,u2,u3,K,Ke,KG,c,B_XX,B_XY,B_YY\n";
  for (std::size_t i = 0; i < run.points.size(); ++i) {
    const Vec3& p = run.points[i];
    const rm::CurvatureReport& r = run.reports[i];
    out += g17(p[0]) + ',' + g17(p[1]) + ',' + g17(p[2]) + ',' + g17(r.K) +
           ',' + g17(r.Ke) + ',' + g17(r.KG) + ',' + g17(r.c) + ',' +
           g17(r.B_XX) + ',' + g17(r.B_XY) + ',' + g17(r.B_YY) + '\n';
  }
  return out;
}

std::string to_json(const CurvatureRun& run) {
  json j;
  j["schema_version"] = 1;
  j["command"] = "curvature";
  j["model"] = run.model;
  j["dist"] = run.dist;
  j["grid"] = json::array({run.grid.n[0], run.grid.n[1], run.grid.n[2]});
  j["columns"] = json::array(
      {"u1", "u2", "u3", "K", "Ke", "KG", "c", "B_XX", "B_XY", "B_YY"});
  json rows = json::array();
  for (std::size_t i = 0; i < run.points.size(); ++i) {
    const Vec3& p = run.points[i];
    const rm::CurvatureReport& r = run.reports[i];
    rows.push_back(json::array({p[0], p[1], p[2], r.K, r.Ke, r.KG, r.c,
                                r.B_XX, r.B_XY, r.B_YY}));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// check

CheckRun run_checks(
    const md::Model& m, const std::vector<std::string>& contact_names,
    const std::vector<std::pair<std::string, std::string>>& bicontact_pairs,
    const fl::GridSpec& grid) {
  const fl::Chart& chart = require_chart(m);
  if (contact_names.empty() && bicontact_pairs.empty())
    fail(ErrorCode::validation, "nothing to check: pass --contact or --bicontact");

  CheckRun run;
  run.model = m.name;
  for (const std::string& name : contact_names) {
    fl::Distribution d = md::resolve_distribution(m, name);
    fl::ContactReport r = fl::check_contact(chart, d, grid, &m.g);
    CheckEntry e;
    e.kind = "contact";
    e.names = name;
    e.ok = r.is_contact;
    e.sign = r.sign;
    e.min_abs = r.min_abs;
    e.argmin = r.argmin;
    run.entries.push_back(std::move(e));
  }
  for (const auto& [first, second] : bicontact_pairs) {
    fl::Distribution d1 = md::resolve_distribution(m, first);
    fl::Distribution d2 = md::resolve_distribution(m, second);
    fl::TransversePairReport r =
        fl::check_transverse_pair(chart, d1, d2, grid, &m.g);
    CheckEntry e;
    e.kind = "bicontact";
    e.names = first + " " + second;
    e.ok = r.is_bicontact;
    e.sign = r.first.sign;
    e.sign_second = r.second.sign;
    e.min_abs = std::min(r.first.min_abs, r.second.min_abs);
    e.min_measure = r.min_measure;
    e.argmin = r.argmin;
    run.entries.push_back(std::move(e));
  }
  run.ok = std::all_of(run.entries.begin(), run.entries.end(),
                       [](const CheckEntry& e) { return e.ok; });
  return run;
}

namespace {
std::string sign_str(int s) { return s > 0 ? "+1" : s < 0 ? "-1" : "0"; }
}  // namespace

std::string to_text(const CheckRun& run) {
  std::string out = "model " + run.model + "\n";
  for (const CheckEntry& e : run.entries) {
    out += e.kind + " " + e.names + ": " + (e.ok ? "ok" : "FAILED");
    if (e.kind == "contact") {
      out += "  sign=" + sign_str(e.sign) + "  min|c|=" + g17(e.min_abs);
    } else {
      out += "  signs=" + sign_str(e.sign) + "," + sign_str(e.sign_second) +
             "  min|c|=" + g17(e.min_abs) +
             "  min_transversality=" + g17(e.min_measure);
    }
    out += "  at " + point_str(e.argmin) + "\n";
  }
  out += std::string("result: ") + (run.ok ? "ok" : "FAILED") + "\n";
  return out;
}

std::string to_json(const CheckRun& run) {
  json j;
  j["schema_version"] = 1;
  j["command"] = "check";
  j["model"] = run.model;
  j["ok"] = run.ok;
  json entries = json::array();
  for (const CheckEntry& e : run.entries) {
    json je;
    je["kind"] = e.kind;
    je["names"] = e.names;
    je["ok"] = e.ok;
    je["sign"] = e.sign;
    if (e.kind == "bicontact") {
      je["sign_second"] = e.sign_second;
      je["min_transversality"] = e.min_measure;
    }
    je["min_abs_invariant"] = e.min_abs;
    je["argmin"] = point_json(e.argmin);
    entries.push_back(std::move(je));
  }
  j["checks"] = std::move(entries);
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// prescribe

PrescribeRun run_prescribe(const md::Model& m, const std::string& dist,
                           prescribe::Method method, const std::string& eta,
                           const ex::ExprPtr& target, const fl::GridSpec& grid,
                           double tolerance) {
  const fl::Chart& chart = require_chart(m);
  prescribe::PrescriptionProblem problem;
  problem.chart = chart;
  problem.g = m.g;
  problem.dist = md::resolve_distribution(m, dist);
  problem.target = target;
  problem.method = method;
  problem.grid = grid;
  problem.tolerance = tolerance;

  if (method == prescribe::Method::sectional_bicontact) {
    if (eta.empty())
      fail(ErrorCode::validation,
           "method sectional-bicontact needs --eta <second structure>");
    fl::Distribution second = md::resolve_distribution(m, eta);
    fl::TransversePairReport pair =
        fl::check_transverse_pair(chart, problem.dist, second, grid, &m.g);
    if (!pair.is_bicontact)
      fail(ErrorCode::validation,
           "'" + dist + "', '" + eta + "' is not a bi-contact pair on " +
               m.name + " (transversality floor " + g17(pair.min_measure) +
               ", signs " + sign_str(pair.first.sign) + "," +
               sign_str(pair.second.sign) + ")");
    std::optional<fl::Frame> frame = md::bicontact_frame(
        m, fl::annihilator(problem.dist), fl::annihilator(second));
    if (!frame)
      fail(ErrorCode::validation,
           "model '" + m.name + "' ships no adapted frame for the pair '" +
               dist + "', '" + eta + "'");
    problem.frame = std::move(frame);
  } else {
    problem.frame = md::orthonormal_frame_for(m, problem.dist);
  }

  PrescribeRun run;
  run.model = m.name;
  run.dist = dist;
  run.method = method;
  run.target = ex::to_string(target);
  run.grid = grid;
  run.tolerance = tolerance;
  switch (method) {
    case prescribe::Method::sectional:
      run.result = prescribe::prescribe_sectional(problem);
      break;
    case prescribe::Method::sectional_bicontact:
      run.result = prescribe::prescribe_sectional_bicontact(problem);
      break;
    case prescribe::Method::gaussian:
      run.result = prescribe::prescribe_gaussian(problem);
      break;
  }
  return run;
}

std::string to_text(const PrescribeRun& run) {
  const prescribe::PrescriptionResult& r = run.result;
  std::string out;
  out += "model " + run.model + "  dist " + run.dist + "  method " +
         prescribe::method_name(run.method) + "\n";
  out += "target " + run.target + "\n";
  out += "D0 " + g17(r.D0) + "  lambda " + g17(r.lambda) + "  rho " +
         g17(r.rho) + "\n";
  out += "residual max " + g17(r.residuals.max) + " at " +
         point_str(r.residuals.argmax) + "  mean " + g17(r.residuals.mean) +
         "  tolerance " + g17(run.tolerance) + "\n";
  return out;
}

std::string to_json(const PrescribeRun& run, bool emit_fields) {
  const prescribe::PrescriptionResult& r = run.result;
  json j;
  j["schema_version"] = 1;
  j["command"] = "prescribe";
  j["model"] = run.model;
  j["dist"] = run.dist;
  j["method"] = prescribe::method_name(run.method);
  j["target"] = run.target;
  j["grid"] = json::array({run.grid.n[0], run.grid.n[1], run.grid.n[2]});
  j["tolerance"] = run.tolerance;
  j["D0"] = r.D0;
  j["lambda"] = r.lambda;
  j["rho"] = r.rho;
  j["residual"] = {{"max", r.residuals.max},
                   {"mean", r.residuals.mean},
                   {"argmax", point_json(r.residuals.argmax)}};
  j["ok"] = r.residuals.max <= run.tolerance;
  if (emit_fields) {
    j["a"] = ex::to_string(r.a);
    json gf;
    const char* names[6] = {"g11", "g12", "g13", "g22", "g23", "g33"};
    int idx = 0;
    for (int i = 0; i < 3; ++i)
      for (int k = i; k < 3; ++k)
        gf[names[idx++]] = ex::to_string(r.g_final.entry(i, k));
    j["g_final"] = std::move(gf);
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// validate

namespace {

struct ValidationCase {
  std::string name;
  fl::Chart chart;
  fl::MetricField g;
  fl::Distribution dist;
  fl::Frame frame;
};

fl::MetricField twisted_metric() {
  auto e = [](const char* s) { return ex::parse(s); };
  return fl::MetricField(e("2 - sin(u3)^2"), e("-sin(u3)*cos(u3)"),
                         e("cos(u3)"), e("2 - cos(u3)^2"), e("-sin(u3)"),
                         e("1"));
}

std::vector<ValidationCase> validation_cases() {
  std::vector<ValidationCase> cases;
  auto add = [&cases](const std::string& model, const std::string& dist) {
    md::Model m = md::builtin(model);
    fl::Distribution d = md::resolve_distribution(m, dist);
    cases.push_back(
        {model + "/" + dist, m.chart, m.g, d, md::adapted_frame(m, d)});
  };
  add("t3-propeller", "xi");
  add("t3-propeller", "eta");
  {
    // The propeller's bi-contact frame together with the metric that makes it
    // orthonormal.  The only case whose frame turns inside the plane, so it
    // is the one that can tell the coefficient signs apart.
    md::Model m = md::builtin("t3-propeller");
    fl::Frame f = m.frames.at("bicontact");
    cases.push_back({"t3-propeller/twisted-pair", m.chart, twisted_metric(),
                     fl::Distribution::span(f.X, f.Y), f});
  }
  add("t3-flat-foliation", "xi");
  add("r3-heisenberg", "xi");
  add("s3-round", "xi");
  add("hyperbolic-halfspace", "xi");
  return cases;
}

std::uint64_t case_seed(std::uint64_t seed, std::size_t index) {
  return seed + 0x9e3779b97f4a7c15ULL * (index + 1);
}

// which: 1 -> plane sectional, 2 -> extrinsic, 3 -> total.
SuiteCaseResult run_lemma_case(const ValidationCase& vc, int which,
                               int samples, std::uint64_t seed) {
  static const char* kStretches[] = {"0.3", "1", "2.7", "2 + sin(u3)"};
  fc::FrameDataField field(vc.g, vc.frame);
  std::vector<ex::ExprPtr> stretches;
  std::vector<rm::CurvatureOracle> oracles;
  for (const char* s : kStretches) {
    ex::ExprPtr a = ex::parse(s);
    oracles.emplace_back(fc::stretch_metric(vc.g, vc.frame.n, a), vc.dist);
    stretches.push_back(std::move(a));
  }

  SuiteCaseResult res;
  res.name = vc.name;
  res.samples = samples;
  SplitMix64 rng(seed);
  for (int s = 0; s < samples; ++s) {
    Vec3 p = vc.chart.sample(rng);
    std::size_t idx = static_cast<std::size_t>(s) % oracles.size();
    double av = ex::eval(stretches[idx], p);
    fc::StretchCoefficients sc = fc::stretch_coefficients(field.data_at(p));
    double formula = which == 1   ? fc::k_sectional_formula(sc, av)
                     : which == 2 ? fc::k_extrinsic_formula(sc, av)
                                  : fc::k_gaussian_formula(sc, av);
    rm::CurvatureReport rep = oracles[idx].at(p);
    double oracle = which == 1 ? rep.K : which == 2 ? rep.Ke : rep.KG;
    double dev = std::abs(formula - oracle) / (1.0 + std::abs(oracle));
    if (dev > res.max_dev) {
      res.max_dev = dev;
      res.argmax = p;
      res.worst_formula = formula;
      res.worst_oracle = oracle;
    }
  }
  return res;
}

SuiteCaseResult run_frame_invariance_case(const ValidationCase& vc,
                                          int samples, std::uint64_t seed) {
  SuiteCaseResult res;
  res.name = vc.name;
  res.samples = samples;
  SplitMix64 rng(seed);
  for (int s = 0; s < samples; ++s) {
    Vec3 p = vc.chart.sample(rng);
    double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    double dev = fc::frame_rotation_check(vc.g, vc.frame, p, theta);
    if (dev > res.max_dev) {
      res.max_dev = dev;
      res.argmax = p;
    }
  }
  return res;
}

// Random closed-form expressions for the derivative self-test.  Candidates
// whose low-order jets are large (or not finite) at the probe point are
// rejected so the difference quotient stays in its asymptotic regime.
ex::ExprPtr random_expr(SplitMix64& rng, int depth) {
  if (depth <= 0 || rng.uniform(0.0, 1.0) < 0.3) {
    if (rng.uniform(0.0, 1.0) < 0.25) return ex::num(rng.uniform(-2.0, 2.0));
    int axis = static_cast<int>(rng.uniform(0.0, 3.0));
    return ex::coord(std::min(axis, 2));
  }
  int op = static_cast<int>(rng.uniform(0.0, 8.0));
  ex::ExprPtr a = random_expr(rng, depth - 1);
  switch (std::min(op, 7)) {
    case 0: return a + random_expr(rng, depth - 1);
    case 1: return a - random_expr(rng, depth - 1);
    case 2: return a * random_expr(rng, depth - 1);
    case 3: return a / random_expr(rng, depth - 1);
    case 4: return ex::sin(a);
    case 5: return ex::cos(a);
    case 6: return ex::exp(a);
    default: return ex::tanh(a);
  }
}

SuiteCaseResult run_fd_case(int samples, std::uint64_t seed) {
  SuiteCaseResult res;
  res.name = "expression-derivatives";
  SplitMix64 rng(seed);
  const double h = 1e-4;
  long attempts = 0;
  const long max_attempts = 400L * std::max(samples, 1);
  int accepted = 0;
  while (accepted < samples) {
    if (++attempts > max_attempts)
      fail(ErrorCode::internal,
           "expression generator rejected too many candidates");
    ex::ExprPtr e = random_expr(rng, 5);
    Vec3 p{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
           rng.uniform(-2.0, 2.0)};
    int axis = static_cast<int>(rng.uniform(0.0, 3.0));
    axis = std::min(axis, 2);
    ex::ExprPtr d1 = ex::derive(e, axis);
    ex::ExprPtr d2 = ex::derive(d1, axis);
    ex::ExprPtr d3 = ex::derive(d2, axis);
    double v0 = ex::eval(e, p);
    double v1 = ex::eval(d1, p);
    double v2 = ex::eval(d2, p);
    double v3 = ex::eval(d3, p);
    bool tame = std::isfinite(v0) && std::isfinite(v1) && std::isfinite(v2) &&
                std::isfinite(v3) && std::abs(v0) <= 100.0 &&
                std::abs(v1) <= 100.0 && std::abs(v2) <= 100.0 &&
                std::abs(v3) <= 1000.0;
    if (!tame) continue;
    ++accepted;
    ex::FdCheck chk = ex::fd_check(e, p, axis, h);
    double dev = std::abs(chk.symbolic - chk.central_fd) /
                 (1.0 + std::abs(chk.symbolic));
    if (dev > res.max_dev) {
      res.max_dev = dev;
      res.argmax = p;
      res.worst_formula = chk.symbolic;
      res.worst_oracle = chk.central_fd;
    }
  }
  res.samples = accepted;
  return res;
}

}  // namespace

SuiteRun run_validate(const std::string& suite, int samples,
                      std::uint64_t seed, double tol) {
  if (samples <= 0) fail(ErrorCode::validation, "samples must be positive");
  if (!(tol > 0.0)) fail(ErrorCode::validation, "tolerance must be positive");

  SuiteRun run;
  run.suite = suite;
  run.samples = samples;
  run.seed = seed;
  run.tol = tol;

  if (suite == "lemma31" || suite == "lemma32" || suite == "lemma33") {
    int which = suite == "lemma31" ? 1 : suite == "lemma32" ? 2 : 3;
    std::vector<ValidationCase> cases = validation_cases();
    for (std::size_t i = 0; i < cases.size(); ++i)
      run.cases.push_back(
          run_lemma_case(cases[i], which, samples, case_seed(seed, i)));
  } else if (suite == "frame-invariance") {
    std::vector<ValidationCase> cases = validation_cases();
    for (std::size_t i = 0; i < cases.size(); ++i)
      run.cases.push_back(
          run_frame_invariance_case(cases[i], samples, case_seed(seed, i)));
  } else if (suite == "fd") {
    run.cases.push_back(run_fd_case(samples, case_seed(seed, 0)));
  } else {
    fail(ErrorCode::validation,
         "unknown suite '" + suite +
             "'; expected lemma31, lemma32, lemma33, frame-invariance, or fd");
  }

  for (const SuiteCaseResult& c : run.cases)
    run.max_dev = std::max(run.max_dev, c.max_dev);
  run.ok = run.max_dev <= tol;
  return run;
}

std::string to_text(const SuiteRun& run) {
  std::ostringstream out;
  out << "suite " << run.suite << "  samples " << run.samples << "  seed "
      << run.seed << "  tol " << g17(run.tol) << "\n";
  for (const SuiteCaseResult& c : run.cases) {
    out << "  " << c.name << ": max " << g17(c.max_dev) << " at "
        << point_str(c.argmax);
    if (run.suite != "frame-invariance")
      out << "  (formula " << g17(c.worst_formula) << ", reference "
          << g17(c.worst_oracle) << ")";
    out << "\n";
  }
  out << "max deviation " << g17(run.max_dev) << "  "
      << (run.ok ? "ok" : "FAILED") << "\n";
  return out.str();
}

std::string to_json(const SuiteRun& run) {
  json j;
  j["schema_version"] = 1;
  j["command"] = "validate";
  j["suite"] = run.suite;
  j["samples"] = run.samples;
  j["seed"] = run.seed;
  j["tol"] = run.tol;
  j["max_deviation"] = run.max_dev;
  j["ok"] = run.ok;
  json cases = json::array();
  for (const SuiteCaseResult& c : run.cases) {
    json jc;
    jc["name"] = c.name;
    jc["max_deviation"] = c.max_dev;
    jc["argmax"] = point_json(c.argmax);
    jc["samples"] = c.samples;
    if (run.suite != "frame-invariance") {
      jc["formula"] = c.worst_formula;
      jc["reference"] = c.worst_oracle;
    }
    cases.push_back(std::move(jc));
  }
  j["cases"] = std::move(cases);
  return j.dump(2) + "\n";
}

}  // namespace distcurv::runner
