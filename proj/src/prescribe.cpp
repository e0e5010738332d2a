#include "distcurv/prescribe.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace distcurv::prescribe {

namespace ex = expr;
namespace fl = fields;
namespace fc = framecalc;
namespace rm = riemann;

namespace {

constexpr double kContactTiny = 1e-9;   // c2 below this is not contact
constexpr double kTargetTiny = 1e-9;    // strict-negativity slack for f
constexpr double kPlaneTol = 1e-8;      // frame-vs-distribution agreement
constexpr double kOrthonormalTol = 1e-8;
constexpr int kMaxDoublings = 60;       // D schedule tops out at 2^60
constexpr int kMaxLambdaSteps = 40;

std::string point_str(const Vec3& p) {
  return "(" + repr_double(p[0]) + ", " + repr_double(p[1]) + ", " +
         repr_double(p[2]) + ")";
}

// Sample set for the searches: the user grid plus a 2x refined spot check.
std::vector<Vec3> search_points(const fl::Chart& chart,
                                const fl::GridSpec& grid) {
  std::vector<Vec3> pts = chart.grid_points(grid);
  fl::GridSpec fine{{2 * grid.n[0], 2 * grid.n[1], 2 * grid.n[2]}};
  std::vector<Vec3> extra = chart.grid_points(fine);
  pts.insert(pts.end(), extra.begin(), extra.end());
  return pts;
}

struct Samples {
  std::vector<fc::StretchCoefficients> sc;
  std::vector<double> f;
};

Samples collect_samples(const fc::FrameDataField& fdf, const ex::ExprPtr& f,
                        const std::vector<Vec3>& pts) {
  Samples out;
  out.sc.reserve(pts.size());
  out.f.reserve(pts.size());
  std::array<ex::ExprPtr, 1> roots{f};
  ex::EvalTape ftape(roots);
  ex::EvalTape::Scratch scratch, fscratch;
  double fval = 0.0;
  for (const Vec3& p : pts) {
    out.sc.push_back(fdf.coefficients_at(p, scratch));
    ftape.eval(p, fscratch, {&fval, 1});
    out.f.push_back(fval);
  }
  return out;
}

void require_contact_samples(std::span<const fc::StretchCoefficients> sc) {
  for (size_t i = 0; i < sc.size(); ++i) {
    if (!(sc[i].c2 >= kContactTiny))
      fail(ErrorCode::not_contact,
           "plane field is not contact: c2 = " + repr_double(sc[i].c2) +
               " at sample " + std::to_string(i));
  }
}

void require_negative_target(const std::vector<Vec3>& pts,
                             std::span<const double> f, Method method) {
  for (size_t i = 0; i < f.size(); ++i) {
    if (!(f[i] <= -kTargetTiny))
      fail(ErrorCode::validation,
           std::string("target must be strictly negative for the ") +
               method_name(method) + " method; got " + repr_double(f[i]) +
               " at " + point_str(pts[i]));
  }
}

bool quadratic_margin_ok(const fc::StretchCoefficients& sc, double t,
                         double delta) {
  const double B = sc.P - t;
  const double disc = B * B - 3.0 * sc.c2 * sc.E;
  if (!(disc >= delta * (B * B + std::fabs(3.0 * sc.c2 * sc.E)))) return false;
  if (sc.E < 0.0) return true;  // largest root is positive regardless of B
  return B >= delta * (std::fabs(sc.P) + std::fabs(t));
}

bool linear_margin_ok(const fc::StretchCoefficients& sc, double t,
                      double delta) {
  const double B = sc.P - t;
  return B >= delta * (std::fabs(sc.P) + std::fabs(t));
}

// Frame from the problem (validated) or Gram-Schmidt from the distribution.
fl::Frame choose_frame(const PrescriptionProblem& problem) {
  if (!problem.frame)
    return fl::gram_schmidt_adapted(problem.g, problem.dist, problem.chart);
  const fl::Frame& fr = *problem.frame;
  for (const Vec3& p : problem.chart.grid_points(fl::GridSpec::uniform(5))) {
    const double dev = fl::frame_gram_deviation(problem.g, fr, p);
    if (!(dev <= kOrthonormalTol))
      fail(ErrorCode::validation,
           "supplied frame is not orthonormal at " + point_str(p) +
               " (gram deviation " + repr_double(dev) + ")");
  }
  return fr;
}

// The supplied frame must actually span the prescribed plane field.
void require_plane_agreement(const PrescriptionProblem& problem,
                             const fl::Frame& fr) {
  const fl::OneForm w = fl::annihilator(problem.dist);
  for (const Vec3& p : problem.chart.grid_points(fl::GridSpec::uniform(5))) {
    const Vec3 wv = w.eval(p);
    const double wn = norm(wv);
    for (const fl::VectorField* v : {&fr.X, &fr.Y}) {
      const Vec3 vv = v->eval(p);
      if (!(std::fabs(dot(wv, vv)) <= kPlaneTol * wn * norm(vv)))
        fail(ErrorCode::validation,
             "frame does not span the prescribed plane field at " +
                 point_str(p));
    }
  }
}

// Metric with the frame as an orthonormal basis: inverse of the sum of the
// frame vectors' outer products, entrywise in closed form.
fl::MetricField frame_orthonormalizing_metric(const fl::Frame& fr) {
  std::array<std::array<ex::ExprPtr, 3>, 3> M;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      M[i][j] = fr.X.comp[i] * fr.X.comp[j] + fr.Y.comp[i] * fr.Y.comp[j] +
                fr.n.comp[i] * fr.n.comp[j];
      if (j > i) M[j][i] = M[i][j];
    }
  auto cof = [&M](int i, int j) {
    const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
    const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
    return M[i1][j1] * M[i2][j2] - M[i1][j2] * M[i2][j1];
  };
  const ex::ExprPtr det =
      M[0][0] * cof(0, 0) + M[0][1] * cof(0, 1) + M[0][2] * cof(0, 2);
  return fl::MetricField(cof(0, 0) / det, cof(0, 1) / det, cof(0, 2) / det,
                         cof(1, 1) / det, cof(1, 2) / det, cof(2, 2) / det);
}

// Closed-form largest root of -(3/4) c2 a^2 + (P - t) a - E = 0.
ex::ExprPtr largest_root_expr(const fc::CoefficientExprs& ce,
                              const ex::ExprPtr& t) {
  const ex::ExprPtr B = ce.P - t;
  const ex::ExprPtr disc = B * B - 3.0 * (ce.c2 * ce.E);
  return (B + ex::sqrt(disc)) / (1.5 * ce.c2);
}

void require_within_tolerance(const PrescriptionResult& res,
                              const PrescriptionProblem& problem) {
  if (!(res.residuals.max <= problem.tolerance))
    fail(ErrorCode::property_violation,
         "prescription verification failed: max residual " +
             repr_double(res.residuals.max) + " at " +
             point_str(res.residuals.argmax) + " exceeds tolerance " +
             repr_double(problem.tolerance));
}

// Shared body of the sectional and Gaussian pipelines (they differ only in
// the pointwise equation and the verified curvature).
PrescriptionResult run_stretch_pipeline(const PrescriptionProblem& problem,
                                        bool linear) {
  const fl::Frame frame = choose_frame(problem);
  const fc::FrameDataField fdf(problem.g, frame);
  const std::vector<Vec3> pts = search_points(problem.chart, problem.grid);
  const Samples s = collect_samples(fdf, problem.target, pts);
  require_negative_target(pts, s.f, linear ? Method::gaussian : Method::sectional);
  require_contact_samples(s.sc);
  const double D0 = find_D(s.sc, s.f, problem.delta_disc, linear);

  const fc::CoefficientExprs& ce = fdf.coefficient_exprs();
  const ex::ExprPtr t = problem.target * D0;
  const ex::ExprPtr a =
      linear ? (ce.P - t) / (0.75 * ce.c2) : largest_root_expr(ce, t);
  const fl::MetricField g_a =
      fc::stretch_metric(problem.g, frame.n, a, problem.chart, problem.grid);

  PrescriptionResult res;
  res.a = a;
  res.D0 = D0;
  res.lambda = 1.0;
  res.rho = D0;
  res.g_final = rescale_metric(g_a, D0);
  res.residuals = verify_prescription(res, problem);
  require_within_tolerance(res, problem);
  return res;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::sectional: return "sectional";
    case Method::sectional_bicontact: return "sectional-bicontact";
    case Method::gaussian: return "gaussian";
  }
  return "?";
}

double solve_pointwise_quadratic(double c2, double P, double E, double t) {
  if (!(c2 > 0.0))
    fail(ErrorCode::domain_error,
         "quadratic solve needs c2 > 0, got " + repr_double(c2));
  const double B = P - t;
  const double disc = B * B - 3.0 * c2 * E;
  if (disc < 0.0)
    fail(ErrorCode::no_positive_root,
         "no real root: discriminant " + repr_double(disc));
  const double sq = std::sqrt(disc);
  // Largest root (B + sq) / (1.5 c2), via the form that avoids cancellation.
  const double a = (B >= 0.0) ? (B + sq) / (1.5 * c2) : -2.0 * E / (sq - B);
  if (!(a > 0.0))
    fail(ErrorCode::no_positive_root,
         "largest root is not positive: " + repr_double(a));
  return a;
}

double solve_pointwise_linear(double c2, double P, double t) {
  if (!(c2 > 0.0))
    fail(ErrorCode::domain_error,
         "linear solve needs c2 > 0, got " + repr_double(c2));
  const double a = (P - t) / (0.75 * c2);
  if (!(a > 0.0))
    fail(ErrorCode::no_positive_root,
         "no positive solution: P = " + repr_double(P) +
             " does not exceed t = " + repr_double(t));
  return a;
}

double find_D(std::span<const fc::StretchCoefficients> sc,
              std::span<const double> f, double delta_disc, bool linear) {
  if (sc.size() != f.size())
    fail(ErrorCode::validation, "coefficient and target sample counts differ");
  require_contact_samples(sc);
  for (int k = 0; k <= kMaxDoublings; ++k) {
    const double D = std::ldexp(1.0, k);
    bool ok = true;
    for (size_t i = 0; i < sc.size() && ok; ++i) {
      const double t = f[i] * D;
      ok = linear ? linear_margin_ok(sc[i], t, delta_disc)
                  : quadratic_margin_ok(sc[i], t, delta_disc);
    }
    if (ok) return D;
  }
  fail(ErrorCode::schedule_exhausted,
       "no D up to 2^" + std::to_string(kMaxDoublings) +
           " meets the pointwise solvability margin");
}

double find_D(const PrescriptionProblem& problem) {
  const fl::Frame frame = choose_frame(problem);
  const fc::FrameDataField fdf(problem.g, frame);
  const std::vector<Vec3> pts = search_points(problem.chart, problem.grid);
  const Samples s = collect_samples(fdf, problem.target, pts);
  require_negative_target(pts, s.f, problem.method);
  return find_D(s.sc, s.f, problem.delta_disc,
                problem.method == Method::gaussian);
}

double find_lambda(std::span<const fc::FrameData> samples, double delta_neg) {
  if (samples.empty())
    fail(ErrorCode::validation, "lambda search needs at least one sample");
  for (int k = 1; k <= kMaxLambdaSteps; ++k) {
    for (const double lambda : {std::pow(2.0, 0.5 * k),
                                std::pow(2.0, -0.5 * k)}) {
      bool ok = true;
      for (const fc::FrameData& fd : samples) {
        const fc::StretchCoefficients sc =
            fc::stretch_coefficients(fc::anisotropic_frame_data(fd, lambda));
        if (!(sc.E <= -delta_neg)) {
          ok = false;
          break;
        }
      }
      if (ok) return lambda;
    }
  }
  fail(ErrorCode::not_applicable,
       "no anisotropic stretch on the schedule makes the extrinsic "
       "coefficient negative everywhere");
}

double find_lambda(const fl::MetricField& g, const fl::Frame& frame,
                   const fl::Chart& chart, const fl::GridSpec& grid,
                   double delta_neg) {
  const fc::FrameDataField fdf(g, frame);
  ex::EvalTape::Scratch scratch;
  std::vector<fc::FrameData> samples;
  for (const Vec3& p : search_points(chart, grid))
    samples.push_back(fdf.data_at(p, scratch));
  return find_lambda(samples, delta_neg);
}

fl::MetricField rescale_metric(const fl::MetricField& g, double rho) {
  if (!(rho > 0.0))
    fail(ErrorCode::domain_error,
         "rescale factor must be positive, got " + repr_double(rho));
  return g.scaled(ex::num(rho));
}

PrescriptionResult prescribe_sectional(const PrescriptionProblem& problem) {
  return run_stretch_pipeline(problem, /*linear=*/false);
}

PrescriptionResult prescribe_gaussian(const PrescriptionProblem& problem) {
  return run_stretch_pipeline(problem, /*linear=*/true);
}

PrescriptionResult prescribe_sectional_bicontact(
    const PrescriptionProblem& problem) {
  if (!problem.frame)
    fail(ErrorCode::validation,
         "the bi-contact method needs the model's adapted frame");
  const fl::Frame& frame = *problem.frame;
  require_plane_agreement(problem, frame);

  const fl::MetricField G = frame_orthonormalizing_metric(frame);
  const double lambda =
      find_lambda(G, frame, problem.chart, problem.grid, problem.delta_neg);
  const fl::MetricField g_l = fc::anisotropic_stretch(G, frame, lambda);
  fl::Frame primed;
  for (int i = 0; i < 3; ++i) {
    primed.X.comp[i] = frame.X.comp[i] / lambda;
    primed.Y.comp[i] = lambda * frame.Y.comp[i];
    primed.n.comp[i] = frame.n.comp[i];
  }

  const fc::FrameDataField fdf(g_l, primed);
  const std::vector<Vec3> pts = search_points(problem.chart, problem.grid);
  const Samples s = collect_samples(fdf, problem.target, pts);
  require_contact_samples(s.sc);
  // The lambda search made E negative with margin, so every pointwise solve
  // must succeed; a failure here is a bug and is surfaced as-is.
  for (size_t i = 0; i < pts.size(); ++i)
    solve_pointwise_quadratic(s.sc[i].c2, s.sc[i].P, s.sc[i].E, s.f[i]);

  const ex::ExprPtr a =
      largest_root_expr(fdf.coefficient_exprs(), problem.target);
  PrescriptionResult res;
  res.a = a;
  res.D0 = 1.0;
  res.lambda = lambda;
  res.rho = 1.0;
  res.g_final =
      fc::stretch_metric(g_l, frame.n, a, problem.chart, problem.grid);
  res.residuals = verify_prescription(res, problem);
  require_within_tolerance(res, problem);
  return res;
}

ResidualReport verify_prescription(const PrescriptionResult& result,
                                   const PrescriptionProblem& problem) {
  rm::CurvatureOracle oracle(result.g_final, problem.dist);
  rm::CurvatureOracle::Scratch scratch;
  std::array<ex::ExprPtr, 1> roots{problem.target};
  ex::EvalTape ftape(roots);
  ex::EvalTape::Scratch fscratch;

  ResidualReport rep;
  double sum = 0.0;
  const std::vector<Vec3> pts = problem.chart.grid_points(problem.grid);
  for (const Vec3& p : pts) {
    const rm::CurvatureReport cr = oracle.at(p, scratch);
    double fval = 0.0;
    ftape.eval(p, fscratch, {&fval, 1});
    const double measured =
        problem.method == Method::gaussian ? cr.KG : cr.K;
    const double r = std::fabs(measured - fval);
    sum += r;
    if (r >= rep.max) {
      rep.max = r;
      rep.argmax = p;
    }
  }
  rep.mean = pts.empty() ? 0.0 : sum / static_cast<double>(pts.size());
  return rep;
}

}  // namespace distcurv::prescribe
