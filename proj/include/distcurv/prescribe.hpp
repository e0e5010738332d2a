#pragma once

#include <optional>
#include <span>

#include "distcurv/expr.hpp"
#include "distcurv/fields.hpp"
#include "distcurv/framecalc.hpp"
#include "distcurv/riemann.hpp"
#include "distcurv/util.hpp"

namespace distcurv::prescribe {

enum class Method { sectional, sectional_bicontact, gaussian };

const char* method_name(Method m);

// A prescription task over one chart: make the chosen curvature of `dist`
// equal to `target` by stretching (and, for the bi-contact method, first
// re-shaping) the metric.
struct PrescriptionProblem {
  fields::Chart chart;
  fields::MetricField g;
  fields::Distribution dist;
  // Shipped adapted frame; required by the bi-contact method, optional
  // elsewhere (Gram-Schmidt is used when absent).
  std::optional<fields::Frame> frame;
  expr::ExprPtr target;
  Method method = Method::sectional;
  fields::GridSpec grid;
  double delta_disc = 0.1;  // relative discriminant margin for the D search
  double delta_neg = 1e-3;  // extrinsic-negativity margin for the lambda search
  double tolerance = 1e-4;  // verification residual bound
};

struct ResidualReport {
  double max = 0.0;
  double mean = 0.0;
  Vec3 argmax{};
};

struct PrescriptionResult {
  expr::ExprPtr a;            // closed-form stretch field
  double D0 = 1.0;            // 1 when the method does not search for D
  double lambda = 1.0;        // 1 when unused
  double rho = 1.0;           // final constant rescale
  fields::MetricField g_final;
  ResidualReport residuals;
};

// Largest positive root a of -(3/4) c2 a^2 + (P - t) a - E = 0; requires
// c2 > 0, throws NoPositiveRoot when the equation has none.
double solve_pointwise_quadratic(double c2, double P, double E, double t);

// Root of the linear equation -(3/4) c2 a + P = t; requires c2 > 0, throws
// when the solution is not positive (P <= t).
double solve_pointwise_linear(double c2, double P, double t);

// Smallest D from the doubling schedule {1, 2, 4, ...} such that the
// pointwise solve with t = f D succeeds with margin at every sample.
// `linear` selects the Gaussian (linear) margin instead of the quadratic one.
double find_D(std::span<const framecalc::StretchCoefficients> sc,
              std::span<const double> f, double delta_disc,
              bool linear = false);
// Same, sampling the problem's grid plus a 2x refined spot-check grid.
double find_D(const PrescriptionProblem& problem);

// Smallest lambda from the two-sided schedule {2^(k/2), 2^(-k/2)} whose
// anisotropic stretch makes the extrinsic coefficient <= -delta_neg at every
// sample; throws NotApplicable when the schedule is exhausted.
double find_lambda(std::span<const framecalc::FrameData> samples,
                   double delta_neg = 1e-3);
double find_lambda(const fields::MetricField& g, const fields::Frame& frame,
                   const fields::Chart& chart, const fields::GridSpec& grid,
                   double delta_neg = 1e-3);

// rho * g for constant rho > 0; every curvature scales by 1/rho.
fields::MetricField rescale_metric(const fields::MetricField& g, double rho);

PrescriptionResult prescribe_sectional(const PrescriptionProblem& problem);
PrescriptionResult prescribe_sectional_bicontact(
    const PrescriptionProblem& problem);
PrescriptionResult prescribe_gaussian(const PrescriptionProblem& problem);

// Oracle curvature of the method's type in result.g_final against the target
// at every grid point.
ResidualReport verify_prescription(const PrescriptionResult& result,
                                   const PrescriptionProblem& problem);

}  // namespace distcurv::prescribe
