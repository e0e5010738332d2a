#pragma once

#include <array>

#include "distcurv/expr.hpp"
#include "distcurv/fields.hpp"
#include "distcurv/riemann.hpp"
#include "distcurv/util.hpp"

namespace distcurv::framecalc {

// Bracket scalars of an adapted orthonormal frame (X, Y, n) at a point, all
// with respect to the base metric: c = <[X,Y],n>; bAB_C = <[A,B],C>;
// dX = X<[X,Y],Y> and dY = Y<[X,Y],X> are directional derivatives of the
// bracket products along the frame.
struct FrameData {
  double c = 0.0;
  double bXY_X = 0.0, bXY_Y = 0.0;
  double bXn_X = 0.0, bXn_Y = 0.0;
  double bYn_X = 0.0, bYn_Y = 0.0;
  double dX = 0.0, dY = 0.0;
};

// Coefficients of the one-parameter curvature family of metrics stretched
// along n by a:
//   K(a)   = -(3/4) c2 a + P - E/a
//   K_e(a) = E/a
//   K_G(a) = -(3/4) c2 a + P
struct StretchCoefficients {
  double c2 = 0.0;
  double P = 0.0;
  double E = 0.0;
};

// Symbolic counterparts (closed-form fields over the chart).
struct FrameExprs {
  expr::ExprPtr c;
  expr::ExprPtr bXY_X, bXY_Y;
  expr::ExprPtr bXn_X, bXn_Y;
  expr::ExprPtr bYn_X, bYn_Y;
  expr::ExprPtr dX, dY;
};

struct CoefficientExprs {
  expr::ExprPtr c2, P, E;
};

FrameExprs frame_data_exprs(const fields::MetricField& g,
                            const fields::Frame& frame);
CoefficientExprs stretch_coefficient_exprs(const FrameExprs& fe);

// Pointwise extraction; rejects frames that are not orthonormal at p.
FrameData extract_frame_data(const fields::MetricField& g,
                             const fields::Frame& frame, const Vec3& p);

StretchCoefficients stretch_coefficients(const FrameData& fd);

// The three curvature formulas; all require a > 0.
double k_sectional_formula(const StretchCoefficients& sc, double a);
double k_extrinsic_formula(const StretchCoefficients& sc, double a);
double k_gaussian_formula(const StretchCoefficients& sc, double a);

// Full curvature report of the a-stretched metric in its adapted frame
// (X, Y, n/sqrt(a)): curvatures plus B and the bracket coefficient.
riemann::CurvatureReport report_from_frame_data(const FrameData& fd, double a);

// g_a = g + (a - 1) nu_flat (x) nu_flat with nu = n/|n|_g, so lengths along n
// scale by sqrt(a) and the complement of n is untouched.
fields::MetricField stretch_metric(const fields::MetricField& g,
                                   const fields::VectorField& n,
                                   expr::ExprPtr a);
// Same, then verify a > 0 and |n|_g > 0 over a chart grid.
fields::MetricField stretch_metric(const fields::MetricField& g,
                                   const fields::VectorField& n,
                                   expr::ExprPtr a, const fields::Chart& chart,
                                   const fields::GridSpec& grid =
                                       fields::GridSpec::uniform(11));

// Constant diagonal stretch in the frame: |X| becomes lambda, |Y| becomes
// 1/lambda, |n| stays 1 (frame orthonormal w.r.t. g).
fields::MetricField anisotropic_stretch(const fields::MetricField& g,
                                        const fields::Frame& frame,
                                        double lambda);

// Frame data of the rescaled frame (X/lambda, lambda Y, n) w.r.t. the
// lambda-stretched metric; no re-extraction needed.
FrameData anisotropic_frame_data(const FrameData& fd, double lambda);

// Max deviation of (c2, P, E) at p under rotation of (X, Y) by theta and
// under the reflection (X, Y) -> (Y, X).
double frame_rotation_check(const fields::MetricField& g,
                            const fields::Frame& frame, const Vec3& p,
                            double theta);

// Grid-scale evaluator: the nine frame scalars and the three coefficients
// compiled to one tape.  Pass a per-thread scratch for concurrent use.
class FrameDataField {
 public:
  FrameDataField(const fields::MetricField& g, const fields::Frame& frame);

  const FrameExprs& exprs() const { return exprs_; }
  const CoefficientExprs& coefficient_exprs() const { return coeffs_; }

  FrameData data_at(const Vec3& p, expr::EvalTape::Scratch& scratch) const;
  StretchCoefficients coefficients_at(const Vec3& p,
                                      expr::EvalTape::Scratch& scratch) const;
  FrameData data_at(const Vec3& p) const;
  StretchCoefficients coefficients_at(const Vec3& p) const;

 private:
  std::array<double, 12> eval_all(const Vec3& p,
                                  expr::EvalTape::Scratch& scratch) const;

  FrameExprs exprs_;
  CoefficientExprs coeffs_;
  expr::EvalTape tape_;
};

}  // namespace distcurv::framecalc
