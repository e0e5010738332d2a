#include "distcurv/framecalc.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace distcurv::framecalc {

namespace ex = expr;
namespace fl = fields;

namespace {

constexpr double kOrthonormalTol = 1e-8;

std::string point_str(const Vec3& p) {
  return "(" + repr_double(p[0]) + ", " + repr_double(p[1]) + ", " +
         repr_double(p[2]) + ")";
}

void require_positive_stretch(double a) {
  if (!(a > 0.0))
    fail(ErrorCode::domain_error,
         "stretch factor must be positive, got " + repr_double(a));
}

// Directional derivative A(s) = sum_i A^i d_i s, closed form.
ex::ExprPtr along(const fl::VectorField& A, const ex::ExprPtr& s) {
  ex::ExprPtr out = ex::num(0.0);
  for (int i = 0; i < 3; ++i) out = out + A.comp[i] * ex::derive(s, i);
  return out;
}

}  // namespace

FrameExprs frame_data_exprs(const fl::MetricField& g, const fl::Frame& frame) {
  const fl::VectorField bXY = fl::lie_bracket(frame.X, frame.Y);
  const fl::VectorField bXn = fl::lie_bracket(frame.X, frame.n);
  const fl::VectorField bYn = fl::lie_bracket(frame.Y, frame.n);

  FrameExprs fe;
  fe.c = fl::metric_pair_expr(g, bXY, frame.n);
  fe.bXY_X = fl::metric_pair_expr(g, bXY, frame.X);
  fe.bXY_Y = fl::metric_pair_expr(g, bXY, frame.Y);
  fe.bXn_X = fl::metric_pair_expr(g, bXn, frame.X);
  fe.bXn_Y = fl::metric_pair_expr(g, bXn, frame.Y);
  fe.bYn_X = fl::metric_pair_expr(g, bYn, frame.X);
  fe.bYn_Y = fl::metric_pair_expr(g, bYn, frame.Y);
  fe.dX = along(frame.X, fe.bXY_Y);
  fe.dY = along(frame.Y, fe.bXY_X);
  return fe;
}

CoefficientExprs stretch_coefficient_exprs(const FrameExprs& fe) {
  CoefficientExprs ce;
  ce.c2 = fe.c * fe.c;
  // Sign convention calibrated once against the coordinate oracle over the
  // model corpus (see docs/conventions.md): +dX, -dY, and the bracket term
  // (1/2) c (bYn_X - bXn_Y).
  ce.P = fe.dX - fe.dY - fe.bXY_X * fe.bXY_X - fe.bXY_Y * fe.bXY_Y +
         0.5 * fe.c * (fe.bYn_X - fe.bXn_Y);
  ce.E = fe.bXn_X * fe.bYn_Y -
         0.25 * ex::powc(fe.bXn_Y + fe.bYn_X, 2.0);
  return ce;
}

FrameData extract_frame_data(const fl::MetricField& g, const fl::Frame& frame,
                             const Vec3& p) {
  const double dev = fl::frame_gram_deviation(g, frame, p);
  if (!(dev <= kOrthonormalTol))
    fail(ErrorCode::validation,
         "frame is not orthonormal at " + point_str(p) +
             " (gram deviation " + repr_double(dev) + ")");
  const FrameExprs fe = frame_data_exprs(g, frame);
  FrameData fd;
  fd.c = ex::eval(fe.c, p);
  fd.bXY_X = ex::eval(fe.bXY_X, p);
  fd.bXY_Y = ex::eval(fe.bXY_Y, p);
  fd.bXn_X = ex::eval(fe.bXn_X, p);
  fd.bXn_Y = ex::eval(fe.bXn_Y, p);
  fd.bYn_X = ex::eval(fe.bYn_X, p);
  fd.bYn_Y = ex::eval(fe.bYn_Y, p);
  fd.dX = ex::eval(fe.dX, p);
  fd.dY = ex::eval(fe.dY, p);
  const double worst =
      std::max({std::fabs(fd.c), std::fabs(fd.bXY_X), std::fabs(fd.bXY_Y),
                std::fabs(fd.bXn_X), std::fabs(fd.bXn_Y), std::fabs(fd.bYn_X),
                std::fabs(fd.bYn_Y), std::fabs(fd.dX), std::fabs(fd.dY)});
  if (!std::isfinite(worst))
    fail(ErrorCode::degeneracy, "frame data not finite at " + point_str(p));
  return fd;
}

StretchCoefficients stretch_coefficients(const FrameData& fd) {
  StretchCoefficients sc;
  sc.c2 = fd.c * fd.c;
  sc.P = fd.dX - fd.dY - fd.bXY_X * fd.bXY_X - fd.bXY_Y * fd.bXY_Y +
         0.5 * fd.c * (fd.bYn_X - fd.bXn_Y);
  const double cross = fd.bXn_Y + fd.bYn_X;
  sc.E = fd.bXn_X * fd.bYn_Y - 0.25 * cross * cross;
  return sc;
}

double k_sectional_formula(const StretchCoefficients& sc, double a) {
  require_positive_stretch(a);
  return -0.75 * sc.c2 * a + sc.P - sc.E / a;
}

double k_extrinsic_formula(const StretchCoefficients& sc, double a) {
  require_positive_stretch(a);
  return sc.E / a;
}

double k_gaussian_formula(const StretchCoefficients& sc, double a) {
  require_positive_stretch(a);
  return -0.75 * sc.c2 * a + sc.P;
}

riemann::CurvatureReport report_from_frame_data(const FrameData& fd,
                                                double a) {
  require_positive_stretch(a);
  const StretchCoefficients sc = stretch_coefficients(fd);
  const double sqa = std::sqrt(a);
  riemann::CurvatureReport rep;
  rep.K = k_sectional_formula(sc, a);
  rep.Ke = k_extrinsic_formula(sc, a);
  rep.KG = k_gaussian_formula(sc, a);
  rep.B_XX = -fd.bXn_X / sqa;
  rep.B_XY = -(fd.bXn_Y + fd.bYn_X) / (2.0 * sqa);
  rep.B_YY = -fd.bYn_Y / sqa;
  rep.c = fd.c * sqa;
  return rep;
}

fl::MetricField stretch_metric(const fl::MetricField& g,
                               const fl::VectorField& n, ex::ExprPtr a) {
  // Lowered normal direction; the rank-one update divides by <n,n>_g so n
  // need not be unit.
  std::array<ex::ExprPtr, 3> flat;
  for (int i = 0; i < 3; ++i) {
    flat[i] = ex::num(0.0);
    for (int j = 0; j < 3; ++j) flat[i] = flat[i] + g.entry(i, j) * n.comp[j];
  }
  const ex::ExprPtr nn = fl::metric_pair_expr(g, n, n);
  const ex::ExprPtr bump = (std::move(a) - 1.0) / nn;
  fl::MetricField out = g;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j)
      out.set_entry(i, j, g.entry(i, j) + bump * flat[i] * flat[j]);
  return out;
}

fl::MetricField stretch_metric(const fl::MetricField& g,
                               const fl::VectorField& n, ex::ExprPtr a,
                               const fl::Chart& chart,
                               const fl::GridSpec& grid) {
  const ex::ExprPtr nn = fl::metric_pair_expr(g, n, n);
  const std::vector<ex::ExprPtr> roots{a, nn};
  ex::EvalTape tape(roots);
  ex::EvalTape::Scratch scratch;
  std::array<double, 2> out{};
  for (const Vec3& p : chart.grid_points(grid)) {
    tape.eval(p, scratch, out);
    if (!(out[0] > 0.0) || !std::isfinite(out[0]))
      fail(ErrorCode::domain_error,
           "stretch factor is not positive at " + point_str(p) + " (value " +
               repr_double(out[0]) + ")");
    if (!(out[1] > 1e-12) || !std::isfinite(out[1]))
      fail(ErrorCode::degeneracy,
           "stretch direction degenerates at " + point_str(p));
  }
  return stretch_metric(g, n, std::move(a));
}

fl::MetricField anisotropic_stretch(const fl::MetricField& g,
                                    const fl::Frame& frame, double lambda) {
  if (!(lambda > 0.0))
    fail(ErrorCode::domain_error,
         "anisotropic factor must be positive, got " + repr_double(lambda));
  std::array<ex::ExprPtr, 3> xflat, yflat;
  for (int i = 0; i < 3; ++i) {
    xflat[i] = ex::num(0.0);
    yflat[i] = ex::num(0.0);
    for (int j = 0; j < 3; ++j) {
      xflat[i] = xflat[i] + g.entry(i, j) * frame.X.comp[j];
      yflat[i] = yflat[i] + g.entry(i, j) * frame.Y.comp[j];
    }
  }
  const double l2 = lambda * lambda;
  fl::MetricField out = g;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j)
      out.set_entry(i, j, g.entry(i, j) + (l2 - 1.0) * xflat[i] * xflat[j] +
                              (1.0 / l2 - 1.0) * yflat[i] * yflat[j]);
  return out;
}

FrameData anisotropic_frame_data(const FrameData& fd, double lambda) {
  if (!(lambda > 0.0))
    fail(ErrorCode::domain_error,
         "anisotropic factor must be positive, got " + repr_double(lambda));
  const double l2 = lambda * lambda;
  FrameData out;
  out.c = fd.c;
  out.bXY_X = lambda * fd.bXY_X;
  out.bXY_Y = fd.bXY_Y / lambda;
  out.bXn_X = fd.bXn_X;
  out.bXn_Y = fd.bXn_Y / l2;
  out.bYn_X = l2 * fd.bYn_X;
  out.bYn_Y = fd.bYn_Y;
  out.dX = fd.dX / l2;
  out.dY = l2 * fd.dY;
  return out;
}

double frame_rotation_check(const fl::MetricField& g, const fl::Frame& frame,
                            const Vec3& p, double theta) {
  const StretchCoefficients base =
      stretch_coefficients(extract_frame_data(g, frame, p));

  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  fl::Frame rotated;
  fl::Frame reflected;
  for (int k = 0; k < 3; ++k) {
    rotated.X.comp[k] = ct * frame.X.comp[k] + st * frame.Y.comp[k];
    rotated.Y.comp[k] = -st * frame.X.comp[k] + ct * frame.Y.comp[k];
    reflected.X.comp[k] = frame.Y.comp[k];
    reflected.Y.comp[k] = frame.X.comp[k];
  }
  rotated.n = frame.n;
  reflected.n = frame.n;

  double dev = 0.0;
  for (const fl::Frame* f : {&rotated, &reflected}) {
    const StretchCoefficients sc =
        stretch_coefficients(extract_frame_data(g, *f, p));
    dev = std::max(dev, std::fabs(sc.c2 - base.c2));
    dev = std::max(dev, std::fabs(sc.P - base.P));
    dev = std::max(dev, std::fabs(sc.E - base.E));
  }
  return dev;
}

// ---------------------------------------------------------------------------
// FrameDataField

namespace {
std::vector<ex::ExprPtr> frame_tape_roots(const FrameExprs& fe,
                                          const CoefficientExprs& ce) {
  return {fe.c,     fe.bXY_X, fe.bXY_Y, fe.bXn_X, fe.bXn_Y, fe.bYn_X,
          fe.bYn_Y, fe.dX,    fe.dY,    ce.c2,    ce.P,     ce.E};
}
}  // namespace

FrameDataField::FrameDataField(const fl::MetricField& g,
                               const fl::Frame& frame)
    : exprs_(frame_data_exprs(g, frame)),
      coeffs_(stretch_coefficient_exprs(exprs_)),
      tape_(frame_tape_roots(exprs_, coeffs_)) {}

std::array<double, 12> FrameDataField::eval_all(
    const Vec3& p, ex::EvalTape::Scratch& scratch) const {
  std::array<double, 12> out{};
  tape_.eval(p, scratch, out);
  for (double v : out)
    if (!std::isfinite(v))
      fail(ErrorCode::degeneracy, "frame data not finite at " + point_str(p));
  return out;
}

FrameData FrameDataField::data_at(const Vec3& p,
                                  ex::EvalTape::Scratch& scratch) const {
  const auto v = eval_all(p, scratch);
  FrameData fd;
  fd.c = v[0];
  fd.bXY_X = v[1];
  fd.bXY_Y = v[2];
  fd.bXn_X = v[3];
  fd.bXn_Y = v[4];
  fd.bYn_X = v[5];
  fd.bYn_Y = v[6];
  fd.dX = v[7];
  fd.dY = v[8];
  return fd;
}

StretchCoefficients FrameDataField::coefficients_at(
    const Vec3& p, ex::EvalTape::Scratch& scratch) const {
  const auto v = eval_all(p, scratch);
  return StretchCoefficients{v[9], v[10], v[11]};
}

FrameData FrameDataField::data_at(const Vec3& p) const {
  ex::EvalTape::Scratch scratch;
  return data_at(p, scratch);
}

StretchCoefficients FrameDataField::coefficients_at(const Vec3& p) const {
  ex::EvalTape::Scratch scratch;
  return coefficients_at(p, scratch);
}

}  // namespace distcurv::framecalc
