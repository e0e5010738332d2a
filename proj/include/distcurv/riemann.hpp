#pragma once

#include <array>
#include <memory>

#include "distcurv/expr.hpp"
#include "distcurv/fields.hpp"
#include "distcurv/util.hpp"

namespace distcurv::riemann {

// Ground-truth curvature data of a distribution at a point, computed directly
// from the metric in coordinates.  Independent of every closed-form formula it
// is used to validate: only metric jets and field jets enter.
struct CurvatureReport {
  double K = 0.0;     // sectional curvature of the plane
  double Ke = 0.0;    // extrinsic curvature (det of B in a unit frame)
  double KG = 0.0;    // K + Ke
  double B_XX = 0.0;  // second fundamental form in the adapted frame
  double B_XY = 0.0;
  double B_YY = 0.0;
  double c = 0.0;     // <[X,Y], n> in the adapted frame
};

// Metric value with first and second coordinate derivatives at a point.
struct MetricJets {
  Mat3 g{};
  // dg[m][i][j] = d_m g_ij ; ddg[m][l][i][j] = d_m d_l g_ij.
  std::array<Mat3, 3> dg{};
  std::array<std::array<Mat3, 3>, 3> ddg{};
};

// Compiled evaluator for metric jets; reusable across many points.  Pass a
// per-thread Scratch for concurrent use.
class MetricEvaluator {
 public:
  explicit MetricEvaluator(const fields::MetricField& g);
  void jets(const Vec3& p, expr::EvalTape::Scratch& scratch,
            MetricJets& out) const;

 private:
  expr::EvalTape tape_;
};

// Christoffel symbols Gamma[k][i][j] and their coordinate derivatives
// dGamma[m][k][i][j], from jets alone.
struct Connection {
  std::array<Mat3, 3> gamma{};                  // gamma[k][i][j]
  std::array<std::array<Mat3, 3>, 3> dgamma{};  // dgamma[m][k][i][j]
  Mat3 ginv{};
};

Connection connection_from_jets(const MetricJets& jets);

// Curvature operator components R[l][i][j][k] with
// R(e_i, e_j) e_k = R[l][i][j][k] e_l.
using CurvatureComponents = std::array<std::array<Mat3, 3>, 3>;
CurvatureComponents curvature_from_connection(const Connection& conn);

// <R(S,T)U, V> at a point from precomputed tensors.
double riemann_pair(const MetricJets& jets, const CurvatureComponents& R,
                    const Vec3& S, const Vec3& T, const Vec3& U, const Vec3& V);

// ---------------------------------------------------------------------------
// Point-wise operations (convenience wrappers building evaluators on the fly;
// use CurvatureOracle for grid-scale work).

// Gamma[k][i][j] at p.
std::array<Mat3, 3> christoffel(const fields::MetricField& g, const Vec3& p);

// (nabla_S T)^k = S^i d_i T^k + Gamma^k_ij S^i T^j at p.
Vec3 covariant_derivative(const fields::MetricField& g,
                          const fields::VectorField& S,
                          const fields::VectorField& T, const Vec3& p);

// Sectional curvature of span(S, T) at p.
double sectional_oracle(const fields::MetricField& g,
                        const fields::VectorField& S,
                        const fields::VectorField& T, const Vec3& p);

// (B_XX, B_XY, B_YY) of the orthonormal frame at p; rejects frames whose Gram
// matrix deviates from the identity by more than 1e-8.
std::array<double, 3> second_fundamental_form(const fields::MetricField& g,
                                              const fields::Frame& frame,
                                              const Vec3& p);

// Extrinsic curvature from the quotient on an arbitrary spanning pair:
// (B(S,S)B(T,T) - B(S,T)^2) / (|S|^2|T|^2 - <S,T>^2), n the unit normal.
double extrinsic_quotient(const fields::MetricField& g,
                          const fields::VectorField& S,
                          const fields::VectorField& T, const Vec3& p);

// Full curvature report for a distribution at p (adapted frame built
// numerically per point; kernel forms use the per-point least-aligned axis).
CurvatureReport distribution_curvatures(const fields::MetricField& g,
                                        const fields::Distribution& d,
                                        const Vec3& p);

// ---------------------------------------------------------------------------
// Grid-scale oracle: compile (g, d) once, then evaluate at many points.
class CurvatureOracle {
 public:
  CurvatureOracle(const fields::MetricField& g, const fields::Distribution& d);
  ~CurvatureOracle();
  CurvatureOracle(CurvatureOracle&&) noexcept;
  CurvatureOracle& operator=(CurvatureOracle&&) noexcept;

  struct Scratch {
    expr::EvalTape::Scratch tape;
    std::vector<double> out;
  };

  CurvatureReport at(const Vec3& p, Scratch& scratch) const;
  CurvatureReport at(const Vec3& p) const;  // single-thread convenience

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace distcurv::riemann
