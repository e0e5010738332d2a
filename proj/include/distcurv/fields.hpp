#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "distcurv/expr.hpp"
#include "distcurv/util.hpp"

namespace distcurv::fields {

using expr::ExprPtr;

// Per-axis sample counts of a uniform lattice over the chart box.  Box axes
// include both endpoints; periodic axes drop the (identified) right endpoint.
struct GridSpec {
  std::array<int, 3> n{16, 16, 16};
  static GridSpec uniform(int count) { return GridSpec{{count, count, count}}; }
};

struct Chart {
  std::array<double, 3> lo{0.0, 0.0, 0.0};
  std::array<double, 3> hi{1.0, 1.0, 1.0};
  std::array<bool, 3> periodic{false, false, false};

  double span(int axis) const { return hi[axis] - lo[axis]; }
  std::vector<double> axis_samples(int axis, int count) const;
  // Row-major over (i1, i2, i3); deterministic order for output assembly.
  std::vector<Vec3> grid_points(const GridSpec& grid) const;
  // Uniform random point in the box (periodic axes: [lo, hi)).
  Vec3 sample(SplitMix64& rng) const;
};

struct VectorField {
  std::array<ExprPtr, 3> comp;
  Vec3 eval(const Vec3& u) const;
};

struct OneForm {
  std::array<ExprPtr, 3> comp;
  Vec3 eval(const Vec3& u) const;
};

class MetricField {
 public:
  // Defaults to the euclidean metric.
  MetricField();
  MetricField(ExprPtr g11, ExprPtr g12, ExprPtr g13, ExprPtr g22, ExprPtr g23,
              ExprPtr g33);
  static MetricField euclidean();
  static MetricField diagonal(ExprPtr g11, ExprPtr g22, ExprPtr g33);

  const ExprPtr& entry(int i, int j) const;  // symmetric indexing
  void set_entry(int i, int j, ExprPtr e);
  Mat3 eval(const Vec3& u) const;
  // Scale every entry by a (symbolic) constant.
  MetricField scaled(const ExprPtr& factor) const;

 private:
  // Upper triangle: g11, g12, g13, g22, g23, g33.
  std::array<ExprPtr, 6> e_;
};

struct Distribution {
  enum class Kind { kernel, span };
  Kind kind = Kind::kernel;
  OneForm form;        // kind == kernel
  VectorField s, t;    // kind == span

  static Distribution kernel(OneForm alpha);
  static Distribution span(VectorField first, VectorField second);
};

struct Frame {
  VectorField X, Y, n;
};

// [S,T]^k = S^i d_i T^k - T^i d_i S^k, closed form.
VectorField lie_bracket(const VectorField& S, const VectorField& T);

// <S,T>_g as a closed form / evaluated at a point.
ExprPtr metric_pair_expr(const MetricField& g, const VectorField& S,
                         const VectorField& T);
double metric_pair(const MetricField& g, const VectorField& S,
                   const VectorField& T, const Vec3& p);

// Scalar c with alpha ^ d(alpha) = c du1^du2^du3; nonvanishing iff the kernel
// is a contact structure, sign relative to the chart orientation.
ExprPtr contact_invariant(const OneForm& alpha);

// Covector field annihilating the distribution: the kernel form itself, or
// the componentwise cross product s x t for a span (metric-free).
OneForm annihilator(const Distribution& d);

// Spanning pair for ker(alpha) that is total on the chart: pick the
// coordinate axis least aligned with the form over a scoring grid (tie-break:
// lowest index), then S = N x e_k, T = N x S with N the component vector.
std::pair<VectorField, VectorField> kernel_to_span(const OneForm& alpha,
                                                   const Chart& chart);

struct ContactReport {
  bool is_contact = false;
  double min_abs = 0.0;   // min |invariant| over the grid
  int sign = 0;           // +1 / -1 when of constant sign, else 0
  Vec3 argmin{};
};

// Kernel distributions use the form's contact invariant; span distributions
// need g to build the adapted transversal and use <[S,T], n>/sqrt(Gram).
ContactReport check_contact(const Chart& chart, const Distribution& d,
                            const GridSpec& grid,
                            const MetricField* g = nullptr);

struct TransversePairReport {
  ContactReport first;
  ContactReport second;
  double min_measure = 0.0;  // scale-invariant |w1 x w2|/(|w1||w2|)
  Vec3 argmin{};
  bool is_bicontact = false;
};

TransversePairReport check_transverse_pair(const Chart& chart,
                                           const Distribution& d1,
                                           const Distribution& d2,
                                           const GridSpec& grid,
                                           const MetricField* g = nullptr);

// Symbolic Gram-Schmidt: X, Y orthonormal spanning d, n the unit g-normal,
// (X, Y, n) positively oriented.  Degeneracy is checked numerically on a
// sampling grid over the chart.
Frame gram_schmidt_adapted(const MetricField& g, const Distribution& d,
                           const Chart& chart);

// Max Gram-matrix deviation from the identity at a point (orthonormality
// measure used by preconditions).
double frame_gram_deviation(const MetricField& g, const Frame& f,
                            const Vec3& p);

// Numeric periodicity check of an expression across the wrap-around of each
// periodic axis; returns max mismatch over a sampling grid.
double periodic_mismatch(const Chart& chart, const ExprPtr& e);

}  // namespace distcurv::fields
