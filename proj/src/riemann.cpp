#include "distcurv/riemann.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace distcurv::riemann {

namespace ex = expr;
namespace fl = fields;

namespace {

constexpr double kGramTiny = 1e-14;

// Root layout of every jet tape: 6 metric entries, 18 first derivatives,
// 36 second derivatives, then the distribution block.
constexpr std::size_t kMetricRoots = 60;

// Upper-triangle index of a symmetric pair: (0,0)->0 ... (2,2)->5.
int tri(int i, int j) {
  if (i > j) std::swap(i, j);
  return i * 3 - i * (i + 1) / 2 + j;
}

std::string point_str(const Vec3& p) {
  return "(" + repr_double(p[0]) + ", " + repr_double(p[1]) + ", " +
         repr_double(p[2]) + ")";
}

void append_metric_roots(const fl::MetricField& g,
                         std::vector<ex::ExprPtr>& roots) {
  std::array<ex::ExprPtr, 6> e;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) e[tri(i, j)] = g.entry(i, j);

  std::array<std::array<ex::ExprPtr, 6>, 3> de;
  for (int t = 0; t < 6; ++t) roots.push_back(e[t]);
  for (int m = 0; m < 3; ++m)
    for (int t = 0; t < 6; ++t) {
      de[m][t] = ex::derive(e[t], m);
      roots.push_back(de[m][t]);
    }
  // Unordered derivative pairs in upper-triangle order (m <= l).
  for (int m = 0; m < 3; ++m)
    for (int l = m; l < 3; ++l)
      for (int t = 0; t < 6; ++t) roots.push_back(ex::derive(de[m][t], l));
}

void unpack_jets(const double* out, MetricJets& jets) {
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      const double v = out[tri(i, j)];
      jets.g[i][j] = jets.g[j][i] = v;
    }
  for (int m = 0; m < 3; ++m)
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        const double v = out[6 + m * 6 + tri(i, j)];
        jets.dg[m][i][j] = jets.dg[m][j][i] = v;
      }
  for (int m = 0; m < 3; ++m)
    for (int l = m; l < 3; ++l) {
      const double* base = out + 24 + tri(m, l) * 6;
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
          const double v = base[tri(i, j)];
          jets.ddg[m][l][i][j] = jets.ddg[m][l][j][i] = v;
          jets.ddg[l][m][i][j] = jets.ddg[l][m][j][i] = v;
        }
    }
}

// adj(G) for symmetric G; a positive multiple of G^{-1} when G is SPD, with
// no division so near-degenerate metrics stay finite until the caller's guard.
Mat3 adjugate_sym(const Mat3& G) {
  Mat3 adj{};
  adj[0][0] = G[1][1] * G[2][2] - G[1][2] * G[2][1];
  adj[0][1] = adj[1][0] = G[0][2] * G[2][1] - G[0][1] * G[2][2];
  adj[0][2] = adj[2][0] = G[0][1] * G[1][2] - G[0][2] * G[1][1];
  adj[1][1] = G[0][0] * G[2][2] - G[0][2] * G[2][0];
  adj[1][2] = adj[2][1] = G[0][2] * G[1][0] - G[0][0] * G[1][2];
  adj[2][2] = G[0][0] * G[1][1] - G[0][1] * G[1][0];
  return adj;
}

// (nabla_A B)^k at a point, from field values, coordinate partials of B, and
// Christoffel symbols.
Vec3 cov_deriv_values(const std::array<Mat3, 3>& gamma, const Vec3& A,
                      const Vec3& B, const std::array<Vec3, 3>& dB) {
  Vec3 out{};
  for (int k = 0; k < 3; ++k) {
    double v = 0.0;
    for (int i = 0; i < 3; ++i) v += A[i] * dB[i][k];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) v += gamma[k][i][j] * A[i] * B[j];
    out[k] = v;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// MetricEvaluator

namespace {
std::vector<ex::ExprPtr> metric_only_roots(const fl::MetricField& g) {
  std::vector<ex::ExprPtr> roots;
  roots.reserve(kMetricRoots);
  append_metric_roots(g, roots);
  return roots;
}
}  // namespace

MetricEvaluator::MetricEvaluator(const fl::MetricField& g)
    : tape_(metric_only_roots(g)) {}

void MetricEvaluator::jets(const Vec3& p, ex::EvalTape::Scratch& scratch,
                           MetricJets& out) const {
  std::array<double, kMetricRoots> vals{};
  tape_.eval(p, scratch, vals);
  for (double v : vals)
    if (!std::isfinite(v))
      fail(ErrorCode::degeneracy, "metric jets not finite at " + point_str(p));
  unpack_jets(vals.data(), out);
}

// ---------------------------------------------------------------------------
// Connection and curvature tensor

Connection connection_from_jets(const MetricJets& jets) {
  Connection conn;
  conn.ginv = inv3(jets.g);
  const auto& dg = jets.dg;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int l = 0; l < 3; ++l)
          s += conn.ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
        conn.gamma[k][i][j] = 0.5 * s;
      }

  // d_m g^{kl} = -g^{ka} (d_m g_ab) g^{bl}
  std::array<Mat3, 3> dginv{};
  for (int m = 0; m < 3; ++m) {
    const Mat3 t = matmul(matmul(conn.ginv, dg[m]), conn.ginv);
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) dginv[m][k][l] = -t[k][l];
  }

  const auto& ddg = jets.ddg;
  for (int m = 0; m < 3; ++m)
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double s = 0.0;
          for (int l = 0; l < 3; ++l) {
            s += dginv[m][k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
            s += conn.ginv[k][l] *
                 (ddg[m][i][j][l] + ddg[m][j][i][l] - ddg[m][l][i][j]);
          }
          conn.dgamma[m][k][i][j] = 0.5 * s;
        }
  return conn;
}

CurvatureComponents curvature_from_connection(const Connection& conn) {
  CurvatureComponents R{};
  const auto& ga = conn.gamma;
  const auto& dga = conn.dgamma;
  for (int l = 0; l < 3; ++l)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          double v = dga[i][l][j][k] - dga[j][l][i][k];
          for (int m = 0; m < 3; ++m)
            v += ga[l][i][m] * ga[m][j][k] - ga[l][j][m] * ga[m][i][k];
          R[l][i][j][k] = v;
        }
  return R;
}

double riemann_pair(const MetricJets& jets, const CurvatureComponents& R,
                    const Vec3& S, const Vec3& T, const Vec3& U,
                    const Vec3& V) {
  Vec3 W{};
  for (int l = 0; l < 3; ++l) {
    double v = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) v += R[l][i][j][k] * S[i] * T[j] * U[k];
    W[l] = v;
  }
  return quad(jets.g, W, V);
}

// ---------------------------------------------------------------------------
// CurvatureOracle

struct CurvatureOracle::Impl {
  fl::Distribution::Kind kind;
  std::vector<ex::ExprPtr> roots;
  ex::EvalTape tape;

  Impl(const fl::MetricField& g, const fl::Distribution& d)
      : kind(d.kind), roots(build_roots(g, d)), tape(roots) {}

  static std::vector<ex::ExprPtr> build_roots(const fl::MetricField& g,
                                              const fl::Distribution& d) {
    std::vector<ex::ExprPtr> roots;
    append_metric_roots(g, roots);
    auto push_field = [&roots](const std::array<ex::ExprPtr, 3>& comp) {
      for (int k = 0; k < 3; ++k) roots.push_back(comp[k]);
      for (int m = 0; m < 3; ++m)
        for (int k = 0; k < 3; ++k) roots.push_back(ex::derive(comp[k], m));
    };
    if (d.kind == fl::Distribution::Kind::kernel) {
      push_field(d.form.comp);
    } else {
      push_field(d.s.comp);
      push_field(d.t.comp);
    }
    return roots;
  }
};

CurvatureOracle::CurvatureOracle(const fl::MetricField& g,
                                 const fl::Distribution& d)
    : impl_(std::make_unique<Impl>(g, d)) {}

CurvatureOracle::~CurvatureOracle() = default;
CurvatureOracle::CurvatureOracle(CurvatureOracle&&) noexcept = default;
CurvatureOracle& CurvatureOracle::operator=(CurvatureOracle&&) noexcept =
    default;

CurvatureReport CurvatureOracle::at(const Vec3& p, Scratch& scratch) const {
  const std::size_t n = impl_->tape.num_roots();
  scratch.out.resize(n);
  impl_->tape.eval(p, scratch.tape, scratch.out);
  for (double v : scratch.out)
    if (!std::isfinite(v))
      fail(ErrorCode::degeneracy,
           "curvature data not finite at " + point_str(p));

  MetricJets jets;
  unpack_jets(scratch.out.data(), jets);
  const Connection conn = connection_from_jets(jets);
  const CurvatureComponents R = curvature_from_connection(conn);

  // Spanning pair and its coordinate partials.
  Vec3 S{}, T{};
  std::array<Vec3, 3> dS{}, dT{};
  const double* f = scratch.out.data() + kMetricRoots;
  if (impl_->kind == fl::Distribution::Kind::kernel) {
    const Vec3 N{f[0], f[1], f[2]};
    std::array<Vec3, 3> dN{};
    for (int m = 0; m < 3; ++m)
      for (int k = 0; k < 3; ++k) dN[m][k] = f[3 + m * 3 + k];
    // Least-aligned coordinate axis at this point (ties: lowest index); the
    // resulting pair spans the kernel wherever N does not vanish.
    int axis = 0;
    for (int k = 1; k < 3; ++k)
      if (std::fabs(N[k]) < std::fabs(N[axis])) axis = k;
    Vec3 e{};
    e[axis] = 1.0;
    S = cross(N, e);
    T = cross(N, S);
    for (int m = 0; m < 3; ++m) {
      dS[m] = cross(dN[m], e);
      dT[m] = add(cross(dN[m], S), cross(N, dS[m]));
    }
  } else {
    for (int k = 0; k < 3; ++k) S[k] = f[k];
    for (int m = 0; m < 3; ++m)
      for (int k = 0; k < 3; ++k) dS[m][k] = f[3 + m * 3 + k];
    for (int k = 0; k < 3; ++k) T[k] = f[12 + k];
    for (int m = 0; m < 3; ++m)
      for (int k = 0; k < 3; ++k) dT[m][k] = f[15 + m * 3 + k];
  }

  const Mat3& G = jets.g;
  const double ss = quad(G, S, S);
  const double st = quad(G, S, T);
  const double tt = quad(G, T, T);
  const double gram = ss * tt - st * st;
  if (!(gram > kGramTiny * std::max(1.0, ss * tt)))
    fail(ErrorCode::degeneracy,
         "degenerate spanning pair at " + point_str(p));

  // Unit normal from the annihilator S x T raised with adj(G); positive
  // multiple of G^{-1}(S x T), so (S, T, n) is positively oriented.
  const Vec3 ndir = matvec(adjugate_sym(G), cross(S, T));
  const double nn = quad(G, ndir, ndir);
  if (!(nn > 0.0) || !std::isfinite(nn))
    fail(ErrorCode::degeneracy, "degenerate normal at " + point_str(p));
  const Vec3 nvec = scale(ndir, 1.0 / std::sqrt(nn));

  CurvatureReport rep;
  rep.K = riemann_pair(jets, R, S, T, T, S) / gram;

  const Vec3 covSS = cov_deriv_values(conn.gamma, S, S, dS);
  const Vec3 covST = cov_deriv_values(conn.gamma, S, T, dT);
  const Vec3 covTS = cov_deriv_values(conn.gamma, T, S, dS);
  const Vec3 covTT = cov_deriv_values(conn.gamma, T, T, dT);
  const double bss = quad(G, covSS, nvec);
  const double bst = 0.5 * (quad(G, covST, nvec) + quad(G, covTS, nvec));
  const double btt = quad(G, covTT, nvec);
  rep.Ke = (bss * btt - bst * bst) / gram;
  rep.KG = rep.K + rep.Ke;

  Vec3 bracket{};
  for (int k = 0; k < 3; ++k) {
    double v = 0.0;
    for (int i = 0; i < 3; ++i) v += S[i] * dT[i][k] - T[i] * dS[i][k];
    bracket[k] = v;
  }
  rep.c = quad(G, bracket, nvec) / std::sqrt(gram);

  // Components in the adapted Gram-Schmidt frame X = a11 S, Y = a21 S + a22 T
  // (the form is tensorial on the plane, so coefficients suffice).
  const double l1 = std::sqrt(ss);
  const double l2 = std::sqrt(gram / ss);
  const double a11 = 1.0 / l1;
  const double a21 = -st / (ss * l2);
  const double a22 = 1.0 / l2;
  rep.B_XX = a11 * a11 * bss;
  rep.B_XY = a11 * (a21 * bss + a22 * bst);
  rep.B_YY = a21 * a21 * bss + 2.0 * a21 * a22 * bst + a22 * a22 * btt;
  return rep;
}

CurvatureReport CurvatureOracle::at(const Vec3& p) const {
  Scratch scratch;
  return at(p, scratch);
}

// ---------------------------------------------------------------------------
// Point-wise wrappers

std::array<Mat3, 3> christoffel(const fl::MetricField& g, const Vec3& p) {
  MetricEvaluator me(g);
  ex::EvalTape::Scratch scratch;
  MetricJets jets;
  me.jets(p, scratch, jets);
  return connection_from_jets(jets).gamma;
}

Vec3 covariant_derivative(const fl::MetricField& g, const fl::VectorField& S,
                          const fl::VectorField& T, const Vec3& p) {
  const std::array<Mat3, 3> gamma = christoffel(g, p);
  const Vec3 Sv = S.eval(p);
  const Vec3 Tv = T.eval(p);
  std::array<Vec3, 3> dT{};
  for (int m = 0; m < 3; ++m)
    for (int k = 0; k < 3; ++k) dT[m][k] = ex::eval(ex::derive(T.comp[k], m), p);
  return cov_deriv_values(gamma, Sv, Tv, dT);
}

double sectional_oracle(const fl::MetricField& g, const fl::VectorField& S,
                        const fl::VectorField& T, const Vec3& p) {
  return CurvatureOracle(g, fl::Distribution::span(S, T)).at(p).K;
}

std::array<double, 3> second_fundamental_form(const fl::MetricField& g,
                                              const fl::Frame& frame,
                                              const Vec3& p) {
  const double dev = fl::frame_gram_deviation(g, frame, p);
  if (!(dev <= 1e-8))
    fail(ErrorCode::validation,
         "frame is not orthonormal at " + point_str(p) +
             " (gram deviation " + repr_double(dev) + ")");

  MetricEvaluator me(g);
  ex::EvalTape::Scratch scratch;
  MetricJets jets;
  me.jets(p, scratch, jets);
  const std::array<Mat3, 3> gamma = connection_from_jets(jets).gamma;

  const Vec3 Xv = frame.X.eval(p);
  const Vec3 Yv = frame.Y.eval(p);
  const Vec3 nv = frame.n.eval(p);
  auto partials = [&p](const fl::VectorField& F) {
    std::array<Vec3, 3> d{};
    for (int m = 0; m < 3; ++m)
      for (int k = 0; k < 3; ++k)
        d[m][k] = ex::eval(ex::derive(F.comp[k], m), p);
    return d;
  };
  const std::array<Vec3, 3> dX = partials(frame.X);
  const std::array<Vec3, 3> dY = partials(frame.Y);

  const Vec3 covXX = cov_deriv_values(gamma, Xv, Xv, dX);
  const Vec3 covXY = cov_deriv_values(gamma, Xv, Yv, dY);
  const Vec3 covYX = cov_deriv_values(gamma, Yv, Xv, dX);
  const Vec3 covYY = cov_deriv_values(gamma, Yv, Yv, dY);
  const double bxx = quad(jets.g, covXX, nv);
  const double bxy = 0.5 * (quad(jets.g, covXY, nv) + quad(jets.g, covYX, nv));
  const double byy = quad(jets.g, covYY, nv);
  return {bxx, bxy, byy};
}

double extrinsic_quotient(const fl::MetricField& g, const fl::VectorField& S,
                          const fl::VectorField& T, const Vec3& p) {
  return CurvatureOracle(g, fl::Distribution::span(S, T)).at(p).Ke;
}

CurvatureReport distribution_curvatures(const fl::MetricField& g,
                                        const fl::Distribution& d,
                                        const Vec3& p) {
  return CurvatureOracle(g, d).at(p);
}

}  // namespace distcurv::riemann
