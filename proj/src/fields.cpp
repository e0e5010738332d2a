#include "distcurv/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace distcurv::fields {

namespace ex = distcurv::expr;
using ex::num;

namespace {

constexpr double kContactMargin = 1e-9;
constexpr int kScoreGridN = 11;  // sampling density for load-style checks

std::string point_str(const Vec3& p) {
  return "(" + repr_double(p[0]) + ", " + repr_double(p[1]) + ", " +
         repr_double(p[2]) + ")";
}

// Symbolic cross product of component triples.
std::array<ExprPtr, 3> cross_expr(const std::array<ExprPtr, 3>& a,
                                  const std::array<ExprPtr, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1],
          a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

std::vector<Vec3> score_grid(const Chart& chart) {
  return chart.grid_points(GridSpec::uniform(kScoreGridN));
}

}  // namespace

std::vector<double> Chart::axis_samples(int axis, int count) const {
  if (count < 1) fail(ErrorCode::validation, "grid count must be >= 1");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  const double a = lo[axis], s = span(axis);
  if (count == 1) {
    out.push_back(a + 0.5 * s);
  } else if (periodic[axis]) {
    for (int i = 0; i < count; ++i) out.push_back(a + s * i / count);
  } else {
    for (int i = 0; i < count; ++i) out.push_back(a + s * i / (count - 1));
  }
  return out;
}

std::vector<Vec3> Chart::grid_points(const GridSpec& grid) const {
  const auto s1 = axis_samples(0, grid.n[0]);
  const auto s2 = axis_samples(1, grid.n[1]);
  const auto s3 = axis_samples(2, grid.n[2]);
  std::vector<Vec3> out;
  out.reserve(s1.size() * s2.size() * s3.size());
  for (double a : s1)
    for (double b : s2)
      for (double c : s3) out.push_back(Vec3{a, b, c});
  return out;
}

Vec3 Chart::sample(SplitMix64& rng) const {
  return Vec3{rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1]),
              rng.uniform(lo[2], hi[2])};
}

Vec3 VectorField::eval(const Vec3& u) const {
  return {ex::eval(comp[0], u), ex::eval(comp[1], u), ex::eval(comp[2], u)};
}

Vec3 OneForm::eval(const Vec3& u) const {
  return {ex::eval(comp[0], u), ex::eval(comp[1], u), ex::eval(comp[2], u)};
}

MetricField::MetricField()
    : e_{num(1), num(0), num(0), num(1), num(0), num(1)} {}

MetricField::MetricField(ExprPtr g11, ExprPtr g12, ExprPtr g13, ExprPtr g22,
                         ExprPtr g23, ExprPtr g33)
    : e_{std::move(g11), std::move(g12), std::move(g13),
         std::move(g22), std::move(g23), std::move(g33)} {}

MetricField MetricField::euclidean() { return MetricField(); }

MetricField MetricField::diagonal(ExprPtr g11, ExprPtr g22, ExprPtr g33) {
  return MetricField(std::move(g11), num(0), num(0), std::move(g22), num(0),
                     std::move(g33));
}

namespace {
int tri_index(int i, int j) {
  if (i > j) std::swap(i, j);
  if (i == 0) return j;          // 0,1,2
  if (i == 1) return 2 + j;      // 3,4
  return 5;                      // 2,2
}
}  // namespace

const ExprPtr& MetricField::entry(int i, int j) const {
  return e_[tri_index(i, j)];
}

void MetricField::set_entry(int i, int j, ExprPtr e) {
  e_[tri_index(i, j)] = std::move(e);
}

Mat3 MetricField::eval(const Vec3& u) const {
  Mat3 m{};
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) m[i][j] = m[j][i] = ex::eval(entry(i, j), u);
  return m;
}

MetricField MetricField::scaled(const ExprPtr& factor) const {
  MetricField out = *this;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) out.set_entry(i, j, factor * entry(i, j));
  return out;
}

Distribution Distribution::kernel(OneForm alpha) {
  Distribution d;
  d.kind = Kind::kernel;
  d.form = std::move(alpha);
  return d;
}

Distribution Distribution::span(VectorField first, VectorField second) {
  Distribution d;
  d.kind = Kind::span;
  d.s = std::move(first);
  d.t = std::move(second);
  return d;
}

VectorField lie_bracket(const VectorField& S, const VectorField& T) {
  VectorField out;
  for (int k = 0; k < 3; ++k) {
    ExprPtr acc = num(0);
    for (int i = 0; i < 3; ++i) {
      acc = acc + S.comp[i] * ex::derive(T.comp[k], i) -
            T.comp[i] * ex::derive(S.comp[k], i);
    }
    out.comp[k] = acc;
  }
  return out;
}

ExprPtr metric_pair_expr(const MetricField& g, const VectorField& S,
                         const VectorField& T) {
  ExprPtr acc = num(0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      acc = acc + S.comp[i] * g.entry(i, j) * T.comp[j];
  return acc;
}

double metric_pair(const MetricField& g, const VectorField& S,
                   const VectorField& T, const Vec3& p) {
  return ex::eval(metric_pair_expr(g, S, T), p);
}

ExprPtr contact_invariant(const OneForm& alpha) {
  const auto& a = alpha.comp;
  ExprPtr curl1 = ex::derive(a[2], 1) - ex::derive(a[1], 2);
  ExprPtr curl2 = ex::derive(a[0], 2) - ex::derive(a[2], 0);
  ExprPtr curl3 = ex::derive(a[1], 0) - ex::derive(a[0], 1);
  return a[0] * curl1 + a[1] * curl2 + a[2] * curl3;
}

OneForm annihilator(const Distribution& d) {
  if (d.kind == Distribution::Kind::kernel) return d.form;
  return OneForm{cross_expr(d.s.comp, d.t.comp)};
}

std::pair<VectorField, VectorField> kernel_to_span(const OneForm& alpha,
                                                   const Chart& chart) {
  // Score each coordinate axis by its worst-case alignment with the form.
  double score[3] = {0.0, 0.0, 0.0};
  for (const Vec3& p : score_grid(chart)) {
    const Vec3 a = alpha.eval(p);
    const double n = norm(a);
    if (!(n > 1e-12) || !std::isfinite(n))
      fail(ErrorCode::degeneracy,
           "kernel form vanishes (or is non-finite) at " + point_str(p));
    for (int k = 0; k < 3; ++k)
      score[k] = std::max(score[k], std::abs(a[k]) / n);
  }
  int best = 0;
  for (int k = 1; k < 3; ++k)
    if (score[k] < score[best]) best = k;
  if (score[best] * score[best] > 1.0 - 1e-6)
    fail(ErrorCode::degeneracy,
         "no coordinate axis stays transverse to the kernel form over the "
         "chart (best axis u" + std::to_string(best + 1) + ")");

  std::array<ExprPtr, 3> ek{num(best == 0 ? 1 : 0), num(best == 1 ? 1 : 0),
                            num(best == 2 ? 1 : 0)};
  VectorField S{cross_expr(alpha.comp, ek)};
  VectorField T{cross_expr(alpha.comp, S.comp)};
  return {S, T};
}

namespace {

// Spanning pair of a distribution as symbolic fields (kernel form converted
// through the axis rule).
std::pair<VectorField, VectorField> spanning_pair(const Distribution& d,
                                                  const Chart& chart) {
  if (d.kind == Distribution::Kind::span) return {d.s, d.t};
  return kernel_to_span(d.form, chart);
}

struct SpanEvaluator {
  // Tape layout: S(3), T(3), dS(9 by [axis][comp]), dT(9), g(6).
  ex::EvalTape tape;
  mutable ex::EvalTape::Scratch scratch;
  mutable std::vector<double> out;

  static std::vector<ExprPtr> roots(const VectorField& S, const VectorField& T,
                                    const MetricField& g) {
    std::vector<ExprPtr> r;
    for (int k = 0; k < 3; ++k) r.push_back(S.comp[k]);
    for (int k = 0; k < 3; ++k) r.push_back(T.comp[k]);
    for (int ax = 0; ax < 3; ++ax)
      for (int k = 0; k < 3; ++k) r.push_back(ex::derive(S.comp[k], ax));
    for (int ax = 0; ax < 3; ++ax)
      for (int k = 0; k < 3; ++k) r.push_back(ex::derive(T.comp[k], ax));
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) r.push_back(g.entry(i, j));
    return r;
  }

  SpanEvaluator(const VectorField& S, const VectorField& T,
                const MetricField& g)
      : tape(roots(S, T, g)) {
    out.resize(tape.num_roots());
  }

  // Adapted-frame bracket scalar <[S,T], n>/sqrt(Gram) at p.
  double adapted_c(const Vec3& p) const {
    tape.eval(p, scratch, out);
    const double* v = out.data();
    Vec3 S{v[0], v[1], v[2]}, T{v[3], v[4], v[5]};
    Vec3 bracket{};
    for (int k = 0; k < 3; ++k) {
      double acc = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double dTi_k = v[15 + 3 * i + k];  // d_i T^k
        const double dSi_k = v[6 + 3 * i + k];   // d_i S^k
        acc += S[i] * dTi_k - T[i] * dSi_k;
      }
      bracket[k] = acc;
    }
    Mat3 G{};
    const double* gv = v + 24;
    G[0][0] = gv[0];
    G[0][1] = G[1][0] = gv[1];
    G[0][2] = G[2][0] = gv[2];
    G[1][1] = gv[3];
    G[1][2] = G[2][1] = gv[4];
    G[2][2] = gv[5];

    const double ss = quad(G, S, S), tt = quad(G, T, T), st = quad(G, S, T);
    const double gram = ss * tt - st * st;
    if (!(gram > 1e-14 * std::max(1.0, ss * tt)) || !std::isfinite(gram))
      fail(ErrorCode::degeneracy,
           "spanning fields are parallel at " + point_str(p));
    // Unit normal: raise the annihilator S x T with adj(G) (positive multiple
    // of G^{-1}(S x T), so (S, T, n) is positively oriented).
    const Vec3 w = cross(S, T);
    Mat3 adj{};
    adj[0][0] = G[1][1] * G[2][2] - G[1][2] * G[2][1];
    adj[0][1] = adj[1][0] = G[0][2] * G[2][1] - G[0][1] * G[2][2];
    adj[0][2] = adj[2][0] = G[0][1] * G[1][2] - G[0][2] * G[1][1];
    adj[1][1] = G[0][0] * G[2][2] - G[0][2] * G[2][0];
    adj[1][2] = adj[2][1] = G[0][2] * G[1][0] - G[0][0] * G[1][2];
    adj[2][2] = G[0][0] * G[1][1] - G[0][1] * G[1][0];
    Vec3 ndir = matvec(adj, w);
    const double nn = quad(G, ndir, ndir);
    if (!(nn > 0.0) || !std::isfinite(nn))
      fail(ErrorCode::degeneracy, "degenerate normal at " + point_str(p));
    Vec3 n = scale(ndir, 1.0 / std::sqrt(nn));
    return quad(G, bracket, n) / std::sqrt(gram);
  }
};

ContactReport summarize_contact(const std::vector<Vec3>& pts,
                                const std::vector<double>& values) {
  ContactReport rep;
  rep.min_abs = std::numeric_limits<double>::infinity();
  bool all_pos = true, all_neg = true;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double c = values[i];
    if (!std::isfinite(c))
      fail(ErrorCode::degeneracy,
           "contact invariant non-finite at " + point_str(pts[i]));
    if (std::abs(c) < rep.min_abs) {
      rep.min_abs = std::abs(c);
      rep.argmin = pts[i];
    }
    all_pos = all_pos && c > 0.0;
    all_neg = all_neg && c < 0.0;
  }
  rep.is_contact = rep.min_abs >= kContactMargin;
  rep.sign = all_pos ? 1 : (all_neg ? -1 : 0);
  return rep;
}

}  // namespace

ContactReport check_contact(const Chart& chart, const Distribution& d,
                            const GridSpec& grid, const MetricField* g) {
  const auto pts = chart.grid_points(grid);
  std::vector<double> values;
  values.reserve(pts.size());
  if (d.kind == Distribution::Kind::kernel) {
    ExprPtr c = contact_invariant(d.form);
    std::vector<ExprPtr> roots{c};
    ex::EvalTape tape(roots);
    ex::EvalTape::Scratch scratch;
    double out[1];
    for (const Vec3& p : pts) {
      tape.eval(p, scratch, std::span<double>(out, 1));
      values.push_back(out[0]);
    }
  } else {
    MetricField euclid;
    const MetricField& metric = g ? *g : euclid;
    SpanEvaluator se(d.s, d.t, metric);
    for (const Vec3& p : pts) values.push_back(se.adapted_c(p));
  }
  return summarize_contact(pts, values);
}

TransversePairReport check_transverse_pair(const Chart& chart,
                                           const Distribution& d1,
                                           const Distribution& d2,
                                           const GridSpec& grid,
                                           const MetricField* g) {
  TransversePairReport rep;
  rep.first = check_contact(chart, d1, grid, g);
  rep.second = check_contact(chart, d2, grid, g);

  const OneForm w1 = annihilator(d1);
  const OneForm w2 = annihilator(d2);
  std::vector<ExprPtr> roots;
  for (int k = 0; k < 3; ++k) roots.push_back(w1.comp[k]);
  for (int k = 0; k < 3; ++k) roots.push_back(w2.comp[k]);
  ex::EvalTape tape(roots);
  ex::EvalTape::Scratch scratch;
  std::array<double, 6> out{};

  rep.min_measure = std::numeric_limits<double>::infinity();
  for (const Vec3& p : chart.grid_points(grid)) {
    tape.eval(p, scratch, out);
    const Vec3 a{out[0], out[1], out[2]}, b{out[3], out[4], out[5]};
    const double na = norm(a), nb = norm(b);
    if (!(na > 1e-12) || !(nb > 1e-12))
      fail(ErrorCode::degeneracy,
           "annihilator vanishes at " + point_str(p));
    const double m = norm(cross(a, b)) / (na * nb);
    if (m < rep.min_measure) {
      rep.min_measure = m;
      rep.argmin = p;
    }
  }
  rep.is_bicontact = rep.first.is_contact && rep.second.is_contact &&
                     rep.first.sign * rep.second.sign == -1 &&
                     rep.min_measure > kContactMargin;
  return rep;
}

Frame gram_schmidt_adapted(const MetricField& g, const Distribution& d,
                           const Chart& chart) {
  auto [S, T] = spanning_pair(d, chart);

  ExprPtr l1sq = metric_pair_expr(g, S, S);
  ExprPtr ts = metric_pair_expr(g, T, S);
  ExprPtr tt = metric_pair_expr(g, T, T);
  ExprPtr l2sq = tt - ts * ts / l1sq;

  VectorField X, Yp, Y;
  ExprPtr l1 = ex::sqrt(l1sq);
  for (int k = 0; k < 3; ++k) X.comp[k] = S.comp[k] / l1;
  for (int k = 0; k < 3; ++k)
    Yp.comp[k] = T.comp[k] - (ts / l1sq) * S.comp[k];
  ExprPtr l2 = ex::sqrt(l2sq);
  for (int k = 0; k < 3; ++k) Y.comp[k] = Yp.comp[k] / l2;

  // Unit normal from the annihilator, raised with the symbolic adjugate.
  const OneForm w = annihilator(d);
  std::array<std::array<ExprPtr, 3>, 3> adj;
  adj[0][0] = g.entry(1, 1) * g.entry(2, 2) - g.entry(1, 2) * g.entry(2, 1);
  adj[0][1] = g.entry(0, 2) * g.entry(2, 1) - g.entry(0, 1) * g.entry(2, 2);
  adj[0][2] = g.entry(0, 1) * g.entry(1, 2) - g.entry(0, 2) * g.entry(1, 1);
  adj[1][0] = adj[0][1];
  adj[1][1] = g.entry(0, 0) * g.entry(2, 2) - g.entry(0, 2) * g.entry(2, 0);
  adj[1][2] = g.entry(0, 2) * g.entry(1, 0) - g.entry(0, 0) * g.entry(1, 2);
  adj[2][0] = adj[0][2];
  adj[2][1] = adj[1][2];
  adj[2][2] = g.entry(0, 0) * g.entry(1, 1) - g.entry(0, 1) * g.entry(1, 0);

  VectorField ndir;
  for (int k = 0; k < 3; ++k) {
    ndir.comp[k] =
        adj[k][0] * w.comp[0] + adj[k][1] * w.comp[1] + adj[k][2] * w.comp[2];
  }
  ExprPtr nnormsq = metric_pair_expr(g, ndir, ndir);
  ExprPtr nnorm = ex::sqrt(nnormsq);
  VectorField n;
  for (int k = 0; k < 3; ++k) n.comp[k] = ndir.comp[k] / nnorm;

  // Numeric nondegeneracy / positive-definiteness pass over a sampling grid.
  std::vector<ExprPtr> roots{l1sq, l2sq, nnormsq,
                             g.entry(0, 0),
                             g.entry(0, 0) * g.entry(1, 1) -
                                 g.entry(0, 1) * g.entry(0, 1)};
  {
    ExprPtr det = g.entry(0, 0) * adj[0][0] + g.entry(0, 1) * adj[1][0] +
                  g.entry(0, 2) * adj[2][0];
    roots.push_back(det);
  }
  ex::EvalTape tape(roots);
  ex::EvalTape::Scratch scratch;
  std::array<double, 6> out{};
  for (const Vec3& p : score_grid(chart)) {
    tape.eval(p, scratch, out);
    if (!(out[3] > 0.0) || !(out[4] > 0.0) || !(out[5] > 0.0))
      fail(ErrorCode::degeneracy,
           "metric is not positive-definite at " + point_str(p));
    if (!(out[0] > 1e-12) || !(out[1] > 1e-12) || !(out[2] > 1e-24))
      fail(ErrorCode::degeneracy,
           "degenerate spanning pair for the adapted frame at " +
               point_str(p));
    for (double v : out)
      if (!std::isfinite(v))
        fail(ErrorCode::degeneracy,
             "non-finite frame data at " + point_str(p));
  }
  return Frame{X, Y, n};
}

double frame_gram_deviation(const MetricField& g, const Frame& f,
                            const Vec3& p) {
  const VectorField* v[3] = {&f.X, &f.Y, &f.n};
  double dev = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double want = i == j ? 1.0 : 0.0;
      dev = std::max(dev, std::abs(metric_pair(g, *v[i], *v[j], p) - want));
    }
  return dev;
}

double periodic_mismatch(const Chart& chart, const ExprPtr& e) {
  double worst = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    if (!chart.periodic[axis]) continue;
    const int oa = (axis + 1) % 3, ob = (axis + 2) % 3;
    const auto sa = chart.axis_samples(oa, 7);
    const auto sb = chart.axis_samples(ob, 7);
    for (double va : sa)
      for (double vb : sb) {
        Vec3 p{};
        p[oa] = va;
        p[ob] = vb;
        p[axis] = chart.lo[axis];
        const double at_lo = ex::eval(e, p);
        p[axis] = chart.hi[axis];
        const double at_hi = ex::eval(e, p);
        worst = std::max(worst, std::abs(at_hi - at_lo));
      }
  }
  return worst;
}

}  // namespace distcurv::fields
