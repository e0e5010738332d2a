#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "distcurv/expr.hpp"
#include "distcurv/fields.hpp"
#include "distcurv/framecalc.hpp"
#include "distcurv/models.hpp"
#include "distcurv/riemann.hpp"
#include "doctest.h"

using namespace distcurv;
namespace ex = expr;
namespace fl = fields;
namespace fc = framecalc;
namespace rm = riemann;
namespace md = models;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::internal;
}

md::Model load_from_string(const std::string& text, const char* fname) {
  const std::string path = std::string("/tmp/") + fname;
  {
    std::ofstream out(path);
    out << text;
  }
  md::Model m = md::load_model(path);
  std::remove(path.c_str());
  return m;
}

ErrorCode load_error(const std::string& text, const char* fname) {
  const std::string path = std::string("/tmp/") + fname;
  {
    std::ofstream out(path);
    out << text;
  }
  ErrorCode code = ErrorCode::internal;
  try {
    md::load_model(path);
    FAIL("expected an error");
  } catch (const Error& e) {
    code = e.code();
  }
  std::remove(path.c_str());
  return code;
}

double form_on(const fl::OneForm& w, const fl::VectorField& v, const Vec3& p) {
  return dot(w.eval(p), v.eval(p));
}

}  // namespace

TEST_CASE("builtin catalogue and unknown names") {
  CHECK(md::builtin_names().size() == 6);
  for (const std::string& name : md::builtin_names()) {
    const md::Model m = md::builtin(name);
    CHECK(m.name == name);
  }
  CHECK(code_of([] { md::builtin("t4-nothing"); }) == ErrorCode::validation);
}

TEST_CASE("propeller model: frame identities and the transverse pair") {
  const md::Model m = md::builtin("t3-propeller");
  const fl::OneForm& alpha = m.one_forms.at("alpha");
  const fl::OneForm& beta = m.one_forms.at("beta");
  const fl::Frame& fr = m.frames.at("bicontact");

  SplitMix64 rng(2026);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 p = m.chart.sample(rng);
    CHECK(std::fabs(form_on(alpha, fr.X, p)) <= 1e-12);
    CHECK(std::fabs(form_on(beta, fr.X, p)) <= 1e-12);
    CHECK(std::fabs(form_on(alpha, fr.Y, p)) <= 1e-12);
    CHECK(form_on(beta, fr.Y, p) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(form_on(alpha, fr.n, p) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(form_on(beta, fr.n, p)) <= 1e-12);
  }

  const fl::TransversePairReport pair = fl::check_transverse_pair(
      m.chart, m.distributions.at("xi"), m.distributions.at("eta"),
      fl::GridSpec::uniform(8), &m.g);
  CHECK(pair.is_bicontact);
  CHECK(pair.first.sign == 1);
  CHECK(pair.second.sign == -1);
  CHECK(pair.min_measure > 0.0);
}

TEST_CASE("name resolution prefers distributions, falls back to forms") {
  const md::Model m = md::builtin("t3-propeller");
  const fl::Distribution xi = md::resolve_distribution(m, "xi");
  CHECK(xi.kind == fl::Distribution::Kind::kernel);

  const fl::Distribution by_form = md::resolve_distribution(m, "beta");
  CHECK(by_form.kind == fl::Distribution::Kind::kernel);
  const Vec3 p{0.7, 1.1, 2.3};
  const Vec3 want = m.one_forms.at("beta").eval(p);
  const Vec3 got = by_form.form.eval(p);
  for (int i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(want[i]));

  CHECK(code_of([&] { md::resolve_distribution(m, "gamma"); }) ==
        ErrorCode::validation);
}

TEST_CASE("frame selection: orthonormal shipped frames win, else Gram-Schmidt") {
  const md::Model prop = md::builtin("t3-propeller");
  const fl::Distribution xi = md::resolve_distribution(prop, "xi");
  // The bi-contact frame is adapted but not euclidean-orthonormal, so the
  // curvature path falls back to Gram-Schmidt.
  CHECK_FALSE(md::orthonormal_frame_for(prop, xi).has_value());
  const fl::Frame gs = md::adapted_frame(prop, xi);
  SplitMix64 rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec3 p = prop.chart.sample(rng);
    CHECK(fl::frame_gram_deviation(prop.g, gs, p) <= 1e-9);
  }

  const md::Model s3 = md::builtin("s3-round");
  const fl::Distribution s3xi = md::resolve_distribution(s3, "xi");
  REQUIRE(md::orthonormal_frame_for(s3, s3xi).has_value());

  // Bi-contact frame lookup by the pair of forms.
  const auto bf = md::bicontact_frame(prop, prop.one_forms.at("alpha"),
                                      prop.one_forms.at("beta"));
  REQUIRE(bf.has_value());
  const fl::Frame& shipped = prop.frames.at("bicontact");
  for (int trial = 0; trial < 10; ++trial) {
    const Vec3 p = prop.chart.sample(rng);
    for (int i = 0; i < 3; ++i) {
      CHECK(bf->X.eval(p)[i] == doctest::Approx(shipped.X.eval(p)[i]));
      CHECK(bf->Y.eval(p)[i] == doctest::Approx(shipped.Y.eval(p)[i]));
    }
  }
  CHECK_FALSE(
      md::bicontact_frame(prop, prop.one_forms.at("beta"),
                          prop.one_forms.at("alpha"))
          .has_value());
}

TEST_CASE("contact roles of the builtins match their construction") {
  struct Expectation {
    const char* model;
    bool contact;
    int sign;  // 0 = don't care when not contact
  };
  const Expectation table[] = {
      {"t3-propeller", true, 1},
      {"t3-flat-foliation", false, 0},
      {"r3-heisenberg", true, 1},
      {"s3-round", true, 1},
      {"hyperbolic-halfspace", false, 0},
  };
  for (const Expectation& e : table) {
    CAPTURE(e.model);
    const md::Model m = md::builtin(e.model);
    const fl::ContactReport rep = fl::check_contact(
        m.chart, m.distributions.at("xi"), fl::GridSpec::uniform(8), &m.g);
    CHECK(rep.is_contact == e.contact);
    if (e.contact) CHECK(rep.sign == e.sign);
  }

  // The foliation's invariant vanishes identically, not just on the grid.
  const md::Model flat = md::builtin("t3-flat-foliation");
  const ex::ExprPtr inv = fl::contact_invariant(flat.one_forms.at("alpha"));
  SplitMix64 rng(5150);
  for (int trial = 0; trial < 20; ++trial)
    CHECK(ex::eval(inv, flat.chart.sample(rng)) == 0.0);
}

TEST_CASE("round-sphere model: unit sectional curvature and shipped frame") {
  const md::Model m = md::builtin("s3-round");
  SplitMix64 rng(599);

  // Round-metric sanity: every 2-plane has curvature 1.
  int checked = 0;
  while (checked < 100) {
    const Vec3 p{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                 rng.uniform(-1.5, 1.5)};
    if (norm(p) > 1.5) continue;
    fl::VectorField S{{ex::num(rng.uniform(-1.0, 1.0)),
                       ex::num(rng.uniform(-1.0, 1.0)),
                       ex::num(rng.uniform(-1.0, 1.0))}};
    fl::VectorField T{{ex::num(rng.uniform(-1.0, 1.0)),
                       ex::num(rng.uniform(-1.0, 1.0)),
                       ex::num(rng.uniform(-1.0, 1.0))}};
    if (norm(cross(S.eval(p), T.eval(p))) < 0.3) continue;
    CHECK(rm::sectional_oracle(m.g, S, T, p) ==
          doctest::Approx(1.0).epsilon(1e-6));
    ++checked;
  }

  // The shipped frame is orthonormal with constant bracket data.
  const fl::Frame& fr = m.frames.at("adapted");
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 p{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                 rng.uniform(-1.5, 1.5)};
    CHECK(fl::frame_gram_deviation(m.g, fr, p) <= 1e-12);
    const fc::FrameData fd = fc::extract_frame_data(m.g, fr, p);
    CHECK(fd.c == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(fd.bXn_Y == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(fd.bYn_X == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(std::fabs(fd.bXY_X) <= 1e-9);
    CHECK(std::fabs(fd.bXY_Y) <= 1e-9);
    CHECK(std::fabs(fd.bXn_X) <= 1e-9);
    CHECK(std::fabs(fd.bYn_Y) <= 1e-9);
    CHECK(std::fabs(fd.dX) <= 1e-8);
    CHECK(std::fabs(fd.dY) <= 1e-8);
    const fc::StretchCoefficients sc = fc::stretch_coefficients(fd);
    CHECK(sc.c2 == doctest::Approx(4.0).epsilon(1e-9));
    CHECK(sc.P == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(std::fabs(sc.E) <= 1e-8);
    CHECK(fc::k_sectional_formula(sc, 1.0) == doctest::Approx(1.0).epsilon(1e-8));
  }

  // Oracle view of the contact plane: curvature 1, totally geodesic.
  rm::CurvatureOracle oracle(m.g, m.distributions.at("xi"));
  for (int trial = 0; trial < 20; ++trial) {
    Vec3 p{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
           rng.uniform(-1.5, 1.5)};
    const rm::CurvatureReport rep = oracle.at(p);
    CHECK(rep.K == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(std::fabs(rep.Ke) <= 1e-7);
    CHECK(rep.KG == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(std::fabs(rep.B_XX) <= 1e-7);
    CHECK(std::fabs(rep.B_XY) <= 1e-7);
    CHECK(std::fabs(rep.B_YY) <= 1e-7);
  }
}

TEST_CASE("constant-bracket model has no chart and Berger-family curvature") {
  const md::Model m = md::builtin("su2-constants");
  CHECK_FALSE(m.has_chart);
  REQUIRE(m.constant_data.has_value());
  const fc::StretchCoefficients sc = fc::stretch_coefficients(*m.constant_data);
  for (const double a : {0.5, 1.0, 2.0, 4.0}) {
    CHECK(fc::k_sectional_formula(sc, a) ==
          doctest::Approx(4.0 - 3.0 * a).epsilon(1e-14));
  }
  CHECK(code_of([&] { md::resolve_distribution(m, "xi"); }) ==
        ErrorCode::validation);
  const fl::Distribution dummy;
  CHECK_FALSE(md::orthonormal_frame_for(m, dummy).has_value());
}

TEST_CASE("hyperbolic model through the oracle") {
  const md::Model m = md::builtin("hyperbolic-halfspace");
  rm::CurvatureOracle oracle(m.g, m.distributions.at("xi"));
  SplitMix64 rng(8181);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec3 p = m.chart.sample(rng);
    const rm::CurvatureReport rep = oracle.at(p);
    CHECK(rep.K == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(rep.Ke == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::fabs(rep.KG) <= 1e-9);
    CHECK(std::fabs(rep.c) <= 1e-12);
  }
}

TEST_CASE("model files round-trip the propeller construction") {
  const std::string text = R"json({
    "name": "propeller-copy",
    "domain": [[0, 6.283185307179586, true],
               [0, 6.283185307179586, true],
               [0, 6.283185307179586, true]],
    "metric": {"g11": "1", "g12": "0", "g13": "0",
               "g22": "1", "g23": "0", "g33": "1"},
    "one_forms": {"alpha": ["cos(u3)", "-sin(u3)", "1"],
                  "beta": ["cos(u3)", "sin(u3)", "0"]},
    "distributions": {"xi": {"kernel": "alpha"},
                      "eta": {"kernel": "beta"},
                      "etaspan": {"span": [["sin(u3)", "-cos(u3)", "0"],
                                           ["0", "0", "-1"]]}},
    "frames": {"bicontact": {"X": ["-sin(u3)", "cos(u3)", "sin(2*u3)"],
                             "Y": ["cos(u3)", "sin(u3)", "-cos(2*u3)"],
                             "n": ["0", "0", "1"]}}
  })json";
  const md::Model loaded = load_from_string(text, "roundtrip.json");
  const md::Model ref = md::builtin("t3-propeller");

  CHECK(loaded.name == "propeller-copy");
  CHECK(loaded.chart.periodic[0]);
  CHECK(loaded.distributions.count("etaspan") == 1);

  SplitMix64 rng(27182);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 p = ref.chart.sample(rng);
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j)
        CHECK(std::fabs(ex::eval(loaded.g.entry(i, j), p) -
                        ex::eval(ref.g.entry(i, j), p)) <= 1e-12);
      CHECK(std::fabs(loaded.one_forms.at("alpha").eval(p)[i] -
                      ref.one_forms.at("alpha").eval(p)[i]) <= 1e-12);
      CHECK(std::fabs(loaded.one_forms.at("beta").eval(p)[i] -
                      ref.one_forms.at("beta").eval(p)[i]) <= 1e-12);
      CHECK(std::fabs(loaded.frames.at("bicontact").X.eval(p)[i] -
                      ref.frames.at("bicontact").X.eval(p)[i]) <= 1e-12);
      CHECK(std::fabs(loaded.frames.at("bicontact").n.eval(p)[i] -
                      ref.frames.at("bicontact").n.eval(p)[i]) <= 1e-12);
    }
  }

  // The loaded span distribution is usable by the oracle.
  rm::CurvatureOracle oracle(loaded.g, loaded.distributions.at("etaspan"));
  const rm::CurvatureReport rep = oracle.at({1.0, 2.0, 3.0});
  CHECK(rep.K == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(rep.Ke == doctest::Approx(-0.25).epsilon(1e-10));
}

TEST_CASE("model files: schema, parse, and degeneracy failures") {
  // Missing metric entry.
  CHECK(load_error(R"json({"name": "x", "domain": [[0,1],[0,1],[0,1]],
    "metric": {"g11": "1", "g12": "0", "g13": "0", "g22": "1", "g23": "0"}})json",
                   "missing-key.json") == ErrorCode::validation);
  // Lower-triangle key.
  CHECK(load_error(R"json({"name": "x", "domain": [[0,1],[0,1],[0,1]],
    "metric": {"g11": "1", "g21": "0", "g13": "0", "g22": "1", "g23": "0",
               "g33": "1"}})json",
                   "bad-key.json") == ErrorCode::validation);
  // Unknown top-level field.
  CHECK(load_error(R"json({"name": "x", "domain": [[0,1],[0,1],[0,1]],
    "metric": {"g11": "1", "g12": "0", "g13": "0", "g22": "1", "g23": "0",
               "g33": "1"}, "extra": 1})json",
                   "extra-field.json") == ErrorCode::validation);
  // Malformed expression.
  CHECK(load_error(R"json({"name": "x", "domain": [[0,1],[0,1],[0,1]],
    "metric": {"g11": "cos(", "g12": "0", "g13": "0", "g22": "1", "g23": "0",
               "g33": "1"}})json",
                   "bad-expr.json") == ErrorCode::parse_error);
  // Invalid JSON at all.
  CHECK(load_error("{", "not-json.json") == ErrorCode::parse_error);
  // Unreadable path.
  CHECK(code_of([] { md::load_model("/tmp/distcurv-no-such-file.json"); }) ==
        ErrorCode::parse_error);
  // Inverted domain.
  CHECK(load_error(R"json({"name": "x", "domain": [[1,0],[0,1],[0,1]],
    "metric": {"g11": "1", "g12": "0", "g13": "0", "g22": "1", "g23": "0",
               "g33": "1"}})json",
                   "bad-domain.json") == ErrorCode::validation);
  // Kernel of an unknown form.
  CHECK(load_error(R"json({"name": "x", "domain": [[0,1],[0,1],[0,1]],
    "metric": {"g11": "1", "g12": "0", "g13": "0", "g22": "1", "g23": "0",
               "g33": "1"},
    "distributions": {"xi": {"kernel": "nosuch"}}})json",
                   "bad-ref.json") == ErrorCode::validation);
  // A one-form vanishing at a grid point, named in the message.
  const std::string vanishing = R"json({"name": "x",
    "domain": [[0,1],[0,1],[0,1]],
    "metric": {"g11": "1", "g12": "0", "g13": "0", "g22": "1", "g23": "0",
               "g33": "1"},
    "one_forms": {"alpha": ["u3", "0", "0"]}})json";
  {
    const std::string path = "/tmp/vanishing.json";
    {
      std::ofstream out(path);
      out << vanishing;
    }
    try {
      md::load_model(path);
      FAIL("expected a degeneracy error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::degeneracy);
      CHECK(std::string(e.what()).find("vanishes at (") != std::string::npos);
    }
    std::remove(path.c_str());
  }
  // Indefinite metric.
  CHECK(load_error(R"json({"name": "x", "domain": [[-1,1],[-1,1],[-1,1]],
    "metric": {"g11": "u1", "g12": "0", "g13": "0", "g22": "1", "g23": "0",
               "g33": "1"}})json",
                   "bad-metric.json") == ErrorCode::degeneracy);
  // Non-periodic data on a periodic chart.
  CHECK(load_error(R"json({"name": "x", "domain": [[0,6.28,true],[0,1],[0,1]],
    "metric": {"g11": "1", "g12": "0", "g13": "0", "g22": "1", "g23": "0",
               "g33": "1"},
    "one_forms": {"alpha": ["cos(u1)", "0", "1"]}})json",
                   "not-periodic.json") == ErrorCode::validation);
  // A distribution must be exactly one of kernel / span.
  CHECK(load_error(R"json({"name": "x", "domain": [[0,1],[0,1],[0,1]],
    "metric": {"g11": "1", "g12": "0", "g13": "0", "g22": "1", "g23": "0",
               "g33": "1"},
    "one_forms": {"alpha": ["1", "0", "0"]},
    "distributions": {"xi": {"kernel": "alpha",
                             "span": [["1","0","0"],["0","1","0"]]}}})json",
                   "both-kinds.json") == ErrorCode::validation);
}
