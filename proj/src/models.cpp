#include "distcurv/models.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <utility>

#include "json.hpp"

namespace distcurv::models {

namespace ex = expr;
namespace fl = fields;
namespace fc = framecalc;

using nlohmann::json;

namespace {

constexpr double kDegenerateTiny = 1e-12;
constexpr double kSpdTiny = 1e-14;
constexpr double kPeriodicTol = 1e-9;
constexpr double kFrameFitTol = 1e-8;

std::string point_str(const Vec3& p) {
  return "(" + repr_double(p[0]) + ", " + repr_double(p[1]) + ", " +
         repr_double(p[2]) + ")";
}

fl::VectorField vf(const char* a, const char* b, const char* c) {
  return fl::VectorField{{ex::parse(a), ex::parse(b), ex::parse(c)}};
}

fl::OneForm of(const char* a, const char* b, const char* c) {
  return fl::OneForm{{ex::parse(a), ex::parse(b), ex::parse(c)}};
}

Model propeller_model() {
  Model m;
  m.name = "t3-propeller";
  m.chart.lo = {0.0, 0.0, 0.0};
  m.chart.hi = {2.0 * std::numbers::pi, 2.0 * std::numbers::pi,
                2.0 * std::numbers::pi};
  m.chart.periodic = {true, true, true};
  m.g = fl::MetricField::euclidean();
  m.one_forms["alpha"] = of("cos(u3)", "-sin(u3)", "1");
  m.one_forms["beta"] = of("cos(u3)", "sin(u3)", "0");
  m.distributions["xi"] = fl::Distribution::kernel(m.one_forms["alpha"]);
  m.distributions["eta"] = fl::Distribution::kernel(m.one_forms["beta"]);
  m.frames["bicontact"] =
      fl::Frame{vf("-sin(u3)", "cos(u3)", "sin(2*u3)"),
                vf("cos(u3)", "sin(u3)", "-cos(2*u3)"), vf("0", "0", "1")};
  return m;
}

Model flat_foliation_model() {
  Model m;
  m.name = "t3-flat-foliation";
  m.chart.lo = {0.0, 0.0, 0.0};
  m.chart.hi = {2.0 * std::numbers::pi, 2.0 * std::numbers::pi,
                2.0 * std::numbers::pi};
  m.chart.periodic = {true, true, true};
  m.g = fl::MetricField::euclidean();
  m.one_forms["alpha"] = of("0", "0", "1");
  m.distributions["xi"] = fl::Distribution::kernel(m.one_forms["alpha"]);
  return m;
}

Model heisenberg_model() {
  Model m;
  m.name = "r3-heisenberg";
  m.chart.lo = {-1.0, -1.0, -1.0};
  m.chart.hi = {1.0, 1.0, 1.0};
  m.g = fl::MetricField::euclidean();
  m.one_forms["alpha"] = of("-u2", "0", "1");
  m.distributions["xi"] = fl::Distribution::kernel(m.one_forms["alpha"]);
  return m;
}

Model round_sphere_model() {
  Model m;
  m.name = "s3-round";
  m.chart.lo = {-2.0, -2.0, -2.0};
  m.chart.hi = {2.0, 2.0, 2.0};
  ex::ExprPtr conf = ex::parse("4/(1 + u1^2 + u2^2 + u3^2)^2");
  m.g = fl::MetricField::diagonal(conf, conf, conf);
  m.one_forms["alpha"] =
      of("2*(u1*u3 - u2)", "2*(u2*u3 + u1)", "1 - u1^2 - u2^2 + u3^2");
  m.distributions["xi"] = fl::Distribution::kernel(m.one_forms["alpha"]);
  m.frames["adapted"] = fl::Frame{
      vf("-u3 - u1*u2", "(u1^2 + u2^2 + u3^2 - 1)/2 - u2^2", "u1 - u2*u3"),
      vf("(1 - u1^2 - u2^2 - u3^2)/2 + u1^2", "u1*u2 - u3", "u2 + u1*u3"),
      vf("u1*u3 - u2", "u1 + u2*u3", "(1 - u1^2 - u2^2 - u3^2)/2 + u3^2")};
  return m;
}

Model hyperbolic_model() {
  Model m;
  m.name = "hyperbolic-halfspace";
  m.chart.lo = {-1.0, -1.0, 0.5};
  m.chart.hi = {1.0, 1.0, 2.0};
  ex::ExprPtr conf = ex::parse("1/u3^2");
  m.g = fl::MetricField::diagonal(conf, conf, conf);
  m.one_forms["alpha"] = of("0", "0", "1");
  m.distributions["xi"] = fl::Distribution::kernel(m.one_forms["alpha"]);
  return m;
}

Model su2_model() {
  Model m;
  m.name = "su2-constants";
  m.has_chart = false;
  fc::FrameData fd;
  fd.c = 2.0;      // [X,Y] = 2n
  fd.bYn_X = 2.0;  // [Y,n] = 2X
  fd.bXn_Y = -2.0; // [n,X] = 2Y
  m.constant_data = fd;
  return m;
}

// ---- validation -----------------------------------------------------------

void check_periodic(const fl::Chart& chart, const ex::ExprPtr& e,
                    const std::string& what) {
  const double mismatch = fl::periodic_mismatch(chart, e);
  if (!(mismatch <= kPeriodicTol))
    fail(ErrorCode::validation,
         what + " is not periodic across the chart wrap-around (mismatch " +
             repr_double(mismatch) + ")");
}

void check_metric(const Model& m, const std::vector<Vec3>& pts) {
  for (const Vec3& p : pts) {
    const Mat3 G = m.g.eval(p);
    const double m1 = G[0][0];
    const double m2 = G[0][0] * G[1][1] - G[0][1] * G[0][1];
    const double m3 = det3(G);
    if (!(m1 > kSpdTiny) || !(m2 > kSpdTiny) || !(m3 > kSpdTiny))
      fail(ErrorCode::degeneracy,
           "model '" + m.name + "': metric is not positive definite at " +
               point_str(p));
  }
}

void check_form(const Model& m, const std::string& name, const fl::OneForm& w,
                const std::vector<Vec3>& pts) {
  for (const Vec3& p : pts) {
    if (!(norm(w.eval(p)) > kDegenerateTiny))
      fail(ErrorCode::degeneracy, "model '" + m.name + "': one-form '" + name +
                                      "' vanishes at " + point_str(p));
  }
}

void check_distribution(const Model& m, const std::string& name,
                        const fl::Distribution& d,
                        const std::vector<Vec3>& pts) {
  if (d.kind == fl::Distribution::Kind::kernel) {
    check_form(m, "kernel of '" + name + "'", d.form, pts);
    return;
  }
  for (const Vec3& p : pts) {
    if (!(norm(cross(d.s.eval(p), d.t.eval(p))) > kDegenerateTiny))
      fail(ErrorCode::degeneracy, "model '" + m.name + "': distribution '" +
                                      name + "' degenerates at " +
                                      point_str(p));
  }
}

void check_frame(const Model& m, const std::string& name, const fl::Frame& f,
                 const std::vector<Vec3>& pts) {
  for (const Vec3& p : pts) {
    Mat3 F;
    F[0] = f.X.eval(p);
    F[1] = f.Y.eval(p);
    F[2] = f.n.eval(p);
    if (!(std::fabs(det3(F)) > kDegenerateTiny))
      fail(ErrorCode::degeneracy, "model '" + m.name + "': frame '" + name +
                                      "' degenerates at " + point_str(p));
  }
}

// Pointwise |w(V)| smallness relative to the factor norms, over a coarse grid.
bool annihilates(const Model& m, const fl::OneForm& w,
                 const fl::VectorField& V) {
  for (const Vec3& p : m.chart.grid_points(fl::GridSpec::uniform(5))) {
    const Vec3 wv = w.eval(p);
    const Vec3 vv = V.eval(p);
    if (!(std::fabs(dot(wv, vv)) <= kFrameFitTol * norm(wv) * norm(vv)))
      return false;
  }
  return true;
}

// ---- file loading ---------------------------------------------------------

[[noreturn]] void schema_fail(const std::string& field,
                              const std::string& reason) {
  fail(ErrorCode::validation, "model file: " + field + ": " + reason);
}

ex::ExprPtr parse_entry(const json& j, const std::string& field) {
  if (!j.is_string()) schema_fail(field, "expected an expression string");
  try {
    return ex::parse(j.get<std::string>());
  } catch (const Error& e) {
    fail(ErrorCode::parse_error, field + ": " + e.what());
  }
}

std::array<ex::ExprPtr, 3> parse_triple(const json& j,
                                        const std::string& field) {
  if (!j.is_array() || j.size() != 3)
    schema_fail(field, "expected an array of 3 expressions");
  return {parse_entry(j[0], field + "[0]"), parse_entry(j[1], field + "[1]"),
          parse_entry(j[2], field + "[2]")};
}

fl::Chart parse_domain(const json& j) {
  if (!j.is_array() || j.size() != 3)
    schema_fail("domain", "expected an array of 3 axis ranges");
  fl::Chart chart;
  for (int k = 0; k < 3; ++k) {
    const json& axis = j[k];
    const std::string field = "domain[" + std::to_string(k) + "]";
    if (!axis.is_array() || axis.size() < 2 || axis.size() > 3)
      schema_fail(field, "expected [min, max] or [min, max, periodic]");
    if (!axis[0].is_number() || !axis[1].is_number())
      schema_fail(field, "bounds must be numbers");
    chart.lo[k] = axis[0].get<double>();
    chart.hi[k] = axis[1].get<double>();
    if (!(chart.lo[k] < chart.hi[k]))
      schema_fail(field, "min must be below max");
    if (axis.size() == 3) {
      if (!axis[2].is_boolean()) schema_fail(field, "periodic flag must be a bool");
      chart.periodic[k] = axis[2].get<bool>();
    }
  }
  return chart;
}

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{
      "t3-propeller",     "t3-flat-foliation",    "r3-heisenberg",
      "s3-round",         "hyperbolic-halfspace", "su2-constants"};
  return names;
}

Model builtin(const std::string& name) {
  Model m;
  if (name == "t3-propeller") m = propeller_model();
  else if (name == "t3-flat-foliation") m = flat_foliation_model();
  else if (name == "r3-heisenberg") m = heisenberg_model();
  else if (name == "s3-round") m = round_sphere_model();
  else if (name == "hyperbolic-halfspace") m = hyperbolic_model();
  else if (name == "su2-constants") m = su2_model();
  else
    fail(ErrorCode::validation, "unknown builtin model '" + name + "'");
  validate_model(m);
  return m;
}

void validate_model(const Model& m) {
  if (!m.has_chart) {
    if (!m.constant_data)
      fail(ErrorCode::validation, "model '" + m.name +
                                      "' has neither a chart nor constant "
                                      "bracket data");
    return;
  }
  const std::vector<Vec3> pts = m.chart.grid_points(fl::GridSpec{});

  check_metric(m, pts);
  for (const auto& [name, w] : m.one_forms) check_form(m, name, w, pts);
  for (const auto& [name, d] : m.distributions)
    check_distribution(m, name, d, pts);
  for (const auto& [name, f] : m.frames) check_frame(m, name, f, pts);

  const bool any_periodic =
      m.chart.periodic[0] || m.chart.periodic[1] || m.chart.periodic[2];
  if (!any_periodic) return;
  const std::string ctx = "model '" + m.name + "': ";
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j)
      check_periodic(m.chart, m.g.entry(i, j), ctx + "metric entry");
  for (const auto& [name, w] : m.one_forms)
    for (const auto& comp : w.comp)
      check_periodic(m.chart, comp, ctx + "one-form '" + name + "'");
  for (const auto& [name, d] : m.distributions) {
    if (d.kind != fl::Distribution::Kind::span) continue;
    for (const auto& comp : d.s.comp)
      check_periodic(m.chart, comp, ctx + "distribution '" + name + "'");
    for (const auto& comp : d.t.comp)
      check_periodic(m.chart, comp, ctx + "distribution '" + name + "'");
  }
  for (const auto& [name, f] : m.frames)
    for (const fl::VectorField* v : {&f.X, &f.Y, &f.n})
      for (const auto& comp : v->comp)
        check_periodic(m.chart, comp, ctx + "frame '" + name + "'");
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    fail(ErrorCode::parse_error, "cannot open model file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error,
         "model file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) schema_fail("(root)", "expected a JSON object");

  static const std::array<const char*, 6> known{
      "name", "domain", "metric", "one_forms", "distributions", "frames"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) schema_fail(key, "unknown field");
  }

  Model m;
  if (!j.contains("name") || !j["name"].is_string())
    schema_fail("name", "expected a string");
  m.name = j["name"].get<std::string>();
  if (!j.contains("domain")) schema_fail("domain", "missing");
  m.chart = parse_domain(j["domain"]);

  if (!j.contains("metric") || !j["metric"].is_object())
    schema_fail("metric", "expected an object with the 6 upper-triangle keys");
  static const std::array<std::pair<const char*, std::pair<int, int>>, 6>
      metric_keys{{{"g11", {0, 0}}, {"g12", {0, 1}}, {"g13", {0, 2}},
                   {"g22", {1, 1}}, {"g23", {1, 2}}, {"g33", {2, 2}}}};
  const json& metric = j["metric"];
  for (const auto& [key, value] : metric.items()) {
    (void)value;
    bool ok = false;
    for (const auto& [k, ij] : metric_keys) ok = ok || key == k;
    if (!ok) schema_fail("metric." + key, "not an upper-triangle entry");
  }
  for (const auto& [key, ij] : metric_keys) {
    if (!metric.contains(key)) schema_fail(std::string("metric.") + key, "missing");
    m.g.set_entry(ij.first, ij.second,
                  parse_entry(metric[key], std::string("metric.") + key));
  }

  if (j.contains("one_forms")) {
    if (!j["one_forms"].is_object()) schema_fail("one_forms", "expected an object");
    for (const auto& [name, val] : j["one_forms"].items())
      m.one_forms[name] = fl::OneForm{parse_triple(val, "one_forms." + name)};
  }

  if (j.contains("distributions")) {
    if (!j["distributions"].is_object())
      schema_fail("distributions", "expected an object");
    for (const auto& [name, val] : j["distributions"].items()) {
      const std::string field = "distributions." + name;
      if (!val.is_object() || val.size() != 1)
        schema_fail(field, "expected exactly one of 'kernel' or 'span'");
      if (val.contains("kernel")) {
        if (!val["kernel"].is_string())
          schema_fail(field + ".kernel", "expected a one-form name");
        const std::string form = val["kernel"].get<std::string>();
        auto it = m.one_forms.find(form);
        if (it == m.one_forms.end())
          schema_fail(field + ".kernel", "unknown one-form '" + form + "'");
        m.distributions[name] = fl::Distribution::kernel(it->second);
      } else if (val.contains("span")) {
        const json& span = val["span"];
        if (!span.is_array() || span.size() != 2)
          schema_fail(field + ".span", "expected two spanning vector fields");
        m.distributions[name] = fl::Distribution::span(
            fl::VectorField{parse_triple(span[0], field + ".span[0]")},
            fl::VectorField{parse_triple(span[1], field + ".span[1]")});
      } else {
        schema_fail(field, "expected exactly one of 'kernel' or 'span'");
      }
    }
  }

  if (j.contains("frames")) {
    if (!j["frames"].is_object()) schema_fail("frames", "expected an object");
    for (const auto& [name, val] : j["frames"].items()) {
      const std::string field = "frames." + name;
      if (!val.is_object() || !val.contains("X") || !val.contains("Y") ||
          !val.contains("n"))
        schema_fail(field, "expected an object with X, Y, n");
      for (const auto& [key, sub] : val.items()) {
        (void)sub;
        if (key != "X" && key != "Y" && key != "n")
          schema_fail(field + "." + key, "unknown field");
      }
      m.frames[name] =
          fl::Frame{fl::VectorField{parse_triple(val["X"], field + ".X")},
                    fl::VectorField{parse_triple(val["Y"], field + ".Y")},
                    fl::VectorField{parse_triple(val["n"], field + ".n")}};
    }
  }

  validate_model(m);
  return m;
}

fl::Distribution resolve_distribution(const Model& m, const std::string& name) {
  auto dit = m.distributions.find(name);
  if (dit != m.distributions.end()) return dit->second;
  auto fit = m.one_forms.find(name);
  if (fit != m.one_forms.end()) return fl::Distribution::kernel(fit->second);
  fail(ErrorCode::validation, "model '" + m.name +
                                  "' has no distribution or one-form named '" +
                                  name + "'");
}

std::optional<fl::Frame> orthonormal_frame_for(const Model& m,
                                               const fl::Distribution& d) {
  if (!m.has_chart) return std::nullopt;
  const fl::OneForm w = fl::annihilator(d);
  for (const auto& [name, f] : m.frames) {
    (void)name;
    bool ok = annihilates(m, w, f.X) && annihilates(m, w, f.Y);
    for (const Vec3& p : m.chart.grid_points(fl::GridSpec::uniform(5))) {
      if (!ok) break;
      ok = fl::frame_gram_deviation(m.g, f, p) <= kFrameFitTol;
    }
    if (ok) return f;
  }
  return std::nullopt;
}

fl::Frame adapted_frame(const Model& m, const fl::Distribution& d) {
  if (auto f = orthonormal_frame_for(m, d)) return *f;
  return fl::gram_schmidt_adapted(m.g, d, m.chart);
}

std::optional<fl::Frame> bicontact_frame(const Model& m,
                                         const fl::OneForm& alpha,
                                         const fl::OneForm& beta) {
  if (!m.has_chart) return std::nullopt;
  for (const auto& [name, f] : m.frames) {
    (void)name;
    if (annihilates(m, alpha, f.X) && annihilates(m, alpha, f.Y) &&
        annihilates(m, beta, f.X))
      return f;
  }
  return std::nullopt;
}

}  // namespace distcurv::models
