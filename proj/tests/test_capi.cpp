#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include "json.hpp"

#include "distcurv.h"

namespace {

// Owns one out-string from the API.
struct Out {
  char* p = nullptr;
  ~Out() { distcurv_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

struct ModelGuard {
  distcurv_model* m = nullptr;
  explicit ModelGuard(distcurv_model* handle) : m(handle) {}
  ~ModelGuard() { distcurv_close(m); }
};

std::string write_temp_model(const std::string& body) {
  std::string path = "/tmp/capi_model_fixture.json";
  std::ofstream(path) << body;
  return path;
}

constexpr const char* kMinimalModel = R"json({
  "name": "file-propeller",
  "domain": [[0, 6.283185307179586, true],
             [0, 6.283185307179586, true],
             [0, 6.283185307179586, true]],
  "metric": {"g11": "1", "g12": "0", "g13": "0",
             "g22": "1", "g23": "0", "g33": "1"},
  "one_forms": {"alpha": ["cos(u3)", "-sin(u3)", "1"]},
  "distributions": {"xi": {"kernel": "alpha"}}
})json";

}  // namespace

TEST_CASE("version and catalog") {
  CHECK(std::strcmp(distcurv_version(), "1.0.0") == 0);
  char* names = distcurv_builtin_models();
  REQUIRE(names != nullptr);
  std::string all(names);
  distcurv_free(names);
  CHECK(all.find("t3-propeller\n") != std::string::npos);
  CHECK(all.find("hyperbolic-halfspace\n") != std::string::npos);
  CHECK(all.find("su2-constants\n") != std::string::npos);
}

TEST_CASE("model handles open and close") {
  distcurv_model* m = distcurv_open_builtin("t3-propeller");
  REQUIRE(m != nullptr);
  CHECK(std::strcmp(distcurv_model_name(m), "t3-propeller") == 0);
  distcurv_close(m);

  CHECK(distcurv_open_builtin("no-such-model") == nullptr);
  CHECK(distcurv_last_error_code() == DISTCURV_VALIDATION);
  CHECK(std::strlen(distcurv_last_error_message()) > 0);
  CHECK(distcurv_open_builtin(nullptr) == nullptr);
  CHECK(distcurv_last_error_code() == DISTCURV_VALIDATION);

  std::string path = write_temp_model(kMinimalModel);
  distcurv_model* f = distcurv_open_file(path.c_str());
  REQUIRE(f != nullptr);
  CHECK(std::strcmp(distcurv_model_name(f), "file-propeller") == 0);
  distcurv_close(f);
  std::remove(path.c_str());

  CHECK(distcurv_open_file("/nonexistent/model.json") == nullptr);
  CHECK(distcurv_last_error_code() == DISTCURV_VALIDATION);

  distcurv_close(nullptr);  // must be a no-op
  CHECK(distcurv_model_name(nullptr) == nullptr);
}

TEST_CASE("curvature through the C surface") {
  distcurv_model* raw = distcurv_open_builtin("hyperbolic-halfspace");
  REQUIRE(raw != nullptr);
  ModelGuard m(raw);

  SUBCASE("csv output") {
    Out out;
    int rc = distcurv_curvature(raw, "xi", 3, 3, 3, nullptr, "csv", &out.p);
    REQUIRE(rc == DISTCURV_OK);
    REQUIRE(out.p != nullptr);
    std::string csv = out.str();
    CHECK(csv.rfind("u1,u2,u3,K,Ke,KG,c,B_XX,B_XY,B_YY\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 28);

    // third column of the first data row is K
    std::string row = csv.substr(csv.find('\n') + 1);
    row = row.substr(0, row.find('\n'));
    double vals[10];
    int parsed = 0;
    const char* s = row.c_str();
    char* end = nullptr;
    for (; parsed < 10; ++parsed) {
      vals[parsed] = std::strtod(s, &end);
      if (end == s) break;
      s = (*end == ',') ? end + 1 : end;
    }
    REQUIRE(parsed == 10);
    CHECK(std::abs(vals[3] + 1.0) < 1e-9);
    CHECK(std::abs(vals[4] - 1.0) < 1e-9);
    CHECK(std::abs(vals[5]) < 1e-9);

    // reruns and thread counts do not change a byte
    Out again;
    distcurv_set_threads(2);
    CHECK(distcurv_curvature(raw, "xi", 3, 3, 3, nullptr, "csv", &again.p) ==
          DISTCURV_OK);
    distcurv_set_threads(0);
    CHECK(csv == again.str());
  }

  SUBCASE("json output") {
    Out out;
    REQUIRE(distcurv_curvature(raw, "xi", 3, 3, 3, "2", "json", &out.p) ==
            DISTCURV_OK);
    nlohmann::json j = nlohmann::json::parse(out.str());
    CHECK(j["schema_version"] == 1);
    REQUIRE(j["rows"].size() == 27);
    CHECK(std::abs(j["rows"][0][3].get<double>() + 0.5) < 1e-9);
  }

  SUBCASE("failures set the error state") {
    Out out;
    CHECK(distcurv_curvature(raw, "xi", 3, 3, 3, nullptr, "xml", &out.p) ==
          DISTCURV_VALIDATION);
    CHECK(out.p == nullptr);
    CHECK(distcurv_curvature(raw, "xi", 0, 3, 3, nullptr, "csv", &out.p) ==
          DISTCURV_VALIDATION);
    CHECK(distcurv_curvature(raw, "zeta", 3, 3, 3, nullptr, "csv", &out.p) ==
          DISTCURV_VALIDATION);
    CHECK(distcurv_curvature(raw, "xi", 3, 3, 3, "cos(", "csv", &out.p) ==
          DISTCURV_VALIDATION);
    CHECK(distcurv_curvature(raw, "xi", 3, 3, 3, "-1", "csv", &out.p) ==
          DISTCURV_DEGENERACY);
    CHECK(std::strlen(distcurv_last_error_message()) > 0);
    CHECK(distcurv_curvature(nullptr, "xi", 3, 3, 3, nullptr, "csv", &out.p) ==
          DISTCURV_VALIDATION);

    distcurv_model* su2 = distcurv_open_builtin("su2-constants");
    REQUIRE(su2 != nullptr);
    CHECK(distcurv_curvature(su2, "xi", 3, 3, 3, nullptr, "csv", &out.p) ==
          DISTCURV_VALIDATION);
    distcurv_close(su2);
  }
}

TEST_CASE("check through the C surface") {
  distcurv_model* raw = distcurv_open_builtin("t3-propeller");
  REQUIRE(raw != nullptr);
  ModelGuard m(raw);

  const char* contacts[] = {"xi", "eta"};
  const char* pairs[] = {"xi", "eta"};

  SUBCASE("passing assertions") {
    Out out;
    int rc = distcurv_check(raw, contacts, 2, pairs, 1, 8, 8, 8, "json", &out.p);
    CHECK(rc == DISTCURV_OK);
    nlohmann::json j = nlohmann::json::parse(out.str());
    CHECK(j["ok"] == true);
    CHECK(j["checks"].size() == 3);

    Out text;
    CHECK(distcurv_check(raw, contacts, 1, nullptr, 0, 8, 8, 8, "text",
                         &text.p) == DISTCURV_OK);
    CHECK(text.str().find("result: ok") != std::string::npos);
  }

  SUBCASE("failed assertion still produces the report") {
    distcurv_model* fol = distcurv_open_builtin("t3-flat-foliation");
    REQUIRE(fol != nullptr);
    Out out;
    const char* c[] = {"xi"};
    int rc = distcurv_check(fol, c, 1, nullptr, 0, 8, 8, 8, "json", &out.p);
    CHECK(rc == DISTCURV_PROPERTY_VIOLATION);
    REQUIRE(out.p != nullptr);
    nlohmann::json j = nlohmann::json::parse(out.str());
    CHECK(j["ok"] == false);
    CHECK(distcurv_last_error_code() == DISTCURV_PROPERTY_VIOLATION);
    distcurv_close(fol);
  }

  SUBCASE("validation failures") {
    Out out;
    CHECK(distcurv_check(raw, nullptr, 0, nullptr, 0, 8, 8, 8, "json",
                         &out.p) == DISTCURV_VALIDATION);
    CHECK(distcurv_check(raw, contacts, 2, nullptr, 1, 8, 8, 8, "json",
                         &out.p) == DISTCURV_VALIDATION);
    CHECK(distcurv_check(nullptr, contacts, 1, nullptr, 0, 8, 8, 8, "json",
                         &out.p) == DISTCURV_VALIDATION);
  }
}

TEST_CASE("prescribe through the C surface") {
  distcurv_model* raw = distcurv_open_builtin("t3-propeller");
  REQUIRE(raw != nullptr);
  ModelGuard m(raw);

  SUBCASE("sectional") {
    Out out;
    int rc = distcurv_prescribe(raw, "eta", "sectional", nullptr, "-1", 8, 8,
                                8, 1e-4, 0, "json", &out.p);
    REQUIRE(rc == DISTCURV_OK);
    nlohmann::json j = nlohmann::json::parse(out.str());
    CHECK(j["ok"] == true);
    CHECK(j["D0"] == 1.0);
    CHECK(j["rho"] == 1.0);
    CHECK(j["residual"]["max"].get<double>() <= 1e-4);
    CHECK(j.find("a") == j.end());

    Out fields;
    REQUIRE(distcurv_prescribe(raw, "eta", "sectional", nullptr, "-1", 8, 8, 8,
                               1e-4, 1, "json", &fields.p) == DISTCURV_OK);
    nlohmann::json jf = nlohmann::json::parse(fields.str());
    CHECK(jf.find("a") != jf.end());
    CHECK(jf["g_final"].size() == 6);
  }

  SUBCASE("bi-contact") {
    Out out;
    int rc = distcurv_prescribe(raw, "xi", "sectional-bicontact", "eta", "1",
                                6, 6, 6, 1e-4, 0, "json", &out.p);
    REQUIRE(rc == DISTCURV_OK);
    nlohmann::json j = nlohmann::json::parse(out.str());
    CHECK(std::abs(j["lambda"].get<double>() - std::sqrt(2.0)) < 1e-12);
  }

  SUBCASE("failure codes pass through") {
    Out out;
    distcurv_model* fol = distcurv_open_builtin("t3-flat-foliation");
    REQUIRE(fol != nullptr);
    CHECK(distcurv_prescribe(fol, "xi", "sectional", nullptr, "-1", 6, 6, 6,
                             1e-4, 0, "json", &out.p) == DISTCURV_NOT_CONTACT);
    CHECK(out.p == nullptr);
    CHECK(distcurv_last_error_code() == DISTCURV_NOT_CONTACT);
    distcurv_close(fol);

    CHECK(distcurv_prescribe(raw, "eta", "sectional", nullptr, "sin(u3)", 6, 6,
                             6, 1e-4, 0, "json", &out.p) == DISTCURV_VALIDATION);
    CHECK(distcurv_prescribe(raw, "xi", "sectional-bicontact", nullptr, "1", 6,
                             6, 6, 1e-4, 0, "json", &out.p) ==
          DISTCURV_VALIDATION);
    CHECK(distcurv_prescribe(raw, "eta", "optimal", nullptr, "-1", 6, 6, 6,
                             1e-4, 0, "json", &out.p) == DISTCURV_VALIDATION);
  }
}

TEST_CASE("validate through the C surface") {
  SUBCASE("passing suite") {
    Out out;
    int rc = distcurv_validate("lemma31", 30, 7, 1e-6, "json", &out.p);
    REQUIRE(rc == DISTCURV_OK);
    nlohmann::json j = nlohmann::json::parse(out.str());
    CHECK(j["ok"] == true);
    CHECK(j["cases"].size() == 7);
  }

  SUBCASE("text report") {
    Out out;
    CHECK(distcurv_validate("fd", 60, 3, 1e-4, "text", &out.p) == DISTCURV_OK);
    CHECK(out.str().find("suite fd") != std::string::npos);
  }

  SUBCASE("an impossible tolerance fails but reports") {
    Out out;
    int rc = distcurv_validate("lemma31", 8, 1, 1e-30, "json", &out.p);
    CHECK(rc == DISTCURV_PROPERTY_VIOLATION);
    REQUIRE(out.p != nullptr);
    nlohmann::json j = nlohmann::json::parse(out.str());
    CHECK(j["ok"] == false);
  }

  SUBCASE("validation failures") {
    Out out;
    CHECK(distcurv_validate("lemma99", 10, 1, 1e-6, "json", &out.p) ==
          DISTCURV_VALIDATION);
    CHECK(distcurv_validate("lemma31", 10, 1, 1e-6, "yaml", &out.p) ==
          DISTCURV_VALIDATION);
    CHECK(distcurv_validate(nullptr, 10, 1, 1e-6, "json", &out.p) ==
          DISTCURV_VALIDATION);
  }
}
