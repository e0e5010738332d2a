#include "distcurv/util.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace distcurv {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::domain_error: return "domain_error";
    case ErrorCode::validation: return "validation";
    case ErrorCode::degeneracy: return "degeneracy";
    case ErrorCode::not_contact: return "not_contact";
    case ErrorCode::no_positive_root: return "no_positive_root";
    case ErrorCode::schedule_exhausted: return "schedule_exhausted";
    case ErrorCode::not_applicable: return "not_applicable";
    case ErrorCode::property_violation: return "property_violation";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

int error_exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::property_violation: return 1;
    case ErrorCode::parse_error: return 2;
    case ErrorCode::validation: return 2;
    case ErrorCode::domain_error: return 3;
    case ErrorCode::degeneracy: return 3;
    case ErrorCode::not_contact: return 4;
    case ErrorCode::no_positive_root: return 5;
    case ErrorCode::schedule_exhausted: return 6;
    case ErrorCode::not_applicable: return 7;
    case ErrorCode::internal: return 3;
  }
  return 3;
}

double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1],
          a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }

Vec3 add(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

Vec3 sub(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

Vec3 matvec(const Mat3& m, const Vec3& v) {
  Vec3 out{};
  for (int i = 0; i < 3; ++i)
    out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
  return out;
}

Mat3 matmul(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a[i][k] * b[k][j];
      out[i][j] = s;
    }
  return out;
}

Mat3 transpose(const Mat3& m) {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[i][j] = m[j][i];
  return out;
}

double det3(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

Mat3 inv3(const Mat3& m) {
  const double det = det3(m);
  double scale = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) scale = std::max(scale, std::abs(m[i][j]));
  if (!(std::abs(det) > 1e-14 * scale * scale * scale) ||
      !std::isfinite(det)) {
    fail(ErrorCode::degeneracy, "3x3 matrix is numerically singular (det=" +
                                    repr_double(det) + ")");
  }
  Mat3 adj{};
  adj[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
  adj[0][1] = m[0][2] * m[2][1] - m[0][1] * m[2][2];
  adj[0][2] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
  adj[1][0] = m[1][2] * m[2][0] - m[1][0] * m[2][2];
  adj[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
  adj[1][2] = m[0][2] * m[1][0] - m[0][0] * m[1][2];
  adj[2][0] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
  adj[2][1] = m[0][1] * m[2][0] - m[0][0] * m[2][1];
  adj[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[i][j] = adj[i][j] / det;
  return out;
}

double quad(const Mat3& m, const Vec3& v, const Vec3& w) {
  return dot(v, matvec(m, w));
}

std::string repr_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace distcurv
