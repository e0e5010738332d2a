#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace distcurv {

enum class ErrorCode {
  parse_error,
  domain_error,
  validation,
  degeneracy,
  not_contact,
  no_positive_root,
  schedule_exhausted,
  not_applicable,
  property_violation,
  internal,
};

const char* error_code_name(ErrorCode code);

// Process exit code associated with an error category (CLI contract).
int error_exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

// ---------------------------------------------------------------------------
// Small fixed-size linear algebra used throughout (numeric, not symbolic).

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);
Vec3 scale(const Vec3& a, double s);
Vec3 add(const Vec3& a, const Vec3& b);
Vec3 sub(const Vec3& a, const Vec3& b);

Vec3 matvec(const Mat3& m, const Vec3& v);
Mat3 matmul(const Mat3& a, const Mat3& b);
Mat3 transpose(const Mat3& m);
double det3(const Mat3& m);
// Inverse via adjugate; throws degeneracy when |det| is tiny relative to scale.
Mat3 inv3(const Mat3& m);
// Bilinear form v^T m w.
double quad(const Mat3& m, const Vec3& v, const Vec3& w);

// ---------------------------------------------------------------------------
// Formatting.

// Shortest representation that round-trips through parsing (std::to_chars).
std::string repr_double(double x);
// Fixed %.17g rendering used for CSV output.
std::string g17(double x);

// ---------------------------------------------------------------------------
// Deterministic RNG (SplitMix64) so tests and sampling are reproducible.

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

 private:
  std::uint64_t state_;
};

}  // namespace distcurv
