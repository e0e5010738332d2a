#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "distcurv/util.hpp"

namespace distcurv::expr {

// Coordinate expressions in u1, u2, u3.  Nodes are immutable and shared, so a
// whole family of derived expressions forms one DAG.  Non-constant exponents
// are lowered at construction (f^g == exp(g*log(f))), so `powc` is the only
// power op and always carries a constant exponent in `value`.
enum class Op : std::uint8_t {
  num,
  coord,
  pi_const,
  neg,
  add,
  sub,
  mul,
  div,
  powc,
  fsin,
  fcos,
  ftan,
  fexp,
  flog,
  fsqrt,
  fsinh,
  fcosh,
  ftanh,
  fatan,
};

struct Node;
using ExprPtr = std::shared_ptr<const Node>;

struct Node {
  Op op;
  double value = 0.0;  // payload for num; exponent for powc
  int index = 0;       // coordinate index 0..2 for coord
  ExprPtr a;
  ExprPtr b;
};

ExprPtr num(double v);
ExprPtr coord(int index);  // 0-based (coord(0) prints as u1)
ExprPtr pi();

ExprPtr neg(ExprPtr e);
ExprPtr add(ExprPtr a, ExprPtr b);
ExprPtr sub(ExprPtr a, ExprPtr b);
ExprPtr mul(ExprPtr a, ExprPtr b);
ExprPtr div(ExprPtr a, ExprPtr b);
ExprPtr powc(ExprPtr base, double exponent);
ExprPtr pow(ExprPtr base, ExprPtr exponent);

ExprPtr apply(Op fn, ExprPtr arg);
ExprPtr sin(ExprPtr e);
ExprPtr cos(ExprPtr e);
ExprPtr tan(ExprPtr e);
ExprPtr exp(ExprPtr e);
ExprPtr log(ExprPtr e);
ExprPtr sqrt(ExprPtr e);
ExprPtr sinh(ExprPtr e);
ExprPtr cosh(ExprPtr e);
ExprPtr tanh(ExprPtr e);
ExprPtr atan(ExprPtr e);

// Operator sugar so formula-building code reads like the math.
inline ExprPtr operator-(ExprPtr e) { return neg(std::move(e)); }
inline ExprPtr operator+(ExprPtr a, ExprPtr b) {
  return add(std::move(a), std::move(b));
}
inline ExprPtr operator-(ExprPtr a, ExprPtr b) {
  return sub(std::move(a), std::move(b));
}
inline ExprPtr operator*(ExprPtr a, ExprPtr b) {
  return mul(std::move(a), std::move(b));
}
inline ExprPtr operator/(ExprPtr a, ExprPtr b) {
  return div(std::move(a), std::move(b));
}
inline ExprPtr operator+(double a, ExprPtr b) { return add(num(a), std::move(b)); }
inline ExprPtr operator+(ExprPtr a, double b) { return add(std::move(a), num(b)); }
inline ExprPtr operator-(double a, ExprPtr b) { return sub(num(a), std::move(b)); }
inline ExprPtr operator-(ExprPtr a, double b) { return sub(std::move(a), num(b)); }
inline ExprPtr operator*(double a, ExprPtr b) { return mul(num(a), std::move(b)); }
inline ExprPtr operator*(ExprPtr a, double b) { return mul(std::move(a), num(b)); }
inline ExprPtr operator/(double a, ExprPtr b) { return div(num(a), std::move(b)); }
inline ExprPtr operator/(ExprPtr a, double b) { return div(std::move(a), num(b)); }

// True when e is a literal constant (num); optionally yields its value.
bool is_const(const ExprPtr& e, double* value = nullptr);

// Number of distinct nodes reachable from e.
std::size_t dag_size(const ExprPtr& e);

// Single-expression evaluation with per-call DAG memoisation.  IEEE semantics:
// out-of-domain inputs yield inf/nan rather than throwing; callers decide how
// to treat non-finite values.
double eval(const ExprPtr& e, const Vec3& u);

// d(e)/d(u_{axis+1}).  Results are memoised process-wide and safe to call from
// several threads.
ExprPtr derive(const ExprPtr& e, int axis);

// Symbolic derivative next to a central finite difference at the same point;
// feeds the fd validation suite.
struct FdCheck {
  double symbolic;
  double central_fd;
};
FdCheck fd_check(const ExprPtr& e, const Vec3& p, int axis, double h);

// Parser for the surface syntax:  +, -, *, /, ^ (right-assoc), unary minus
// (binds looser than ^), numbers, pi, u1/u2/u3, and the unary functions above.
// Throws Error(parse_error) with a byte offset and the expected token set.
ExprPtr parse(std::string_view text);

// Precedence-aware rendering; parse(to_string(e)) evaluates identically to e.
std::string to_string(const ExprPtr& e);

// Linearised evaluation program for a batch of expressions sharing one DAG.
// Build once, evaluate at many points; cheaper than tree-walks in hot loops.
class EvalTape {
 public:
  explicit EvalTape(std::span<const ExprPtr> roots);

  // Scratch storage; reuse across calls, one per thread.
  using Scratch = std::vector<double>;

  // Writes one value per root, in the order roots were given.
  void eval(const Vec3& u, Scratch& scratch, std::span<double> out) const;

  std::size_t num_instructions() const { return instrs_.size(); }
  std::size_t num_roots() const { return root_slots_.size(); }

 private:
  struct Instr {
    Op op;
    std::int32_t a = -1;
    std::int32_t b = -1;
    double value = 0.0;
    int index = 0;
  };
  std::vector<Instr> instrs_;
  std::vector<std::int32_t> root_slots_;
};

}  // namespace distcurv::expr
