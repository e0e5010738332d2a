#include "distcurv/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <mutex>
#include <unordered_map>

namespace distcurv::expr {

namespace {

ExprPtr make(Op op, double value, int index, ExprPtr a, ExprPtr b) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->value = value;
  n->index = index;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

double apply_op(Op op, double a, double b, double value) {
  switch (op) {
    case Op::num: return value;
    case Op::pi_const: return M_PI;
    case Op::coord: return 0.0;  // handled by callers
    case Op::neg: return -a;
    case Op::add: return a + b;
    case Op::sub: return a - b;
    case Op::mul: return a * b;
    case Op::div: return a / b;
    case Op::powc: return std::pow(a, value);
    case Op::fsin: return std::sin(a);
    case Op::fcos: return std::cos(a);
    case Op::ftan: return std::tan(a);
    case Op::fexp: return std::exp(a);
    case Op::flog: return std::log(a);
    case Op::fsqrt: return std::sqrt(a);
    case Op::fsinh: return std::sinh(a);
    case Op::fcosh: return std::cosh(a);
    case Op::ftanh: return std::tanh(a);
    case Op::fatan: return std::atan(a);
  }
  return 0.0;
}

bool const_val(const ExprPtr& e, double& out) {
  if (e->op == Op::num) {
    out = e->value;
    return true;
  }
  return false;
}

}  // namespace

ExprPtr num(double v) { return make(Op::num, v, 0, nullptr, nullptr); }

ExprPtr coord(int index) {
  if (index < 0 || index > 2)
    fail(ErrorCode::internal, "coordinate index out of range");
  return make(Op::coord, 0.0, index, nullptr, nullptr);
}

ExprPtr pi() { return make(Op::pi_const, 0.0, 0, nullptr, nullptr); }

ExprPtr neg(ExprPtr e) {
  double v;
  if (const_val(e, v)) return num(-v);
  if (e->op == Op::neg) return e->a;
  return make(Op::neg, 0.0, 0, std::move(e), nullptr);
}

ExprPtr add(ExprPtr a, ExprPtr b) {
  double va, vb;
  const bool ca = const_val(a, va), cb = const_val(b, vb);
  if (ca && cb && std::isfinite(va + vb)) return num(va + vb);
  if (ca && va == 0.0) return b;
  if (cb && vb == 0.0) return a;
  return make(Op::add, 0.0, 0, std::move(a), std::move(b));
}

ExprPtr sub(ExprPtr a, ExprPtr b) {
  double va, vb;
  const bool ca = const_val(a, va), cb = const_val(b, vb);
  if (ca && cb && std::isfinite(va - vb)) return num(va - vb);
  if (cb && vb == 0.0) return a;
  if (ca && va == 0.0) return neg(std::move(b));
  return make(Op::sub, 0.0, 0, std::move(a), std::move(b));
}

ExprPtr mul(ExprPtr a, ExprPtr b) {
  double va, vb;
  const bool ca = const_val(a, va), cb = const_val(b, vb);
  if (ca && cb && std::isfinite(va * vb)) return num(va * vb);
  if (ca && va == 0.0) return num(0.0);
  if (cb && vb == 0.0) return num(0.0);
  if (ca && va == 1.0) return b;
  if (cb && vb == 1.0) return a;
  return make(Op::mul, 0.0, 0, std::move(a), std::move(b));
}

ExprPtr div(ExprPtr a, ExprPtr b) {
  double va, vb;
  const bool ca = const_val(a, va), cb = const_val(b, vb);
  if (ca && cb && vb != 0.0 && std::isfinite(va / vb)) return num(va / vb);
  if (ca && va == 0.0) return num(0.0);
  if (cb && vb == 1.0) return a;
  return make(Op::div, 0.0, 0, std::move(a), std::move(b));
}

ExprPtr powc(ExprPtr base, double exponent) {
  double vb;
  if (exponent == 0.0) return num(1.0);
  if (exponent == 1.0) return base;
  if (const_val(base, vb)) {
    const double r = std::pow(vb, exponent);
    if (std::isfinite(r)) return num(r);
  }
  return make(Op::powc, exponent, 0, std::move(base), nullptr);
}

ExprPtr pow(ExprPtr base, ExprPtr exponent) {
  double ve;
  if (const_val(exponent, ve)) return powc(std::move(base), ve);
  return exp(mul(std::move(exponent), log(std::move(base))));
}

ExprPtr apply(Op fn, ExprPtr arg) {
  double v;
  if (const_val(arg, v)) {
    const double r = apply_op(fn, v, 0.0, 0.0);
    if (std::isfinite(r)) return num(r);
  }
  return make(fn, 0.0, 0, std::move(arg), nullptr);
}

ExprPtr sin(ExprPtr e) { return apply(Op::fsin, std::move(e)); }
ExprPtr cos(ExprPtr e) { return apply(Op::fcos, std::move(e)); }
ExprPtr tan(ExprPtr e) { return apply(Op::ftan, std::move(e)); }
ExprPtr exp(ExprPtr e) { return apply(Op::fexp, std::move(e)); }
ExprPtr log(ExprPtr e) { return apply(Op::flog, std::move(e)); }
ExprPtr sqrt(ExprPtr e) { return apply(Op::fsqrt, std::move(e)); }
ExprPtr sinh(ExprPtr e) { return apply(Op::fsinh, std::move(e)); }
ExprPtr cosh(ExprPtr e) { return apply(Op::fcosh, std::move(e)); }
ExprPtr tanh(ExprPtr e) { return apply(Op::ftanh, std::move(e)); }
ExprPtr atan(ExprPtr e) { return apply(Op::fatan, std::move(e)); }

bool is_const(const ExprPtr& e, double* value) {
  if (e->op != Op::num) return false;
  if (value) *value = e->value;
  return true;
}

std::size_t dag_size(const ExprPtr& e) {
  std::unordered_map<const Node*, bool> seen;
  std::vector<const Node*> stack{e.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!seen.emplace(n, true).second) continue;
    if (n->a) stack.push_back(n->a.get());
    if (n->b) stack.push_back(n->b.get());
  }
  return seen.size();
}

double eval(const ExprPtr& e, const Vec3& u) {
  std::unordered_map<const Node*, double> memo;
  auto rec = [&](auto&& self, const Node* n) -> double {
    if (n->op == Op::num) return n->value;
    if (n->op == Op::coord) return u[static_cast<std::size_t>(n->index)];
    if (n->op == Op::pi_const) return M_PI;
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    const double a = n->a ? self(self, n->a.get()) : 0.0;
    const double b = n->b ? self(self, n->b.get()) : 0.0;
    const double r = apply_op(n->op, a, b, n->value);
    memo.emplace(n, r);
    return r;
  };
  return rec(rec, e.get());
}

// ---------------------------------------------------------------------------
// Derivatives, memoised per node per axis for the life of the process.  The
// entry pins the key node so the raw pointer can never be reused while cached.

namespace {

struct DerivEntry {
  ExprPtr self;
  ExprPtr d[3];
};

std::mutex g_deriv_mutex;
std::unordered_map<const Node*, DerivEntry>& deriv_cache() {
  static std::unordered_map<const Node*, DerivEntry> cache;
  return cache;
}

ExprPtr derive_locked(const ExprPtr& e, int axis) {
  auto& cache = deriv_cache();
  auto it = cache.find(e.get());
  if (it != cache.end() && it->second.d[axis]) return it->second.d[axis];

  ExprPtr r;
  const ExprPtr& a = e->a;
  const ExprPtr& b = e->b;
  switch (e->op) {
    case Op::num:
    case Op::pi_const:
      r = num(0.0);
      break;
    case Op::coord:
      r = num(e->index == axis ? 1.0 : 0.0);
      break;
    case Op::neg:
      r = neg(derive_locked(a, axis));
      break;
    case Op::add:
      r = add(derive_locked(a, axis), derive_locked(b, axis));
      break;
    case Op::sub:
      r = sub(derive_locked(a, axis), derive_locked(b, axis));
      break;
    case Op::mul:
      r = add(mul(derive_locked(a, axis), b), mul(a, derive_locked(b, axis)));
      break;
    case Op::div:
      r = div(sub(mul(derive_locked(a, axis), b),
                  mul(a, derive_locked(b, axis))),
              powc(b, 2.0));
      break;
    case Op::powc:
      r = mul(mul(num(e->value), powc(a, e->value - 1.0)),
              derive_locked(a, axis));
      break;
    case Op::fsin:
      r = mul(cos(a), derive_locked(a, axis));
      break;
    case Op::fcos:
      r = neg(mul(sin(a), derive_locked(a, axis)));
      break;
    case Op::ftan:
      r = mul(add(num(1.0), powc(tan(a), 2.0)), derive_locked(a, axis));
      break;
    case Op::fexp:
      r = mul(exp(a), derive_locked(a, axis));
      break;
    case Op::flog:
      r = div(derive_locked(a, axis), a);
      break;
    case Op::fsqrt:
      r = div(derive_locked(a, axis), mul(num(2.0), sqrt(a)));
      break;
    case Op::fsinh:
      r = mul(cosh(a), derive_locked(a, axis));
      break;
    case Op::fcosh:
      r = mul(sinh(a), derive_locked(a, axis));
      break;
    case Op::ftanh:
      r = mul(sub(num(1.0), powc(tanh(a), 2.0)), derive_locked(a, axis));
      break;
    case Op::fatan:
      r = div(derive_locked(a, axis), add(num(1.0), powc(a, 2.0)));
      break;
  }

  auto& entry = cache[e.get()];
  if (!entry.self) entry.self = e;
  entry.d[axis] = r;
  return r;
}

}  // namespace

ExprPtr derive(const ExprPtr& e, int axis) {
  if (axis < 0 || axis > 2)
    fail(ErrorCode::internal, "derivative axis out of range");
  std::lock_guard<std::mutex> lock(g_deriv_mutex);
  return derive_locked(e, axis);
}

FdCheck fd_check(const ExprPtr& e, const Vec3& p, int axis, double h) {
  if (!(h > 0)) fail(ErrorCode::validation, "fd_check requires h > 0");
  Vec3 up = p, dn = p;
  up[static_cast<std::size_t>(axis)] += h;
  dn[static_cast<std::size_t>(axis)] -= h;
  return FdCheck{eval(derive(e, axis), p),
                 (eval(e, up) - eval(e, dn)) / (2.0 * h)};
}

// ---------------------------------------------------------------------------
// Parser.

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ExprPtr run() {
    ExprPtr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size())
      error("end of input or one of '+', '-', '*', '/'");
    return e;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  [[noreturn]] void error(const std::string& expected) {
    std::string found;
    if (pos_ >= text_.size()) {
      found = "end of input";
    } else {
      found = std::string("'") + text_[pos_] + "'";
    }
    fail(ErrorCode::parse_error,
         "parse error at byte " + std::to_string(pos_) + ": expected " +
             expected + ", found " + found);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool peek_is(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool consume(char c) {
    if (!peek_is(c)) return false;
    ++pos_;
    return true;
  }

  ExprPtr parse_expr() {
    ExprPtr e = parse_term();
    for (;;) {
      if (consume('+')) {
        e = add(e, parse_term());
      } else if (consume('-')) {
        e = sub(e, parse_term());
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_factor();
    for (;;) {
      if (consume('*')) {
        e = mul(e, parse_factor());
      } else if (consume('/')) {
        e = div(e, parse_factor());
      } else {
        return e;
      }
    }
  }

  // Unary minus binds looser than '^': -x^2 is -(x^2), and the exponent is a
  // factor, so 2^-3 and 2^3^2 (right-associative) both parse.
  ExprPtr parse_factor() {
    if (consume('-')) return neg(parse_factor());
    ExprPtr base = parse_atom();
    if (consume('^')) return pow(std::move(base), parse_factor());
    return base;
  }

  ExprPtr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size())
      error("a number, 'pi', 'u1'..'u3', a function name, '(' or '-'");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return parse_ident();
    if (c == '(') {
      ++pos_;
      ExprPtr e = parse_expr();
      if (!consume(')')) error("')'");
      return e;
    }
    error("a number, 'pi', 'u1'..'u3', a function name, '(' or '-'");
  }

  ExprPtr parse_number() {
    double v = 0.0;
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr == begin) error("a numeric literal");
    pos_ = static_cast<std::size_t>(res.ptr - text_.data());
    return num(v);
  }

  ExprPtr parse_ident() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_'))
      ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name == "pi") return pi();
    if (name == "u1") return coord(0);
    if (name == "u2") return coord(1);
    if (name == "u3") return coord(2);

    Op fn;
    if (name == "sin") fn = Op::fsin;
    else if (name == "cos") fn = Op::fcos;
    else if (name == "tan") fn = Op::ftan;
    else if (name == "exp") fn = Op::fexp;
    else if (name == "log") fn = Op::flog;
    else if (name == "sqrt") fn = Op::fsqrt;
    else if (name == "sinh") fn = Op::fsinh;
    else if (name == "cosh") fn = Op::fcosh;
    else if (name == "tanh") fn = Op::ftanh;
    else if (name == "atan") fn = Op::fatan;
    else {
      pos_ = start;
      error("'pi', 'u1'..'u3', or a function name (unknown identifier '" +
            std::string(name) + "')");
    }
    if (!consume('(')) error("'(' after function name");
    ExprPtr arg = parse_expr();
    if (!consume(')')) error("')'");
    return apply(fn, std::move(arg));
  }
};

}  // namespace

ExprPtr parse(std::string_view text) { return Parser(text).run(); }

// ---------------------------------------------------------------------------
// Printer.

namespace {

constexpr int kPrecAdd = 10;
constexpr int kPrecMul = 20;
constexpr int kPrecPow = 30;
constexpr int kPrecAtom = 100;

const char* func_name(Op op) {
  switch (op) {
    case Op::fsin: return "sin";
    case Op::fcos: return "cos";
    case Op::ftan: return "tan";
    case Op::fexp: return "exp";
    case Op::flog: return "log";
    case Op::fsqrt: return "sqrt";
    case Op::fsinh: return "sinh";
    case Op::fcosh: return "cosh";
    case Op::ftanh: return "tanh";
    case Op::fatan: return "atan";
    default: return nullptr;
  }
}

void print_node(const Node* n, int needed, std::string& out);

void print_wrapped(const Node* n, int prec, int needed, std::string& out,
                   const std::function<void()>& body) {
  (void)n;
  const bool wrap = prec < needed;
  if (wrap) out += '(';
  body();
  if (wrap) out += ')';
}

void print_node(const Node* n, int needed, std::string& out) {
  switch (n->op) {
    case Op::num: {
      if (n->value < 0.0 || std::signbit(n->value)) {
        out += '(';
        out += repr_double(n->value);
        out += ')';
      } else {
        out += repr_double(n->value);
      }
      return;
    }
    case Op::coord:
      out += (n->index == 0 ? "u1" : n->index == 1 ? "u2" : "u3");
      return;
    case Op::pi_const:
      out += "pi";
      return;
    case Op::neg:
      print_wrapped(n, kPrecMul, needed, out, [&] {
        out += '-';
        print_node(n->a.get(), kPrecMul + 1, out);
      });
      return;
    case Op::add:
      print_wrapped(n, kPrecAdd, needed, out, [&] {
        print_node(n->a.get(), kPrecAdd, out);
        out += " + ";
        print_node(n->b.get(), kPrecAdd, out);
      });
      return;
    case Op::sub:
      print_wrapped(n, kPrecAdd, needed, out, [&] {
        print_node(n->a.get(), kPrecAdd, out);
        out += " - ";
        print_node(n->b.get(), kPrecAdd + 1, out);
      });
      return;
    case Op::mul:
      print_wrapped(n, kPrecMul, needed, out, [&] {
        print_node(n->a.get(), kPrecMul, out);
        out += "*";
        print_node(n->b.get(), kPrecMul, out);
      });
      return;
    case Op::div:
      print_wrapped(n, kPrecMul, needed, out, [&] {
        print_node(n->a.get(), kPrecMul, out);
        out += "/";
        print_node(n->b.get(), kPrecMul + 1, out);
      });
      return;
    case Op::powc:
      print_wrapped(n, kPrecPow, needed, out, [&] {
        print_node(n->a.get(), kPrecAtom, out);
        out += '^';
        if (n->value < 0.0) {
          out += '(';
          out += repr_double(n->value);
          out += ')';
        } else {
          out += repr_double(n->value);
        }
      });
      return;
    default: {
      const char* name = func_name(n->op);
      out += name ? name : "?";
      out += '(';
      print_node(n->a.get(), 0, out);
      out += ')';
      return;
    }
  }
}

}  // namespace

std::string to_string(const ExprPtr& e) {
  std::string out;
  print_node(e.get(), 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// EvalTape.

EvalTape::EvalTape(std::span<const ExprPtr> roots) {
  std::unordered_map<const Node*, std::int32_t> slot;
  std::vector<std::pair<const Node*, bool>> stack;

  auto slot_of = [&](const Node* n) { return slot.at(n); };

  for (const ExprPtr& root : roots) {
    stack.emplace_back(root.get(), false);
    while (!stack.empty()) {
      auto [n, expanded] = stack.back();
      stack.pop_back();
      if (slot.count(n)) continue;
      if (!expanded) {
        stack.emplace_back(n, true);
        if (n->a && !slot.count(n->a.get()))
          stack.emplace_back(n->a.get(), false);
        if (n->b && !slot.count(n->b.get()))
          stack.emplace_back(n->b.get(), false);
        continue;
      }
      Instr ins;
      ins.op = n->op;
      ins.value = n->value;
      ins.index = n->index;
      if (n->a) ins.a = slot_of(n->a.get());
      if (n->b) ins.b = slot_of(n->b.get());
      slot[n] = static_cast<std::int32_t>(instrs_.size());
      instrs_.push_back(ins);
    }
    root_slots_.push_back(slot_of(root.get()));
  }
}

void EvalTape::eval(const Vec3& u, Scratch& scratch,
                    std::span<double> out) const {
  scratch.resize(instrs_.size());
  double* s = scratch.data();
  for (std::size_t i = 0; i < instrs_.size(); ++i) {
    const Instr& ins = instrs_[i];
    double r;
    switch (ins.op) {
      case Op::num: r = ins.value; break;
      case Op::coord: r = u[static_cast<std::size_t>(ins.index)]; break;
      case Op::pi_const: r = M_PI; break;
      default:
        r = apply_op(ins.op, ins.a >= 0 ? s[ins.a] : 0.0,
                     ins.b >= 0 ? s[ins.b] : 0.0, ins.value);
        break;
    }
    s[i] = r;
  }
  for (std::size_t k = 0; k < root_slots_.size(); ++k)
    out[k] = s[root_slots_[k]];
}

}  // namespace distcurv::expr
