#include "semiwave/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

namespace semiwave {

ParseError::ParseError(std::size_t offset, const std::string& message)
    : std::runtime_error("parse error at offset " + std::to_string(offset) + ": " + message),
      offset_(offset),
      message_(message) {}

Env Env::at(double t, const double* x, int dim) {
  Env env;
  env.set(Var::t, t);
  for (int i = 0; i < dim; ++i) env.set(static_cast<Var>(i + 1), x[i]);
  return env;
}

bool VarPolicy::allows(Var v) const {
  if (v == Var::t) return allow_t;
  return static_cast<int>(v) <= dim;
}

namespace {

struct FuncInfo {
  const char* name;
  Func func;
  std::size_t arity;
};

constexpr FuncInfo kFuncs[] = {
    {"sin", Func::sin, 1},   {"cos", Func::cos, 1},   {"tan", Func::tan, 1},
    {"exp", Func::exp, 1},   {"log", Func::log, 1},   {"sqrt", Func::sqrt, 1},
    {"abs", Func::abs, 1},   {"sign", Func::sign, 1}, {"tanh", Func::tanh, 1},
    {"min", Func::min, 2},   {"max", Func::max, 2},   {"clamp", Func::clamp, 3},
};

const FuncInfo* find_func(std::string_view name) {
  for (const auto& f : kFuncs)
    if (name == f.name) return &f;
  return nullptr;
}

const FuncInfo& func_info(Func f) {
  for (const auto& info : kFuncs)
    if (info.func == f) return info;
  return kFuncs[0];
}

const char* var_name(Var v) {
  switch (v) {
    case Var::t: return "t";
    case Var::x: return "x";
    case Var::y: return "y";
    case Var::z: return "z";
  }
  return "?";
}

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw EvalError(std::string("non-finite result in ") + what);
  return v;
}

class Parser {
public:
  Parser(std::string_view text, VarPolicy policy) : text_(text), policy_(policy) {}

  Expr run() {
    Expr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(pos_, msg); }
  [[noreturn]] void fail_at(std::size_t at, const std::string& msg) const {
    throw ParseError(at, msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r' || text_[pos_] == '\n'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = Expr::binary('+', lhs, term());
      else if (accept('-'))
        lhs = Expr::binary('-', lhs, term());
      else
        return lhs;
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*'))
        lhs = Expr::binary('*', lhs, unary());
      else if (accept('/'))
        lhs = Expr::binary('/', lhs, unary());
      else
        return lhs;
    }
  }

  // Unary minus binds looser than '^': -2^2 == -(2^2).
  Expr unary() {
    if (accept('-')) return Expr::negate(unary());
    return power();
  }

  // Right-associative; the exponent may carry its own unary minus.
  Expr power() {
    Expr base = atom();
    if (accept('^')) return Expr::binary('^', base, unary());
    return base;
  }

  Expr atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if ((c >= '0' && c <= '9') || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  Expr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_, ++n;
      return n;
    };
    std::size_t n = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) fail_at(start, "malformed number");
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) {
        pos_ = save + 1;
        fail("malformed exponent");
      }
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc() || ptr != text_.data() + pos_ || !std::isfinite(value))
      fail_at(start, "malformed number");
    return Expr::number(value);
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);

    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      const FuncInfo* info = find_func(name);
      if (!info) fail_at(start, "unknown function '" + std::string(name) + "'");
      ++pos_;
      std::vector<Expr> args;
      args.push_back(expr());
      while (accept(',')) args.push_back(expr());
      if (!accept(')')) fail("expected ')' or ','");
      if (args.size() != info->arity)
        fail_at(start, std::string(info->name) + " expects " + std::to_string(info->arity) +
                           " argument(s), got " + std::to_string(args.size()));
      return Expr::call(info->func, std::move(args));
    }

    for (Var v : {Var::t, Var::x, Var::y, Var::z}) {
      if (name == var_name(v)) {
        if (!policy_.allows(v)) fail_at(start, "variable '" + std::string(name) + "' not allowed here");
        return Expr::variable(v);
      }
    }
    if (find_func(name)) fail("expected '(' after function name");
    fail_at(start, "unknown identifier '" + std::string(name) + "'");
  }

  std::string_view text_;
  VarPolicy policy_;
  std::size_t pos_ = 0;
};

double eval_node(const Node& n, const Env& env) {
  switch (n.kind) {
    case Node::Kind::number:
      return n.value;
    case Node::Kind::variable: {
      const int i = static_cast<int>(n.var);
      if (!((env.provided >> i) & 1u))
        throw EvalError(std::string("missing variable '") + var_name(n.var) + "'");
      return env.values[i];
    }
    case Node::Kind::negate:
      return -eval_node(n.args[0].node(), env);
    case Node::Kind::binary: {
      const double a = eval_node(n.args[0].node(), env);
      const double b = eval_node(n.args[1].node(), env);
      switch (n.op) {
        case '+': return checked(a + b, "'+'");
        case '-': return checked(a - b, "'-'");
        case '*': return checked(a * b, "'*'");
        case '/':
          if (b == 0.0) throw EvalError("division by zero");
          return checked(a / b, "'/'");
        case '^': return checked(std::pow(a, b), "'^'");
      }
      break;
    }
    case Node::Kind::call: {
      double a[3] = {0.0, 0.0, 0.0};
      for (std::size_t i = 0; i < n.args.size(); ++i) a[i] = eval_node(n.args[i].node(), env);
      switch (n.func) {
        case Func::sin: return checked(std::sin(a[0]), "sin");
        case Func::cos: return checked(std::cos(a[0]), "cos");
        case Func::tan: return checked(std::tan(a[0]), "tan");
        case Func::exp: return checked(std::exp(a[0]), "exp");
        case Func::log:
          if (!(a[0] > 0.0)) throw EvalError("log of nonpositive value");
          return std::log(a[0]);
        case Func::sqrt:
          if (a[0] < 0.0) throw EvalError("sqrt of negative value");
          return std::sqrt(a[0]);
        case Func::abs: return std::fabs(a[0]);
        case Func::sign: return a[0] > 0.0 ? 1.0 : (a[0] < 0.0 ? -1.0 : 0.0);
        case Func::tanh: return std::tanh(a[0]);
        case Func::min: return std::min(a[0], a[1]);
        case Func::max: return std::max(a[0], a[1]);
        case Func::clamp:
          if (a[1] > a[2]) throw EvalError("clamp with lower bound above upper bound");
          return std::clamp(a[0], a[1], a[2]);
      }
      break;
    }
  }
  throw EvalError("corrupt expression node");
}

unsigned vars_of(const Node& n) {
  if (n.kind == Node::Kind::variable) return 1u << static_cast<int>(n.var);
  unsigned mask = 0;
  for (const auto& a : n.args) mask |= vars_of(a.node());
  return mask;
}

void print(const Node& n, std::string& out) {
  switch (n.kind) {
    case Node::Kind::number: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      out += buf;
      return;
    }
    case Node::Kind::variable:
      out += var_name(n.var);
      return;
    case Node::Kind::negate:
      out += "(-";
      print(n.args[0].node(), out);
      out += ')';
      return;
    case Node::Kind::binary:
      out += '(';
      print(n.args[0].node(), out);
      out += ' ';
      out += n.op;
      out += ' ';
      print(n.args[1].node(), out);
      out += ')';
      return;
    case Node::Kind::call:
      out += func_info(n.func).name;
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ", ";
        print(n.args[i].node(), out);
      }
      out += ')';
      return;
  }
}

bool equal(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Node::Kind::number:
      // bit-level equality keeps -0.0 and 0.0 apart
      return std::signbit(a.value) == std::signbit(b.value) && a.value == b.value;
    case Node::Kind::variable: return a.var == b.var;
    case Node::Kind::negate: break;
    case Node::Kind::binary:
      if (a.op != b.op) return false;
      break;
    case Node::Kind::call:
      if (a.func != b.func) return false;
      break;
  }
  if (a.args.size() != b.args.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!equal(a.args[i].node(), b.args[i].node())) return false;
  return true;
}

}  // namespace

Expr::Expr() : Expr(number(0.0)) {}

Expr Expr::number(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::number;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::variable(Var v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::variable;
  n->var = v;
  return Expr(std::move(n));
}

Expr Expr::negate(Expr operand) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::negate;
  n->args.push_back(std::move(operand));
  return Expr(std::move(n));
}

Expr Expr::binary(char op, Expr lhs, Expr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::binary;
  n->op = op;
  n->args.push_back(std::move(lhs));
  n->args.push_back(std::move(rhs));
  return Expr(std::move(n));
}

Expr Expr::call(Func f, std::vector<Expr> args) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::call;
  n->func = f;
  n->args = std::move(args);
  return Expr(std::move(n));
}

double Expr::eval(const Env& env) const { return eval_node(*node_, env); }

unsigned Expr::variables() const { return vars_of(*node_); }

std::string Expr::to_string() const {
  std::string out;
  print(*node_, out);
  return out;
}

bool operator==(const Expr& a, const Expr& b) { return equal(*a.node_, *b.node_); }

Expr parse(std::string_view text, VarPolicy policy) { return Parser(text, policy).run(); }

double eval(const Expr& e, const Env& env) { return e.eval(env); }

double diff_t(const Expr& e, const Env& env, double h) {
  const double t = env.values[static_cast<int>(Var::t)];
  if (!(h > 0.0)) h = std::max(1.0, std::fabs(t)) * std::cbrt(std::numeric_limits<double>::epsilon());
  Env plus = env, minus = env;
  plus.set(Var::t, t + h);
  minus.set(Var::t, t - h);
  return (e.eval(plus) - e.eval(minus)) / (2.0 * h);
}

}  // namespace semiwave
