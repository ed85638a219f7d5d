#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace semiwave {

// Variables available to coefficient expressions, in environment order.
enum class Var : int { t = 0, x = 1, y = 2, z = 3 };

/// Error raised by the parser. `offset()` is the byte offset of the first
/// character the parser could not accept (may equal the input length).
class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t offset, const std::string& message);
  std::size_t offset() const noexcept { return offset_; }
  const std::string& message() const noexcept { return message_; }

private:
  std::size_t offset_;
  std::string message_;
};

/// Evaluation failure: missing variable, domain error or non-finite result.
class EvalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Values for t, x, y, z. A variable is "provided" only if its bit is set.
struct Env {
  std::array<double, 4> values{};
  unsigned provided = 0;

  Env() = default;
  Env& set(Var v, double value) {
    values[static_cast<int>(v)] = value;
    provided |= 1u << static_cast<int>(v);
    return *this;
  }
  // t plus the first `dim` coordinates of `x`.
  static Env at(double t, const double* x, int dim);
};

enum class Func {
  sin, cos, tan, exp, log, sqrt, abs, sign, tanh, min, max, clamp
};

struct Node;

/// Immutable expression tree. Copies share structure.
class Expr {
public:
  Expr();  // the literal 0

  static Expr number(double value);
  static Expr variable(Var v);
  static Expr negate(Expr operand);
  static Expr binary(char op, Expr lhs, Expr rhs);
  static Expr call(Func f, std::vector<Expr> args);

  double eval(const Env& env) const;

  // Bit mask of variables that appear in the tree.
  unsigned variables() const;
  bool depends_on(Var v) const { return (variables() >> static_cast<int>(v)) & 1u; }

  // Fully parenthesized text that reparses to an identical tree.
  std::string to_string() const;

  friend bool operator==(const Expr& a, const Expr& b);

  const Node& node() const { return *node_; }

private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

struct Node {
  enum class Kind { number, variable, negate, binary, call };
  Kind kind = Kind::number;
  double value = 0.0;
  Var var = Var::t;
  char op = 0;
  Func func = Func::sin;
  std::vector<Expr> args;
};

/// Restricts which variables may appear. `dim` limits the spatial variables
/// (y only for dim >= 2, z only for dim == 3); `allow_t` admits t.
struct VarPolicy {
  int dim = 3;
  bool allow_t = true;

  bool allows(Var v) const;
};

/// Recursive-descent parser for
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | power
///   power  := atom ('^' factor)?
///   atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
Expr parse(std::string_view text, VarPolicy policy = {});

double eval(const Expr& e, const Env& env);

/// Central difference in t. A non-positive `h` selects max(1,|t|)*eps^(1/3).
double diff_t(const Expr& e, const Env& env, double h = 0.0);

}  // namespace semiwave
