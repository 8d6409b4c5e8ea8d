#pragma once

// Scalar expressions over coordinates x1..xn.
//
// Grammar (whitespace ignored between tokens):
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := NUMBER | 'pi' | 'x' DIGIT+ | '(' expr ')'
//           | ('sin'|'cos'|'exp') '(' expr ')' | '-' factor
//
// Expressions are immutable values. Each one carries a flattened postfix
// program, so evaluation is a tight loop over a small stack and is safe to
// run from any number of threads.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stochflow::expr {

enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Neg, Sin, Cos, Exp };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op;
  double value = 0.0; // Const
  int var = -1;       // Var, 0-based
  NodePtr lhs;
  NodePtr rhs;
};

class Expr {
public:
  /// The constant 0.
  Expr();

  /// Parses `text`; throws ParseError with the offending byte offset.
  static Expr parse(std::string_view text);
  static Expr constant(double value);
  /// Coordinate x_{index+1}.
  static Expr variable(int index);

  double operator()(std::span<const double> x) const;

  /// Symbolic partial derivative with respect to coordinate `index` (0-based).
  Expr derivative(int index) const;

  /// Highest coordinate referenced, 1-based; 0 when the expression is closed.
  int max_variable() const;
  bool is_constant() const;
  /// Value of a constant expression; only meaningful when is_constant().
  double constant_value() const;
  /// Number of postfix instructions, a rough evaluation cost.
  std::size_t size() const;

  /// Renders a string that parses back to an equivalent expression.
  std::string to_string() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr sin(const Expr& a);
  friend Expr cos(const Expr& a);
  friend Expr exp(const Expr& a);

private:
  struct Instr {
    Op op;
    int var;
    double value;
  };
  struct Program {
    std::vector<Instr> code;
    int depth = 0;
  };

  explicit Expr(NodePtr root);
  static Program compile(const NodePtr& root);

  NodePtr root_;
  std::shared_ptr<const Program> program_;
};

} // namespace stochflow::expr
