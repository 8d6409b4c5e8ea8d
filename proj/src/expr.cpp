#include "stochflow/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <utility>

#include "stochflow/errors.hpp"

namespace stochflow::expr {

namespace {

NodePtr make_const(double v) { return std::make_shared<const Node>(Node{Op::Const, v, -1, {}, {}}); }
NodePtr make_var(int i) { return std::make_shared<const Node>(Node{Op::Var, 0.0, i, {}, {}}); }
NodePtr make_node(Op op, NodePtr a, NodePtr b = {}) {
  return std::make_shared<const Node>(Node{op, 0.0, -1, std::move(a), std::move(b)});
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }
bool is_const(const NodePtr& n) { return n->op == Op::Const; }

NodePtr neg(NodePtr a) {
  if (is_const(a)) return make_const(-a->value);
  if (a->op == Op::Neg) return a->lhs;
  return make_node(Op::Neg, std::move(a));
}

NodePtr add(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return make_const(a->value + b->value);
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return make_node(Op::Add, std::move(a), std::move(b));
}

NodePtr sub(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return make_const(a->value - b->value);
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return neg(std::move(b));
  return make_node(Op::Sub, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return make_const(a->value * b->value);
  if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  if (is_const(a, -1.0)) return neg(std::move(b));
  if (is_const(b, -1.0)) return neg(std::move(a));
  return make_node(Op::Mul, std::move(a), std::move(b));
}

NodePtr div(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b) && b->value != 0.0) return make_const(a->value / b->value);
  if (is_const(a, 0.0) && is_const(b) && b->value != 0.0) return make_const(0.0);
  if (is_const(b, 1.0)) return a;
  return make_node(Op::Div, std::move(a), std::move(b));
}

NodePtr unary(Op op, NodePtr a) {
  if (is_const(a)) {
    switch (op) {
    case Op::Sin: return make_const(std::sin(a->value));
    case Op::Cos: return make_const(std::cos(a->value));
    case Op::Exp: return make_const(std::exp(a->value));
    default: break;
    }
  }
  return make_node(op, std::move(a));
}

NodePtr differentiate(const NodePtr& n, int v) {
  switch (n->op) {
  case Op::Const: return make_const(0.0);
  case Op::Var: return make_const(n->var == v ? 1.0 : 0.0);
  case Op::Add: return add(differentiate(n->lhs, v), differentiate(n->rhs, v));
  case Op::Sub: return sub(differentiate(n->lhs, v), differentiate(n->rhs, v));
  case Op::Mul:
    return add(mul(differentiate(n->lhs, v), n->rhs), mul(n->lhs, differentiate(n->rhs, v)));
  case Op::Div: {
    auto num = sub(mul(differentiate(n->lhs, v), n->rhs), mul(n->lhs, differentiate(n->rhs, v)));
    if (is_const(num, 0.0)) return num;
    return div(num, mul(n->rhs, n->rhs));
  }
  case Op::Neg: return neg(differentiate(n->lhs, v));
  case Op::Sin: return mul(unary(Op::Cos, n->lhs), differentiate(n->lhs, v));
  case Op::Cos: return neg(mul(unary(Op::Sin, n->lhs), differentiate(n->lhs, v)));
  case Op::Exp: return mul(n, differentiate(n->lhs, v));
  }
  return make_const(0.0);
}

class Parser {
public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    auto root = expr();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("unexpected '" + std::string(1, text_[pos_]) + "'", pos_);
    return root;
  }

private:
  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      if (accept('+')) lhs = make_node(Op::Add, lhs, term());
      else if (accept('-')) lhs = make_node(Op::Sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    auto lhs = factor();
    for (;;) {
      if (accept('*')) lhs = make_node(Op::Mul, lhs, factor());
      else if (accept('/')) lhs = make_node(Op::Div, lhs, factor());
      else return lhs;
    }
  }

  NodePtr parenthesized() {
    skip_ws();
    const std::size_t open = pos_;
    if (!accept('(')) throw ParseError("expected '('", pos_);
    auto inner = expr();
    if (!accept(')')) throw ParseError("unclosed '('", open);
    return inner;
  }

  NodePtr factor() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = text_[pos_];
    if (c == '-') {
      ++pos_;
      return make_node(Op::Neg, factor());
    }
    if (c == '(') return parenthesized();
    if ((c >= '0' && c <= '9') || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    throw ParseError("unexpected '" + std::string(1, c) + "'", pos_);
  }

  NodePtr number() {
    const std::size_t start = pos_;
    // NUMBER: digits, optional fraction, optional exponent.
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double value = 0.0;
    auto [end, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc() || end != text_.data() + pos_) throw ParseError("malformed number", start);
    return make_const(value);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name == "pi") return make_const(std::numbers::pi);
    if (name == "sin") return make_node(Op::Sin, parenthesized());
    if (name == "cos") return make_node(Op::Cos, parenthesized());
    if (name == "exp") return make_node(Op::Exp, parenthesized());
    if (name.size() >= 2 && name[0] == 'x') {
      int index = 0;
      auto digits = name.substr(1);
      auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
      if (ec == std::errc() && end == digits.data() + digits.size()) {
        if (index < 1) throw ParseError("coordinate index must be at least 1", start);
        return make_var(index - 1);
      }
    }
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

int arity(Op op) {
  switch (op) {
  case Op::Const:
  case Op::Var: return 0;
  case Op::Neg:
  case Op::Sin:
  case Op::Cos:
  case Op::Exp: return 1;
  default: return 2;
  }
}

void emit(const NodePtr& n, std::vector<Node>& out) {
  if (n->lhs) emit(n->lhs, out);
  if (n->rhs) emit(n->rhs, out);
  out.push_back(Node{n->op, n->value, n->var, {}, {}});
}

int precedence(Op op) {
  switch (op) {
  case Op::Add:
  case Op::Sub: return 1;
  case Op::Mul:
  case Op::Div: return 2;
  default: return 3;
  }
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string render(const NodePtr& n) {
  switch (n->op) {
  case Op::Const:
    return n->value < 0 ? "(-" + format_number(-n->value) + ")" : format_number(n->value);
  case Op::Var: return "x" + std::to_string(n->var + 1);
  case Op::Neg: {
    const std::string inner = render(n->lhs);
    return precedence(n->lhs->op) < 3 ? "(-(" + inner + "))" : "(-" + inner + ")";
  }
  case Op::Sin: return "sin(" + render(n->lhs) + ")";
  case Op::Cos: return "cos(" + render(n->lhs) + ")";
  case Op::Exp: return "exp(" + render(n->lhs) + ")";
  default: break;
  }
  const int p = precedence(n->op);
  auto side = [&](const NodePtr& child, bool right) {
    std::string s = render(child);
    const int cp = precedence(child->op);
    // Right operands of '-' and '/' need parentheses at equal precedence.
    if (cp < p || (right && cp == p && (n->op == Op::Sub || n->op == Op::Div))) return "(" + s + ")";
    return s;
  };
  const char* sym = n->op == Op::Add ? " + " : n->op == Op::Sub ? " - " : n->op == Op::Mul ? "*" : "/";
  return side(n->lhs, false) + sym + side(n->rhs, true);
}

} // namespace

Expr::Expr() : Expr(make_const(0.0)) {}

Expr::Expr(NodePtr root) : root_(std::move(root)), program_(std::make_shared<const Program>(compile(root_))) {}

Expr::Program Expr::compile(const NodePtr& root) {
  std::vector<Node> flat;
  emit(root, flat);
  Program prog;
  prog.code.reserve(flat.size());
  int depth = 0;
  for (const auto& n : flat) {
    prog.code.push_back(Instr{n.op, n.var, n.value});
    depth += 1 - arity(n.op);
    prog.depth = std::max(prog.depth, depth);
  }
  return prog;
}

Expr Expr::parse(std::string_view text) { return Expr(Parser(text).parse()); }
Expr Expr::constant(double value) { return Expr(make_const(value)); }
Expr Expr::variable(int index) { return Expr(make_var(index)); }

#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wmaybe-uninitialized"
double Expr::operator()(std::span<const double> x) const {
  const auto& code = program_->code;
  if (code.size() == 1) {
    const auto& in = code.front();
    return in.op == Op::Const ? in.value : x[in.var];
  }
  constexpr int kInline = 64;
  double inline_stack[kInline]; // NOLINT: written before read
  std::vector<double> heap_stack;
  double* stack = inline_stack;
  if (program_->depth > kInline) {
    heap_stack.resize(program_->depth);
    stack = heap_stack.data();
  }
  int sp = 0;
  for (const auto& in : code) {
    switch (in.op) {
    case Op::Const: stack[sp++] = in.value; break;
    case Op::Var: stack[sp++] = x[in.var]; break;
    case Op::Add: --sp; stack[sp - 1] += stack[sp]; break;
    case Op::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
    case Op::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
    case Op::Div: --sp; stack[sp - 1] /= stack[sp]; break;
    case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
    case Op::Sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
    case Op::Cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
    case Op::Exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
    }
  }
  return stack[0];
}
#pragma GCC diagnostic pop

Expr Expr::derivative(int index) const { return Expr(differentiate(root_, index)); }

int Expr::max_variable() const {
  int best = 0;
  for (const auto& in : program_->code)
    if (in.op == Op::Var) best = std::max(best, in.var + 1);
  return best;
}

bool Expr::is_constant() const { return root_->op == Op::Const; }
double Expr::constant_value() const { return root_->value; }
std::size_t Expr::size() const { return program_->code.size(); }
std::string Expr::to_string() const { return render(root_); }

Expr operator+(const Expr& a, const Expr& b) { return Expr(add(a.root_, b.root_)); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(sub(a.root_, b.root_)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(mul(a.root_, b.root_)); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(div(a.root_, b.root_)); }
Expr operator-(const Expr& a) { return Expr(neg(a.root_)); }
Expr sin(const Expr& a) { return Expr(unary(Op::Sin, a.root_)); }
Expr cos(const Expr& a) { return Expr(unary(Op::Cos, a.root_)); }
Expr exp(const Expr& a) { return Expr(unary(Op::Exp, a.root_)); }

} // namespace stochflow::expr
