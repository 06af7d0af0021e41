#include "stab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "stab/errors.hpp"

namespace stab {

struct Expr::Node {
  enum class Op { Const, VarX, VarD, Add, Sub, Mul, Div, Pow, Neg };
  Op op = Op::Const;
  double value = 0.0;
  std::size_t index = 0;  // 0-based, for VarX/VarD
  std::shared_ptr<const Node> lhs, rhs;

  double eval(const Vec& x, const Vec& d) const {
    switch (op) {
      case Op::Const: return value;
      case Op::VarX: return x.at(index);
      case Op::VarD: return d.at(index);
      case Op::Add: return lhs->eval(x, d) + rhs->eval(x, d);
      case Op::Sub: return lhs->eval(x, d) - rhs->eval(x, d);
      case Op::Mul: return lhs->eval(x, d) * rhs->eval(x, d);
      case Op::Div: return lhs->eval(x, d) / rhs->eval(x, d);
      case Op::Pow: return std::pow(lhs->eval(x, d), rhs->eval(x, d));
      case Op::Neg: return -lhs->eval(x, d);
    }
    return 0.0;
  }
};

double Expr::eval(const Vec& x, const Vec& d) const {
  if (!root_) raise(ErrorCode::ConfigError, "expression: empty");
  return root_->eval(x, d);
}

namespace {

using Node = Expr::Node;
using NodePtr = std::shared_ptr<const Node>;

struct Parser {
  const std::string& s;
  std::size_t pos = 0;
  std::size_t max_x = 0, max_d = 0;

  [[noreturn]] void fail(const std::string& what) const {
    raise(ErrorCode::ConfigError,
          "expression: " + what + " at position " + std::to_string(pos) + " in '" +
              s + "'");
  }

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  bool accept(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) { ++pos; return true; }
    return false;
  }

  static NodePtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

  static NodePtr binary(Node::Op op, NodePtr a, NodePtr b) {
    Node n;
    n.op = op;
    n.lhs = std::move(a);
    n.rhs = std::move(b);
    return make(std::move(n));
  }

  // expr := term (('+'|'-') term)*
  NodePtr expr() {
    NodePtr a = term();
    while (true) {
      if (accept('+')) a = binary(Node::Op::Add, a, term());
      else if (accept('-')) a = binary(Node::Op::Sub, a, term());
      else return a;
    }
  }

  // term := unary (('*'|'/') unary)*
  NodePtr term() {
    NodePtr a = unary();
    while (true) {
      if (accept('*')) a = binary(Node::Op::Mul, a, unary());
      else if (accept('/')) a = binary(Node::Op::Div, a, unary());
      else return a;
    }
  }

  // unary := '-' unary | power
  NodePtr unary() {
    if (accept('-')) {
      Node n;
      n.op = Node::Op::Neg;
      n.lhs = unary();
      return make(std::move(n));
    }
    return power();
  }

  // power := atom ('^' unary)?   (right associative, binds under unary minus)
  NodePtr power() {
    NodePtr a = atom();
    if (accept('^')) return binary(Node::Op::Pow, a, unary());
    return a;
  }

  NodePtr atom() {
    skip_ws();
    if (accept('(')) {
      NodePtr a = expr();
      if (!accept(')')) fail("missing ')'");
      return a;
    }
    if (pos >= s.size()) fail("unexpected end of input");
    const char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == 'x' || c == 'd') return variable();
    if (c == 's' && !(pos + 1 < s.size() &&
                      std::isalnum(static_cast<unsigned char>(s[pos + 1])))) {
      ++pos;
      Node n;
      n.op = Node::Op::VarX;
      n.index = 0;
      max_x = std::max<std::size_t>(max_x, 1);
      return make(std::move(n));
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    char* end = nullptr;
    const double v = std::strtod(s.c_str() + pos, &end);
    if (end == s.c_str() + pos) fail("malformed number");
    // reject exponent-free tokens the grammar does not cover (inf, nan)
    if (!std::isfinite(v)) fail("non-finite literal");
    pos = std::size_t(end - s.c_str());
    Node n;
    n.op = Node::Op::Const;
    n.value = v;
    return make(std::move(n));
  }

  NodePtr variable() {
    const char kind = s[pos++];
    std::size_t idx = 0, digits = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      idx = idx * 10 + std::size_t(s[pos] - '0');
      ++pos;
      ++digits;
    }
    if (digits == 0 || idx == 0) fail("variable needs a 1-based index (x1, d2, ...)");
    Node n;
    n.op = kind == 'x' ? Node::Op::VarX : Node::Op::VarD;
    n.index = idx - 1;
    if (kind == 'x') max_x = std::max(max_x, idx);
    else max_d = std::max(max_d, idx);
    return make(std::move(n));
  }
};

}  // namespace

Expr parse_expr(const std::string& text) {
  Parser p{text};
  Expr e;
  e.root_ = p.expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  e.max_x_ = p.max_x;
  e.max_d_ = p.max_d;
  e.text_ = text;
  return e;
}

}  // namespace stab
