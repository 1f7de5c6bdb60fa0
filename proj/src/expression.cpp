#include "hardylab/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace hardylab {

struct Expression::Node {
  enum class Kind { num, var, add, sub, mul, div, pow, neg, exp, sin, cos, abs, log, sign };
  Kind kind;
  double value = 0.0;
  Var var = Var::x1;
  std::shared_ptr<const Node> a, b;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;
using Kind = Node::Kind;

NodePtr num(double v) { return std::make_shared<const Node>(Node{Kind::num, v, {}, nullptr, nullptr}); }
NodePtr var(Expression::Var v) { return std::make_shared<const Node>(Node{Kind::var, 0.0, v, nullptr, nullptr}); }
NodePtr unary(Kind k, NodePtr a) { return std::make_shared<const Node>(Node{k, 0.0, {}, std::move(a), nullptr}); }

bool is_num(const NodePtr& n, double v) { return n->kind == Kind::num && n->value == v; }

NodePtr binary(Kind k, NodePtr a, NodePtr b) {
  // light folding keeps derivative trees small
  if (a->kind == Kind::num && b->kind == Kind::num) {
    switch (k) {
      case Kind::add: return num(a->value + b->value);
      case Kind::sub: return num(a->value - b->value);
      case Kind::mul: return num(a->value * b->value);
      default: break;
    }
  }
  if (k == Kind::add) {
    if (is_num(a, 0.0)) return b;
    if (is_num(b, 0.0)) return a;
  }
  if (k == Kind::sub && is_num(b, 0.0)) return a;
  if (k == Kind::mul) {
    if (is_num(a, 0.0) || is_num(b, 0.0)) return num(0.0);
    if (is_num(a, 1.0)) return b;
    if (is_num(b, 1.0)) return a;
  }
  if (k == Kind::div && is_num(a, 0.0)) return num(0.0);
  return std::make_shared<const Node>(Node{k, 0.0, {}, std::move(a), std::move(b)});
}

double eval(const Node& n, double x1, double x2, double t) {
  switch (n.kind) {
    case Kind::num: return n.value;
    case Kind::var: return n.var == Expression::Var::x1 ? x1 : n.var == Expression::Var::x2 ? x2 : t;
    case Kind::add: return eval(*n.a, x1, x2, t) + eval(*n.b, x1, x2, t);
    case Kind::sub: return eval(*n.a, x1, x2, t) - eval(*n.b, x1, x2, t);
    case Kind::mul: return eval(*n.a, x1, x2, t) * eval(*n.b, x1, x2, t);
    case Kind::div: return eval(*n.a, x1, x2, t) / eval(*n.b, x1, x2, t);
    case Kind::pow: {
      const double e = eval(*n.b, x1, x2, t);
      const double base = eval(*n.a, x1, x2, t);
      if (e == std::round(e) && std::abs(e) <= 64) {
        // repeated product so integer powers of negative bases behave
        double r = 1.0;
        for (int i = 0; i < static_cast<int>(std::abs(e)); ++i) r *= base;
        return e < 0 ? 1.0 / r : r;
      }
      return std::pow(base, e);
    }
    case Kind::neg: return -eval(*n.a, x1, x2, t);
    case Kind::exp: return std::exp(eval(*n.a, x1, x2, t));
    case Kind::sin: return std::sin(eval(*n.a, x1, x2, t));
    case Kind::cos: return std::cos(eval(*n.a, x1, x2, t));
    case Kind::abs: return std::abs(eval(*n.a, x1, x2, t));
    case Kind::log: return std::log(eval(*n.a, x1, x2, t));
    case Kind::sign: {
      const double v = eval(*n.a, x1, x2, t);
      return v > 0 ? 1.0 : v < 0 ? -1.0 : 0.0;
    }
  }
  return 0.0;
}

bool depends(const NodePtr& n, Expression::Var v) {
  if (!n) return false;
  if (n->kind == Kind::var) return n->var == v;
  return depends(n->a, v) || depends(n->b, v);
}

NodePtr diff(const NodePtr& n, Expression::Var v) {
  if (!depends(n, v)) return num(0.0);
  switch (n->kind) {
    case Kind::num: return num(0.0);
    case Kind::var: return num(1.0);
    case Kind::add: return binary(Kind::add, diff(n->a, v), diff(n->b, v));
    case Kind::sub: return binary(Kind::sub, diff(n->a, v), diff(n->b, v));
    case Kind::mul:
      return binary(Kind::add, binary(Kind::mul, diff(n->a, v), n->b), binary(Kind::mul, n->a, diff(n->b, v)));
    case Kind::div:
      return binary(Kind::div,
                    binary(Kind::sub, binary(Kind::mul, diff(n->a, v), n->b), binary(Kind::mul, n->a, diff(n->b, v))),
                    binary(Kind::mul, n->b, n->b));
    case Kind::pow: {
      if (!depends(n->b, v)) {
        auto lowered = binary(Kind::pow, n->a, binary(Kind::sub, n->b, num(1.0)));
        return binary(Kind::mul, binary(Kind::mul, n->b, lowered), diff(n->a, v));
      }
      // d(f^g) = f^g (g' ln f + g f'/f)
      auto inner = binary(Kind::add, binary(Kind::mul, diff(n->b, v), unary(Kind::log, n->a)),
                          binary(Kind::div, binary(Kind::mul, n->b, diff(n->a, v)), n->a));
      return binary(Kind::mul, n, inner);
    }
    case Kind::neg: return unary(Kind::neg, diff(n->a, v));
    case Kind::exp: return binary(Kind::mul, n, diff(n->a, v));
    case Kind::sin: return binary(Kind::mul, unary(Kind::cos, n->a), diff(n->a, v));
    case Kind::cos: return unary(Kind::neg, binary(Kind::mul, unary(Kind::sin, n->a), diff(n->a, v)));
    case Kind::abs: return binary(Kind::mul, unary(Kind::sign, n->a), diff(n->a, v));
    case Kind::log: return binary(Kind::div, diff(n->a, v), n->a);
    case Kind::sign: return num(0.0);
  }
  return num(0.0);
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    auto n = expr();
    skip();
    if (pos_ != s_.size()) throw ExpressionError("unexpected '" + std::string(1, s_[pos_]) + "'", pos_);
    return n;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) throw ExpressionError(std::string("expected '") + c + "'", pos_);
  }

  NodePtr expr() {
    auto n = term();
    for (;;) {
      if (accept('+')) n = binary(Kind::add, n, term());
      else if (accept('-')) n = binary(Kind::sub, n, term());
      else return n;
    }
  }
  NodePtr term() {
    auto n = unary_expr();
    for (;;) {
      if (accept('*')) n = binary(Kind::mul, n, unary_expr());
      else if (accept('/')) n = binary(Kind::div, n, unary_expr());
      else return n;
    }
  }
  NodePtr unary_expr() {
    if (accept('-')) {
      auto a = unary_expr();
      if (a->kind == Kind::num) return num(-a->value);
      return unary(Kind::neg, a);
    }
    if (accept('+')) return unary_expr();
    return power();
  }
  NodePtr power() {
    auto base = atom();
    if (accept('^')) return binary(Kind::pow, base, unary_expr());
    return base;
  }
  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) throw ExpressionError("unexpected end of expression", pos_);
    const char c = s_[pos_];
    if (accept('(')) {
      auto n = expr();
      expect(')');
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      auto res = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
      if (res.ec != std::errc()) throw ExpressionError("bad number", pos_);
      pos_ = static_cast<std::size_t>(res.ptr - s_.data());
      return num(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      if (id == "x1") return var(Expression::Var::x1);
      if (id == "x2") return var(Expression::Var::x2);
      if (id == "t") return var(Expression::Var::t);
      if (id == "pi") return num(std::numbers::pi);
      Kind k;
      if (id == "exp") k = Kind::exp;
      else if (id == "sin") k = Kind::sin;
      else if (id == "cos") k = Kind::cos;
      else if (id == "abs") k = Kind::abs;
      else throw ExpressionError("unknown identifier '" + id + "'", start);
      expect('(');
      auto arg = expr();
      expect(')');
      return unary(k, arg);
    }
    throw ExpressionError("unexpected '" + std::string(1, c) + "'", pos_);
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text) { return Expression(Parser(text).parse(), text); }

Expression Expression::constant(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return Expression(num(v), std::string(buf, res.ptr));
}

double Expression::evaluate(double x1, double x2, double t) const { return eval(*root_, x1, x2, t); }

Expression Expression::derivative(Var v) const {
  const char* name = v == Var::x1 ? "x1" : v == Var::x2 ? "x2" : "t";
  return Expression(diff(root_, v), "d/d" + std::string(name) + "(" + source_ + ")");
}

bool Expression::depends_on(Var v) const { return depends(root_, v); }

}  // namespace hardylab
