#pragma once

#include <memory>
#include <stdexcept>
#include <string>

namespace hardylab {

// Small arithmetic grammar over x1, x2, t:
//   expr := term (('+'|'-') term)*      term := unary (('*'|'/') unary)*
//   unary := '-' unary | power          power := atom ('^' unary)?
//   atom := number | x1 | x2 | t | pi | fn '(' expr ')' | '(' expr ')'
//   fn := exp | sin | cos | abs
class Expression {
 public:
  enum class Var { x1, x2, t };
  struct Node;

  static Expression parse(const std::string& text);
  static Expression constant(double v);

  double evaluate(double x1, double x2, double t) const;
  Expression derivative(Var v) const;
  bool depends_on(Var v) const;
  const std::string& source() const { return source_; }

 private:
  explicit Expression(std::shared_ptr<const Node> root, std::string src)
      : root_(std::move(root)), source_(std::move(src)) {}
  std::shared_ptr<const Node> root_;
  std::string source_;
};

class ExpressionError : public std::runtime_error {
 public:
  ExpressionError(const std::string& msg, std::size_t column)
      : std::runtime_error(msg + " at column " + std::to_string(column + 1)), column_(column) {}
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

}  // namespace hardylab
