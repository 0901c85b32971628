#pragma once

#include <memory>
#include <stdexcept>
#include <string>

namespace netchemo {

/// Small arithmetic expression of one spatial variable, used for initial data.
/// Grammar: + - * / ^, parentheses, unary minus, the variables `x` and `L`,
/// the constant `pi`, and the functions sin cos tan exp log sqrt abs
/// sinh cosh tanh.
class Expression {
public:
  static Expression parse(const std::string& text);
  double eval(double x, double arc_length) const;
  const std::string& text() const { return text_; }

  Expression();
  Expression(const Expression&);
  Expression& operator=(const Expression&);
  Expression(Expression&&) noexcept;
  Expression& operator=(Expression&&) noexcept;
  ~Expression();

  struct Node;  // exposed for the parser implementation

private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

class ExprError : public std::runtime_error {
public:
  explicit ExprError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace netchemo
