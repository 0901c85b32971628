#include "netchemo/expr.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <vector>

namespace netchemo {

struct Expression::Node {
  enum class Kind { Number, VarX, VarL, Call, Binary, Negate } kind;
  double value = 0;
  char op = 0;
  std::string fn;
  std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

class Parser {
public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = sum();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

private:
  const std::string& s_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& m) const {
    throw ExprError("expression error at position " + std::to_string(pos_) + ": " + m);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr make(Expression::Node n) { return std::make_shared<Expression::Node>(std::move(n)); }

  NodePtr sum() {
    NodePtr e = product();
    for (;;) {
      if (eat('+'))
        e = make({Expression::Node::Kind::Binary, 0, '+', "", e, product()});
      else if (eat('-'))
        e = make({Expression::Node::Kind::Binary, 0, '-', "", e, product()});
      else
        return e;
    }
  }

  NodePtr product() {
    NodePtr e = unary();
    for (;;) {
      if (eat('*'))
        e = make({Expression::Node::Kind::Binary, 0, '*', "", e, unary()});
      else if (eat('/'))
        e = make({Expression::Node::Kind::Binary, 0, '/', "", e, unary()});
      else
        return e;
    }
  }

  // Unary minus binds looser than ^, so -x^2 means -(x^2).
  NodePtr unary() {
    if (eat('-')) return make({Expression::Node::Kind::Negate, 0, 0, "", unary(), nullptr});
    if (eat('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (eat('^'))  // right associative; the exponent may carry its own sign
      return make({Expression::Node::Kind::Binary, 0, '^', "", base, unary()});
    return base;
  }

  NodePtr atom() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = sum();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t len = 0;
      double v = std::stod(s_.substr(pos_), &len);
      pos_ += len;
      return make({Expression::Node::Kind::Number, v, 0, "", nullptr, nullptr});
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      std::string name = s_.substr(start, pos_ - start);
      if (name == "x") return make({Expression::Node::Kind::VarX, 0, 0, "", nullptr, nullptr});
      if (name == "L") return make({Expression::Node::Kind::VarL, 0, 0, "", nullptr, nullptr});
      if (name == "pi")
        return make({Expression::Node::Kind::Number, M_PI, 0, "", nullptr, nullptr});
      if (!eat('(')) fail("unknown symbol '" + name + "'");
      NodePtr arg = sum();
      if (!eat(')')) fail("expected ')' after argument of " + name);
      static const std::vector<std::string> fns = {"sin",  "cos",  "tan", "exp",  "log",
                                                   "sqrt", "sinh", "cosh", "tanh", "abs"};
      if (std::find(fns.begin(), fns.end(), name) == fns.end())
        fail("unknown function '" + name + "'");
      return make({Expression::Node::Kind::Call, 0, 0, name, arg, nullptr});
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

double eval_node(const Expression::Node& n, double x, double L) {
  using K = Expression::Node::Kind;
  switch (n.kind) {
    case K::Number: return n.value;
    case K::VarX: return x;
    case K::VarL: return L;
    case K::Negate: return -eval_node(*n.lhs, x, L);
    case K::Binary: {
      double a = eval_node(*n.lhs, x, L), b = eval_node(*n.rhs, x, L);
      switch (n.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        case '^': return std::pow(a, b);
      }
      break;
    }
    case K::Call: {
      double a = eval_node(*n.lhs, x, L);
      if (n.fn == "sin") return std::sin(a);
      if (n.fn == "cos") return std::cos(a);
      if (n.fn == "tan") return std::tan(a);
      if (n.fn == "exp") return std::exp(a);
      if (n.fn == "log") return std::log(a);
      if (n.fn == "sqrt") return std::sqrt(a);
      if (n.fn == "sinh") return std::sinh(a);
      if (n.fn == "cosh") return std::cosh(a);
      if (n.fn == "tanh") return std::tanh(a);
      if (n.fn == "abs") return std::fabs(a);
      break;
    }
  }
  throw ExprError("malformed expression tree");
}

}  // namespace

Expression::Expression() = default;
Expression::Expression(const Expression&) = default;
Expression& Expression::operator=(const Expression&) = default;
Expression::Expression(Expression&&) noexcept = default;
Expression& Expression::operator=(Expression&&) noexcept = default;
Expression::~Expression() = default;

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.root_ = Parser(text).parse();
  e.text_ = text;
  return e;
}

double Expression::eval(double x, double arc_length) const {
  if (!root_) throw ExprError("empty expression");
  return eval_node(*root_, x, arc_length);
}

}  // namespace netchemo
