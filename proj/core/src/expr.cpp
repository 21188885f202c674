#include "ergo/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "ergo/errors.hpp"

namespace ergo {

namespace {

struct NumberNode : Expr {
  double v;
  explicit NumberNode(double v) : v(v) {}
  double eval(double) const override { return v; }
};

struct VarNode : Expr {
  double eval(double x) const override { return x; }
};

struct UnaryNode : Expr {
  char op;  // '-' or function tag: 'e' exp, 'l' ln, 's' sin, 'c' cos
  ExprPtr arg;
  UnaryNode(char op, ExprPtr arg) : op(op), arg(std::move(arg)) {}
  double eval(double x) const override {
    const double a = arg->eval(x);
    switch (op) {
      case '-': return -a;
      case 'e': return std::exp(a);
      case 'l': return std::log(a);
      case 's': return std::sin(a);
      default:  return std::cos(a);
    }
  }
};

struct BinaryNode : Expr {
  char op;
  ExprPtr lhs, rhs;
  BinaryNode(char op, ExprPtr lhs, ExprPtr rhs)
      : op(op), lhs(std::move(lhs)), rhs(std::move(rhs)) {}
  double eval(double x) const override {
    const double a = lhs->eval(x);
    const double b = rhs->eval(x);
    switch (op) {
      case '+': return a + b;
      case '-': return a - b;
      case '*': return a * b;
      case '/': return a / b;
      default:  return std::pow(a, b);
    }
  }
};

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  ExprPtr parse() {
    ExprPtr e = expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw validation_error("expression error at position " +
                           std::to_string(pos_) + " in \"" + text_ + "\": " +
                           why);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  ExprPtr expr() {
    ExprPtr lhs = term();
    for (;;) {
      if (eat('+')) {
        lhs = std::make_shared<BinaryNode>('+', lhs, term());
      } else if (eat('-')) {
        lhs = std::make_shared<BinaryNode>('-', lhs, term());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr term() {
    ExprPtr lhs = factor();
    for (;;) {
      if (eat('*')) {
        lhs = std::make_shared<BinaryNode>('*', lhs, factor());
      } else if (eat('/')) {
        lhs = std::make_shared<BinaryNode>('/', lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr factor() {
    ExprPtr base = unary();
    if (eat('^')) {
      // right associative: 2^3^2 == 2^(3^2)
      return std::make_shared<BinaryNode>('^', base, factor());
    }
    return base;
  }

  ExprPtr unary() {
    if (eat('-')) return std::make_shared<UnaryNode>('-', unary());
    return primary();
  }

  ExprPtr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("expected operand");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return name();
    if (eat('(')) {
      ExprPtr e = expr();
      if (!eat(')')) fail("missing ')'");
      return e;
    }
    fail("expected number, name or '('");
  }

  ExprPtr number() {
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("bad number literal");
    pos_ += static_cast<size_t>(end - begin);
    return std::make_shared<NumberNode>(v);
  }

  ExprPtr name() {
    const size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string word = text_.substr(start, pos_ - start);
    if (word == "x") return std::make_shared<VarNode>();
    char tag = '\0';
    if (word == "exp") tag = 'e';
    else if (word == "ln") tag = 'l';
    else if (word == "sin") tag = 's';
    else if (word == "cos") tag = 'c';
    if (tag == '\0') fail("unknown name \"" + word + "\"");
    if (!eat('(')) fail("expected '(' after " + word);
    ExprPtr arg = expr();
    if (!eat(')')) fail("missing ')' after " + word + " argument");
    return std::make_shared<UnaryNode>(tag, arg);
  }

  const std::string& text_;
  size_t pos_ = 0;
};

}  // namespace

ExprPtr parse_expression(const std::string& text) { return Parser(text).parse(); }

std::function<double(double)> compile_expression(const std::string& text) {
  ExprPtr e = parse_expression(text);
  return [e](double x) { return e->eval(x); };
}

}  // namespace ergo
