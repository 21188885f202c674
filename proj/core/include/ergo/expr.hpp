#pragma once

#include <functional>
#include <memory>
#include <string>

namespace ergo {

// Minimal arithmetic expression grammar over one variable, used by the JSON
// model interface:  +, -, *, /, ^ (right associative), unary -, parentheses,
// exp, ln, sin, cos, numeric literals and the variable x.
//
//   expr    := term (('+'|'-') term)*
//   term    := factor (('*'|'/') factor)*
//   factor  := unary ('^' factor)?
//   unary   := '-' unary | primary
//   primary := number | 'x' | func '(' expr ')' | '(' expr ')'
//
// parse_expression throws validation_error on syntax errors, naming the
// offending position.
class Expr {
 public:
  virtual ~Expr() = default;
  virtual double eval(double x) const = 0;
};

using ExprPtr = std::shared_ptr<const Expr>;

ExprPtr parse_expression(const std::string& text);

// Convenience wrapper: compiled evaluator as a plain function object.
std::function<double(double)> compile_expression(const std::string& text);

}  // namespace ergo
