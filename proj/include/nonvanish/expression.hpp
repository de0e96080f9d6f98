#pragma once

#include <memory>
#include <string>

#include "nonvanish/errors.hpp"

namespace nonvanish {

// Arithmetic expressions over x1, x2 with sin, cos, exp and the constant pi.
// Grammar: expr := term (('+'|'-') term)*, term := factor (('*'|'/') factor)*,
// factor := ('+'|'-')* primary, primary := number | x1 | x2 | pi |
// fn '(' expr ')' | '(' expr ')'.
class ScalarExpr {
 public:
  struct Node;

  static ScalarExpr parse(const std::string& text);  // throws ConfigError

  double operator()(double x1, double x2) const;
  const std::string& text() const { return text_; }

 private:
  ScalarExpr(std::shared_ptr<const Node> root, std::string text);

  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace nonvanish
