#include "nonvanish/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

namespace nonvanish {

struct ScalarExpr::Node {
  enum class Op { kConst, kX1, kX2, kAdd, kSub, kMul, kDiv, kNeg, kSin, kCos, kExp };
  Op op = Op::kConst;
  double value = 0.0;
  std::shared_ptr<const Node> lhs, rhs;

  double eval(double x1, double x2) const {
    switch (op) {
      case Op::kConst: return value;
      case Op::kX1: return x1;
      case Op::kX2: return x2;
      case Op::kAdd: return lhs->eval(x1, x2) + rhs->eval(x1, x2);
      case Op::kSub: return lhs->eval(x1, x2) - rhs->eval(x1, x2);
      case Op::kMul: return lhs->eval(x1, x2) * rhs->eval(x1, x2);
      case Op::kDiv: return lhs->eval(x1, x2) / rhs->eval(x1, x2);
      case Op::kNeg: return -lhs->eval(x1, x2);
      case Op::kSin: return std::sin(lhs->eval(x1, x2));
      case Op::kCos: return std::cos(lhs->eval(x1, x2));
      case Op::kExp: return std::exp(lhs->eval(x1, x2));
    }
    return 0.0;
  }
};

namespace {

using Node = ScalarExpr::Node;
using NodePtr = std::shared_ptr<const Node>;

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  NodePtr run() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression \"" + text_ + "\": " + what + " at position " +
                      std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (eat('+'))
        lhs = binary(Node::Op::kAdd, lhs, term());
      else if (eat('-'))
        lhs = binary(Node::Op::kSub, lhs, term());
      else
        return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      if (eat('*'))
        lhs = binary(Node::Op::kMul, lhs, factor());
      else if (eat('/'))
        lhs = binary(Node::Op::kDiv, lhs, factor());
      else
        return lhs;
    }
  }

  NodePtr factor() {
    if (eat('-')) return unary(Node::Op::kNeg, factor());
    if (eat('+')) return factor();
    return primary();
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    if (eat('(')) {
      NodePtr e = expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    fail("unexpected character");
  }

  NodePtr number() {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text_.substr(pos_), &used);
    } catch (const std::exception&) {
      fail("malformed number");
    }
    pos_ += used;
    return constant(v);
  }

  NodePtr identifier() {
    std::size_t end = pos_;
    while (end < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_'))
      ++end;
    const std::string name = text_.substr(pos_, end - pos_);
    pos_ = end;
    if (name == "x1") return leaf(Node::Op::kX1);
    if (name == "x2") return leaf(Node::Op::kX2);
    if (name == "pi") return constant(std::numbers::pi);
    Node::Op op;
    if (name == "sin")
      op = Node::Op::kSin;
    else if (name == "cos")
      op = Node::Op::kCos;
    else if (name == "exp")
      op = Node::Op::kExp;
    else
      fail("unknown identifier '" + name + "'");
    if (!eat('(')) fail("expected '(' after function name");
    NodePtr arg = expr();
    if (!eat(')')) fail("expected ')'");
    return unary(op, arg);
  }

  static NodePtr constant(double v) {
    auto n = std::make_shared<Node>();
    n->op = Node::Op::kConst;
    n->value = v;
    return n;
  }

  static NodePtr leaf(Node::Op op) {
    auto n = std::make_shared<Node>();
    n->op = op;
    return n;
  }

  static NodePtr unary(Node::Op op, NodePtr arg) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = std::move(arg);
    return n;
  }

  static NodePtr binary(Node::Op op, NodePtr lhs, NodePtr rhs) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace

ScalarExpr::ScalarExpr(std::shared_ptr<const Node> root, std::string text)
    : root_(std::move(root)), text_(std::move(text)) {}

ScalarExpr ScalarExpr::parse(const std::string& text) {
  return ScalarExpr(Parser(text).run(), text);
}

double ScalarExpr::operator()(double x1, double x2) const { return root_->eval(x1, x2); }

}  // namespace nonvanish
