#pragma once

#include <cctype>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ldt/errors.hpp"
#include "ldt/linalg.hpp"

namespace ldt::expr {

// Arithmetic expressions over the state variables x1..xn (and y1..yn where a
// phase-space function is expected), named parameters, and the functions
// exp/sin/cos. Operators: + - * / ^ with ^ binding tightest, right
// associative. Compiled once to an immutable tree; evaluation is re-entrant.

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  enum class Kind { Constant, StateVar, MomentumVar, Add, Sub, Mul, Div, Pow, Neg, Exp, Sin, Cos };
  Kind kind;
  double constant = 0.0;
  int index = 0;  // variable index for StateVar / MomentumVar
  NodePtr lhs, rhs;
};

class Compiled {
 public:
  Compiled() = default;
  Compiled(NodePtr root, std::string source) : root_(std::move(root)), source_(std::move(source)) {}

  double operator()(const Vec& x) const { return eval(root_.get(), x, nullptr); }
  double operator()(const Vec& x, const Vec& y) const { return eval(root_.get(), x, &y); }

  const std::string& source() const { return source_; }
  bool empty() const { return root_ == nullptr; }

 private:
  static double eval(const Node* n, const Vec& x, const Vec* y) {
    switch (n->kind) {
      case Node::Kind::Constant: return n->constant;
      case Node::Kind::StateVar: return x[static_cast<std::size_t>(n->index)];
      case Node::Kind::MomentumVar:
        if (!y) throw InvalidParam("expression uses y" + std::to_string(n->index + 1) +
                                   " but no momentum argument was supplied");
        return (*y)[static_cast<std::size_t>(n->index)];
      case Node::Kind::Add: return eval(n->lhs.get(), x, y) + eval(n->rhs.get(), x, y);
      case Node::Kind::Sub: return eval(n->lhs.get(), x, y) - eval(n->rhs.get(), x, y);
      case Node::Kind::Mul: return eval(n->lhs.get(), x, y) * eval(n->rhs.get(), x, y);
      case Node::Kind::Div: return eval(n->lhs.get(), x, y) / eval(n->rhs.get(), x, y);
      case Node::Kind::Pow: return std::pow(eval(n->lhs.get(), x, y), eval(n->rhs.get(), x, y));
      case Node::Kind::Neg: return -eval(n->lhs.get(), x, y);
      case Node::Kind::Exp: return std::exp(eval(n->lhs.get(), x, y));
      case Node::Kind::Sin: return std::sin(eval(n->lhs.get(), x, y));
      case Node::Kind::Cos: return std::cos(eval(n->lhs.get(), x, y));
    }
    throw Error("corrupt expression tree");
  }

  NodePtr root_;
  std::string source_;
};

namespace detail {

class Parser {
 public:
  Parser(std::string text, int dim, const std::map<std::string, double>& params)
      : text_(std::move(text)), dim_(dim), params_(params) {}

  NodePtr parse() {
    NodePtr e = expression();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + text_ + "': " + what + " at position " +
                      std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool consume(char c) {
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

  NodePtr expression() {
    NodePtr lhs = term();
    for (;;) {
      if (consume('+'))
        lhs = binary(Node::Kind::Add, lhs, term());
      else if (consume('-'))
        lhs = binary(Node::Kind::Sub, lhs, term());
      else
        return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (consume('*'))
        lhs = binary(Node::Kind::Mul, lhs, unary());
      else if (consume('/'))
        lhs = binary(Node::Kind::Div, lhs, unary());
      else
        return lhs;
    }
  }

  NodePtr unary() {
    if (consume('-')) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Neg;
      n->lhs = unary();
      return n;
    }
    if (consume('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (consume('^')) return binary(Node::Kind::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    if (consume('(')) {
      NodePtr e = expression();
      if (!consume(')')) fail("missing ')'");
      return e;
    }
    fail("unexpected character");
  }

  NodePtr number() {
    std::size_t end = 0;
    double v;
    try {
      v = std::stod(text_.substr(pos_), &end);
    } catch (const std::exception&) {
      fail("bad number");
    }
    pos_ += end;
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Constant;
    n->constant = v;
    return n;
  }

  NodePtr identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string name = text_.substr(start, pos_ - start);

    if (name == "exp" || name == "sin" || name == "cos") {
      if (!consume('(')) fail("'" + name + "' needs an argument list");
      auto n = std::make_shared<Node>();
      n->kind = name == "exp" ? Node::Kind::Exp : name == "sin" ? Node::Kind::Sin : Node::Kind::Cos;
      n->lhs = expression();
      if (!consume(')')) fail("missing ')'");
      return n;
    }
    if (auto idx = var_index(name, 'x'); idx >= 0) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::StateVar;
      n->index = idx;
      return n;
    }
    if (auto idx = var_index(name, 'y'); idx >= 0) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::MomentumVar;
      n->index = idx;
      return n;
    }
    if (auto it = params_.find(name); it != params_.end()) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Constant;
      n->constant = it->second;
      return n;
    }
    if (peek() == '(') fail("unknown function '" + name + "'");
    fail("unknown symbol '" + name + "'");
  }

  int var_index(const std::string& name, char prefix) const {
    if (name.size() < 2 || name[0] != prefix) return -1;
    for (std::size_t i = 1; i < name.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(name[i]))) return -1;
    const int idx = std::stoi(name.substr(1)) - 1;
    if (idx < 0 || idx >= dim_)
      throw ConfigError("expression '" + text_ + "': variable " + name +
                        " out of range for dimension " + std::to_string(dim_));
    return idx;
  }

  static NodePtr binary(Node::Kind kind, NodePtr l, NodePtr r) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
  }

  std::string text_;
  std::size_t pos_ = 0;
  int dim_;
  const std::map<std::string, double>& params_;
};

}  // namespace detail

inline Compiled compile(const std::string& text, int dim,
                        const std::map<std::string, double>& params = {}) {
  detail::Parser p(text, dim, params);
  return Compiled(p.parse(), text);
}

}  // namespace ldt::expr
