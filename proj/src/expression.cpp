#include "tlab/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

#include "tlab/error.hpp"
#include "tlab/io.hpp"

namespace tlab {

struct Expression::Node {
  enum class Op { num, var_x, var_u, add, sub, mul, div, pow, neg, call };
  Op op = Op::num;
  double value = 0.0;
  std::string fn;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using Node = Expression::Node;
using Op = Node::Op;
using NodePtr = std::shared_ptr<const Node>;

NodePtr num(double v) {
  auto n = std::make_shared<Node>();
  n->value = v;
  return n;
}

NodePtr make(Op op, std::vector<NodePtr> args, std::string fn = {}) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args = std::move(args);
  n->fn = std::move(fn);
  return n;
}

bool is_num(const NodePtr& n, double v) { return n->op == Op::num && n->value == v; }

NodePtr add(NodePtr a, NodePtr b) {
  if (is_num(a, 0)) return b;
  if (is_num(b, 0)) return a;
  return make(Op::add, {std::move(a), std::move(b)});
}
NodePtr sub(NodePtr a, NodePtr b) {
  if (is_num(b, 0)) return a;
  return make(Op::sub, {std::move(a), std::move(b)});
}
NodePtr mul(NodePtr a, NodePtr b) {
  if (is_num(a, 0) || is_num(b, 0)) return num(0);
  if (is_num(a, 1)) return b;
  if (is_num(b, 1)) return a;
  return make(Op::mul, {std::move(a), std::move(b)});
}
NodePtr div(NodePtr a, NodePtr b) {
  if (is_num(a, 0)) return num(0);
  return make(Op::div, {std::move(a), std::move(b)});
}
NodePtr call(const std::string& fn, NodePtr a) { return make(Op::call, {std::move(a)}, fn); }

class Parser {
 public:
  Parser(const std::string& s, const std::map<std::string, double>& constants)
      : s_(s), constants_(constants) {}

  NodePtr parse() {
    auto n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("expression", msg + " at column " + std::to_string(pos_ + 1) + " in `" + s_ + "`");
  }
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

  NodePtr expr() {
    auto n = term();
    for (;;) {
      if (accept('+')) n = make(Op::add, {n, term()});
      else if (accept('-')) n = make(Op::sub, {n, term()});
      else return n;
    }
  }
  NodePtr term() {
    auto n = unary();
    for (;;) {
      if (accept('*')) n = make(Op::mul, {n, unary()});
      else if (accept('/')) n = make(Op::div, {n, unary()});
      else return n;
    }
  }
  NodePtr unary() {
    if (accept('-')) return make(Op::neg, {unary()});
    if (accept('+')) return unary();
    return power();
  }
  NodePtr power() {
    auto base = primary();
    if (accept('^')) return make(Op::pow, {base, unary()});
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    if (accept('(')) {
      auto n = expr();
      if (!accept(')')) fail("expected `)`");
      return n;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      return num(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (accept('(')) {
        static const char* known[] = {"sin", "cos", "tan", "exp", "log", "sqrt", "tanh", "abs"};
        bool ok = false;
        for (const char* k : known) ok = ok || name == k;
        if (!ok) fail("unknown function `" + name + "`");
        auto arg = expr();
        if (!accept(')')) fail("expected `)`");
        return call(name, arg);
      }
      if (name == "x") return make(Op::var_x, {});
      if (name == "u") return make(Op::var_u, {});
      if (name == "pi") return num(std::numbers::pi);
      if (auto it = constants_.find(name); it != constants_.end()) return num(it->second);
      fail("unknown symbol `" + name + "`");
    }
    fail("unexpected character");
  }

  const std::string& s_;
  const std::map<std::string, double>& constants_;
  std::size_t pos_ = 0;
};

double eval_node(const Node& n, double x, double u) {
  switch (n.op) {
    case Op::num: return n.value;
    case Op::var_x: return x;
    case Op::var_u: return u;
    case Op::add: return eval_node(*n.args[0], x, u) + eval_node(*n.args[1], x, u);
    case Op::sub: return eval_node(*n.args[0], x, u) - eval_node(*n.args[1], x, u);
    case Op::mul: return eval_node(*n.args[0], x, u) * eval_node(*n.args[1], x, u);
    case Op::div: return eval_node(*n.args[0], x, u) / eval_node(*n.args[1], x, u);
    case Op::pow: return std::pow(eval_node(*n.args[0], x, u), eval_node(*n.args[1], x, u));
    case Op::neg: return -eval_node(*n.args[0], x, u);
    case Op::call: {
      const double a = eval_node(*n.args[0], x, u);
      if (n.fn == "sin") return std::sin(a);
      if (n.fn == "cos") return std::cos(a);
      if (n.fn == "tan") return std::tan(a);
      if (n.fn == "exp") return std::exp(a);
      if (n.fn == "log") return std::log(a);
      if (n.fn == "sqrt") return std::sqrt(a);
      if (n.fn == "tanh") return std::tanh(a);
      return std::abs(a);
    }
  }
  return 0.0;
}

bool depends_on_u(const NodePtr& n) {
  if (n->op == Op::var_u) return true;
  for (const auto& a : n->args)
    if (depends_on_u(a)) return true;
  return false;
}

NodePtr diff(const NodePtr& n) {
  if (!depends_on_u(n)) return num(0);
  const auto& a = n->args;
  switch (n->op) {
    case Op::num:
    case Op::var_x: return num(0);
    case Op::var_u: return num(1);
    case Op::add: return add(diff(a[0]), diff(a[1]));
    case Op::sub: return sub(diff(a[0]), diff(a[1]));
    case Op::mul: return add(mul(diff(a[0]), a[1]), mul(a[0], diff(a[1])));
    case Op::div:
      return div(sub(mul(diff(a[0]), a[1]), mul(a[0], diff(a[1]))), mul(a[1], a[1]));
    case Op::neg: return make(Op::neg, {diff(a[0])});
    case Op::pow:
      if (!depends_on_u(a[1])) {
        // d(g^k) = k g^(k-1) g'
        return mul(mul(a[1], make(Op::pow, {a[0], sub(a[1], num(1))})), diff(a[0]));
      } else {
        // d(g^h) = g^h (h' log g + h g'/g)
        return mul(n, add(mul(diff(a[1]), call("log", a[0])), div(mul(a[1], diff(a[0])), a[0])));
      }
    case Op::call: {
      const auto& g = a[0];
      auto dg = diff(g);
      NodePtr outer;
      if (n->fn == "sin") outer = call("cos", g);
      else if (n->fn == "cos") outer = make(Op::neg, {call("sin", g)});
      else if (n->fn == "tan") outer = div(num(1), mul(call("cos", g), call("cos", g)));
      else if (n->fn == "exp") outer = n;
      else if (n->fn == "log") outer = div(num(1), g);
      else if (n->fn == "sqrt") outer = div(num(0.5), n);
      else if (n->fn == "tanh") outer = sub(num(1), mul(n, n));
      else outer = div(g, call("abs", g));
      return mul(outer, dg);
    }
  }
  return num(0);
}

std::string show(const Node& n) {
  auto bin = [&](const char* op) {
    return "(" + show(*n.args[0]) + " " + op + " " + show(*n.args[1]) + ")";
  };
  switch (n.op) {
    case Op::num: return fmt_num(n.value);
    case Op::var_x: return "x";
    case Op::var_u: return "u";
    case Op::add: return bin("+");
    case Op::sub: return bin("-");
    case Op::mul: return bin("*");
    case Op::div: return bin("/");
    case Op::pow: return bin("^");
    case Op::neg: return "-" + show(*n.args[0]);
    case Op::call: return n.fn + "(" + show(*n.args[0]) + ")";
  }
  return {};
}

}  // namespace

Expression Expression::parse(const std::string& text, const std::map<std::string, double>& constants) {
  return Expression(Parser(text, constants).parse());
}

double Expression::eval(double x, double u) const { return eval_node(*root_, x, u); }

Expression Expression::derivative_u() const { return Expression(diff(root_)); }

std::string Expression::to_string() const { return show(*root_); }

}  // namespace tlab
