#pragma once

#include <map>
#include <memory>
#include <string>

namespace tlab {

/// Closed-form expression in the variables `x` and `u` with symbolic
/// differentiation in `u`.
///
/// Grammar: numbers, `x`, `u`, named constants, + - * / ^, unary minus and
/// the functions sin cos tan exp log sqrt tanh abs.
class Expression {
 public:
  struct Node;

  static Expression parse(const std::string& text,
                          const std::map<std::string, double>& constants = {});

  double eval(double x, double u) const;
  Expression derivative_u() const;
  std::string to_string() const;

 private:
  explicit Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

}  // namespace tlab
