// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "riskscope/linalg.hpp"

namespace riskscope::stl {

/// Time-sampled trajectory: strictly increasing timestamps with one
/// fixed-dimension value vector per sample.
struct Signal {
  std::vector<double> times;
  std::vector<numerics::Vec> values;

  std::size_t dim() const { return values.empty() ? 0 : values.front().size(); }
  void validate() const;  // throws InvalidParameter on a malformed signal
};

enum class ExprOp { Constant, Coord, Add, Sub, Mul, Neg, Abs, Min, Max };

/// Arithmetic expression over signal coordinates y[k] and constants.
struct Expr {
  ExprOp op = ExprOp::Constant;
  double constant = 0.0;
  std::size_t coord = 0;
  std::shared_ptr<const Expr> a;
  std::shared_ptr<const Expr> b;
};

enum class NodeKind { Pred, Not, And, Or, Eventually, Always, Until };

/// Formula node. Predicates compare two expressions; temporal nodes carry a
/// relative window [t_lo, t_hi] with 0 <= t_lo <= t_hi.
struct Formula {
  NodeKind kind = NodeKind::Pred;
  std::shared_ptr<const Expr> lhs;
  std::shared_ptr<const Expr> rhs;
  bool less = false;  // predicate comparator: lhs < rhs when true, lhs > rhs otherwise
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::shared_ptr<const Formula> left;   // only child of unary nodes
  std::shared_ptr<const Formula> right;
};

using FormulaPtr = std::shared_ptr<const Formula>;

/// Grammar:
///   phi    := or
///   or     := and ("|" and)*
///   and    := until ("&" until)*
///   until  := unary ("U[" num "," num "]" unary)*
///   unary  := "!" unary | "F[" num "," num "]" unary | "G[" num "," num "]" unary
///           | "(" phi ")" | pred
///   pred   := expr (">" | "<") expr
///   expr   := term (("+" | "-") term)*
///   term   := factor ("*" factor)*
///   factor := number | "y[" int "]" | "min(" expr "," expr ")"
///           | "max(" expr "," expr ")" | "abs(" expr ")" | "(" expr ")" | "-" factor
/// Throws SyntaxError with the offending position.
FormulaPtr parse(std::string_view text);

/// Canonical print; parse(to_string(phi)) equals phi.
std::string to_string(const Formula& phi);

bool equal(const Formula& a, const Formula& b);
bool equal(const Expr& a, const Expr& b);

/// Quantitative robustness at time t with discrete-sample semantics: temporal
/// windows range over the sample timestamps inside [t + t_lo, t + t_hi].
/// Throws EmptyWindow when a window catches no sample and UnboundCoordinate
/// for y[k] with k >= signal dimension.
double robustness(const Formula& phi, const Signal& y, double t);

}  // namespace riskscope::stl
