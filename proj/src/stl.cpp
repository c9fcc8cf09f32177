// Apache License, Version 2.0, refer to LICENSE.txt
#include "riskscope/stl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "riskscope/errors.hpp"

namespace riskscope::stl {

void Signal::validate() const {
  if (times.size() != values.size()) throw InvalidParameter("Signal: times/values length mismatch");
  if (times.empty()) throw InvalidParameter("Signal: empty");
  const std::size_t o = values.front().size();
  if (o < 1) throw InvalidParameter("Signal: zero-dimensional values");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0 && !(times[i] > times[i - 1]))
      throw InvalidParameter("Signal: timestamps not strictly increasing");
    if (values[i].size() != o) throw InvalidParameter("Signal: ragged value dimensions");
  }
}

namespace {

using ExprPtr = std::shared_ptr<const Expr>;

ExprPtr make_expr(Expr e) { return std::make_shared<const Expr>(std::move(e)); }
FormulaPtr make_node(Formula f) { return std::make_shared<const Formula>(std::move(f)); }

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  FormulaPtr run() {
    FormulaPtr phi = parse_or();
    skip_ws();
    if (pos_ != text_.size()) throw SyntaxError("trailing input", pos_);
    return phi;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eof() {
    skip_ws();
    return pos_ >= text_.size();
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!consume(c)) throw SyntaxError(std::string("expected '") + c + "' in " + what, pos_);
  }

  bool consume_keyword(std::string_view kw) {
    skip_ws();
    if (text_.substr(pos_).starts_with(kw)) {
      pos_ += kw.size();
      return true;
    }
    return false;
  }

  double parse_number() {
    skip_ws();
    const char* begin = text_.data() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) throw SyntaxError("expected number", pos_);
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

  std::pair<double, double> parse_interval() {
    expect('[', "temporal bound");
    const std::size_t at = pos_;
    const double a = parse_number();
    expect(',', "temporal bound");
    const double b = parse_number();
    expect(']', "temporal bound");
    if (!(a >= 0.0) || !(a <= b) || !std::isfinite(b))
      throw SyntaxError("temporal bound requires 0 <= a <= b < inf", at);
    return {a, b};
  }

  FormulaPtr parse_or() {
    FormulaPtr node = parse_and();
    while (peek() == '|') {
      consume('|');
      FormulaPtr rhs = parse_and();
      node = make_node({.kind = NodeKind::Or, .left = node, .right = rhs});
    }
    return node;
  }

  FormulaPtr parse_and() {
    FormulaPtr node = parse_until();
    while (peek() == '&') {
      consume('&');
      FormulaPtr rhs = parse_until();
      node = make_node({.kind = NodeKind::And, .left = node, .right = rhs});
    }
    return node;
  }

  FormulaPtr parse_until() {
    FormulaPtr node = parse_unary();
    for (;;) {
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == 'U') {
        ++pos_;
        auto [a, b] = parse_interval();
        FormulaPtr rhs = parse_unary();
        node = make_node({.kind = NodeKind::Until, .t_lo = a, .t_hi = b, .left = node, .right = rhs});
      } else {
        return node;
      }
    }
  }

  FormulaPtr parse_unary() {
    skip_ws();
    if (consume('!')) {
      FormulaPtr child = parse_unary();
      return make_node({.kind = NodeKind::Not, .left = child});
    }
    if (pos_ < text_.size() && (text_[pos_] == 'F' || text_[pos_] == 'G')) {
      const char op = text_[pos_++];
      auto [a, b] = parse_interval();
      FormulaPtr child = parse_unary();
      return make_node({.kind = op == 'F' ? NodeKind::Eventually : NodeKind::Always,
                        .t_lo = a,
                        .t_hi = b,
                        .left = child});
    }
    if (peek() == '(') {
      // Could open either a sub-formula or a parenthesized arithmetic
      // expression; try the predicate reading first and backtrack.
      const std::size_t saved = pos_;
      try {
        return parse_pred();
      } catch (const SyntaxError&) {
        pos_ = saved;
      }
      expect('(', "formula");
      FormulaPtr phi = parse_or();
      expect(')', "formula");
      return phi;
    }
    return parse_pred();
  }

  FormulaPtr parse_pred() {
    ExprPtr lhs = parse_expr();
    skip_ws();
    bool less;
    if (consume('>'))
      less = false;
    else if (consume('<'))
      less = true;
    else
      throw SyntaxError("expected '<' or '>' in predicate", pos_);
    ExprPtr rhs = parse_expr();
    return make_node({.kind = NodeKind::Pred, .lhs = lhs, .rhs = rhs, .less = less});
  }

  ExprPtr parse_expr() {
    ExprPtr node = parse_term();
    for (;;) {
      const char c = peek();
      if (c == '+' || c == '-') {
        consume(c);
        ExprPtr rhs = parse_term();
        node = make_expr({.op = c == '+' ? ExprOp::Add : ExprOp::Sub, .a = node, .b = rhs});
      } else {
        return node;
      }
    }
  }

  ExprPtr parse_term() {
    ExprPtr node = parse_factor();
    while (peek() == '*') {
      consume('*');
      ExprPtr rhs = parse_factor();
      node = make_expr({.op = ExprOp::Mul, .a = node, .b = rhs});
    }
    return node;
  }

  ExprPtr parse_factor() {
    skip_ws();
    if (consume('-')) {
      ExprPtr child = parse_factor();
      return make_expr({.op = ExprOp::Neg, .a = child});
    }
    if (consume_keyword("min(")) return parse_binary_call(ExprOp::Min);
    if (consume_keyword("max(")) return parse_binary_call(ExprOp::Max);
    if (consume_keyword("abs(")) {
      ExprPtr a = parse_expr();
      expect(')', "abs");
      return make_expr({.op = ExprOp::Abs, .a = a});
    }
    if (pos_ < text_.size() && text_[pos_] == 'y') {
      ++pos_;
      expect('[', "coordinate");
      skip_ws();
      const std::size_t at = pos_;
      const double k = parse_number();
      expect(']', "coordinate");
      if (k < 0 || k != std::floor(k)) throw SyntaxError("coordinate index must be a non-negative integer", at);
      return make_expr({.op = ExprOp::Coord, .coord = static_cast<std::size_t>(k)});
    }
    if (consume('(')) {
      ExprPtr e = parse_expr();
      expect(')', "expression");
      return e;
    }
    const double v = parse_number();
    return make_expr({.op = ExprOp::Constant, .constant = v});
  }

  ExprPtr parse_binary_call(ExprOp op) {
    ExprPtr a = parse_expr();
    expect(',', "call");
    ExprPtr b = parse_expr();
    expect(')', "call");
    return make_expr({.op = op, .a = a, .b = b});
  }
};

std::string num_str(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string expr_str(const Expr& e) {
  switch (e.op) {
    case ExprOp::Constant:
      return num_str(e.constant);
    case ExprOp::Coord:
      return "y[" + std::to_string(e.coord) + "]";
    case ExprOp::Add:
      return "(" + expr_str(*e.a) + " + " + expr_str(*e.b) + ")";
    case ExprOp::Sub:
      return "(" + expr_str(*e.a) + " - " + expr_str(*e.b) + ")";
    case ExprOp::Mul:
      return "(" + expr_str(*e.a) + " * " + expr_str(*e.b) + ")";
    case ExprOp::Neg:
      return "(-" + expr_str(*e.a) + ")";
    case ExprOp::Abs:
      return "abs(" + expr_str(*e.a) + ")";
    case ExprOp::Min:
      return "min(" + expr_str(*e.a) + ", " + expr_str(*e.b) + ")";
    case ExprOp::Max:
      return "max(" + expr_str(*e.a) + ", " + expr_str(*e.b) + ")";
  }
  return {};
}

std::string interval_str(const Formula& f) {
  return "[" + num_str(f.t_lo) + "," + num_str(f.t_hi) + "]";
}

double eval_expr(const Expr& e, const numerics::Vec& value) {
  switch (e.op) {
    case ExprOp::Constant:
      return e.constant;
    case ExprOp::Coord:
      if (e.coord >= value.size())
        throw UnboundCoordinate("y[" + std::to_string(e.coord) + "] exceeds signal dimension " +
                                std::to_string(value.size()));
      return value[e.coord];
    case ExprOp::Add:
      return eval_expr(*e.a, value) + eval_expr(*e.b, value);
    case ExprOp::Sub:
      return eval_expr(*e.a, value) - eval_expr(*e.b, value);
    case ExprOp::Mul:
      return eval_expr(*e.a, value) * eval_expr(*e.b, value);
    case ExprOp::Neg:
      return -eval_expr(*e.a, value);
    case ExprOp::Abs:
      return std::fabs(eval_expr(*e.a, value));
    case ExprOp::Min:
      return std::min(eval_expr(*e.a, value), eval_expr(*e.b, value));
    case ExprOp::Max:
      return std::max(eval_expr(*e.a, value), eval_expr(*e.b, value));
  }
  return 0.0;
}

constexpr double kTimeTol = 1e-9;  // absorbs accumulated timestamp rounding

struct Evaluator {
  const Signal& y;

  std::pair<std::size_t, std::size_t> window(std::size_t i, double lo, double hi) const {
    const double t0 = y.times[i] + lo - kTimeTol;
    const double t1 = y.times[i] + hi + kTimeTol;
    const auto begin = std::lower_bound(y.times.begin(), y.times.end(), t0);
    const auto end = std::upper_bound(y.times.begin(), y.times.end(), t1);
    if (begin >= end) throw EmptyWindow("temporal window contains no sample");
    return {static_cast<std::size_t>(begin - y.times.begin()),
            static_cast<std::size_t>(end - y.times.begin())};
  }

  double eval(const Formula& f, std::size_t i) const {
    switch (f.kind) {
      case NodeKind::Pred: {
        const double l = eval_expr(*f.lhs, y.values[i]);
        const double r = eval_expr(*f.rhs, y.values[i]);
        return f.less ? r - l : l - r;
      }
      case NodeKind::Not:
        return -eval(*f.left, i);
      case NodeKind::And:
        return std::min(eval(*f.left, i), eval(*f.right, i));
      case NodeKind::Or:
        return std::max(eval(*f.left, i), eval(*f.right, i));
      case NodeKind::Eventually: {
        auto [b, e] = window(i, f.t_lo, f.t_hi);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = b; j < e; ++j) best = std::max(best, eval(*f.left, j));
        return best;
      }
      case NodeKind::Always: {
        auto [b, e] = window(i, f.t_lo, f.t_hi);
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t j = b; j < e; ++j) worst = std::min(worst, eval(*f.left, j));
        return worst;
      }
      case NodeKind::Until: {
        auto [b, e] = window(i, f.t_lo, f.t_hi);
        double best = -std::numeric_limits<double>::infinity();
        double left_min = std::numeric_limits<double>::infinity();
        for (std::size_t k = i; k < b; ++k) left_min = std::min(left_min, eval(*f.left, k));
        for (std::size_t j = b; j < e; ++j) {
          left_min = std::min(left_min, eval(*f.left, j));
          best = std::max(best, std::min(eval(*f.right, j), left_min));
        }
        return best;
      }
    }
    return 0.0;
  }
};

}  // namespace

FormulaPtr parse(std::string_view text) { return Parser(text).run(); }

std::string to_string(const Formula& phi) {
  switch (phi.kind) {
    case NodeKind::Pred:
      return expr_str(*phi.lhs) + (phi.less ? " < " : " > ") + expr_str(*phi.rhs);
    case NodeKind::Not:
      return "!(" + to_string(*phi.left) + ")";
    case NodeKind::And:
      return "(" + to_string(*phi.left) + ") & (" + to_string(*phi.right) + ")";
    case NodeKind::Or:
      return "(" + to_string(*phi.left) + ") | (" + to_string(*phi.right) + ")";
    case NodeKind::Eventually:
      return "F" + interval_str(phi) + " (" + to_string(*phi.left) + ")";
    case NodeKind::Always:
      return "G" + interval_str(phi) + " (" + to_string(*phi.left) + ")";
    case NodeKind::Until:
      return "(" + to_string(*phi.left) + ") U" + interval_str(phi) + " (" + to_string(*phi.right) +
             ")";
  }
  return {};
}

bool equal(const Expr& a, const Expr& b) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case ExprOp::Constant:
      return a.constant == b.constant;
    case ExprOp::Coord:
      return a.coord == b.coord;
    default:
      break;
  }
  if (static_cast<bool>(a.a) != static_cast<bool>(b.a)) return false;
  if (static_cast<bool>(a.b) != static_cast<bool>(b.b)) return false;
  if (a.a && !equal(*a.a, *b.a)) return false;
  if (a.b && !equal(*a.b, *b.b)) return false;
  return true;
}

bool equal(const Formula& a, const Formula& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::Pred:
      return a.less == b.less && equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
    case NodeKind::Not:
      return equal(*a.left, *b.left);
    case NodeKind::And:
    case NodeKind::Or:
      return equal(*a.left, *b.left) && equal(*a.right, *b.right);
    case NodeKind::Eventually:
    case NodeKind::Always:
      return a.t_lo == b.t_lo && a.t_hi == b.t_hi && equal(*a.left, *b.left);
    case NodeKind::Until:
      return a.t_lo == b.t_lo && a.t_hi == b.t_hi && equal(*a.left, *b.left) &&
             equal(*a.right, *b.right);
  }
  return false;
}

double robustness(const Formula& phi, const Signal& y, double t) {
  y.validate();
  if (t < y.times.front() - kTimeTol || t > y.times.back() + kTimeTol)
    throw InvalidParameter("robustness: t outside signal time span");
  // Evaluation is anchored at the last sample not after t.
  auto it = std::upper_bound(y.times.begin(), y.times.end(), t + kTimeTol);
  const std::size_t i = it == y.times.begin() ? 0 : static_cast<std::size_t>(it - y.times.begin()) - 1;
  return Evaluator{y}.eval(phi, i);
}

}  // namespace riskscope::stl
