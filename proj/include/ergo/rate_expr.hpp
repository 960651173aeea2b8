#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ergo/errors.hpp"

namespace ergo {

/// Time-dependent rate function represented as an immutable expression tree.
///
/// Grammar (see parse_rate): constants, the time variable t, + - * /,
/// sin/cos/exp, and piecewise-constant segment lists.  Trees are shared
/// by value; all evaluation is pure and thread-safe.
class RateExpr {
 public:
  enum class Op { add, sub, mul, div };
  enum class Fn { sin, cos, exp };

  /// One piecewise-constant segment: value holds on [start, next start).
  struct Segment {
    double start;
    double value;
  };

  RateExpr() : node_(constant(0.0).node_) {}

  static RateExpr constant(double c) { return RateExpr(Node{Const{c}}); }
  static RateExpr time() { return RateExpr(Node{TimeVar{}}); }
  static RateExpr binary(Op op, RateExpr l, RateExpr r) {
    return RateExpr(Node{Binary{op, std::move(l.node_), std::move(r.node_)}});
  }
  static RateExpr apply(Fn fn, RateExpr arg) {
    return RateExpr(Node{Unary{fn, std::move(arg.node_)}});
  }

  /// Segments must have strictly increasing start times; the last one
  /// extends to +infinity.  Evaluation below the first start clamps to
  /// the first segment's value.
  static RateExpr piecewise(std::vector<Segment> segs) {
    if (segs.empty()) throw ModelError("piecewise needs at least one segment");
    for (std::size_t i = 1; i < segs.size(); ++i)
      if (!(segs[i].start > segs[i - 1].start))
        throw ModelError("piecewise breakpoints must be strictly increasing");
    return RateExpr(Node{Piecewise{std::move(segs)}});
  }

  friend RateExpr operator+(RateExpr a, RateExpr b) { return binary(Op::add, std::move(a), std::move(b)); }
  friend RateExpr operator-(RateExpr a, RateExpr b) { return binary(Op::sub, std::move(a), std::move(b)); }
  friend RateExpr operator*(RateExpr a, RateExpr b) { return binary(Op::mul, std::move(a), std::move(b)); }
  friend RateExpr operator/(RateExpr a, RateExpr b) { return binary(Op::div, std::move(a), std::move(b)); }

  /// Value at time t.  Piecewise segments are left-closed: the value at a
  /// breakpoint belongs to the segment starting there.  With left_limit
  /// set, a breakpoint evaluates to the preceding segment instead; the ODE
  /// and quadrature engines use this to stay one-sided at discontinuities.
  double eval(double t, bool left_limit = false) const {
    double v = eval_node(*node_, t, left_limit);
    if (!std::isfinite(v))
      throw DomainError("rate expression is not finite at t=" + std::to_string(t));
    return v;
  }
  double operator()(double t) const { return eval(t); }

  /// All piecewise breakpoints in the tree, sorted and deduplicated.
  std::vector<double> breakpoints() const {
    std::vector<double> out;
    collect_breakpoints(*node_, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Reparseable text form (fully parenthesized).
  std::string str() const { return print_node(*node_); }

 private:
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;

  struct Const { double value; };
  struct TimeVar {};
  struct Binary { Op op; NodePtr lhs, rhs; };
  struct Unary { Fn fn; NodePtr arg; };
  struct Piecewise { std::vector<Segment> segs; };

  struct Node {
    std::variant<Const, TimeVar, Binary, Unary, Piecewise> v;
  };

  explicit RateExpr(Node n) : node_(std::make_shared<const Node>(std::move(n))) {}

  static double eval_node(const Node& n, double t, bool left) {
    if (auto* c = std::get_if<Const>(&n.v)) return c->value;
    if (std::get_if<TimeVar>(&n.v)) return t;
    if (auto* b = std::get_if<Binary>(&n.v)) {
      double l = eval_node(*b->lhs, t, left), r = eval_node(*b->rhs, t, left);
      switch (b->op) {
        case Op::add: return l + r;
        case Op::sub: return l - r;
        case Op::mul: return l * r;
        case Op::div:
          if (r == 0.0) throw DomainError("division by zero at t=" + std::to_string(t));
          return l / r;
      }
    }
    if (auto* u = std::get_if<Unary>(&n.v)) {
      double a = eval_node(*u->arg, t, left);
      switch (u->fn) {
        case Fn::sin: return std::sin(a);
        case Fn::cos: return std::cos(a);
        case Fn::exp: return std::exp(a);
      }
    }
    const auto& pw = std::get<Piecewise>(n.v);
    const auto& segs = pw.segs;
    std::size_t i = 0;
    while (i + 1 < segs.size() && (left ? segs[i + 1].start < t : segs[i + 1].start <= t)) ++i;
    return segs[i].value;
  }

  static void collect_breakpoints(const Node& n, std::vector<double>& out) {
    if (auto* b = std::get_if<Binary>(&n.v)) {
      collect_breakpoints(*b->lhs, out);
      collect_breakpoints(*b->rhs, out);
    } else if (auto* u = std::get_if<Unary>(&n.v)) {
      collect_breakpoints(*u->arg, out);
    } else if (auto* pw = std::get_if<Piecewise>(&n.v)) {
      for (const auto& s : pw->segs) out.push_back(s.start);
    }
  }

  static std::string num_str(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }

  static std::string print_node(const Node& n) {
    if (auto* c = std::get_if<Const>(&n.v)) return num_str(c->value);
    if (std::get_if<TimeVar>(&n.v)) return "t";
    if (auto* b = std::get_if<Binary>(&n.v)) {
      const char* op = b->op == Op::add ? "+" : b->op == Op::sub ? "-" : b->op == Op::mul ? "*" : "/";
      return "(" + print_node(*b->lhs) + op + print_node(*b->rhs) + ")";
    }
    if (auto* u = std::get_if<Unary>(&n.v)) {
      const char* fn = u->fn == Fn::sin ? "sin" : u->fn == Fn::cos ? "cos" : "exp";
      return std::string(fn) + "(" + print_node(*u->arg) + ")";
    }
    const auto& segs = std::get<Piecewise>(n.v).segs;
    std::string s = "piecewise[";
    for (std::size_t i = 0; i < segs.size(); ++i) {
      if (i) s += ",";
      s += "(" + num_str(segs[i].start) + "," + num_str(segs[i].value) + ")";
    }
    return s + "]";
  }

  NodePtr node_;
};

namespace detail {

class RateParser {
 public:
  explicit RateParser(std::string_view text) : text_(text) {}

  RateExpr parse() {
    skip_ws();
    if (eof()) throw ParseError("empty input", 0);
    RateExpr e = parse_expr();
    skip_ws();
    if (!eof()) throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  RateExpr parse_expr() {
    RateExpr e = parse_term();
    for (;;) {
      skip_ws();
      if (accept('+')) e = e + parse_term();
      else if (accept('-')) e = e - parse_term();
      else return e;
    }
  }

  RateExpr parse_term() {
    RateExpr e = parse_factor();
    for (;;) {
      skip_ws();
      if (accept('*')) e = e * parse_factor();
      else if (accept('/')) e = e / parse_factor();
      else return e;
    }
  }

  RateExpr parse_factor() {
    skip_ws();
    if (eof()) throw ParseError("unexpected end of input", pos_);
    char c = peek();
    if (c == '-') {  // unary minus: grammar superset so printed trees reparse
      ++pos_;
      return RateExpr::constant(0.0) - parse_factor();
    }
    if (c == '(') {
      ++pos_;
      RateExpr e = parse_expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return RateExpr::constant(parse_number());
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  RateExpr parse_ident() {
    std::size_t start = pos_;
    while (!eof() && std::isalpha(static_cast<unsigned char>(peek()))) ++pos_;
    std::string_view name = text_.substr(start, pos_ - start);
    if (name == "t") return RateExpr::time();
    if (name == "sin" || name == "cos" || name == "exp") {
      expect('(');
      RateExpr arg = parse_expr();
      expect(')');
      auto fn = name == "sin" ? RateExpr::Fn::sin : name == "cos" ? RateExpr::Fn::cos : RateExpr::Fn::exp;
      return RateExpr::apply(fn, std::move(arg));
    }
    if (name == "piecewise") return parse_piecewise();
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }

  RateExpr parse_piecewise() {
    expect('[');
    std::vector<RateExpr::Segment> segs;
    for (;;) {
      expect('(');
      double b = parse_signed_number();
      expect(',');
      double v = parse_signed_number();
      expect(')');
      segs.push_back({b, v});
      skip_ws();
      if (accept(',')) continue;
      expect(']');
      break;
    }
    std::size_t at = pos_;
    try {
      return RateExpr::piecewise(std::move(segs));
    } catch (const ModelError& e) {
      throw ParseError(e.what(), at);
    }
  }

  double parse_signed_number() {
    skip_ws();
    bool neg = accept('-');
    double v = parse_number();
    return neg ? -v : v;
  }

  double parse_number() {
    skip_ws();
    std::size_t start = pos_;
    while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (!eof() && peek() == '.') {
      ++pos_;
      while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    if (pos_ == start || (pos_ == start + 1 && text_[start] == '.'))
      throw ParseError("expected a number", start);
    if (!eof() && (peek() == 'e' || peek() == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (!eof() && (peek() == '+' || peek() == '-')) ++pos_;
      if (eof() || !std::isdigit(static_cast<unsigned char>(peek()))) {
        pos_ = mark;  // not an exponent after all
      } else {
        while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      }
    }
    return std::stod(std::string(text_.substr(start, pos_ - start)));
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }
  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  bool accept(char c) {
    if (!eof() && peek() == c) { ++pos_; return true; }
    return false;
  }
  void expect(char c) {
    skip_ws();
    if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parse a rate string.  Grammar:
///   expr  := term (('+'|'-') term)*
///   term  := factor (('*'|'/') factor)*
///   factor:= number | 't' | ('sin'|'cos'|'exp') '(' expr ')' | '(' expr ')'
///          | 'piecewise' '[' '(' num ',' num ')' (',' '(' num ',' num ')')* ']'
/// Whitespace is insignificant; numbers are decimal literals with optional
/// exponent.  Throws ParseError with a byte position on malformed input.
inline RateExpr parse_rate(std::string_view text) {
  return detail::RateParser(text).parse();
}

/// Convenience: value at t (piecewise left-closed).
inline double eval_rate(const RateExpr& f, double t) { return f.eval(t); }

}  // namespace ergo
