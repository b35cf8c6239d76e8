#pragma once

#include <cctype>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcw/jet.hpp"

namespace lcw {

class ParseError : public std::runtime_error {
public:
  ParseError(int line, int col, const std::string& msg)
      : std::runtime_error("parse error at " + std::to_string(line) + ":" + std::to_string(col) +
                           ": " + msg),
        line(line),
        col(col) {}
  int line, col;
};

enum class ExprOp { Const, Var, Neg, Add, Sub, Mul, Div, PowInt, Func };
enum class FuncKind { Exp, Log, Sin, Cos, Sinh, Cosh, Sqrt };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

// Immutable expression tree. Integer exponents only; fractional powers must
// be written with sqrt or exp/log.
struct ExprNode {
  ExprOp op;
  double cval = 0.0;             // Const
  int var = -1;                  // Var
  int ipow = 0;                  // PowInt
  FuncKind func = FuncKind::Exp; // Func
  ExprPtr a, b;

  static ExprPtr constant(double v) {
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::Const;
    n->cval = v;
    return n;
  }
  static ExprPtr variable(int idx) {
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::Var;
    n->var = idx;
    return n;
  }
  static ExprPtr unary(ExprOp op, ExprPtr x) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->a = std::move(x);
    return n;
  }
  static ExprPtr binary(ExprOp op, ExprPtr x, ExprPtr y) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->a = std::move(x);
    n->b = std::move(y);
    return n;
  }
  static ExprPtr power(ExprPtr x, int k) {
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::PowInt;
    n->a = std::move(x);
    n->ipow = k;
    return n;
  }
  static ExprPtr apply(FuncKind f, ExprPtr x) {
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::Func;
    n->func = f;
    n->a = std::move(x);
    return n;
  }
};

inline bool expr_equal(const ExprPtr& x, const ExprPtr& y) {
  if (x == y) return true;
  if (!x || !y) return false;
  if (x->op != y->op) return false;
  switch (x->op) {
    case ExprOp::Const: return x->cval == y->cval;
    case ExprOp::Var: return x->var == y->var;
    case ExprOp::Neg: return expr_equal(x->a, y->a);
    case ExprOp::PowInt: return x->ipow == y->ipow && expr_equal(x->a, y->a);
    case ExprOp::Func: return x->func == y->func && expr_equal(x->a, y->a);
    default: return expr_equal(x->a, y->a) && expr_equal(x->b, y->b);
  }
}

template <class T>
T eval_expr(const ExprNode& e, const std::vector<T>& vars) {
  switch (e.op) {
    case ExprOp::Const: return constant_like(vars[0], e.cval);
    case ExprOp::Var: return vars[e.var];
    case ExprOp::Neg: return constant_like(vars[0], 0.0) - eval_expr(*e.a, vars);
    case ExprOp::Add: return eval_expr(*e.a, vars) + eval_expr(*e.b, vars);
    case ExprOp::Sub: return eval_expr(*e.a, vars) - eval_expr(*e.b, vars);
    case ExprOp::Mul: return eval_expr(*e.a, vars) * eval_expr(*e.b, vars);
    case ExprOp::Div: return eval_expr(*e.a, vars) / eval_expr(*e.b, vars);
    case ExprOp::PowInt: {
      if constexpr (std::is_same_v<T, double>) {
        double base = eval_expr(*e.a, vars);
        if (e.ipow < 0 && std::abs(base) < 1e-300)
          throw SingularPointError("negative power of a (near-)zero value");
        return std::pow(base, e.ipow);
      } else {
        return pow_int(eval_expr(*e.a, vars), e.ipow);
      }
    }
    case ExprOp::Func: {
      T x = eval_expr(*e.a, vars);
      if constexpr (std::is_same_v<T, double>) {
        switch (e.func) {
          case FuncKind::Exp: return std::exp(x);
          case FuncKind::Log:
            if (x <= 0.0) throw SingularPointError("log of a nonpositive value");
            return std::log(x);
          case FuncKind::Sin: return std::sin(x);
          case FuncKind::Cos: return std::cos(x);
          case FuncKind::Sinh: return std::sinh(x);
          case FuncKind::Cosh: return std::cosh(x);
          case FuncKind::Sqrt:
            if (x <= 0.0) throw SingularPointError("sqrt of a nonpositive value");
            return std::sqrt(x);
        }
      } else {
        switch (e.func) {
          case FuncKind::Exp: return exp(x);
          case FuncKind::Log: return log(x);
          case FuncKind::Sin: return sin(x);
          case FuncKind::Cos: return cos(x);
          case FuncKind::Sinh: return sinh(x);
          case FuncKind::Cosh: return cosh(x);
          case FuncKind::Sqrt: return sqrt(x);
        }
      }
      throw std::logic_error("unreachable");
    }
  }
  throw std::logic_error("unreachable");
}

// Jet of the expression at p, exact to the requested order.
inline Jet eval_expr_jet(const ExprPtr& e, const std::vector<double>& p, int order) {
  int nvars = static_cast<int>(p.size());
  std::vector<Jet> vars;
  vars.reserve(nvars);
  for (int i = 0; i < nvars; ++i) vars.push_back(Jet::variable(i, p[i], nvars, order));
  return eval_expr(*e, vars);
}

inline double eval_expr_value(const ExprPtr& e, const std::vector<double>& p) {
  return eval_expr(*e, p);
}

inline const char* func_name(FuncKind f) {
  switch (f) {
    case FuncKind::Exp: return "exp";
    case FuncKind::Log: return "log";
    case FuncKind::Sin: return "sin";
    case FuncKind::Cos: return "cos";
    case FuncKind::Sinh: return "sinh";
    case FuncKind::Cosh: return "cosh";
    case FuncKind::Sqrt: return "sqrt";
  }
  return "?";
}

// Fully parenthesized form; reparsing reproduces the tree.
inline std::string expr_to_string(const ExprPtr& e, const std::vector<std::string>& names) {
  switch (e->op) {
    case ExprOp::Const: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", e->cval);
      return buf;
    }
    case ExprOp::Var: return names[e->var];
    case ExprOp::Neg: return "(-" + expr_to_string(e->a, names) + ")";
    case ExprOp::Add:
      return "(" + expr_to_string(e->a, names) + " + " + expr_to_string(e->b, names) + ")";
    case ExprOp::Sub:
      return "(" + expr_to_string(e->a, names) + " - " + expr_to_string(e->b, names) + ")";
    case ExprOp::Mul:
      return "(" + expr_to_string(e->a, names) + " * " + expr_to_string(e->b, names) + ")";
    case ExprOp::Div:
      return "(" + expr_to_string(e->a, names) + " / " + expr_to_string(e->b, names) + ")";
    case ExprOp::PowInt:
      return expr_to_string(e->a, names) + "^" + std::to_string(e->ipow);
    case ExprOp::Func:
      return std::string(func_name(e->func)) + "(" + expr_to_string(e->a, names) + ")";
  }
  return "?";
}

// Recursive-descent parser for the scalar expression grammar:
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ['^' ['-'] integer]        (^ binds tighter than unary -)
//   atom   := number | func '(' expr ')' | variable | '(' expr ')'
class ExprParser {
public:
  ExprParser(std::string_view text, std::vector<std::string> var_names, int line = 1,
             int col_offset = 0)
      : s_(text), names_(std::move(var_names)), line_(line), col0_(col_offset) {}

  ExprPtr parse() {
    skip_ws();
    if (eof()) fail("empty expression");
    ExprPtr e = parse_expr();
    skip_ws();
    if (!eof()) fail("unexpected trailing input");
    return e;
  }

  // Exposed for field parsing, which embeds scalar subexpressions.
  ExprPtr parse_expr() {
    ExprPtr e = parse_term();
    for (;;) {
      skip_ws();
      if (accept('+')) {
        e = ExprNode::binary(ExprOp::Add, e, parse_term());
      } else if (accept('-')) {
        e = ExprNode::binary(ExprOp::Sub, e, parse_term());
      } else {
        return e;
      }
    }
  }

private:
  ExprPtr parse_term() {
    ExprPtr e = parse_unary();
    for (;;) {
      skip_ws();
      if (accept('*')) {
        e = ExprNode::binary(ExprOp::Mul, e, parse_unary());
      } else if (accept('/')) {
        e = ExprNode::binary(ExprOp::Div, e, parse_unary());
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_unary() {
    skip_ws();
    if (accept('-')) {
      ExprPtr inner = parse_unary();
      if (inner->op == ExprOp::Const) return ExprNode::constant(-inner->cval);
      return ExprNode::unary(ExprOp::Neg, inner);
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_atom();
    skip_ws();
    if (accept('^')) {
      skip_ws();
      bool neg = accept('-');
      skip_ws();
      if (eof() || !std::isdigit(static_cast<unsigned char>(peek())))
        fail("integer literal expected after '^'");
      long k = 0;
      while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) {
        k = k * 10 + (next() - '0');
        if (k > 64) fail("exponent too large");
      }
      if (!eof() && peek() == '.') fail("integer exponents only");
      return ExprNode::power(base, static_cast<int>(neg ? -k : k));
    }
    return base;
  }

  ExprPtr parse_atom() {
    skip_ws();
    if (eof()) fail("expression expected");
    char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (c == '(') {
      next();
      ExprPtr e = parse_expr();
      skip_ws();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string id = parse_ident();
      skip_ws();
      if (!eof() && peek() == '(') {
        FuncKind f;
        if (!lookup_func(id, f)) fail("unknown function '" + id + "'");
        next();
        ExprPtr arg = parse_expr();
        skip_ws();
        expect(')');
        return ExprNode::apply(f, arg);
      }
      for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == id) return ExprNode::variable(static_cast<int>(i));
      fail("unknown identifier '" + id + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
    return nullptr;
  }

  ExprPtr parse_number() {
    std::size_t start = i_;
    while (!eof() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.')) next();
    if (!eof() && (peek() == 'e' || peek() == 'E')) {
      next();
      if (!eof() && (peek() == '+' || peek() == '-')) next();
      while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) next();
    }
    std::string tok(s_.substr(start, i_ - start));
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) fail("bad number '" + tok + "'");
      return ExprNode::constant(v);
    } catch (const std::exception&) {
      fail("bad number '" + tok + "'");
    }
    return nullptr;
  }

  std::string parse_ident() {
    std::size_t start = i_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) next();
    return std::string(s_.substr(start, i_ - start));
  }

  static bool lookup_func(const std::string& id, FuncKind& out) {
    static const std::pair<const char*, FuncKind> table[] = {
        {"exp", FuncKind::Exp},   {"log", FuncKind::Log},  {"sin", FuncKind::Sin},
        {"cos", FuncKind::Cos},   {"sinh", FuncKind::Sinh}, {"cosh", FuncKind::Cosh},
        {"sqrt", FuncKind::Sqrt}};
    for (const auto& [name, f] : table)
      if (id == name) {
        out = f;
        return true;
      }
    return false;
  }

  bool eof() const { return i_ >= s_.size(); }
  char peek() const { return s_[i_]; }
  char next() { return s_[i_++]; }
  bool accept(char c) {
    if (!eof() && peek() == c) {
      ++i_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("'") + c + "' expected");
  }
  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++i_;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(line_, col0_ + static_cast<int>(i_) + 1, msg);
  }

  std::string_view s_;
  std::vector<std::string> names_;
  std::size_t i_ = 0;
  int line_;
  int col0_;
};

inline ExprPtr parse_expression(const std::string& text, const std::vector<std::string>& names,
                                int line = 1, int col_offset = 0) {
  return ExprParser(text, names, line, col_offset).parse();
}

}  // namespace lcw
