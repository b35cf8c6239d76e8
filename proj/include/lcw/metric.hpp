#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lcw/expr.hpp"
#include "lcw/linalg.hpp"

namespace lcw {

struct DomainConstraint {
  int var;
  bool greater;  // var > bound, else var < bound
  double bound;
};

// A closed-form Riemannian metric on a coordinate chart: a symmetric matrix
// of expression trees. Positive definiteness is a property of points, checked
// at evaluation time.
struct MetricSpec {
  int dim = 0;
  std::vector<std::string> var_names;
  std::vector<ExprPtr> entries;  // dim*dim, row-major, symmetric
  std::vector<DomainConstraint> domain;

  const ExprPtr& at(int i, int j) const { return entries[i * dim + j]; }
  ExprPtr& at(int i, int j) { return entries[i * dim + j]; }

  static MetricSpec diagonal(std::vector<std::string> names, std::vector<ExprPtr> diag) {
    MetricSpec m;
    m.dim = static_cast<int>(diag.size());
    m.var_names = std::move(names);
    m.entries.assign(m.dim * m.dim, ExprNode::constant(0.0));
    for (int i = 0; i < m.dim; ++i) m.at(i, i) = diag[i];
    return m;
  }

  MatD value_at(const std::vector<double>& p) const {
    MatD g(dim, dim, 0.0);
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j) g(i, j) = g(j, i) = eval_expr_value(at(i, j), p);
    return g;
  }

  MatJ jets_at(const std::vector<double>& p, int order) const {
    Jet proto = Jet::constant(0.0, dim, order);
    MatJ g(dim, dim, proto);
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j) {
        Jet v = eval_expr_jet(at(i, j), p, order);
        g(i, j) = v;
        g(j, i) = v;
      }
    return g;
  }

  bool point_in_domain(const std::vector<double>& p) const {
    for (const auto& c : domain) {
      if (c.greater && !(p[c.var] > c.bound)) return false;
      if (!c.greater && !(p[c.var] < c.bound)) return false;
    }
    return true;
  }
};

// A vector field given by one expression per coordinate component.
struct VectorFieldSpec {
  std::vector<ExprPtr> comps;

  VecJ jets_at(const std::vector<double>& p, int order) const {
    int n = static_cast<int>(comps.size());
    VecJ v(n, Jet::constant(0.0, n, order));
    for (int i = 0; i < n; ++i) v[i] = eval_expr_jet(comps[i], p, order);
    return v;
  }
  VecD value_at(const std::vector<double>& p) const {
    int n = static_cast<int>(comps.size());
    VecD v(n, 0.0);
    for (int i = 0; i < n; ++i) v[i] = eval_expr_value(comps[i], p);
    return v;
  }

  static VectorFieldSpec coordinate(int i, int dim) {
    VectorFieldSpec f;
    f.comps.assign(dim, ExprNode::constant(0.0));
    f.comps[i] = ExprNode::constant(1.0);
    return f;
  }
};

inline std::vector<std::string> default_var_names(int dim) {
  if (dim == 4) return {"t", "x", "y", "z"};
  if (dim == 3) return {"t", "x", "y"};
  return {"x", "y"};
}

namespace metric_detail {

inline std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

// Split a concatenated index pair like "tt" or "xy" into two declared
// variable names. Multi-character names are supported as long as the split
// is unique.
inline std::optional<std::pair<int, int>> split_index_pair(const std::string& s,
                                                           const std::vector<std::string>& names) {
  std::optional<std::pair<int, int>> found;
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = 0; j < names.size(); ++j)
      if (names[i] + names[j] == s) {
        if (found && found->first != static_cast<int>(i)) return std::nullopt;  // ambiguous
        found = {static_cast<int>(i), static_cast<int>(j)};
      }
  return found;
}

}  // namespace metric_detail

// Metric file format (UTF-8, line oriented, '#' comments):
//   dim = 3|4
//   vars = t x y z          (optional; count must equal dim)
//   domain x > 0            (optional, repeatable)
//   g tt = 1                (index-pair order irrelevant; off-diagonal
//   g xy = 0                 entries default to 0; diagonal required)
inline MetricSpec parse_metric(const std::string& text) {
  using metric_detail::split_index_pair;
  using metric_detail::split_ws;
  using metric_detail::strip;

  MetricSpec m;
  std::vector<ExprPtr> assigned;       // by pair slot, canonical i<=j
  std::vector<bool> has_entry;
  int line_no = 0;
  bool have_dim = false;

  std::istringstream is(text);
  std::string raw;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = raw;
    if (auto h = line.find('#'); h != std::string::npos) line = line.substr(0, h);
    line = strip(line);
    if (line.empty()) continue;

    auto eq = line.find('=');
    std::string head = strip(eq == std::string::npos ? line : line.substr(0, eq));
    std::string rhs = eq == std::string::npos ? "" : strip(line.substr(eq + 1));
    auto toks = split_ws(head);

    if (!have_dim) {
      if (toks.size() != 1 || toks[0] != "dim" || eq == std::string::npos)
        throw ParseError(line_no, 1, "metric file must start with 'dim = 3|4'");
      int d = 0;
      try {
        d = std::stoi(rhs);
      } catch (...) {
        throw ParseError(line_no, static_cast<int>(eq) + 2, "bad dimension");
      }
      if (d != 3 && d != 4)
        throw ParseError(line_no, static_cast<int>(eq) + 2, "dimension must be 3 or 4");
      m.dim = d;
      m.var_names = default_var_names(d);
      assigned.assign(d * d, nullptr);
      has_entry.assign(d * d, false);
      have_dim = true;
      continue;
    }

    if (toks.size() >= 1 && toks[0] == "vars" && eq != std::string::npos) {
      auto names = split_ws(rhs);
      if (static_cast<int>(names.size()) != m.dim)
        throw ParseError(line_no, 1, "vars count must equal dim");
      m.var_names = names;
      continue;
    }

    if (toks.size() >= 1 && toks[0] == "domain") {
      auto parts = split_ws(line.substr(6));
      if (parts.size() != 3 || (parts[1] != ">" && parts[1] != "<"))
        throw ParseError(line_no, 1, "domain syntax: 'domain <var> >|< <number>'");
      int vi = -1;
      for (std::size_t i = 0; i < m.var_names.size(); ++i)
        if (m.var_names[i] == parts[0]) vi = static_cast<int>(i);
      if (vi < 0) throw ParseError(line_no, 8, "unknown variable '" + parts[0] + "'");
      double b = 0;
      try {
        b = std::stod(parts[2]);
      } catch (...) {
        throw ParseError(line_no, 1, "bad domain bound");
      }
      m.domain.push_back({vi, parts[1] == ">", b});
      continue;
    }

    if (toks.size() >= 2 && toks[0] == "g") {
      if (eq == std::string::npos) throw ParseError(line_no, 1, "'=' expected in metric entry");
      std::string pair;
      for (std::size_t k = 1; k < toks.size(); ++k) pair += toks[k];
      auto ij = split_index_pair(pair, m.var_names);
      if (!ij)
        throw ParseError(line_no, 3, "cannot resolve index pair '" + pair + "'");
      if (rhs.empty()) throw ParseError(line_no, static_cast<int>(eq) + 2, "empty expression");
      ExprPtr e = parse_expression(rhs, m.var_names, line_no, static_cast<int>(eq) + 1);
      int i = std::min(ij->first, ij->second), j = std::max(ij->first, ij->second);
      int slot = i * m.dim + j;
      if (has_entry[slot]) {
        if (!expr_equal(assigned[slot], e))
          throw ParseError(line_no, 1, "asymmetric duplicate assignment for g " + pair);
      }
      assigned[slot] = e;
      has_entry[slot] = true;
      continue;
    }

    throw ParseError(line_no, 1, "unrecognized line '" + line + "'");
  }

  if (!have_dim) throw ParseError(line_no ? line_no : 1, 1, "missing 'dim' line");
  for (int i = 0; i < m.dim; ++i)
    if (!has_entry[i * m.dim + i])
      throw ParseError(line_no, 1, "missing diagonal entry g " + m.var_names[i] + m.var_names[i]);

  m.entries.assign(m.dim * m.dim, nullptr);
  for (int i = 0; i < m.dim; ++i)
    for (int j = i; j < m.dim; ++j) {
      ExprPtr e = has_entry[i * m.dim + j] ? assigned[i * m.dim + j] : ExprNode::constant(0.0);
      m.at(i, j) = e;
      m.at(j, i) = e;
    }
  return m;
}

// Vector fields are sums of terms, each a product of scalar factors and
// exactly one coordinate field token d<var>, e.g. "cos(x)*dt + sin(x)*dx".
inline VectorFieldSpec parse_vector_field(const std::string& text,
                                          const std::vector<std::string>& names) {
  int dim = static_cast<int>(names.size());
  VectorFieldSpec f;
  f.comps.assign(dim, ExprNode::constant(0.0));

  // Split into additive terms at top parenthesis level. A '+'/'-' right
  // after '^', '*', '/', '(' or an exponent marker belongs to the operand.
  std::vector<std::pair<std::string, int>> terms;  // (term, sign)
  int depth = 0;
  std::string cur;
  int pending = +1;
  auto push = [&](int s) {
    auto t = metric_detail::strip(cur);
    if (!t.empty()) terms.push_back({t, s});
    cur.clear();
  };
  char prev = 0;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    bool sign_binds_right =
        prev == '^' || prev == '*' || prev == '/' || prev == '(' || prev == 'e' || prev == 'E';
    if (depth == 0 && (c == '+' || c == '-') && !sign_binds_right) {
      if (cur.find_first_not_of(" \t") != std::string::npos) {
        push(pending);
        pending = (c == '+') ? +1 : -1;
      } else {
        if (c == '-') pending = -pending;
      }
      prev = 0;
      continue;
    }
    cur += c;
    if (c != ' ' && c != '\t') prev = c;
  }
  push(pending);

  if (terms.empty()) throw ParseError(1, 1, "empty vector field");

  for (const auto& [term, tsign] : terms) {
    // Factor the term at top-level '*' and '/' and find the d<var> factor.
    std::vector<std::pair<std::string, char>> factors;  // (text, op: '*' or '/')
    depth = 0;
    cur.clear();
    char op = '*';
    for (char c : term) {
      if (c == '(') ++depth;
      if (c == ')') --depth;
      if (depth == 0 && (c == '*' || c == '/')) {
        factors.push_back({metric_detail::strip(cur), op});
        op = c;
        cur.clear();
        continue;
      }
      cur += c;
    }
    factors.push_back({metric_detail::strip(cur), op});

    int slot = -1;
    ExprPtr coeff = ExprNode::constant(1.0);
    for (const auto& [ftext, fop] : factors) {
      int vi = -1;
      if (ftext.size() >= 2 && ftext[0] == 'd') {
        for (int i = 0; i < dim; ++i)
          if (ftext.substr(1) == names[i]) vi = i;
      }
      if (vi >= 0 && fop == '*') {
        if (slot >= 0) throw ParseError(1, 1, "term with more than one coordinate field");
        slot = vi;
        continue;
      }
      ExprPtr fe = parse_expression(ftext, names);
      coeff = ExprNode::binary(fop == '*' ? ExprOp::Mul : ExprOp::Div, coeff, fe);
    }
    if (slot < 0)
      throw ParseError(1, 1, "vector-field term without a coordinate field d<var>: '" + term + "'");
    if (tsign < 0) coeff = ExprNode::unary(ExprOp::Neg, coeff);
    f.comps[slot] = ExprNode::binary(ExprOp::Add, f.comps[slot], coeff);
  }
  return f;
}

// e^{alpha} g, entrywise at the expression level.
inline MetricSpec conformal_rescale(const MetricSpec& m, const ExprPtr& alpha) {
  MetricSpec r = m;
  ExprPtr factor = ExprNode::apply(FuncKind::Exp, alpha);
  for (int i = 0; i < m.dim; ++i)
    for (int j = i; j < m.dim; ++j) {
      ExprPtr e = ExprNode::binary(ExprOp::Mul, factor, m.at(i, j));
      r.at(i, j) = e;
      r.at(j, i) = e;
    }
  return r;
}

}  // namespace lcw
