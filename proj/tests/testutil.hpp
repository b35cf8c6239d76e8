#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "lcw/lcw.hpp"

namespace testutil {

using ScalarFn = std::function<double(const std::vector<double>&)>;

// Central finite difference with one Richardson extrapolation per
// differentiation level: the independent oracle for jet coefficients.
// The step grows with the total order: for k nested central differences the
// roundoff term is eps/h^k, so a fixed 1e-4 step drowns third derivatives.
inline double fd_partial(const ScalarFn& f, std::vector<double> p, std::array<int, 4> beta,
                         double h = 0.0) {
  int deg = beta[0] + beta[1] + beta[2] + beta[3];
  if (h == 0.0) h = deg <= 1 ? 1e-4 : (deg == 2 ? 1e-3 : 5e-3);
  int i = -1;
  for (int k = 0; k < 4; ++k)
    if (beta[k] > 0) {
      i = k;
      break;
    }
  if (i < 0) return f(p);
  std::array<int, 4> b2 = beta;
  b2[i] -= 1;
  auto diff = [&](double step) {
    std::vector<double> pp = p, pm = p;
    pp[i] += step;
    pm[i] -= step;
    return (fd_partial(f, pp, b2, h) - fd_partial(f, pm, b2, h)) / (2 * step);
  };
  double d1 = diff(h), d2 = diff(h / 2);
  return (4 * d2 - d1) / 3;
}

// Random expression trees that stay smooth and bounded on [-1.5, 1.5]^n:
// polynomial combinations, exp/sin/cos/sinh of small multiples, sqrt and
// reciprocals of positively-offset squares.
class RandomExpr {
public:
  RandomExpr(unsigned seed, int nvars) : rng_(seed), nvars_(nvars) {}

  lcw::ExprPtr gen(int depth = 3) {
    using namespace lcw;
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 7);
    switch (pick(rng_)) {
      case 0: return ExprNode::constant(unif(-2, 2));
      case 1: return ExprNode::variable(var());
      case 2: return ExprNode::binary(ExprOp::Add, gen(depth - 1), gen(depth - 1));
      case 3: return ExprNode::binary(ExprOp::Sub, gen(depth - 1), gen(depth - 1));
      case 4: return ExprNode::binary(ExprOp::Mul, gen(depth - 1), gen(depth - 1));
      case 5: {
        // f(c * x_i) for a bounded function
        FuncKind fs[] = {FuncKind::Exp, FuncKind::Sin, FuncKind::Cos, FuncKind::Sinh,
                         FuncKind::Cosh};
        auto arg = ExprNode::binary(ExprOp::Mul, ExprNode::constant(unif(-0.7, 0.7)),
                                    ExprNode::variable(var()));
        return ExprNode::apply(fs[std::uniform_int_distribution<int>(0, 4)(rng_)], arg);
      }
      case 6: {
        // 1 / (offset + x_i^2)
        auto denom = ExprNode::binary(
            ExprOp::Add, ExprNode::constant(unif(2, 4)),
            ExprNode::power(ExprNode::variable(var()), 2));
        return ExprNode::binary(ExprOp::Div, ExprNode::constant(unif(-2, 2)), denom);
      }
      default: {
        auto arg = ExprNode::binary(
            ExprOp::Add, ExprNode::constant(unif(2, 4)),
            ExprNode::power(ExprNode::variable(var()), 2));
        return ExprNode::apply(lcw::FuncKind::Sqrt, arg);
      }
    }
  }

  double unif(double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng_);
  }
  int var() { return std::uniform_int_distribution<int>(0, nvars_ - 1)(rng_); }
  std::vector<double> point(double lo = -1.2, double hi = 1.2) {
    std::vector<double> p(nvars_);
    for (auto& x : p) x = unif(lo, hi);
    return p;
  }

  std::mt19937_64& rng() { return rng_; }

private:
  std::mt19937_64 rng_;
  int nvars_;
};

// Random symmetric positive-definite metric: exp-diagonal dominance plus a
// small smooth off-diagonal coupling.
inline lcw::MetricSpec random_metric(unsigned seed, int dim) {
  using namespace lcw;
  RandomExpr re(seed, dim);
  MetricSpec m;
  m.dim = dim;
  m.var_names = default_var_names(dim);
  m.entries.assign(dim * dim, ExprNode::constant(0.0));
  for (int i = 0; i < dim; ++i) {
    auto arg = ExprNode::binary(ExprOp::Mul, ExprNode::constant(re.unif(-0.4, 0.4)),
                                ExprNode::variable(re.var()));
    m.at(i, i) = ExprNode::apply(FuncKind::Exp, arg);
  }
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) {
      if (re.unif(0, 1) < 0.5) continue;
      auto arg = ExprNode::binary(ExprOp::Mul, ExprNode::constant(re.unif(-0.8, 0.8)),
                                  ExprNode::variable(re.var()));
      auto e = ExprNode::binary(ExprOp::Mul, ExprNode::constant(re.unif(-0.08, 0.08)),
                                ExprNode::apply(FuncKind::Sin, arg));
      m.at(i, j) = e;
      m.at(j, i) = e;
    }
  return m;
}

// Random conformally rescaled product metric e^{alpha} (g1(t,x) + g2(y,z)).
inline lcw::MetricSpec random_conformal_product(unsigned seed, lcw::ExprPtr* alpha_out = nullptr) {
  using namespace lcw;
  RandomExpr re(seed, 4);
  MetricSpec m;
  m.dim = 4;
  m.var_names = default_var_names(4);
  m.entries.assign(16, ExprNode::constant(0.0));

  auto factor_entry = [&](int v1, int v2, double scale) {
    auto a1 = ExprNode::binary(ExprOp::Mul, ExprNode::constant(re.unif(-0.5, 0.5)),
                               ExprNode::variable(v1));
    auto a2 = ExprNode::binary(ExprOp::Mul, ExprNode::constant(re.unif(-0.5, 0.5)),
                               ExprNode::variable(v2));
    auto sum = ExprNode::binary(ExprOp::Add, a1, a2);
    return ExprNode::binary(ExprOp::Mul, ExprNode::constant(scale),
                            ExprNode::apply(FuncKind::Exp, sum));
  };
  // 2x2 SPD blocks: diag exp entries plus a small off-diagonal coupling.
  m.at(0, 0) = factor_entry(0, 1, 1.0);
  m.at(1, 1) = factor_entry(0, 1, re.unif(0.6, 1.5));
  {
    auto arg = ExprNode::binary(ExprOp::Mul, ExprNode::constant(re.unif(-0.6, 0.6)),
                                ExprNode::variable(re.unif(0, 1) < 0.5 ? 0 : 1));
    auto e = ExprNode::binary(ExprOp::Mul, ExprNode::constant(re.unif(-0.05, 0.05)),
                              ExprNode::apply(FuncKind::Sin, arg));
    m.at(0, 1) = e;
    m.at(1, 0) = e;
  }
  m.at(2, 2) = factor_entry(2, 3, 1.0);
  m.at(3, 3) = factor_entry(2, 3, re.unif(0.6, 1.5));
  {
    auto arg = ExprNode::binary(ExprOp::Mul, ExprNode::constant(re.unif(-0.6, 0.6)),
                                ExprNode::variable(re.unif(0, 1) < 0.5 ? 2 : 3));
    auto e = ExprNode::binary(ExprOp::Mul, ExprNode::constant(re.unif(-0.05, 0.05)),
                              ExprNode::apply(FuncKind::Sin, arg));
    m.at(2, 3) = e;
    m.at(3, 2) = e;
  }

  // alpha mixes all four variables.
  auto alpha = ExprNode::binary(
      ExprOp::Add,
      ExprNode::binary(ExprOp::Mul, ExprNode::constant(re.unif(-0.4, 0.4)),
                       ExprNode::variable(re.var())),
      ExprNode::binary(ExprOp::Mul, ExprNode::constant(re.unif(-0.3, 0.3)),
                       ExprNode::binary(ExprOp::Mul, ExprNode::variable(re.var()),
                                        ExprNode::variable(re.var()))));
  if (alpha_out) *alpha_out = alpha;
  return conformal_rescale(m, alpha);
}

inline double gnorm(const lcw::MatD& g, const lcw::VecD& v) {
  double s = 0;
  for (int i = 0; i < v.size(); ++i)
    for (int j = 0; j < v.size(); ++j) s += g(i, j) * v[i] * v[j];
  return std::sqrt(std::max(s, 0.0));
}

inline lcw::MatD values_of(const lcw::MatJ& m) {
  lcw::MatD r(m.rows(), m.cols(), 0.0);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r(i, j) = m(i, j).value();
  return r;
}

}  // namespace testutil
