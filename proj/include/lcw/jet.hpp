#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcw {

// Thrown when an evaluation leaves an expression's domain: division by a
// (numerically) zero value, log/sqrt of a nonpositive value, or a singular
// metric at the requested point.
class SingularPointError : public std::runtime_error {
public:
  explicit SingularPointError(const std::string& what) : std::runtime_error(what) {}
};

namespace jet_detail {

// Monomial bookkeeping shared by all jets with the same number of variables.
// Multi-indices are enumerated degree by degree, so the table for order k is
// a prefix of the table for order k+1 and jets of different orders can share
// coefficient indices.
struct VarTable {
  static constexpr int kMaxOrder = 6;

  int nvars = 0;
  std::vector<std::array<std::uint8_t, 4>> mono;
  std::vector<std::uint8_t> deg;
  std::array<std::int16_t, 4096> pos{};  // packed exponents -> index, -1 if absent
  std::array<int, kMaxOrder + 2> count_at{};

  struct Triple {
    std::uint16_t out, a, b;
  };
  std::array<std::vector<Triple>, kMaxOrder + 1> triples;

  static int pack(const std::array<std::uint8_t, 4>& m) {
    return m[0] | (m[1] << 3) | (m[2] << 6) | (m[3] << 9);
  }

  explicit VarTable(int nv) : nvars(nv) {
    pos.fill(-1);
    for (int d = 0; d <= kMaxOrder; ++d) {
      count_at[d] = static_cast<int>(mono.size());
      std::array<std::uint8_t, 4> m{};
      emit(m, 0, d);
      count_at[d + 1] = static_cast<int>(mono.size());
    }
    // count_at[o+1] is the number of coefficients of a jet of order o.
    for (std::size_t i = 0; i < mono.size(); ++i) {
      deg.push_back(static_cast<std::uint8_t>(sum(mono[i])));
      pos[pack(mono[i])] = static_cast<std::int16_t>(i);
    }
    const int total = static_cast<int>(mono.size());
    for (int ord = 0; ord <= kMaxOrder; ++ord) {
      auto& tr = triples[ord];
      for (int a = 0; a < total; ++a) {
        if (deg[a] > ord) break;
        for (int b = 0; b < total; ++b) {
          if (deg[a] + deg[b] > ord) break;
          std::array<std::uint8_t, 4> s{};
          for (int v = 0; v < 4; ++v) s[v] = static_cast<std::uint8_t>(mono[a][v] + mono[b][v]);
          tr.push_back({static_cast<std::uint16_t>(pos[pack(s)]),
                        static_cast<std::uint16_t>(a), static_cast<std::uint16_t>(b)});
        }
      }
    }
  }

private:
  static int sum(const std::array<std::uint8_t, 4>& m) { return m[0] + m[1] + m[2] + m[3]; }

  // Emit all multi-indices of exact total degree d, lexicographically.
  void emit(std::array<std::uint8_t, 4>& m, int var, int left) {
    if (var == nvars - 1) {
      m[var] = static_cast<std::uint8_t>(left);
      mono.push_back(m);
      m[var] = 0;
      return;
    }
    for (int e = left; e >= 0; --e) {
      m[var] = static_cast<std::uint8_t>(e);
      emit(m, var + 1, left - e);
    }
    m[var] = 0;
  }
};

inline const VarTable& vtab(int nvars) {
  static std::once_flag flags[4];
  static std::unique_ptr<VarTable> tabs[4];
  std::call_once(flags[nvars - 1], [&] { tabs[nvars - 1] = std::make_unique<VarTable>(nvars); });
  return *tabs[nvars - 1];
}

}  // namespace jet_detail

// Truncated multivariate Taylor expansion of a scalar quantity at a point.
// Coefficients use the Taylor convention c_beta = d^beta f(p) / beta!, stored
// densely over all multi-indices of total degree <= order. Arithmetic on jets
// of different orders truncates to the smaller order; coefficients beyond the
// result order are never read.
class Jet {
public:
  static constexpr int kMaxVars = 4;
  static constexpr int kMaxOrder = jet_detail::VarTable::kMaxOrder;
  static constexpr int kCap = 210;  // monomials of degree <= 6 in 4 variables

  Jet() : nvars_(1), order_(0) { c_[0] = 0.0; }

  Jet(int nvars, int order) : nvars_(nvars), order_(order) {
    check_shape(nvars, order);
    std::fill_n(c_.begin(), size(), 0.0);
  }

  // Only the active prefix of the coefficient array is kept in a defined
  // state; copies move just that prefix.
  Jet(const Jet& o) : nvars_(o.nvars_), order_(o.order_) {
    std::copy_n(o.c_.begin(), o.size(), c_.begin());
  }
  Jet& operator=(const Jet& o) {
    nvars_ = o.nvars_;
    order_ = o.order_;
    std::copy_n(o.c_.begin(), o.size(), c_.begin());
    return *this;
  }

  static Jet constant(double v, int nvars, int order) {
    Jet j(nvars, order);
    j.c_[0] = v;
    return j;
  }

  // Jet of the coordinate function x_i at a point with x_i = value.
  static Jet variable(int i, double value, int nvars, int order) {
    if (i < 0 || i >= nvars) throw std::out_of_range("jet variable index out of range");
    Jet j(nvars, order);
    j.c_[0] = value;
    if (order >= 1) j.c_[1 + i] = 1.0;
    return j;
  }

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  int size() const { return kCount[nvars_ - 1][order_]; }

  double value() const { return c_[0]; }
  double& raw(int i) { return c_[i]; }
  const double& raw(int i) const { return c_[i]; }

  // Taylor coefficient for a multi-index (zero if beyond the order).
  double coeff(std::array<int, 4> beta) const {
    int d = beta[0] + beta[1] + beta[2] + beta[3];
    if (d > order_) return 0.0;
    std::array<std::uint8_t, 4> m{};
    for (int v = 0; v < 4; ++v) m[v] = static_cast<std::uint8_t>(beta[v]);
    int p = jet_detail::vtab(nvars_).pos[jet_detail::VarTable::pack(m)];
    return p < 0 ? 0.0 : c_[p];
  }

  // Partial derivative d^beta f(p) (Taylor coefficient times beta!).
  double partial(std::array<int, 4> beta) const {
    double f = 1.0;
    for (int v = 0; v < 4; ++v)
      for (int k = 2; k <= beta[v]; ++k) f *= k;
    return coeff(beta) * f;
  }

  Jet truncated(int new_order) const {
    Jet r(nvars_, std::min(new_order, order_));
    for (int i = 0; i < r.size(); ++i) r.c_[i] = c_[i];
    return r;
  }

  // Partial derivative with respect to variable i, as a jet one order lower.
  Jet derivative(int i) const {
    if (order_ == 0) throw std::logic_error("jet derivative of an order-0 jet");
    const auto& T = jet_detail::vtab(nvars_);
    Jet r(nvars_, order_ - 1);
    for (int k = 0; k < r.size(); ++k) {
      auto m = T.mono[k];
      m[i] = static_cast<std::uint8_t>(m[i] + 1);
      int p = T.pos[jet_detail::VarTable::pack(m)];
      r.c_[k] = c_[p] * static_cast<double>(m[i]);
    }
    return r;
  }

  double max_abs_coeff() const {
    double m = 0.0;
    for (int i = 0; i < size(); ++i) m = std::max(m, std::abs(c_[i]));
    return m;
  }

  Jet operator-() const {
    Jet r(nvars_, order_);
    for (int i = 0; i < size(); ++i) r.c_[i] = -c_[i];
    return r;
  }

  friend Jet operator+(const Jet& a, const Jet& b) {
    int ord = matched_order(a, b);
    Jet r(a.nvars_, ord);
    for (int i = 0; i < r.size(); ++i) r.c_[i] = a.c_[i] + b.c_[i];
    return r;
  }
  friend Jet operator-(const Jet& a, const Jet& b) {
    int ord = matched_order(a, b);
    Jet r(a.nvars_, ord);
    for (int i = 0; i < r.size(); ++i) r.c_[i] = a.c_[i] - b.c_[i];
    return r;
  }
  friend Jet operator*(const Jet& a, const Jet& b) {
    int ord = matched_order(a, b);
    Jet r(a.nvars_, ord);
    for (const auto& t : jet_detail::vtab(a.nvars_).triples[ord])
      r.c_[t.out] += a.c_[t.a] * b.c_[t.b];
    return r;
  }

  // this += s * a * b without temporaries; this must already be stored at an
  // order no higher than the product's.
  void add_mul(const Jet& a, const Jet& b, double s = 1.0) {
    int ord = std::min(order_, matched_order(a, b));
    if (ord < order_) throw std::logic_error("add_mul accumulator order too high");
    if (s == 1.0) {
      for (const auto& t : jet_detail::vtab(nvars_).triples[ord])
        c_[t.out] += a.c_[t.a] * b.c_[t.b];
    } else {
      for (const auto& t : jet_detail::vtab(nvars_).triples[ord])
        c_[t.out] += s * a.c_[t.a] * b.c_[t.b];
    }
  }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

  friend Jet operator+(const Jet& a, double s) {
    Jet r = a;
    r.c_[0] += s;
    return r;
  }
  friend Jet operator+(double s, const Jet& a) { return a + s; }
  friend Jet operator-(const Jet& a, double s) { return a + (-s); }
  friend Jet operator-(double s, const Jet& a) { return (-a) + s; }
  friend Jet operator*(const Jet& a, double s) {
    Jet r(a.nvars_, a.order_);
    for (int i = 0; i < r.size(); ++i) r.c_[i] = a.c_[i] * s;
    return r;
  }
  friend Jet operator*(double s, const Jet& a) { return a * s; }
  friend Jet operator/(const Jet& a, double s) { return a * (1.0 / s); }
  friend Jet operator/(double s, const Jet& b) { return reciprocal(b) * s; }

  Jet& operator+=(const Jet& o) { return *this = *this + o; }
  Jet& operator-=(const Jet& o) { return *this = *this - o; }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }
  Jet& operator*=(double s) { return *this = *this * s; }

  // f(a) given the Taylor coefficients of f at a.value(): coef[k] = f^(k)(a0)/k!.
  static Jet compose(const Jet& a, const double* coef) {
    Jet w = a;
    w.c_[0] = 0.0;
    Jet acc = Jet::constant(coef[0], a.nvars_, a.order_);
    if (a.order_ == 0) return acc;
    Jet wp = w;
    for (int k = 1; k <= a.order_; ++k) {
      acc += wp * coef[k];
      if (k < a.order_) wp *= w;
    }
    return acc;
  }

  static Jet reciprocal(const Jet& b) {
    double b0 = b.value();
    if (std::abs(b0) < 1e-300)
      throw SingularPointError("division by a jet with (near-)zero value");
    double coef[kMaxOrder + 1];
    double p = 1.0 / b0;
    for (int k = 0; k <= b.order_; ++k) {
      coef[k] = p;
      p *= -1.0 / b0;
    }
    return compose(b, coef);
  }

private:
  // kCount[n-1][k] = number of monomials of degree <= k in n variables.
  static constexpr int kCount[4][7] = {{1, 2, 3, 4, 5, 6, 7},
                                       {1, 3, 6, 10, 15, 21, 28},
                                       {1, 4, 10, 20, 35, 56, 84},
                                       {1, 5, 15, 35, 70, 126, 210}};

  static void check_shape(int nvars, int order) {
    if (nvars < 1 || nvars > kMaxVars) throw std::invalid_argument("jet nvars out of range");
    if (order < 0 || order > kMaxOrder) throw std::invalid_argument("jet order out of range");
  }
  static int matched_order(const Jet& a, const Jet& b) {
    if (a.nvars_ != b.nvars_) throw std::invalid_argument("jet variable-count mismatch");
    return std::min(a.order_, b.order_);
  }

  int nvars_, order_;
  std::array<double, kCap> c_;
};

inline Jet exp(const Jet& a) {
  double coef[Jet::kMaxOrder + 1];
  double e = std::exp(a.value());
  double f = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    coef[k] = e / f;
    f *= (k + 1);
  }
  return Jet::compose(a, coef);
}

inline Jet log(const Jet& a) {
  double a0 = a.value();
  if (a0 <= 0.0) throw SingularPointError("log of a nonpositive value");
  double coef[Jet::kMaxOrder + 1];
  coef[0] = std::log(a0);
  double p = 1.0 / a0;
  for (int k = 1; k <= a.order(); ++k) {
    coef[k] = ((k % 2) ? 1.0 : -1.0) * p / k;
    p /= a0;
  }
  return Jet::compose(a, coef);
}

inline Jet sqrt(const Jet& a) {
  double a0 = a.value();
  if (a0 <= 0.0) throw SingularPointError("sqrt of a nonpositive value");
  double coef[Jet::kMaxOrder + 1];
  double s = std::sqrt(a0);
  coef[0] = s;
  // binom(1/2, k) * a0^(1/2 - k)
  double c = s;
  for (int k = 1; k <= a.order(); ++k) {
    c *= (0.5 - (k - 1)) / k / a0;
    coef[k] = c;
  }
  return Jet::compose(a, coef);
}

inline Jet sin(const Jet& a) {
  double coef[Jet::kMaxOrder + 1];
  double s = std::sin(a.value()), c = std::cos(a.value());
  double f = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    double d = (k % 4 == 0) ? s : (k % 4 == 1) ? c : (k % 4 == 2) ? -s : -c;
    coef[k] = d / f;
    f *= (k + 1);
  }
  return Jet::compose(a, coef);
}

inline Jet cos(const Jet& a) {
  double coef[Jet::kMaxOrder + 1];
  double s = std::sin(a.value()), c = std::cos(a.value());
  double f = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    double d = (k % 4 == 0) ? c : (k % 4 == 1) ? -s : (k % 4 == 2) ? -c : s;
    coef[k] = d / f;
    f *= (k + 1);
  }
  return Jet::compose(a, coef);
}

inline Jet sinh(const Jet& a) {
  double coef[Jet::kMaxOrder + 1];
  double s = std::sinh(a.value()), c = std::cosh(a.value());
  double f = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    coef[k] = ((k % 2 == 0) ? s : c) / f;
    f *= (k + 1);
  }
  return Jet::compose(a, coef);
}

inline Jet cosh(const Jet& a) {
  double coef[Jet::kMaxOrder + 1];
  double s = std::sinh(a.value()), c = std::cosh(a.value());
  double f = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    coef[k] = ((k % 2 == 0) ? c : s) / f;
    f *= (k + 1);
  }
  return Jet::compose(a, coef);
}

inline Jet pow_int(const Jet& a, int n) {
  if (n < 0) return Jet::reciprocal(pow_int(a, -n));
  Jet r = Jet::constant(1.0, a.nvars(), a.order());
  Jet base = a;
  while (n > 0) {
    if (n & 1) r *= base;
    n >>= 1;
    if (n) base *= base;
  }
  return r;
}

// Scalar shims so generic code can run on either double or Jet.
inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.value(); }
inline double constant_like(double, double v) { return v; }
inline Jet constant_like(const Jet& proto, double v) {
  return Jet::constant(v, proto.nvars(), proto.order());
}
inline void accum_mul(double& acc, double a, double b, double s = 1.0) { acc += s * a * b; }
inline void accum_mul(Jet& acc, const Jet& a, const Jet& b, double s = 1.0) {
  acc.add_mul(a, b, s);
}

}  // namespace lcw
