#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lcw/jet.hpp"

namespace lcw {

inline double sqrt_scalar(double x) { return std::sqrt(x); }
inline Jet sqrt_scalar(const Jet& x) { return sqrt(x); }

// Zero of the shape a product would have (minimum order for jets).
inline double mul_proto(double, double) { return 0.0; }
inline Jet mul_proto(const Jet& a, const Jet& b) {
  return Jet(a.nvars(), std::min(a.order(), b.order()));
}

// Fixed-capacity dense vector, dimension <= 6.
template <class T>
class Vec {
public:
  Vec() : n_(0) {}
  Vec(int n, const T& init) : n_(n) { a_.fill(init); }
  static Vec zeros_like(int n, const T& proto) { return Vec(n, constant_like(proto, 0.0)); }

  int size() const { return n_; }
  T& operator[](int i) { return a_[i]; }
  const T& operator[](int i) const { return a_[i]; }

  friend Vec operator+(const Vec& a, const Vec& b) {
    Vec r = a;
    for (int i = 0; i < a.n_; ++i) r.a_[i] = a.a_[i] + b.a_[i];
    return r;
  }
  friend Vec operator-(const Vec& a, const Vec& b) {
    Vec r = a;
    for (int i = 0; i < a.n_; ++i) r.a_[i] = a.a_[i] - b.a_[i];
    return r;
  }
  template <class S>
  friend Vec operator*(const Vec& a, const S& s) {
    Vec r = a;
    for (int i = 0; i < a.n_; ++i) r.a_[i] = a.a_[i] * s;
    return r;
  }

  double max_abs_value() const {
    double m = 0.0;
    for (int i = 0; i < n_; ++i) m = std::max(m, std::abs(value_of(a_[i])));
    return m;
  }

private:
  int n_;
  std::array<T, 6> a_;
};

// Fixed-capacity dense matrix, both dimensions <= 6. Row-major.
template <class T>
class Mat {
public:
  Mat() : r_(0), c_(0) {}
  Mat(int r, int c, const T& init) : r_(r), c_(c) { a_.fill(init); }
  static Mat zeros_like(int r, int c, const T& proto) {
    return Mat(r, c, constant_like(proto, 0.0));
  }
  static Mat identity_like(int n, const T& proto) {
    Mat m = zeros_like(n, n, proto);
    for (int i = 0; i < n; ++i) m(i, i) = constant_like(proto, 1.0);
    return m;
  }

  int rows() const { return r_; }
  int cols() const { return c_; }
  T& operator()(int i, int j) { return a_[i * c_ + j]; }
  const T& operator()(int i, int j) const { return a_[i * c_ + j]; }

  Mat transposed() const {
    Mat m(c_, r_, a_[0]);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) m(j, i) = (*this)(i, j);
    return m;
  }

  friend Mat operator+(const Mat& a, const Mat& b) {
    Mat r = a;
    for (int i = 0; i < a.r_ * a.c_; ++i) r.a_[i] = a.a_[i] + b.a_[i];
    return r;
  }
  friend Mat operator-(const Mat& a, const Mat& b) {
    Mat r = a;
    for (int i = 0; i < a.r_ * a.c_; ++i) r.a_[i] = a.a_[i] - b.a_[i];
    return r;
  }
  friend Mat operator*(const Mat& a, const Mat& b) {
    Mat r(a.r_, b.c_, mul_proto(a.a_[0], b.a_[0]));
    for (int i = 0; i < a.r_; ++i)
      for (int k = 0; k < a.c_; ++k)
        for (int j = 0; j < b.c_; ++j) accum_mul(r(i, j), a(i, k), b(k, j));
    return r;
  }
  template <class S>
  friend Mat operator*(const Mat& a, const S& s) {
    Mat r = a;
    for (int i = 0; i < a.r_ * a.c_; ++i) r.a_[i] = a.a_[i] * s;
    return r;
  }
  friend Vec<T> operator*(const Mat& a, const Vec<T>& v) {
    Vec<T> r(a.r_, mul_proto(a.a_[0], v[0]));
    for (int i = 0; i < a.r_; ++i)
      for (int j = 0; j < a.c_; ++j) accum_mul(r[i], a(i, j), v[j]);
    return r;
  }

  double max_abs_value() const {
    double m = 0.0;
    for (int i = 0; i < r_ * c_; ++i) m = std::max(m, std::abs(value_of(a_[i])));
    return m;
  }

private:
  int r_, c_;
  std::array<T, 36> a_;
};

using MatD = Mat<double>;
using VecD = Vec<double>;
using MatJ = Mat<Jet>;
using VecJ = Vec<Jet>;

inline VecD vecd(std::initializer_list<double> xs) {
  VecD v(static_cast<int>(xs.size()), 0.0);
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

template <class T>
T dot(const Vec<T>& a, const Vec<T>& b) {
  T s = constant_like(a[0], 0.0);
  for (int i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <class T>
T dot_g(const Mat<T>& g, const Vec<T>& a, const Vec<T>& b) {
  T s = constant_like(a[0], 0.0);
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < b.size(); ++j) s += g(i, j) * a[i] * b[j];
  return s;
}

// Cholesky test for symmetric positive definiteness (values only).
inline bool is_spd(const MatD& g) {
  int n = g.rows();
  MatD L(n, n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = g(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      if (i == j) {
        if (s <= 0.0) return false;
        L(i, i) = std::sqrt(s);
      } else {
        L(i, j) = s / L(j, j);
      }
    }
  }
  return true;
}

// Gauss-Jordan inverse with partial pivoting on scalar values. Works for
// double and for Jet entries (pivot magnitude judged by the value part).
template <class T>
Mat<T> inverse(const Mat<T>& m) {
  int n = m.rows();
  Mat<T> a = m;
  Mat<T> inv = Mat<T>::identity_like(n, m(0, 0));
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(value_of(a(r, col))) > std::abs(value_of(a(piv, col)))) piv = r;
    if (std::abs(value_of(a(piv, col))) < 1e-300)
      throw SingularPointError("singular matrix in inverse()");
    if (piv != col)
      for (int j = 0; j < n; ++j) {
        std::swap(a(piv, j), a(col, j));
        std::swap(inv(piv, j), inv(col, j));
      }
    T d = a(col, col);
    for (int j = 0; j < n; ++j) {
      a(col, j) /= d;
      inv(col, j) /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      T f = a(r, col);
      for (int j = 0; j < n; ++j) {
        a(r, j) -= f * a(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

inline double det3(const MatD& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

template <class T>
struct EigenSym {
  int n = 0;
  std::array<T, 6> values{};   // ascending by value part
  Mat<T> vectors;              // columns are the eigenvectors
};

namespace linalg_detail {

template <class T>
void apply_jacobi_rotation(Mat<T>& A, Mat<T>& V, int p, int q, const T& c, const T& s) {
  int n = A.rows();
  for (int k = 0; k < n; ++k) {
    T akp = A(k, p), akq = A(k, q);
    A(k, p) = akp * c - akq * s;
    A(k, q) = akp * s + akq * c;
  }
  for (int k = 0; k < n; ++k) {
    T apk = A(p, k), aqk = A(q, k);
    A(p, k) = apk * c - aqk * s;
    A(q, k) = apk * s + aqk * c;
  }
  for (int k = 0; k < n; ++k) {
    T vkp = V(k, p), vkq = V(k, q);
    V(k, p) = vkp * c - vkq * s;
    V(k, q) = vkp * s + vkq * c;
  }
}

}  // namespace linalg_detail

// Cyclic Jacobi for symmetric matrices. Rotations run in the scalar type T,
// so with T = Jet the eigenvalues and eigenvectors carry derivatives. When
// an off-diagonal entry and the corresponding diagonal gap both have (near-)
// zero value parts the rotation is skipped: with degenerate eigenvalues the
// individual eigenvectors are not smooth, only the eigenspaces are, and
// callers must work with the invariant subspace spanned by the columns.
template <class T>
EigenSym<T> jacobi_eigen(const Mat<T>& m, int max_sweeps = 50) {
  int n = m.rows();
  Mat<T> A = m;
  Mat<T> V = Mat<T>::identity_like(n, m(0, 0));
  double scale = A.max_abs_value();
  double tol = 1e-14 * (scale > 0 ? scale : 1.0);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(value_of(A(p, q))));
    bool jets_pending = false;
    if constexpr (!std::is_same_v<T, double>) {
      for (int p = 0; p < n && !jets_pending; ++p)
        for (int q = p + 1; q < n; ++q)
          if (A(p, q).max_abs_coeff() > tol) {
            jets_pending = true;
            break;
          }
    }
    if (off <= tol && !jets_pending) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = std::abs(value_of(A(p, q)));
        bool jet_work = false;
        if constexpr (!std::is_same_v<T, double>) jet_work = A(p, q).max_abs_coeff() > tol;
        if (apq <= tol && !jet_work) continue;

        T delta = (A(q, q) - A(p, p)) * 0.5;
        double dv = value_of(delta);
        if (apq <= tol && std::abs(dv) <= 1e-7 * (scale > 0 ? scale : 1.0)) {
          // Degenerate block with purely derivative-level mixing: skip.
          continue;
        }
        double sigma = (dv >= 0.0) ? 1.0 : -1.0;
        T r = sqrt_scalar(delta * delta + A(p, q) * A(p, q));
        T t = A(p, q) / (delta * sigma + r) * sigma;
        T c = constant_like(t, 1.0) / sqrt_scalar(t * t + 1.0);
        T s = t * c;
        linalg_detail::apply_jacobi_rotation(A, V, p, q, c, s);
      }
    }
  }

  EigenSym<T> out;
  out.n = n;
  std::array<int, 6> idx{};
  std::iota(idx.begin(), idx.begin() + n, 0);
  std::sort(idx.begin(), idx.begin() + n,
            [&](int a, int b) { return value_of(A(a, a)) < value_of(A(b, b)); });
  out.vectors = Mat<T>::zeros_like(n, n, m(0, 0));
  for (int j = 0; j < n; ++j) {
    out.values[j] = A(idx[j], idx[j]);
    for (int i = 0; i < n; ++i) out.vectors(i, j) = V(i, idx[j]);
  }
  return out;
}

}  // namespace lcw
