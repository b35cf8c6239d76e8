#pragma once

#include <array>
#include <vector>

#include "lcw/curvature.hpp"

namespace lcw {

// A g-orthonormal frame at a point, columns = coordinate components (jets).
struct Frame {
  MatJ e;  // dim x dim, column a = frame vector e_a

  int dim() const { return e.rows(); }

  // Coordinate components of a vector given in frame components.
  VecJ to_coords(const VecJ& vf) const { return e * vf; }
  VecD to_coords(const VecD& vf) const {
    VecD r(dim(), 0.0);
    for (int i = 0; i < dim(); ++i)
      for (int a = 0; a < dim(); ++a) r[i] += e(i, a).value() * vf[a];
    return r;
  }
};

// Gram-Schmidt against g, preserving the seed's flag of spans (vector a of
// the result is in span(seed_1..seed_a), with positive coefficient on
// seed_a). The default seed is the coordinate basis.
inline Frame orthonormal_frame(const CurvaturePoint& cp, const MatD* seed = nullptr) {
  const int n = cp.dim;
  Jet proto = Jet::constant(0.0, cp.g(0, 0).nvars(), cp.order);
  MatJ E(n, n, proto);
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i)
      E(i, a) = Jet::constant(seed ? (*seed)(i, a) : (i == a ? 1.0 : 0.0), cp.g(0, 0).nvars(),
                              cp.order);
  for (int a = 0; a < n; ++a) {
    VecJ v(n, proto);
    for (int i = 0; i < n; ++i) v[i] = E(i, a);
    for (int b = 0; b < a; ++b) {
      VecJ w(n, proto);
      for (int i = 0; i < n; ++i) w[i] = E(i, b);
      Jet c = dot_g(cp.g, v, w);
      for (int i = 0; i < n; ++i) v[i] -= c * w[i];
    }
    Jet nrm2 = dot_g(cp.g, v, v);
    if (nrm2.value() < 1e-20) throw SingularPointError("rank-deficient frame seed");
    Jet inv_nrm = Jet::constant(1.0, proto.nvars(), proto.order()) / sqrt(nrm2);
    for (int i = 0; i < n; ++i) E(i, a) = v[i] * inv_nrm;
  }
  return Frame{E};
}

// Ordered bivector basis: e12, e13, e14, e34, e24, e23. Complementary pairs
// sit at slots (0,3), (1,4), (2,5).
inline constexpr std::array<std::pair<int, int>, 6> kBivectorPairs = {
    {{0, 1}, {0, 2}, {0, 3}, {2, 3}, {1, 3}, {1, 2}}};

// The Weyl operator as a symmetric 6x6 matrix over the frame bivector basis.
// Entry (a,b) = (1/4) W_ijkl (b_a)^ij (b_b)^kl, i.e. the half-contraction
// operator against the half inner product, which makes the basis orthonormal.
struct WeylOperator {
  Frame frame;
  MatJ matrix;  // 6x6 jets

  MatD values() const {
    MatD m(6, 6, 0.0);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) m(i, j) = matrix(i, j).value();
    return m;
  }
};

inline WeylOperator weyl_operator(const CurvaturePoint& cp, const Frame& f) {
  if (cp.dim != 4) throw std::invalid_argument("weyl_operator requires dim = 4");
  const int n = 4;
  const int nv = cp.g(0, 0).nvars();
  const int ord = std::max(cp.order - 2, 0);
  Jet proto = Jet::constant(0.0, nv, ord);

  // Transform W_ijkl to frame components by successive contraction.
  std::vector<Jet> w1(n * n * n * n, proto), w2(n * n * n * n, proto);
  auto I4 = [n](int a, int b, int c, int d) { return ((a * n + b) * n + c) * n + d; };
  for (int a = 0; a < n; ++a)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          Jet v = proto;
          for (int i = 0; i < n; ++i) accum_mul(v, f.e(i, a), cp.W4(i, j, k, l));
          w1[I4(a, j, k, l)] = v;
        }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          Jet v = proto;
          for (int j = 0; j < n; ++j) accum_mul(v, f.e(j, b), w1[I4(a, j, k, l)]);
          w2[I4(a, b, k, l)] = v;
        }
  std::vector<Jet>& w3 = w1;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int l = 0; l < n; ++l) {
          Jet v = proto;
          for (int k = 0; k < n; ++k) accum_mul(v, f.e(k, c), w2[I4(a, b, k, l)]);
          w3[I4(a, b, c, l)] = v;
        }
  std::vector<Jet>& w4 = w2;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          Jet v = proto;
          for (int l = 0; l < n; ++l) accum_mul(v, f.e(l, d), w3[I4(a, b, c, l)]);
          w4[I4(a, b, c, d)] = v;
        }

  WeylOperator W;
  W.frame = f;
  W.matrix = MatJ(6, 6, proto);
  for (int u = 0; u < 6; ++u)
    for (int v = 0; v < 6; ++v) {
      auto [p, q] = kBivectorPairs[u];
      auto [r, s] = kBivectorPairs[v];
      W.matrix(u, v) = w4[I4(p, q, r, s)] * 0.25;
    }
  return W;
}

// Plucker defect of a bivector in the ordered basis: omega ^ omega is
// proportional to c0 c3 - c1 c4 + c2 c5 (complementary-slot pairing).
template <class T>
T plucker_defect(const Vec<T>& c) {
  return c[0] * c[3] - c[1] * c[4] + c[2] * c[5];
}

// Polarized Plucker form.
template <class T>
T plucker_polar(const Vec<T>& u, const Vec<T>& v) {
  return u[0] * v[3] + v[0] * u[3] - u[1] * v[4] - v[1] * u[4] + u[2] * v[5] + v[2] * u[5];
}

struct PluckerResult {
  bool simple;
  double defect;      // |omega ^ omega| relative to ||omega||^2
};

inline PluckerResult plucker_simple(const VecD& c, double tol = 1e-10) {
  double n2 = 0.0;
  for (int i = 0; i < 6; ++i) n2 += c[i] * c[i];
  double d = std::abs(plucker_defect(c));
  double rel = n2 > 0 ? d / n2 : 0.0;
  return {rel <= tol, rel};
}

// 6-vector of bivector-basis components of v ^ w (frame components).
template <class T>
Vec<T> wedge_components(const Vec<T>& v, const Vec<T>& w) {
  Vec<T> c(6, constant_like(v[0], 0.0));
  for (int s = 0; s < 6; ++s) {
    auto [i, j] = kBivectorPairs[s];
    c[s] = v[i] * w[j] - v[j] * w[i];
  }
  return c;
}

// Antisymmetric 4x4 matrix of a bivector given in basis components.
template <class T>
Mat<T> bivector_matrix(const Vec<T>& c) {
  Mat<T> m = Mat<T>::zeros_like(4, 4, c[0]);
  for (int s = 0; s < 6; ++s) {
    auto [i, j] = kBivectorPairs[s];
    m(i, j) = c[s];
    m(j, i) = constant_like(c[0], 0.0) - c[s];
  }
  return m;
}

// Projector (in frame components) onto the 2-plane of a simple bivector:
// Pi = -Omega^2, rescaled to trace 2. Smooth in the bivector, basis free.
template <class T>
Mat<T> plane_projector(const Vec<T>& c) {
  Mat<T> om = bivector_matrix(c);
  Mat<T> m2 = om * om;
  T tr = constant_like(c[0], 0.0);
  for (int i = 0; i < 4; ++i) tr += m2(i, i);
  // For simple omega, -Omega^2 is ||omega||^2 times the plane projector;
  // rescale to trace 2. trace(Omega^2) is negative.
  T scale = 2.0 / tr;
  Mat<T> pi = Mat<T>::zeros_like(4, 4, c[0]);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) pi(i, j) = m2(i, j) * scale;
  return pi;
}

}  // namespace lcw
