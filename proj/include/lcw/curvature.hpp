#pragma once

#include <vector>

#include "lcw/linalg.hpp"
#include "lcw/metric.hpp"

namespace lcw {

// All curvature quantities at one point, carried as jets so that derived
// tensors expose their own derivatives. With metric jets of order N:
// Christoffel symbols are valid to order N-1, Riemann/Ricci/Schouten/Weyl to
// N-2, Cotton and Cotton-York to N-3.
//
// Conventions:
//   R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z
//   R^i_jkl = d_k G^i_lj - d_l G^i_kj + G^i_km G^m_lj - G^i_lm G^m_kj
//   Ric_jl = R^i_jil, s = tr_g Ric, P = (Ric - s/(2(n-1)) g)/(n-2)
//   C_ijk = nabla_i P_jk - nabla_j P_ik
//   CY_ij = eps_i^kl nabla_k P_lj, symmetrized (eps: chart orientation)
//   Weyl(0,4) = Riem - P (x) g   (Kulkarni-Nomizu)
struct CurvaturePoint {
  std::vector<double> p;
  int dim = 0;
  int order = 0;  // jet order of the metric entries

  MatJ g, g_inv;
  Jet sqrt_det_g;
  std::vector<MatJ> gamma;   // gamma[k](i,j) = Gamma^k_ij
  std::vector<Jet> riem;     // R_ijkl, dense dim^4
  MatJ ric;
  Jet scal;
  MatJ schouten;
  std::vector<Jet> cotton;   // C_ijk (dim 3 only), dense dim^3
  MatJ cy;                   // Cotton-York (dim 3 only), coordinate components
  std::vector<Jet> weyl;     // W_ijkl (dim 4 only), dense dim^4

  int i4(int i, int j, int k, int l) const { return ((i * dim + j) * dim + k) * dim + l; }
  int i3(int i, int j, int k) const { return (i * dim + j) * dim + k; }

  const Jet& R(int i, int j, int k, int l) const { return riem[i4(i, j, k, l)]; }
  const Jet& W4(int i, int j, int k, int l) const { return weyl[i4(i, j, k, l)]; }

  // Scale used by the "tensor is zero" threshold.
  double riemann_scale() const {
    double m = 0.0;
    for (const auto& r : riem) m = std::max(m, std::abs(r.value()));
    return m;
  }
};

// Covariant derivative of a (0,2) tensor of jets: D[k](i,j) = nabla_k T_ij.
inline std::vector<MatJ> cov_deriv_02(const MatJ& T, const std::vector<MatJ>& gamma, int dim) {
  Jet proto = Jet::constant(0.0, T(0, 0).nvars(), std::max(T(0, 0).order() - 1, 0));
  std::vector<MatJ> D(dim, MatJ(dim, dim, proto));
  for (int k = 0; k < dim; ++k)
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        Jet v = T(i, j).derivative(k).truncated(D[k](0, 0).order());
        for (int m = 0; m < dim; ++m) {
          accum_mul(v, gamma[m](k, i), T(m, j), -1.0);
          accum_mul(v, gamma[m](k, j), T(i, m), -1.0);
        }
        D[k](i, j) = v;
      }
  return D;
}

// Full pipeline from metric jets at a point. `p` is carried along for
// reporting; it must be the point the jets were expanded at.
inline CurvaturePoint curvature_from_jets(const MatJ& gjets, const std::vector<double>& p) {
  CurvaturePoint cp;
  cp.p = p;
  cp.dim = gjets.rows();
  cp.order = gjets(0, 0).order();
  const int n = cp.dim;
  const int nv = gjets(0, 0).nvars();
  cp.g = gjets;

  MatD gval(n, n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gval(i, j) = cp.g(i, j).value();
  if (!is_spd(gval)) throw SingularPointError("metric is not positive definite at the point");

  cp.g_inv = inverse(cp.g);

  // det via g = L L^T is overkill at this size; cofactor expansion in jets.
  Jet det = Jet::constant(0.0, nv, cp.order);
  if (n == 2) {
    det = cp.g(0, 0) * cp.g(1, 1) - cp.g(0, 1) * cp.g(1, 0);
  } else {
    // Laplace expansion along the first row, n in {3,4}.
    for (int j = 0; j < n; ++j) {
      MatJ minor(n - 1, n - 1, cp.g(0, 0));
      for (int r = 1; r < n; ++r) {
        int cc = 0;
        for (int c = 0; c < n; ++c) {
          if (c == j) continue;
          minor(r - 1, cc++) = cp.g(r, c);
        }
      }
      Jet md = (n == 3) ? minor(0, 0) * minor(1, 1) - minor(0, 1) * minor(1, 0)
                        : minor(0, 0) * (minor(1, 1) * minor(2, 2) - minor(1, 2) * minor(2, 1)) -
                              minor(0, 1) * (minor(1, 0) * minor(2, 2) - minor(1, 2) * minor(2, 0)) +
                              minor(0, 2) * (minor(1, 0) * minor(2, 1) - minor(1, 1) * minor(2, 0));
      det += cp.g(0, j) * md * ((j % 2) ? -1.0 : 1.0);
    }
  }
  cp.sqrt_det_g = sqrt(det);

  const int dord = cp.order - 1;
  Jet proto1 = Jet::constant(0.0, nv, dord);
  std::vector<MatJ> dg(n, MatJ(n, n, proto1));
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) dg[l](i, j) = dg[l](j, i) = cp.g(i, j).derivative(l);

  cp.gamma.assign(n, MatJ(n, n, proto1));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      std::array<Jet, 4> dsum;
      for (int l = 0; l < n; ++l) dsum[l] = dg[i](j, l) + dg[j](i, l) - dg[l](i, j);
      for (int k = 0; k < n; ++k) {
        Jet v(nv, dord);
        for (int l = 0; l < n; ++l) accum_mul(v, cp.g_inv(k, l), dsum[l], 0.5);
        cp.gamma[k](i, j) = v;
        cp.gamma[k](j, i) = v;
      }
    }

  const int rord = cp.order - 2;
  Jet proto2 = Jet::constant(0.0, nv, rord);

  // R^i_jkl for k < l, then lower and fill by antisymmetry.
  std::vector<Jet> rup(n * n * n * n, proto2);
  auto I4 = [n](int i, int j, int k, int l) { return ((i * n + j) * n + k) * n + l; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = k + 1; l < n; ++l) {
          Jet v = cp.gamma[i](l, j).derivative(k) - cp.gamma[i](k, j).derivative(l);
          for (int m = 0; m < n; ++m) {
            accum_mul(v, cp.gamma[i](k, m), cp.gamma[m](l, j));
            accum_mul(v, cp.gamma[i](l, m), cp.gamma[m](k, j), -1.0);
          }
          rup[I4(i, j, k, l)] = v;
          rup[I4(i, j, l, k)] = -v;
        }

  cp.riem.assign(n * n * n * n, proto2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = k + 1; l < n; ++l) {
          Jet v(nv, rord);
          for (int m = 0; m < n; ++m) accum_mul(v, cp.g(i, m), rup[I4(m, j, k, l)]);
          cp.riem[cp.i4(i, j, k, l)] = v;
          cp.riem[cp.i4(i, j, l, k)] = -v;
        }

  cp.ric = MatJ(n, n, proto2);
  for (int j = 0; j < n; ++j)
    for (int l = j; l < n; ++l) {
      Jet v = Jet::constant(0.0, nv, rord);
      for (int i = 0; i < n; ++i) v += rup[I4(i, j, i, l)];
      cp.ric(j, l) = v;
      cp.ric(l, j) = v;
    }

  cp.scal = Jet::constant(0.0, nv, rord);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) accum_mul(cp.scal, cp.g_inv(j, l), cp.ric(j, l));

  if (n >= 3) {
    cp.schouten = MatJ(n, n, proto2);
    double c1 = 1.0 / (n - 2), c2 = 1.0 / (2.0 * (n - 1));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        cp.schouten(i, j) = (cp.ric(i, j) - cp.g(i, j) * cp.scal * c2) * c1;
  }

  if (n == 3 && cp.order >= 3) {
    const int cord = cp.order - 3;
    Jet proto3 = Jet::constant(0.0, nv, cord);
    auto DP = cov_deriv_02(cp.schouten, cp.gamma, n);
    cp.cotton.assign(n * n * n, proto3);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          cp.cotton[cp.i3(i, j, k)] = DP[i](j, k).truncated(cord) - DP[j](i, k).truncated(cord);

    // eps_i^kl nabla_k P_lj with indices raised by g_inv, then symmetrized.
    static const int perms[6][4] = {{0, 1, 2, +1}, {1, 2, 0, +1}, {2, 0, 1, +1},
                                    {0, 2, 1, -1}, {2, 1, 0, -1}, {1, 0, 2, -1}};
    MatJ cy_raw(n, n, proto3);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Jet v = Jet::constant(0.0, nv, cord);
        for (const auto& pm : perms) {
          if (pm[0] != i) continue;
          int a = pm[1], b = pm[2];
          // eps_iab * g^{ak} g^{bl} * nabla_k P_lj
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l)
              v += (cp.sqrt_det_g * static_cast<double>(pm[3])).truncated(cord) *
                   cp.g_inv(a, k) * cp.g_inv(b, l) * DP[k](l, j);
        }
        cy_raw(i, j) = v;
      }
    cp.cy = MatJ(n, n, proto3);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) cp.cy(i, j) = (cy_raw(i, j) + cy_raw(j, i)) * 0.5;
  }

  if (n == 4) {
    cp.weyl.assign(n * n * n * n, proto2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = k + 1; l < n; ++l) {
            Jet v = cp.riem[cp.i4(i, j, k, l)];
            accum_mul(v, cp.schouten(i, k), cp.g(j, l), -1.0);
            accum_mul(v, cp.schouten(j, l), cp.g(i, k), -1.0);
            accum_mul(v, cp.schouten(i, l), cp.g(j, k), 1.0);
            accum_mul(v, cp.schouten(j, k), cp.g(i, l), 1.0);
            cp.weyl[cp.i4(i, j, k, l)] = v;
            cp.weyl[cp.i4(i, j, l, k)] = -v;
          }
  }

  return cp;
}

inline CurvaturePoint curvature_point(const MetricSpec& m, const std::vector<double>& p,
                                      int order = 3) {
  return curvature_from_jets(m.jets_at(p, order), p);
}

// Christoffel symbols only (cheaper entry point).
inline std::vector<MatJ> christoffel(const MetricSpec& m, const std::vector<double>& p,
                                     int order = 3) {
  return curvature_point(m, p, order).gamma;
}

// Value-level Cotton-York matrix, coordinate components.
inline MatD cotton_york(const CurvaturePoint& cp) {
  if (cp.dim != 3) throw std::invalid_argument("cotton_york requires dim = 3");
  MatD m(3, 3, 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = cp.cy(i, j).value();
  return m;
}

// Gaussian curvature of a surface (dim 2): K = s/2, valid to order N-2.
inline Jet gaussian_curvature(const CurvaturePoint& cp) {
  if (cp.dim != 2) throw std::invalid_argument("gaussian_curvature requires dim = 2");
  return cp.scal * 0.5;
}

// (1,3) Weyl tensor W^i_jkl (conformally invariant form).
inline std::vector<Jet> weyl_13(const CurvaturePoint& cp) {
  const int n = cp.dim;
  Jet proto = Jet::constant(0.0, cp.g(0, 0).nvars(), std::max(cp.order - 2, 0));
  std::vector<Jet> w(n * n * n * n, proto);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          Jet v = proto;
          for (int m = 0; m < n; ++m) v += cp.g_inv(i, m) * cp.W4(m, j, k, l);
          w[cp.i4(i, j, k, l)] = v;
        }
  return w;
}

}  // namespace lcw
