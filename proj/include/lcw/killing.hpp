#pragma once

#include <functional>
#include <vector>

#include "lcw/distribution.hpp"

namespace lcw {

// A surface metric as a callable, so both expression-level metrics and
// numerically assembled factor metrics (conformal reductions) run through the
// same detector. Must return the 2x2 metric jets at the point.
using SurfaceMetricFn = std::function<MatJ(const std::vector<double>& p, int order)>;

inline SurfaceMetricFn surface_metric_fn(const MetricSpec& m) {
  return [m](const std::vector<double>& p, int order) { return m.jets_at(p, order); };
}

enum class KillingVerdict { Found, None, Inapplicable, Mixed };

inline const char* to_string(KillingVerdict v) {
  switch (v) {
    case KillingVerdict::Found: return "found";
    case KillingVerdict::None: return "none";
    case KillingVerdict::Inapplicable: return "inapplicable";
    case KillingVerdict::Mixed: return "mixed";
  }
  return "?";
}

// Killing-field detection on a surface. Any Killing field must annihilate
// the Gaussian curvature K, so away from critical points of K the only
// candidate line field is Y = rot90(grad K). Writing the candidate field as
// f Y, the three components of L_{fY} g = f L_Y g + df (x) Yflat + Yflat (x) df
// determine u = d(log f) pointwise from the (Y,Y) and mixed components and
// leave one consistency residual, (L_Y g)(JY, JY); a Killing field exists iff
// the residual vanishes and the recovered u is closed.
struct KillingDetection {
  KillingVerdict verdict = KillingVerdict::Inapplicable;
  std::vector<VecD> directions;   // unit Y at the samples, when Found
  double worst_residual = 0.0;
  double worst_closedness = 0.0;
  double grad_scale = 0.0;        // max |grad K| over samples (relative)
  int const_curv_samples = 0;
  int variable_curv_samples = 0;
};

inline KillingDetection killing_detect_surface(const SurfaceMetricFn& metric,
                                               const RegionSpec& region,
                                               const Thresholds& th = {}) {
  KillingDetection out;
  const int order = 5;
  for (const auto& p : region.sample_points()) {
    MatJ g = metric(p, order);
    CurvaturePoint cp = curvature_from_jets(g, p);
    Jet K = gaussian_curvature(cp);  // order 3

    // grad K and its size relative to the curvature scale.
    VecJ dK(2, constant_like(K, 0.0));
    for (int i = 0; i < 2; ++i) dK[i] = K.derivative(i);
    VecJ gradK(2, dK[0]);
    for (int i = 0; i < 2; ++i) {
      Jet v = constant_like(dK[0], 0.0);
      for (int j = 0; j < 2; ++j) v += cp.g_inv(i, j) * dK[j];
      gradK[i] = v;
    }
    Jet gk2 = dot_g(cp.g, gradK, gradK);
    double gknorm = std::sqrt(std::max(gk2.value(), 0.0));
    double kscale = 1.0 + std::abs(K.value());
    out.grad_scale = std::max(out.grad_scale, gknorm / kscale);
    if (gknorm <= th.tol * kscale) {
      ++out.const_curv_samples;
      continue;
    }
    ++out.variable_curv_samples;

    // Y = rot90(grad K): (Jv)^i = g^{ik} eps_kj v^j, eps = sqrt(det g)[[0,1],[-1,0]].
    VecJ Y(2, gradK[0]);
    {
      VecJ ev(2, gradK[0]);
      ev[0] = cp.sqrt_det_g * gradK[1];
      ev[1] = -(cp.sqrt_det_g * gradK[0]);
      for (int i = 0; i < 2; ++i) {
        Jet v = constant_like(gradK[0], 0.0);
        for (int k = 0; k < 2; ++k) v += cp.g_inv(i, k) * ev[k];
        Y[i] = v;
      }
    }
    VecJ W(2, Y[0]);  // JY, same construction from Y
    {
      VecJ ev(2, Y[0]);
      ev[0] = cp.sqrt_det_g * Y[1];
      ev[1] = -(cp.sqrt_det_g * Y[0]);
      for (int i = 0; i < 2; ++i) {
        Jet v = constant_like(Y[0], 0.0);
        for (int k = 0; k < 2; ++k) v += cp.g_inv(i, k) * ev[k];
        W[i] = v;
      }
    }

    MatJ L = distribution_detail::lie_derivative_02(cp.g, Y, 2);
    Jet y2 = dot_g(cp.g, Y, Y);
    auto eval2 = [&](const VecJ& a, const VecJ& b) {
      Jet v = constant_like(L(0, 0), 0.0);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) v += L(i, j) * a[i] * b[j];
      return v;
    };
    {
      Jet lyy = eval2(Y, Y), lyw = eval2(Y, W), lww = eval2(W, W);
      double y2v = y2.value();
      // components of L_Y g against the unit pair (Y/|Y|, JY/|Y|)
      double lscale =
          std::max({std::abs(lyy.value()), std::abs(lyw.value()), std::abs(lww.value())}) / y2v;
      out.worst_residual =
          std::max(out.worst_residual, std::abs(lww.value() / y2v) / (1.0 + lscale));

      // u = d log f: u(Y) = -lyy/(2 y2), u(W) = -lyw/y2; in components
      // u_i = u(Y) Yflat_i / y2 + u(W) Wflat_i / y2.
      Jet uY = -lyy / (y2 * 2.0);
      Jet uW = -lyw / y2;
      VecJ yflat = cp.g * Y, wflat = cp.g * W;
      VecJ u(2, uY);
      for (int i = 0; i < 2; ++i) u[i] = (uY * yflat[i] + uW * wflat[i]) / y2;
      double du = u[1].derivative(0).value() - u[0].derivative(1).value();
      double uscale = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) uscale = std::max(uscale, std::abs(u[j].derivative(i).value()));
      out.worst_closedness = std::max(out.worst_closedness, std::abs(du) / (1.0 + uscale));
    }

    VecD dir(2, 0.0);
    double ynorm = std::sqrt(y2.value());
    for (int i = 0; i < 2; ++i) dir[i] = Y[i].value() / ynorm;
    out.directions.push_back(dir);
  }

  if (out.variable_curv_samples == 0) {
    out.verdict = KillingVerdict::Inapplicable;
  } else if (out.const_curv_samples > 0) {
    out.verdict = KillingVerdict::Mixed;
  } else if (out.worst_residual <= th.tol && out.worst_closedness <= th.tol) {
    out.verdict = KillingVerdict::Found;
  } else {
    out.verdict = KillingVerdict::None;
    out.directions.clear();
  }
  return out;
}

}  // namespace lcw
