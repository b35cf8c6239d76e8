#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lcw/classify.hpp"
#include "lcw/region.hpp"

namespace lcw {

// A rank-k distribution given by k spanning vector fields.
struct DistributionSpec {
  std::vector<VectorFieldSpec> fields;
  int rank() const { return static_cast<int>(fields.size()); }
};

// Distribution data at a point: the (1,1) projector onto D as jets in
// coordinate components. Everything downstream (II, H, Phi) is computed from
// the projector field, so distributions coming from expression-level fields
// and from per-point eigenstructure are handled uniformly.
struct ProjectorField {
  int rank = 0;
  MatJ P;
};

inline ProjectorField projector_complement(const CurvaturePoint& cp, const ProjectorField& D) {
  ProjectorField out;
  out.rank = cp.dim - D.rank;
  out.P = MatJ::identity_like(cp.dim, cp.g(0, 0)) - D.P;
  for (int i = 0; i < cp.dim; ++i)
    for (int j = 0; j < cp.dim; ++j)
      out.P(i, j) = out.P(i, j).truncated(D.P(0, 0).order());
  return out;
}

// P = V (V^T g V)^{-1} V^T g for spanning fields V.
inline ProjectorField projector_from_fields(const CurvaturePoint& cp,
                                            const std::vector<VectorFieldSpec>& fields) {
  const int n = cp.dim, k = static_cast<int>(fields.size());
  Jet proto = Jet::constant(0.0, n, cp.order);
  MatJ V(n, k, proto);
  for (int a = 0; a < k; ++a) {
    VecJ f = fields[a].jets_at(cp.p, cp.order);
    for (int i = 0; i < n; ++i) V(i, a) = f[i];
  }
  MatJ gram = V.transposed() * cp.g * V;
  MatD gv(k, k, 0.0);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) gv(i, j) = gram(i, j).value();
  if (!is_spd(gv)) throw SingularPointError("distribution rank drop at sample point");
  ProjectorField out;
  out.rank = k;
  out.P = V * inverse(gram) * V.transposed() * cp.g;
  return out;
}

// Rank-1 projector from a unit direction field given as jets (coordinates).
inline ProjectorField projector_from_direction(const CurvaturePoint& cp, const VecJ& v) {
  ProjectorField out;
  out.rank = 1;
  VecJ vflat = cp.g * v;
  out.P = MatJ::zeros_like(cp.dim, cp.dim, v[0]);
  for (int i = 0; i < cp.dim; ++i)
    for (int j = 0; j < cp.dim; ++j) out.P(i, j) = v[i] * vflat[j];
  return out;
}

// Projector in coordinates from a frame-component projector: E Pi E^T g.
inline ProjectorField projector_from_frame(const CurvaturePoint& cp, const Frame& f,
                                           const MatJ& proj_frame, int rank) {
  ProjectorField out;
  out.rank = rank;
  out.P = f.e * proj_frame * f.e.transposed() * cp.g;
  return out;
}

// A g-orthonormal basis of D at the point, value level (coordinate comps).
inline std::vector<VecD> onb_of_distribution(const CurvaturePoint& cp, const ProjectorField& D) {
  const int n = cp.dim;
  MatD gval(n, n, 0.0), pval(n, n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      gval(i, j) = cp.g(i, j).value();
      pval(i, j) = D.P(i, j).value();
    }
  std::vector<VecD> basis;
  for (int s = 0; s < n && static_cast<int>(basis.size()) < D.rank; ++s) {
    VecD v(n, 0.0);
    for (int i = 0; i < n; ++i) v[i] = pval(i, s);
    for (const auto& b : basis) {
      double c = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) c += gval(i, j) * v[i] * b[j];
      for (int i = 0; i < n; ++i) v[i] -= c * b[i];
    }
    double n2 = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) n2 += gval(i, j) * v[i] * v[j];
    if (n2 < 1e-16) continue;
    double inv = 1.0 / std::sqrt(n2);
    for (int i = 0; i < n; ++i) v[i] *= inv;
    basis.push_back(v);
  }
  if (static_cast<int>(basis.size()) != D.rank)
    throw SingularPointError("distribution rank drop at sample point");
  return basis;
}

// The second fundamental form of D at a point, II(X,Y) = P_perp(nabla_X Y),
// together with its symmetry defect (integrability) and the deviation from
// <X,Y> H (umbilicity). H is carried as jets so d(H-flat) is available.
struct SecondFundamentalForm {
  int rank = 0;
  std::vector<VecD> basis;                  // ON basis of D used for components
  std::vector<std::vector<VecJ>> form;      // form[a][b] = II(v_a, v_b), coordinates
  VecJ H;                                   // mean curvature vector, jets
  double norm = 0.0;                        // max ||II(a,b)||_g
  double sym_defect = 0.0;                  // relative
  double umb_defect = 0.0;                  // relative ("anisotropy")
};

inline SecondFundamentalForm second_fundamental_form_point(const CurvaturePoint& cp,
                                                           const ProjectorField& D) {
  const int n = cp.dim;
  const int nv = cp.g(0, 0).nvars();
  const int pord = D.P(0, 0).order();
  const int bord = std::min(pord - 1, cp.order - 1);  // B needs dP and Gamma
  Jet proto = Jet::constant(0.0, nv, std::max(bord, 0));

  ProjectorField Pp = projector_complement(cp, D);

  // B^k_ij = Pperp^k_m (d_i P^m_j + Gamma^m_il P^l_j); II(X,Y) = B(X,Y) for
  // X, Y in D.
  std::vector<Jet> B(n * n * n, proto);
  auto I3 = [n](int k, int i, int j) { return (k * n + i) * n + j; };
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Jet v = D.P(m, j).derivative(i).truncated(bord);
        for (int l = 0; l < n; ++l) accum_mul(v, cp.gamma[m](i, l), D.P(l, j));
        B[I3(m, i, j)] = v;  // temporarily nabla-P without the outer projection
      }
  std::vector<Jet> Bp(n * n * n, proto);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Jet v = proto;
        for (int m = 0; m < n; ++m) accum_mul(v, Pp.P(k, m), B[I3(m, i, j)]);
        Bp[I3(k, i, j)] = v;
      }

  SecondFundamentalForm out;
  out.rank = D.rank;
  out.basis = onb_of_distribution(cp, D);

  // Mean curvature from the g-trace over D: sum_a v_a v_a^T = P g^{-1}.
  MatJ pg = D.P * cp.g_inv;
  out.H = VecJ(n, proto);
  for (int k = 0; k < n; ++k) {
    Jet v = proto;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) accum_mul(v, Bp[I3(k, i, j)], pg(i, j));
    out.H[k] = v * (1.0 / D.rank);
  }

  MatD gval(n, n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gval(i, j) = cp.g(i, j).value();
  auto gnorm = [&](const VecD& v) {
    double s = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += gval(i, j) * v[i] * v[j];
    return std::sqrt(std::max(s, 0.0));
  };

  const int k = D.rank;
  out.form.assign(k, std::vector<VecJ>(k, VecJ(n, proto)));
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      VecJ val(n, proto);
      for (int kk = 0; kk < n; ++kk) {
        Jet v = proto;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            v += Bp[I3(kk, i, j)] * (out.basis[a][i] * out.basis[b][j]);
        val[kk] = v;
      }
      out.form[a][b] = val;
    }

  VecD Hval(n, 0.0);
  for (int i = 0; i < n; ++i) Hval[i] = out.H[i].value();
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      VecD iv(n, 0.0);
      for (int i = 0; i < n; ++i) iv[i] = out.form[a][b][i].value();
      out.norm = std::max(out.norm, gnorm(iv));
      VecD sym(n, 0.0), umb(n, 0.0);
      for (int i = 0; i < n; ++i) {
        sym[i] = iv[i] - out.form[b][a][i].value();
        umb[i] = iv[i] - (a == b ? Hval[i] : 0.0);
      }
      out.sym_defect = std::max(out.sym_defect, gnorm(sym));
      out.umb_defect = std::max(out.umb_defect, gnorm(umb));
    }
  out.sym_defect /= (1.0 + out.norm);
  out.umb_defect /= (1.0 + out.norm);
  return out;
}

// Lie bracket [X,Y]^i = X^j d_j Y^i - Y^j d_j X^i at a point, as jets.
inline VecJ lie_bracket_jets(const VectorFieldSpec& X, const VectorFieldSpec& Y,
                             const std::vector<double>& p, int order = 3) {
  int n = static_cast<int>(p.size());
  VecJ xj = X.jets_at(p, order), yj = Y.jets_at(p, order);
  Jet proto = Jet::constant(0.0, n, order - 1);
  VecJ out(n, proto);
  for (int i = 0; i < n; ++i) {
    Jet v = proto;
    for (int j = 0; j < n; ++j)
      v += xj[j] * yj[i].derivative(j) - yj[j] * xj[i].derivative(j);
    out[i] = v;
  }
  return out;
}

inline VecD lie_bracket(const VectorFieldSpec& X, const VectorFieldSpec& Y,
                        const std::vector<double>& p) {
  VecJ j = lie_bracket_jets(X, Y, p, 1);
  VecD out(j.size(), 0.0);
  for (int i = 0; i < j.size(); ++i) out[i] = j[i].value();
  return out;
}

struct CheckResult {
  bool pass = false;
  double worst = 0.0;
  double threshold = 0.0;
};

// Bracket-closure integrability of a distribution spanned by expression
// fields: the g-orthogonal component of every bracket stays below tol.
inline CheckResult integrability_check(const DistributionSpec& D, const MetricSpec& m,
                                       const RegionSpec& region, double tol = 1e-8) {
  CheckResult out;
  out.threshold = tol;
  for (const auto& p : region.sample_points()) {
    CurvaturePoint cp = curvature_point(m, p, 2);
    ProjectorField PD = projector_from_fields(cp, D.fields);
    ProjectorField Pp = projector_complement(cp, PD);
    MatD gval(cp.dim, cp.dim, 0.0);
    for (int i = 0; i < cp.dim; ++i)
      for (int j = 0; j < cp.dim; ++j) gval(i, j) = cp.g(i, j).value();
    for (int a = 0; a < D.rank(); ++a)
      for (int b = a + 1; b < D.rank(); ++b) {
        VecJ br = lie_bracket_jets(D.fields[a], D.fields[b], p, 2);
        VecD w(cp.dim, 0.0);
        for (int i = 0; i < cp.dim; ++i) {
          double s = 0;
          for (int j = 0; j < cp.dim; ++j) s += Pp.P(i, j).value() * br[j].value();
          w[i] = s;
        }
        double n2 = 0, b2 = 0;
        for (int i = 0; i < cp.dim; ++i)
          for (int j = 0; j < cp.dim; ++j) {
            n2 += gval(i, j) * w[i] * w[j];
            b2 += gval(i, j) * br[i].value() * br[j].value();
          }
        out.worst = std::max(out.worst, std::sqrt(std::max(n2, 0.0)) / (1.0 + std::sqrt(b2)));
      }
  }
  out.pass = out.worst <= tol;
  return out;
}

// The product-detecting 1-form at a point. The two trace summands of
//   Phi(X) = Tr_g( (1/d) L_{X_perp} g^D + (1/(n-d)) L_{X^D} g^perp )
// are kept separately; dPhi comes from the jet layer.
struct PhiForm {
  VecJ phi;         // components, jets
  VecJ term_D;      // (1/d) Tr L_{X_perp} g^D
  VecJ term_perp;   // (1/(n-d)) Tr L_{X^D} g^perp
  MatD dphi;        // values
  double closedness_defect = 0.0;  // relative
};

namespace distribution_detail {

// (L_V T)_ij for a (0,2) tensor of jets and a field of jets.
inline MatJ lie_derivative_02(const MatJ& T, const VecJ& V, int n) {
  int ord = std::min(T(0, 0).order(), V[0].order()) - 1;
  Jet proto = Jet::constant(0.0, T(0, 0).nvars(), std::max(ord, 0));
  MatJ L(n, n, proto);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Jet v = proto;
      for (int mm = 0; mm < n; ++mm) {
        accum_mul(v, V[mm], T(i, j).derivative(mm));
        accum_mul(v, T(mm, j), V[mm].derivative(i));
        accum_mul(v, T(i, mm), V[mm].derivative(j));
      }
      L(i, j) = v;
    }
  return L;
}

inline MatJ restricted_metric(const CurvaturePoint& cp, const ProjectorField& D) {
  // g^D_ij = g_ab P^a_i P^b_j
  return D.P.transposed() * cp.g * D.P;
}

}  // namespace distribution_detail

inline PhiForm phi_form_point(const CurvaturePoint& cp, const ProjectorField& D) {
  using distribution_detail::lie_derivative_02;
  const int n = cp.dim;
  ProjectorField Pp = projector_complement(cp, D);
  MatJ gD = distribution_detail::restricted_metric(cp, D);
  MatJ gPerp = distribution_detail::restricted_metric(cp, Pp);
  int ord = D.P(0, 0).order() - 1;
  Jet proto = Jet::constant(0.0, cp.g(0, 0).nvars(), std::max(ord, 0));

  PhiForm out;
  out.phi = VecJ(n, proto);
  out.term_D = VecJ(n, proto);
  out.term_perp = VecJ(n, proto);
  for (int s = 0; s < n; ++s) {
    VecJ Xp(n, proto), Xd(n, proto);
    for (int i = 0; i < n; ++i) {
      Xp[i] = Pp.P(i, s);
      Xd[i] = D.P(i, s);
    }
    MatJ L1 = lie_derivative_02(gD, Xp, n);
    MatJ L2 = lie_derivative_02(gPerp, Xd, n);
    Jet t1 = proto, t2 = proto;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        t1 += cp.g_inv(i, j) * L1(i, j);
        t2 += cp.g_inv(i, j) * L2(i, j);
      }
    out.term_D[s] = t1 * (1.0 / D.rank);
    out.term_perp[s] = t2 * (1.0 / (n - D.rank));
    out.phi[s] = out.term_D[s] + out.term_perp[s];
  }

  out.dphi = MatD(n, n, 0.0);
  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double dij = out.phi[j].derivative(i).value();
      scale = std::max(scale, std::abs(dij));
      out.dphi(i, j) = dij;
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.closedness_defect =
          std::max(out.closedness_defect, std::abs(out.dphi(i, j) - out.dphi(j, i)));
  out.closedness_defect /= (1.0 + scale);
  return out;
}

// Deviation of L_Z g^D from a multiple of g^D for Z in D^perp (and of
// L_X g^perp for X in D): the conformality half of criterion (2).
inline double lie_conformality_point(const CurvaturePoint& cp, const ProjectorField& D) {
  using distribution_detail::lie_derivative_02;
  const int n = cp.dim;
  ProjectorField Pp = projector_complement(cp, D);
  double worst = 0.0;
  for (int side = 0; side < 2; ++side) {
    const ProjectorField& tang = side == 0 ? D : Pp;    // restriction lives on tang
    const ProjectorField& act = side == 0 ? Pp : D;     // fields from the other side
    MatJ gR = distribution_detail::restricted_metric(cp, tang);
    auto basis_t = onb_of_distribution(cp, tang);
    auto basis_a = onb_of_distribution(cp, act);
    int d = tang.rank;
    for (const auto& z : basis_a) {
      VecJ Z(n, cp.g(0, 0));
      for (int i = 0; i < n; ++i) {
        Jet v = constant_like(cp.g(0, 0), 0.0);
        for (int j = 0; j < n; ++j) v += act.P(i, j) * constant_like(cp.g(0, 0), z[j]);
        Z[i] = v;
      }
      MatJ L = lie_derivative_02(gR, Z, n);
      MatD M(d, d, 0.0);
      double tr = 0.0, mnorm = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          double s = 0;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s += L(i, j).value() * basis_t[a][i] * basis_t[b][j];
          M(a, b) = s;
          mnorm = std::max(mnorm, std::abs(s));
          if (a == b) tr += s;
        }
      double dev = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          dev = std::max(dev, std::abs(M(a, b) - (a == b ? tr / d : 0.0)));
      worst = std::max(worst, dev / (1.0 + mnorm));
    }
  }
  return worst;
}

// Everything criterion (2) and (3) of the conformal-factor characterization
// need at one point.
struct FactorPoint {
  SecondFundamentalForm iiD, iiPerp;
  PhiForm phi;
  double hflat_closedness = 0.0;  // d((H1+H2) flat), relative
  double lie_deviation = 0.0;
};

inline FactorPoint factor_point(const CurvaturePoint& cp, const ProjectorField& D) {
  FactorPoint out;
  out.iiD = second_fundamental_form_point(cp, D);
  ProjectorField Pp = projector_complement(cp, D);
  out.iiPerp = second_fundamental_form_point(cp, Pp);
  out.phi = phi_form_point(cp, D);
  out.lie_deviation = lie_conformality_point(cp, D);

  const int n = cp.dim;
  VecJ Hsum = out.iiD.H + out.iiPerp.H;
  VecJ hflat = cp.g * Hsum;
  double scale = 0.0, defect = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double dij = hflat[j].derivative(i).value();
      double dji = hflat[i].derivative(j).value();
      scale = std::max(scale, std::abs(dij));
      defect = std::max(defect, std::abs(dij - dji));
    }
  out.hflat_closedness = defect / (1.0 + scale);
  return out;
}

struct FactorCriterion {
  std::string name;
  double worst = 0.0;
  double threshold = 0.0;
  bool pass() const { return worst <= threshold; }
  double margin_ratio() const { return threshold > 0 ? worst / threshold : 0.0; }
};

// Region-level decision for "is D a conformal factor": criterion (3)
// (integrability + umbilicity of both distributions and closedness of
// (H1+H2) flat) decides; criterion (2) (Lie conformality + closedness of
// Phi) cross-validates. Theory says they are equivalent, so disagreement is
// flagged as an inconsistency.
struct FactorDecision {
  bool is_conformal_factor = false;  // criterion (3)
  bool criterion2 = false;
  bool inconsistent = false;
  bool ambiguous = false;
  std::vector<FactorCriterion> criteria;

  const FactorCriterion* find(const std::string& name) const {
    for (const auto& c : criteria)
      if (c.name == name) return &c;
    return nullptr;
  }
};

using ProjectorProvider = std::function<ProjectorField(const CurvaturePoint&)>;

inline FactorDecision conformal_factor_decision_impl(const MetricSpec& m,
                                                     const ProjectorProvider& provider,
                                                     const RegionSpec& region,
                                                     const Thresholds& th, int order) {
  FactorDecision out;
  FactorCriterion intD{"integrability(D)", 0, th.tol}, intP{"integrability(Dperp)", 0, th.tol},
      umbD{"umbilicity(D)", 0, th.tol}, umbP{"umbilicity(Dperp)", 0, th.tol},
      hcl{"closedness((H1+H2)flat)", 0, th.tol}, lie{"lie-conformality", 0, th.tol},
      pcl{"closedness(Phi)", 0, th.tol};
  for (const auto& p : region.sample_points()) {
    CurvaturePoint cp = curvature_point(m, p, order);
    ProjectorField D = provider(cp);
    FactorPoint fp = factor_point(cp, D);
    intD.worst = std::max(intD.worst, fp.iiD.sym_defect);
    intP.worst = std::max(intP.worst, fp.iiPerp.sym_defect);
    umbD.worst = std::max(umbD.worst, fp.iiD.umb_defect);
    umbP.worst = std::max(umbP.worst, fp.iiPerp.umb_defect);
    hcl.worst = std::max(hcl.worst, fp.hflat_closedness);
    lie.worst = std::max(lie.worst, fp.lie_deviation);
    pcl.worst = std::max(pcl.worst, fp.phi.closedness_defect);
  }
  out.criteria = {intD, intP, umbD, umbP, hcl, lie, pcl};
  out.is_conformal_factor =
      intD.pass() && intP.pass() && umbD.pass() && umbP.pass() && hcl.pass();
  out.criterion2 = lie.pass() && pcl.pass() && intD.pass() && intP.pass();
  out.inconsistent = out.is_conformal_factor != out.criterion2;
  for (const auto& c : out.criteria) {
    double r = c.margin_ratio();
    if (r > 1.0 / th.ambiguity_factor && r < th.ambiguity_factor) out.ambiguous = true;
  }
  return out;
}

inline FactorDecision conformal_factor_decision(const DistributionSpec& D, const MetricSpec& m,
                                                const RegionSpec& region, const Thresholds& th = {},
                                                int order = 3) {
  return conformal_factor_decision_impl(
      m, [&D](const CurvaturePoint& cp) { return projector_from_fields(cp, D.fields); }, region,
      th, order);
}

// Umbilicity over a region (with the mean curvature vector at the region
// center). A non-symmetric II (non-integrable D) forces umbilic = false.
struct UmbilicityReport {
  bool umbilic = false;
  VecD H;              // at the region center
  double anisotropy = 0.0;
  double sym_defect = 0.0;
};

inline UmbilicityReport umbilicity_check(const DistributionSpec& D, const MetricSpec& m,
                                         const RegionSpec& region, double tol = 1e-8) {
  UmbilicityReport out;
  for (const auto& p : region.sample_points()) {
    CurvaturePoint cp = curvature_point(m, p, 2);
    auto sff = second_fundamental_form_point(cp, projector_from_fields(cp, D.fields));
    out.anisotropy = std::max(out.anisotropy, sff.umb_defect);
    out.sym_defect = std::max(out.sym_defect, sff.sym_defect);
  }
  CurvaturePoint cc = curvature_point(m, region.center(), 2);
  auto sff = second_fundamental_form_point(cc, projector_from_fields(cc, D.fields));
  out.H = VecD(cc.dim, 0.0);
  for (int i = 0; i < cc.dim; ++i) out.H[i] = sff.H[i].value();
  out.umbilic = out.anisotropy <= tol && out.sym_defect <= tol;
  return out;
}

inline PhiForm phi_form(const DistributionSpec& D, const MetricSpec& m,
                        const std::vector<double>& p, int order = 3) {
  CurvaturePoint cp = curvature_point(m, p, order);
  return phi_form_point(cp, projector_from_fields(cp, D.fields));
}

inline CheckResult closedness_check(const DistributionSpec& D, const MetricSpec& m,
                                    const RegionSpec& region, double tol = 1e-8) {
  CheckResult out;
  out.threshold = tol;
  for (const auto& p : region.sample_points())
    out.worst = std::max(out.worst, phi_form(D, m, p).closedness_defect);
  out.pass = out.worst <= tol;
  return out;
}

inline CheckResult lie_conformality_check(const DistributionSpec& D, const MetricSpec& m,
                                          const RegionSpec& region, double tol = 1e-8) {
  CheckResult out;
  out.threshold = tol;
  for (const auto& p : region.sample_points()) {
    CurvaturePoint cp = curvature_point(m, p, 3);
    out.worst =
        std::max(out.worst, lie_conformality_point(cp, projector_from_fields(cp, D.fields)));
  }
  out.pass = out.worst <= tol;
  return out;
}

// Killing check: (L_X g)_ij = X^k d_k g_ij + g_kj d_i X^k + g_ik d_j X^k.
inline CheckResult killing_check(const MetricSpec& m, const VectorFieldSpec& X,
                                 const RegionSpec& region, double tol = 1e-8) {
  CheckResult out;
  out.threshold = tol;
  for (const auto& p : region.sample_points()) {
    MatJ g = m.jets_at(p, 1);
    VecJ xj = X.jets_at(p, 1);
    int n = m.dim;
    double scale = 0.0, worst = 0.0;
    double gmax = 0.0, xmax = 0.0, dgmax = 0.0, dxmax = 0.0;
    for (int i = 0; i < n; ++i) {
      xmax = std::max(xmax, std::abs(xj[i].value()));
      for (int j = 0; j < n; ++j) {
        gmax = std::max(gmax, std::abs(g(i, j).value()));
        for (int k = 0; k < n; ++k) {
          dgmax = std::max(dgmax, std::abs(g(i, j).derivative(k).value()));
          dxmax = std::max(dxmax, std::abs(xj[i].derivative(k).value()));
        }
      }
    }
    scale = 1.0 + xmax * dgmax + gmax * dxmax;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = 0;
        for (int k = 0; k < n; ++k)
          v += xj[k].value() * g(i, j).derivative(k).value() +
               g(k, j).value() * xj[k].derivative(i).value() +
               g(i, k).value() * xj[k].derivative(j).value();
        worst = std::max(worst, std::abs(v));
      }
    out.worst = std::max(out.worst, worst / scale);
  }
  out.pass = out.worst <= tol;
  return out;
}

// Field-level wrapper around the point computation, for tests and the CLI:
// matrix of g(II(v_a, v_b), N) per unit normal when D^perp has rank 1,
// reported in the Gram-Schmidt ON basis of the spanning fields.
inline SecondFundamentalForm second_fundamental_form(const DistributionSpec& D,
                                                     const MetricSpec& m,
                                                     const std::vector<double>& p, int order = 2) {
  CurvaturePoint cp = curvature_point(m, p, order);
  return second_fundamental_form_point(cp, projector_from_fields(cp, D.fields));
}

}  // namespace lcw
