#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "lcw/bivector.hpp"

namespace lcw {

// All thresholds that influence a verdict, surfaced so margins are auditable.
struct Thresholds {
  double tol = 1e-8;        // integrability / umbilicity / closedness / conformality
  double tau_zero = 1e-9;   // "tensor is zero", relative to 1 + Riemann scale
  double tau_deg = 1e-7;    // eigenvalue degeneracy, relative to max(1, spectral radius)
  double tau_det = 1e-8;    // CY determinant, relative to ||CY||^3
  double eigenflag_tol = 1e-8;
  double ambiguity_factor = 10.0;
};

namespace classify_detail {

// Canonical sign: first component that is clearly nonzero is made positive.
inline void canonical_sign(VecD& v) {
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-10) {
      if (v[i] < 0)
        for (int j = 0; j < v.size(); ++j) v[j] = -v[j];
      return;
    }
  }
}

inline void canonical_sign_jets(VecJ& v) {
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v[i].value()) > 1e-10) {
      if (v[i].value() < 0)
        for (int j = 0; j < v.size(); ++j) v[j] = -v[j];
      return;
    }
  }
}

// Completes a unit vector to an orthonormal basis (Euclidean), v first.
inline MatD complete_onb(const VecD& v) {
  int n = v.size();
  MatD b(n, n, 0.0);
  for (int i = 0; i < n; ++i) b(i, 0) = v[i];
  int skip = 0;
  for (int i = 1; i < n; ++i)
    if (std::abs(v[i]) > std::abs(v[skip])) skip = i;
  int col = 1;
  for (int s = 0; s < n && col < n; ++s) {
    if (s == skip) continue;
    VecD w(n, 0.0);
    w[s] = 1.0;
    for (int c = 0; c < col; ++c) {
      double d = 0;
      for (int i = 0; i < n; ++i) d += w[i] * b(i, c);
      for (int i = 0; i < n; ++i) w[i] -= d * b(i, c);
    }
    double nn = std::sqrt(dot(w, w));
    for (int i = 0; i < n; ++i) b(i, col) = w[i] / nn;
    ++col;
  }
  return b;
}

}  // namespace classify_detail

// ---------------------------------------------------------------------------
// Cotton-York trichotomy (3D)
// ---------------------------------------------------------------------------

enum class CYKind { Zero, Degenerate, Nondegenerate };

inline const char* to_string(CYKind k) {
  switch (k) {
    case CYKind::Zero: return "zero";
    case CYKind::Degenerate: return "degenerate";
    case CYKind::Nondegenerate: return "nondegenerate";
  }
  return "?";
}

struct CYClass {
  CYKind kind = CYKind::Zero;
  std::vector<VecD> eigenflag_dirs;  // exactly 2 when Degenerate
  double norm = 0.0;                 // spectral radius
  double det = 0.0;
  double tau_zero_abs = 0.0;
  double tau_det_abs = 0.0;          // tau_det * norm^3
  std::array<double, 3> spectrum{};
};

// `cy` must be symmetric (and traceless up to tolerance) in an orthonormal
// basis; `tau_zero_abs` is the absolute zero threshold chosen by the caller.
inline CYClass classify_cy(const MatD& cy, double tau_zero_abs, double tau_det = 1e-8) {
  CYClass out;
  auto eig = jacobi_eigen(cy);
  for (int i = 0; i < 3; ++i) out.spectrum[i] = eig.values[i];
  out.norm = std::max(std::abs(eig.values[0]), std::abs(eig.values[2]));
  out.det = eig.values[0] * eig.values[1] * eig.values[2];
  out.tau_zero_abs = tau_zero_abs;
  out.tau_det_abs = tau_det * out.norm * out.norm * out.norm;

  if (out.norm <= tau_zero_abs) {
    out.kind = CYKind::Zero;
    return out;
  }
  if (std::abs(out.det) > out.tau_det_abs) {
    out.kind = CYKind::Nondegenerate;
    return out;
  }
  out.kind = CYKind::Degenerate;
  // Spectrum is {c, -c, 0} up to tolerance: eigenvalue 0 in the middle after
  // sorting. Directions are (u+ +- u-)/sqrt(2).
  VecD um(3, 0.0), up(3, 0.0);
  for (int i = 0; i < 3; ++i) {
    um[i] = eig.vectors(i, 0);
    up[i] = eig.vectors(i, 2);
  }
  VecD d1(3, 0.0), d2(3, 0.0);
  for (int i = 0; i < 3; ++i) {
    d1[i] = (up[i] + um[i]) / std::sqrt(2.0);
    d2[i] = (up[i] - um[i]) / std::sqrt(2.0);
  }
  classify_detail::canonical_sign(d1);
  classify_detail::canonical_sign(d2);
  out.eigenflag_dirs = {d1, d2};
  return out;
}

// Jet-level eigenflag directions of a degenerate CY (frame components).
inline std::pair<VecJ, VecJ> cy_eigenflag_dirs_jets(const MatJ& cy_frame) {
  auto eig = jacobi_eigen(cy_frame);
  VecJ um(3, eig.values[0]), up(3, eig.values[0]);
  for (int i = 0; i < 3; ++i) {
    um[i] = eig.vectors(i, 0);
    up[i] = eig.vectors(i, 2);
  }
  double inv_s2 = 1.0 / std::sqrt(2.0);
  VecJ d1 = (up + um) * inv_s2, d2 = (up - um) * inv_s2;
  // Renormalize (the jet columns are unit only to truncation accuracy).
  Jet n1 = dot(d1, d1), n2 = dot(d2, d2);
  d1 = d1 * (1.0 / sqrt(n1));
  d2 = d2 * (1.0 / sqrt(n2));
  classify_detail::canonical_sign_jets(d1);
  classify_detail::canonical_sign_jets(d2);
  return {d1, d2};
}

// ---------------------------------------------------------------------------
// Weyl taxonomy (4D)
// ---------------------------------------------------------------------------

enum class WeylType { A, B, C, D };

inline const char* to_string(WeylType t) {
  switch (t) {
    case WeylType::A: return "A";
    case WeylType::B: return "B";
    case WeylType::C: return "C";
    case WeylType::D: return "D";
  }
  return "?";
}

struct EigenflagResult {
  bool pass = false;
  double defect = 0.0;  // relative to the operator norm
};

// Tests whether W(v ^ v_perp) stays inside v ^ v_perp. `v` in frame
// components, unit.
inline EigenflagResult eigenflag_test(const MatD& W6, const VecD& v, double tol = 1e-8) {
  MatD onb = classify_detail::complete_onb(v);
  // The three bivectors v ^ w_k are orthonormal in the bivector basis.
  std::array<VecD, 3> basis;
  for (int k = 0; k < 3; ++k) {
    VecD w(4, 0.0);
    for (int i = 0; i < 4; ++i) w[i] = onb(i, k + 1);
    basis[k] = wedge_components(v, w);
  }
  double wnorm = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) wnorm = std::max(wnorm, std::abs(W6(i, j)));
  double defect = 0.0;
  for (int k = 0; k < 3; ++k) {
    VecD Wb = W6 * basis[k];
    for (int l = 0; l < 3; ++l) {
      double c = dot(Wb, basis[l]);
      for (int i = 0; i < 6; ++i) Wb[i] -= c * basis[l][i];
    }
    defect = std::max(defect, std::sqrt(dot(Wb, Wb)));
  }
  double rel = defect / (wnorm > 0 ? wnorm : 1.0);
  return {rel <= tol, rel};
}

struct WeylClass {
  WeylType type = WeylType::D;
  std::array<double, 6> spectrum{};             // ascending
  std::vector<std::pair<double, int>> clusters; // (mean eigenvalue, multiplicity)
  std::vector<VecD> eigenflag_dirs;             // type B: 4 unit vectors (frame comp.)
  std::vector<MatD> planes;                     // type C: two 4x4 projectors (frame comp.)
  bool ambiguous = false;
  double min_gap_ratio = std::numeric_limits<double>::infinity();  // gap / tau_deg_abs
  double norm = 0.0;
  double tau_zero_abs = 0.0;
  double tau_deg_abs = 0.0;
};

namespace classify_detail {

// Simple bivectors in the pencil a*U1 + b*U2 via the quadratic Plucker form.
// Returns 0, 1 or 2 unit 6-vectors (value level). The discriminant is solved
// analytically; a pencil that is entirely simple (all coefficients ~ 0) is
// reported empty so the caller falls back to type A.
inline std::vector<VecD> simple_pencil_members(const VecD& U1, const VecD& U2, double scale) {
  double A = plucker_defect(U1);
  double B = plucker_polar(U1, U2);
  double C = plucker_defect(U2);
  double eps = 1e-12 * scale;
  std::vector<VecD> out;
  auto emit = [&](double a, double b) {
    VecD c(6, 0.0);
    for (int i = 0; i < 6; ++i) c[i] = a * U1[i] + b * U2[i];
    double n = std::sqrt(dot(c, c));
    if (n < 1e-12) return;
    for (int i = 0; i < 6; ++i) c[i] /= n;
    out.push_back(c);
  };
  if (std::abs(A) < eps && std::abs(B) < eps && std::abs(C) < eps) return {};
  bool swap = std::abs(A) < std::abs(C);
  double qa = swap ? C : A, qb = B, qc = swap ? A : C;
  // qa rho^2 + qb rho + qc = 0, bivector = rho*Ulead + Uother
  if (std::abs(qa) < eps) {
    // Linear pencil: one root, plus the leading generator itself.
    if (std::abs(qb) >= eps) {
      double rho = -qc / qb;
      if (swap) emit(1.0, rho); else emit(rho, 1.0);
    }
    if (swap) emit(0.0, 1.0); else emit(1.0, 0.0);
    return out;
  }
  double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0) {
    if (disc > -1e-10 * scale * scale) disc = 0.0;  // grazing double root
    else return {};
  }
  double sq = std::sqrt(disc);
  // Citardauq pairing for numerical stability.
  double q = -0.5 * (qb + (qb >= 0 ? sq : -sq));
  double r1 = q / qa;
  double r2 = (std::abs(q) > eps) ? qc / q : r1;
  for (double rho : {r1, r2}) {
    if (swap) emit(1.0, rho); else emit(rho, 1.0);
  }
  return out;
}

// Intersection direction of two 2-planes given by projectors; nullopt when
// the top eigenvalue of P+Q is not ~2.
inline std::optional<VecD> plane_intersection(const MatD& P, const MatD& Q, double tol = 1e-6) {
  auto eig = jacobi_eigen(P + Q);
  if (std::abs(eig.values[3] - 2.0) > tol) return std::nullopt;
  VecD v(4, 0.0);
  for (int i = 0; i < 4; ++i) v[i] = eig.vectors(i, 3);
  canonical_sign(v);
  return v;
}

}  // namespace classify_detail

// Classifies a Weyl operator matrix (orthonormal bivector basis) by its
// eigenflag structure. `tau_zero_abs` is the absolute zero threshold.
inline WeylClass classify_weyl(const MatD& W6, double tau_zero_abs, const Thresholds& th = {}) {
  using namespace classify_detail;
  WeylClass out;
  out.tau_zero_abs = tau_zero_abs;

  auto eig = jacobi_eigen(W6);
  for (int i = 0; i < 6; ++i) out.spectrum[i] = eig.values[i];
  out.norm = std::max(std::abs(eig.values[0]), std::abs(eig.values[5]));
  out.tau_deg_abs = th.tau_deg * std::max(1.0, out.norm);

  if (out.norm <= tau_zero_abs) {
    out.type = WeylType::D;
    return out;
  }

  // Cluster the ascending spectrum.
  std::vector<std::pair<double, int>> clusters;
  std::vector<std::vector<int>> members;
  for (int i = 0; i < 6; ++i) {
    if (!clusters.empty() && eig.values[i] - clusters.back().first <= out.tau_deg_abs) {
      auto& [mean, cnt] = clusters.back();
      mean = (mean * cnt + eig.values[i]) / (cnt + 1);
      ++cnt;
      members.back().push_back(i);
    } else {
      clusters.push_back({eig.values[i], 1});
      members.push_back({i});
    }
  }
  out.clusters = clusters;
  for (std::size_t c = 1; c < clusters.size(); ++c) {
    double gap = clusters[c].first - clusters[c - 1].first;
    out.min_gap_ratio = std::min(out.min_gap_ratio, gap / out.tau_deg_abs);
  }
  out.ambiguous = out.min_gap_ratio < th.ambiguity_factor;

  auto column = [&](int j) {
    VecD u(6, 0.0);
    for (int i = 0; i < 6; ++i) u[i] = eig.vectors(i, j);
    return u;
  };

  std::vector<int> sizes;
  for (auto& c : clusters) sizes.push_back(c.second);

  if (sizes == std::vector<int>{2, 2, 2}) {
    // Candidate type B: each eigenspace must contribute a pair of simple
    // bivectors whose planes intersect pairwise in 4 common directions.
    std::array<std::vector<VecD>, 3> simples;
    for (int c = 0; c < 3; ++c) {
      simples[c] = simple_pencil_members(column(members[c][0]), column(members[c][1]), out.norm);
      if (simples[c].size() != 2) {
        out.type = WeylType::A;
        return out;
      }
    }
    std::vector<VecD> dirs;
    for (const auto& s1 : simples[0])
      for (const auto& s2 : simples[1]) {
        auto d = plane_intersection(plane_projector(s1), plane_projector(s2));
        if (!d) continue;
        bool dup = false;
        for (const auto& e : dirs)
          if (std::abs(dot(*d, e)) > 1.0 - 1e-6) dup = true;
        if (!dup) dirs.push_back(*d);
      }
    if (dirs.size() != 4) {
      out.type = WeylType::A;
      return out;
    }
    for (const auto& d : dirs)
      if (!eigenflag_test(W6, d, th.eigenflag_tol).pass) {
        out.type = WeylType::A;
        return out;
      }
    out.type = WeylType::B;
    out.eigenflag_dirs = dirs;
    return out;
  }

  if ((sizes == std::vector<int>{2, 4}) || (sizes == std::vector<int>{4, 2})) {
    int small = sizes[0] == 2 ? 0 : 1;
    auto simples = simple_pencil_members(column(members[small][0]), column(members[small][1]),
                                         out.norm);
    if (simples.size() != 2) {
      out.type = WeylType::A;
      return out;
    }
    MatD P1 = plane_projector(simples[0]);
    MatD P2 = plane_projector(simples[1]);
    MatD sum = P1 + P2;
    double dev = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) dev = std::max(dev, std::abs(sum(i, j) - (i == j ? 1.0 : 0.0)));
    if (dev > 1e-6) {
      out.type = WeylType::A;
      return out;
    }
    // Spot-verify the eigenflag property inside each plane.
    for (const MatD& P : {P1, P2}) {
      auto pe = jacobi_eigen(P);
      for (int which : {2, 3}) {
        VecD v(4, 0.0);
        for (int i = 0; i < 4; ++i) v[i] = pe.vectors(i, which);
        if (!eigenflag_test(W6, v, th.eigenflag_tol).pass) {
          out.type = WeylType::A;
          return out;
        }
      }
    }
    out.type = WeylType::C;
    out.planes = {P1, P2};
    return out;
  }

  out.type = WeylType::A;
  return out;
}

// Jet-level eigenflag structure for the decide procedures. Value-level
// classification must already have determined the type; throws if the jet
// refinement cannot reproduce it (degenerate margins).
struct WeylJetStructure {
  WeylType type = WeylType::A;
  std::vector<VecJ> dirs;    // type B: 4 unit direction fields (frame comp.)
  std::vector<MatJ> planes;  // type C: 2 projector fields (frame comp.)
};

inline WeylJetStructure weyl_jet_structure(const WeylOperator& W, const WeylClass& cls) {
  WeylJetStructure out;
  out.type = cls.type;
  if (cls.type != WeylType::B && cls.type != WeylType::C) return out;

  auto eig = jacobi_eigen(W.matrix);
  // Group jet columns by the value-level clusters.
  std::vector<std::vector<int>> members;
  {
    int i = 0;
    for (const auto& [mean, cnt] : cls.clusters) {
      (void)mean;
      std::vector<int> m;
      for (int k = 0; k < cnt; ++k) m.push_back(i++);
      members.push_back(m);
    }
  }

  auto column = [&](int j) {
    VecJ u(6, eig.values[0]);
    for (int i = 0; i < 6; ++i) u[i] = eig.vectors(i, j);
    return u;
  };

  // Simple bivectors of a 2-dim eigenspace, as jets.
  auto pencil_jets = [&](const VecJ& U1, const VecJ& U2) {
    Jet A = plucker_defect(U1);
    Jet B = plucker_polar(U1, U2);
    Jet C = plucker_defect(U2);
    double eps = 1e-10 * std::max(1.0, cls.norm);
    std::vector<VecJ> roots;
    auto emit = [&](const Jet& a, const Jet& b) {
      VecJ c = U1 * a + U2 * b;
      Jet n2 = dot(c, c);
      if (n2.value() < 1e-16) return;
      c = c * (1.0 / sqrt(n2));
      roots.push_back(c);
    };
    bool swap = std::abs(A.value()) < std::abs(C.value());
    const Jet& qa = swap ? C : A;
    const Jet& qc = swap ? A : C;
    Jet one = constant_like(A, 1.0);
    if (std::abs(qa.value()) < eps) {
      if (std::abs(B.value()) >= eps) {
        Jet rho = -qc / B;
        if (swap) emit(one, rho); else emit(rho, one);
      }
      if (swap) emit(constant_like(A, 0.0), one); else emit(one, constant_like(A, 0.0));
      return roots;
    }
    Jet disc = B * B - qa * qc * 4.0;
    if (disc.value() <= 0) throw SingularPointError("degenerate Plucker pencil");
    Jet sq = sqrt(disc);
    Jet q = (B.value() >= 0 ? B + sq : B - sq) * (-0.5);
    Jet r1 = q / qa;
    Jet r2 = (std::abs(q.value()) > eps) ? qc / q : r1;
    if (swap) {
      emit(one, r1);
      emit(one, r2);
    } else {
      emit(r1, one);
      emit(r2, one);
    }
    return roots;
  };

  if (cls.type == WeylType::C) {
    int small = members[0].size() == 2 ? 0 : 1;
    auto simples = pencil_jets(column(members[small][0]), column(members[small][1]));
    if (simples.size() != 2) throw SingularPointError("type C jet refinement failed");
    out.planes = {plane_projector(simples[0]), plane_projector(simples[1])};
    return out;
  }

  // Type B.
  std::array<std::vector<VecJ>, 2> simples;
  for (int c = 0; c < 2; ++c) {
    simples[c] = pencil_jets(column(members[c][0]), column(members[c][1]));
    if (simples[c].size() != 2) throw SingularPointError("type B jet refinement failed");
  }
  for (const auto& s1 : simples[0])
    for (const auto& s2 : simples[1]) {
      MatJ M = plane_projector(s1) + plane_projector(s2);
      auto pe = jacobi_eigen(M);
      if (std::abs(value_of(pe.values[3]) - 2.0) > 1e-6) continue;
      VecJ v(4, pe.values[3]);
      for (int i = 0; i < 4; ++i) v[i] = pe.vectors(i, 3);
      Jet n2 = dot(v, v);
      v = v * (1.0 / sqrt(n2));
      classify_detail::canonical_sign_jets(v);
      bool dup = false;
      for (const auto& e : out.dirs) {
        double d = 0;
        for (int i = 0; i < 4; ++i) d += v[i].value() * e[i].value();
        if (std::abs(d) > 1.0 - 1e-6) dup = true;
      }
      if (!dup) out.dirs.push_back(v);
    }
  if (out.dirs.size() != 4) throw SingularPointError("type B jet refinement found != 4 directions");
  return out;
}

}  // namespace lcw
