#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "lcw/killing.hpp"

namespace lcw {

namespace decide_detail {

template <class F>
void parallel_for(int n, F&& body) {
  unsigned hw = std::thread::hardware_concurrency();
  int workers = std::max(1u, hw);
  if (workers == 1 || n < 4) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        body(i);
      }
    });
  for (auto& t : pool) t.join();
}

}  // namespace decide_detail

enum class RegionOutcome { LcwExists, ConformallyFlat, NoLcw, Ambiguous };

inline const char* to_string(RegionOutcome o) {
  switch (o) {
    case RegionOutcome::LcwExists: return "LCW-exists";
    case RegionOutcome::ConformallyFlat: return "conformally-flat";
    case RegionOutcome::NoLcw: return "no-LCW";
    case RegionOutcome::Ambiguous: return "ambiguous";
  }
  return "?";
}

struct Reason {
  std::string rule;
  std::string detail;
};

struct PointRecord {
  std::vector<double> p;
  std::string cls;
  std::vector<double> spectrum;
  bool ambiguous = false;
  double min_gap_ratio = std::numeric_limits<double>::infinity();
};

struct DirectionReport {
  std::string label;
  VecD dir;  // coordinate components at the base point, unit for g
  FactorDecision decision;
  double parallel_defect = -1.0;  // nabla of the unit field after the Phi-recovered rescale
};

struct SweepSurvivor {
  double angle = 0.0;   // in [0, pi)
  double defect = 0.0;  // worst over samples at the refined angle
  bool factor_pass = false;
};

struct SweepResult {
  int plane_index = -1;
  std::array<int, 2> seed_axes{};  // coordinate axes used to orient the plane basis
  std::vector<SweepSurvivor> survivors;
  bool all_angles = false;
  int n_angles = 0;
};

struct ProductBranchReport {
  bool attempted = false;
  bool coordinate_aligned = false;
  std::array<std::array<int, 2>, 2> axes{};
  double path_independence = 0.0;
  double cross_independence = 0.0;
  std::array<KillingVerdict, 2> factor_verdict{KillingVerdict::Inapplicable,
                                               KillingVerdict::Inapplicable};
  std::array<double, 2> factor_residual{0.0, 0.0};
  bool lcw = false;
};

struct Verdict {
  int dim = 0;
  RegionOutcome outcome = RegionOutcome::Ambiguous;
  bool ambiguous = false;
  Thresholds thresholds;
  std::vector<PointRecord> per_point;
  std::vector<Reason> reasons;
  std::vector<DirectionReport> directions;
  std::vector<std::string> lcw_directions;
  std::vector<SweepResult> sweeps;
  ProductBranchReport product;
  std::map<std::string, int> class_counts;

  int exit_code() const { return (outcome == RegionOutcome::Ambiguous || ambiguous) ? 2 : 0; }

  // Coordinate-axis labels first, in variable order, then everything else.
  void sort_directions(const std::vector<std::string>& var_names) {
    auto key = [&](const std::string& l) {
      for (std::size_t i = 0; i < var_names.size(); ++i)
        if (l == "d" + var_names[i]) return static_cast<int>(i);
      return static_cast<int>(var_names.size());
    };
    std::stable_sort(lcw_directions.begin(), lcw_directions.end(),
                     [&](const std::string& a, const std::string& b) {
                       int ka = key(a), kb = key(b);
                       return ka != kb ? ka < kb : a < b;
                     });
  }
};

namespace decide_detail {

inline MatJ to_frame_02(const MatJ& T, const Frame& f) {
  return f.e.transposed() * T * f.e;
}

inline VecJ frame_to_coords(const Frame& f, const VecJ& vf) { return f.e * vf; }

// Label a unit direction by the coordinate axis it is parallel to, if any.
inline std::string direction_label(const VecD& dir, const MetricSpec& m, const MatD& gval,
                                   double angle_tol = 1e-6) {
  for (int s = 0; s < m.dim; ++s) {
    double gs = std::sqrt(gval(s, s));
    double cosang = 0.0;
    for (int i = 0; i < m.dim; ++i)
      for (int j = 0; j < m.dim; ++j)
        cosang += gval(i, j) * dir[i] * ((j == s ? 1.0 : 0.0) / gs);
    if (std::abs(std::abs(cosang) - 1.0) <= angle_tol) return "d" + m.var_names[s];
  }
  std::string out = "(";
  char buf[32];
  for (int i = 0; i < m.dim; ++i) {
    std::snprintf(buf, sizeof buf, "%.6g", dir[i]);
    out += buf;
    if (i + 1 < m.dim) out += ", ";
  }
  return out + ")";
}

inline double euclid_cos(const VecD& a, const VecD& b) {
  double d = 0, na = 0, nb = 0;
  for (int i = 0; i < a.size(); ++i) {
    d += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return d / std::sqrt(na * nb);
}

// Reorders and sign-aligns a set of candidate direction fields so slot k
// follows the parent's slot k (greedy by |cos|).
inline void align_dirs_to(const std::vector<VecJ>& parent, std::vector<VecJ>& child) {
  const int K = static_cast<int>(parent.size());
  std::vector<VecJ> out;
  out.reserve(K);
  std::vector<bool> used(child.size(), false);
  for (int r = 0; r < K; ++r) {
    VecD pv(parent[r].size(), 0.0);
    for (int i = 0; i < pv.size(); ++i) pv[i] = parent[r][i].value();
    double best = -1;
    int bi = -1;
    for (int c = 0; c < static_cast<int>(child.size()); ++c) {
      if (used[c]) continue;
      VecD cv(pv.size(), 0.0);
      for (int i = 0; i < cv.size(); ++i) cv[i] = child[c][i].value();
      double a = std::abs(euclid_cos(pv, cv));
      if (a > best) {
        best = a;
        bi = c;
      }
    }
    used[bi] = true;
    VecD cv(pv.size(), 0.0);
    for (int i = 0; i < cv.size(); ++i) cv[i] = child[bi][i].value();
    if (euclid_cos(pv, cv) < 0) out.push_back(child[bi] * (-1.0));
    else out.push_back(child[bi]);
  }
  child = std::move(out);
}

// Same for plane projectors, matched by the Frobenius distance of the values.
inline void align_planes_to(const std::vector<MatJ>& parent, std::vector<MatJ>& child) {
  const int K = static_cast<int>(parent.size());
  std::vector<MatJ> out;
  out.reserve(K);
  std::vector<bool> used(child.size(), false);
  for (int r = 0; r < K; ++r) {
    double best = std::numeric_limits<double>::infinity();
    int bi = -1;
    for (int c = 0; c < static_cast<int>(child.size()); ++c) {
      if (used[c]) continue;
      double d = 0;
      for (int i = 0; i < parent[r].rows(); ++i)
        for (int j = 0; j < parent[r].cols(); ++j)
          d = std::max(d, std::abs(parent[r](i, j).value() - child[c](i, j).value()));
      if (d < best) {
        best = d;
        bi = c;
      }
    }
    used[bi] = true;
    out.push_back(child[bi]);
  }
  child = std::move(out);
}

// Aligns per-sample direction (or plane) sets over the region: breadth-first
// propagation from the grid node nearest the center along grid edges, each
// node matched against its parent; quasi-random extras match their nearest
// grid node. Eigenvectors are sign-ambiguous pointwise, so signs flip to
// maximize dot products along the way.
template <class Entity, class MatchFn>
std::vector<int> propagate_matching(const RegionSpec& region,
                                    const std::vector<std::vector<double>>& pts,
                                    std::vector<std::vector<Entity>>& sets, MatchFn&& match) {
  const int N = static_cast<int>(pts.size());
  const int G = region.grid_count();
  std::vector<double> center = region.center();
  int start = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < G; ++i) {
    double d2 = 0;
    for (std::size_t d = 0; d < center.size(); ++d)
      d2 += (pts[i][d] - center[d]) * (pts[i][d] - center[d]);
    if (d2 < best) {
      best = d2;
      start = i;
    }
  }
  std::vector<std::vector<int>> adj(G);
  for (auto [a, b] : region.grid_edges()) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> order{start};
  std::vector<int> parent(N, -1);
  std::vector<bool> seen(G, false);
  seen[start] = true;
  for (std::size_t q = 0; q < order.size(); ++q) {
    int u = order[q];
    for (int w : adj[u]) {
      if (seen[w]) continue;
      seen[w] = true;
      parent[w] = u;
      order.push_back(w);
    }
  }
  for (int i = G; i < N; ++i) {
    double bd = std::numeric_limits<double>::infinity();
    for (int g = 0; g < G; ++g) {
      double d2 = 0;
      for (std::size_t d = 0; d < center.size(); ++d)
        d2 += (pts[i][d] - pts[g][d]) * (pts[i][d] - pts[g][d]);
      if (d2 < bd) {
        bd = d2;
        parent[i] = g;
      }
    }
    order.push_back(i);
  }
  for (int i : order) {
    if (parent[i] < 0) continue;
    match(sets[parent[i]], sets[i]);
  }
  return order;
}

// Residual of nabla-tilde(X/|X|) = 0 for the conformal metric e^alpha g whose
// differential d(alpha) = -Phi; only derivatives of alpha enter.
inline double parallel_defect_from_phi(const CurvaturePoint& cp, const VecJ& v,
                                       const VecJ& phi) {
  const int n = cp.dim;
  VecD a(n, 0.0);  // d(alpha) = -Phi, values
  for (int i = 0; i < n; ++i) a[i] = -phi[i].value();

  // Unit field for g-tilde with alpha(p) = 0: X = v / sqrt(g(v,v)), scaled by
  // e^{-alpha/2}; only first derivatives of the scale matter.
  Jet n2 = dot_g(cp.g, v, v);
  VecJ X = v * (1.0 / sqrt(n2));

  MatD gval(n, n, 0.0), ginvval(n, n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      gval(i, j) = cp.g(i, j).value();
      ginvval(i, j) = cp.g_inv(i, j).value();
    }
  VecD araised(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) araised[i] += ginvval(i, j) * a[j];

  double defect = 0.0, scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      // Gamma-tilde^k_im = Gamma + (d^k_i a_m + d^k_m a_i - g_im a^k)/2
      double v1 = X[k].derivative(i).value() - 0.5 * a[i] * X[k].value();
      for (int mm = 0; mm < n; ++mm) {
        double gt = cp.gamma[k](i, mm).value() +
                    0.5 * ((k == i ? a[mm] : 0.0) + (k == mm ? a[i] : 0.0) -
                           gval(i, mm) * araised[k]);
        v1 += gt * X[mm].value();
        scale = std::max(scale, std::abs(gt));
      }
      defect = std::max(defect, std::abs(v1));
    }
  return defect / (1.0 + scale);
}

struct CriteriaAccumulator {
  FactorDecision out;
  bool started = false;

  void init(const Thresholds& th) {
    out.criteria = {{"integrability(D)", 0, th.tol},     {"integrability(Dperp)", 0, th.tol},
                    {"umbilicity(D)", 0, th.tol},        {"umbilicity(Dperp)", 0, th.tol},
                    {"closedness((H1+H2)flat)", 0, th.tol}, {"lie-conformality", 0, th.tol},
                    {"closedness(Phi)", 0, th.tol}};
    started = true;
  }
  void add(const FactorPoint& fp) {
    out.criteria[0].worst = std::max(out.criteria[0].worst, fp.iiD.sym_defect);
    out.criteria[1].worst = std::max(out.criteria[1].worst, fp.iiPerp.sym_defect);
    out.criteria[2].worst = std::max(out.criteria[2].worst, fp.iiD.umb_defect);
    out.criteria[3].worst = std::max(out.criteria[3].worst, fp.iiPerp.umb_defect);
    out.criteria[4].worst = std::max(out.criteria[4].worst, fp.hflat_closedness);
    out.criteria[5].worst = std::max(out.criteria[5].worst, fp.lie_deviation);
    out.criteria[6].worst = std::max(out.criteria[6].worst, fp.phi.closedness_defect);
  }
  FactorDecision finish(const Thresholds& th) {
    auto& c = out.criteria;
    out.is_conformal_factor =
        c[0].pass() && c[1].pass() && c[2].pass() && c[3].pass() && c[4].pass();
    out.criterion2 = c[0].pass() && c[1].pass() && c[5].pass() && c[6].pass();
    out.inconsistent = out.is_conformal_factor != out.criterion2;
    for (const auto& cr : c) {
      double r = cr.margin_ratio();
      if (r > 1.0 / th.ambiguity_factor && r < th.ambiguity_factor) out.ambiguous = true;
    }
    return out;
  }
};

}  // namespace decide_detail

// ---------------------------------------------------------------------------
// Three dimensions
// ---------------------------------------------------------------------------

inline Verdict decide_lcw_3d(const MetricSpec& m, const RegionSpec& region,
                             const Thresholds& th = {}) {
  using namespace decide_detail;
  if (m.dim != 3) throw std::invalid_argument("decide_lcw_3d requires dim = 3");
  Verdict v;
  v.dim = 3;
  v.thresholds = th;

  auto pts = region.sample_points();
  const int N = static_cast<int>(pts.size());
  const int order = 5;

  struct PerPoint {
    CYClass cls;
    std::vector<VecJ> dirs;  // coordinate jets (degenerate case)
    CurvaturePoint cp;
    VecD base_dir_values[2];
  };
  std::vector<PerPoint> data(N);
  std::vector<std::string> errors(N);

  parallel_for(N, [&](int i) {
    try {
      PerPoint d;
      d.cp = curvature_point(m, pts[i], order);
      Frame f = orthonormal_frame(d.cp);
      MatJ cyf = to_frame_02(d.cp.cy, f);
      MatD cyv(3, 3, 0.0);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) cyv(a, b) = cyf(a, b).value();
      double tau_zero_abs = th.tau_zero * (1.0 + d.cp.riemann_scale());
      d.cls = classify_cy(cyv, tau_zero_abs, th.tau_det);
      if (d.cls.kind == CYKind::Degenerate) {
        auto [d1, d2] = cy_eigenflag_dirs_jets(cyf);
        d.dirs = {frame_to_coords(f, d1), frame_to_coords(f, d2)};
      }
      data[i] = std::move(d);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (int i = 0; i < N; ++i)
    if (!errors[i].empty()) throw SingularPointError("sample evaluation failed: " + errors[i]);

  int n_zero = 0, n_deg = 0, n_nondeg = 0;
  for (int i = 0; i < N; ++i) {
    const auto& c = data[i].cls;
    PointRecord rec;
    rec.p = pts[i];
    rec.cls = to_string(c.kind);
    rec.spectrum = {c.spectrum[0], c.spectrum[1], c.spectrum[2]};
    double rz = c.norm / c.tau_zero_abs;
    rec.min_gap_ratio = rz;
    if (rz > 1.0 / th.ambiguity_factor && rz < th.ambiguity_factor) rec.ambiguous = true;
    if (c.kind != CYKind::Zero && c.tau_det_abs > 0) {
      double rd = std::abs(c.det) / c.tau_det_abs;
      if (rd > 1.0 / th.ambiguity_factor && rd < th.ambiguity_factor) rec.ambiguous = true;
    }
    v.ambiguous = v.ambiguous || rec.ambiguous;
    v.class_counts[rec.cls]++;
    v.per_point.push_back(std::move(rec));
    n_zero += c.kind == CYKind::Zero;
    n_deg += c.kind == CYKind::Degenerate;
    n_nondeg += c.kind == CYKind::Nondegenerate;
  }

  if (n_nondeg > 0) {
    v.outcome = RegionOutcome::NoLcw;
    v.reasons.push_back({"cy-nondegenerate", "det CY != 0 at " + std::to_string(n_nondeg) +
                                                 " of " + std::to_string(N) + " samples"});
    return v;
  }
  if (n_deg == 0) {
    v.outcome = RegionOutcome::ConformallyFlat;
    v.reasons.push_back({"cy-zero", "CY vanishes at every sample; LCWs as in flat space"});
    return v;
  }
  if (n_zero > 0) {
    v.outcome = RegionOutcome::Ambiguous;
    v.reasons.push_back({"cy-mixed", "region mixes CY = 0 (" + std::to_string(n_zero) +
                                         ") and degenerate (" + std::to_string(n_deg) +
                                         ") samples; partition required"});
    return v;
  }

  // Uniformly degenerate: two eigenflag direction fields, sign- and
  // slot-matched over the grid from the node nearest the center.
  v.reasons.push_back({"cy-degenerate", "CY nonzero with det CY = 0 at all samples"});
  std::vector<std::vector<VecJ>> dirsets(N);
  for (int i = 0; i < N; ++i) dirsets[i] = data[i].dirs;
  auto bfs = propagate_matching(region, pts, dirsets, align_dirs_to);
  int root = bfs[0];
  std::vector<VecD> ref;
  for (const auto& dj : dirsets[root]) {
    VecD r(3, 0.0);
    for (int i = 0; i < 3; ++i) r[i] = dj[i].value();
    ref.push_back(r);
  }
  MatD gval0(3, 3, 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) gval0(i, j) = data[root].cp.g(i, j).value();

  struct DirSample {
    std::array<FactorPoint, 2> fp;
    std::array<double, 2> par{};
  };
  std::vector<DirSample> dsamples(N);
  parallel_for(N, [&](int i) {
    for (int k = 0; k < 2; ++k) {
      ProjectorField D = projector_from_direction(data[i].cp, dirsets[i][k]);
      dsamples[i].fp[k] = factor_point(data[i].cp, D);
      dsamples[i].par[k] =
          parallel_defect_from_phi(data[i].cp, dirsets[i][k], dsamples[i].fp[k].phi.phi);
    }
  });
  std::array<CriteriaAccumulator, 2> acc;
  acc[0].init(th);
  acc[1].init(th);
  for (int i = 0; i < N; ++i)
    for (int k = 0; k < 2; ++k) acc[k].add(dsamples[i].fp[k]);
  for (int k = 0; k < 2; ++k) {
    DirectionReport dr;
    dr.dir = ref[k];
    dr.label = direction_label(ref[k], m, gval0);
    dr.decision = acc[k].finish(th);
    if (dr.decision.is_conformal_factor) {
      double worst = 0.0;
      for (int i = 0; i < N; ++i) worst = std::max(worst, dsamples[i].par[k]);
      dr.parallel_defect = worst;
      v.lcw_directions.push_back(dr.label);
    }
    v.ambiguous = v.ambiguous || dr.decision.ambiguous;
    if (dr.decision.inconsistent)
      v.reasons.push_back({"criteria-inconsistency",
                           "criteria (2) and (3) disagree for direction " + dr.label});
    v.directions.push_back(std::move(dr));
  }

  if (!v.lcw_directions.empty()) {
    v.outcome = RegionOutcome::LcwExists;
    v.reasons.push_back({"factor-found", "a CY eigenflag direction is a conformal factor"});
  } else {
    v.outcome = RegionOutcome::NoLcw;
    v.reasons.push_back({"factor-none", "neither CY eigenflag direction is a conformal factor"});
  }
  v.sort_directions(m.var_names);
  return v;
}

// ---------------------------------------------------------------------------
// Direction sweep inside a type-C eigenflag plane
// ---------------------------------------------------------------------------

// Orthonormal, orientation-consistent basis of a plane distribution from its
// projector jets, seeded by two fixed coordinate axes.
inline std::pair<VecJ, VecJ> plane_basis_jets(const CurvaturePoint& cp, const MatJ& proj,
                                              const std::array<int, 2>& seed_axes) {
  const int n = cp.dim;
  Jet proto = constant_like(cp.g(0, 0), 0.0);
  auto project_axis = [&](int s) {
    VecJ v(n, proto);
    for (int i = 0; i < n; ++i) v[i] = proj(i, s);
    return v;
  };
  VecJ u1 = project_axis(seed_axes[0]);
  Jet n1 = dot_g(cp.g, u1, u1);
  if (n1.value() < 1e-18) throw SingularPointError("plane basis seed degenerated");
  u1 = u1 * (1.0 / sqrt(n1));
  VecJ u2 = project_axis(seed_axes[1]);
  Jet c = dot_g(cp.g, u2, u1);
  u2 = u2 - u1 * c;
  Jet n2 = dot_g(cp.g, u2, u2);
  if (n2.value() < 1e-18) throw SingularPointError("plane basis seed degenerated");
  u2 = u2 * (1.0 / sqrt(n2));
  if (u1[seed_axes[0]].value() < 0) u1 = u1 * (-1.0);
  if (u2[seed_axes[1]].value() < 0) u2 = u2 * (-1.0);
  return {u1, u2};
}

// Per-point provider of plane bases for the sweep and the plane decisions.
using PlaneProvider = std::function<MatJ(const CurvaturePoint&)>;  // projector jets, coords

struct SweepOptions {
  int n_angles = 180;
  int refine_iters = 60;
};

// Core sweep over precomputed per-sample curvature data and plane bases.
inline SweepResult direction_sweep_core(const std::vector<const CurvaturePoint*>& cps,
                                        const std::vector<std::pair<VecJ, VecJ>>& bases,
                                        const std::array<int, 2>& seed_axes, const Thresholds& th,
                                        const SweepOptions& opt) {
  SweepResult out;
  out.seed_axes = seed_axes;
  out.n_angles = opt.n_angles;
  const int N = static_cast<int>(cps.size());

  auto defect_at = [&](int i, double theta) {
    const auto& [u1, u2] = bases[i];
    VecJ Z = u1 * std::cos(theta) + u2 * std::sin(theta);
    ProjectorField PZ = projector_from_direction(*cps[i], Z);
    ProjectorField D = projector_complement(*cps[i], PZ);
    auto sff = second_fundamental_form_point(*cps[i], D);
    return std::max(sff.sym_defect, sff.umb_defect);
  };

  // Filter a uniform angle grid sample by sample; most angles die at the
  // first sample, so later samples only evaluate the shortlist.
  std::vector<double> angles(opt.n_angles);
  std::vector<char> alive(opt.n_angles, 1);
  std::vector<double> worst(opt.n_angles, 0.0);
  for (int k = 0; k < opt.n_angles; ++k) angles[k] = M_PI * k / opt.n_angles;
  for (int i = 0; i < N; ++i) {
    std::vector<int> idx;
    for (int k = 0; k < opt.n_angles; ++k)
      if (alive[k]) idx.push_back(k);
    if (idx.empty()) break;
    std::vector<double> d(idx.size());
    decide_detail::parallel_for(static_cast<int>(idx.size()),
                                [&](int j) { d[j] = defect_at(i, angles[idx[j]]); });
    for (std::size_t j = 0; j < idx.size(); ++j) {
      worst[idx[j]] = std::max(worst[idx[j]], d[j]);
      if (d[j] > th.tol) alive[idx[j]] = 0;
    }
  }

  int n_alive = 0;
  for (char a : alive) n_alive += a;
  if (n_alive == opt.n_angles) {
    out.all_angles = true;
    return out;
  }
  if (n_alive == 0) return out;

  // Group surviving angles into circular clusters and refine each minimum by
  // golden-section search. The search runs against the samples that constrain
  // the angle hardest (steepest defect growth half a step away); the refined
  // angle is then verified against every sample.
  auto worst_defect = [&](double theta) {
    std::vector<double> d(N);
    decide_detail::parallel_for(N, [&](int i) { d[i] = defect_at(i, theta); });
    return *std::max_element(d.begin(), d.end());
  };
  auto critical_subset = [&](double theta_probe) {
    std::vector<std::pair<double, int>> scored(N);
    decide_detail::parallel_for(N, [&](int i) { scored[i] = {defect_at(i, theta_probe), i}; });
    std::sort(scored.begin(), scored.end(), std::greater<>());
    std::vector<int> subset;
    for (int s = 0; s < std::min(N, 8); ++s) subset.push_back(scored[s].second);
    return subset;
  };
  std::vector<std::pair<int, int>> clusters;  // [first, last] inclusive, circular
  {
    std::vector<int> live;
    for (int k = 0; k < opt.n_angles; ++k)
      if (alive[k]) live.push_back(k);
    int start = 0;
    // rotate so the list does not wrap inside a cluster
    while (start < static_cast<int>(live.size()) &&
           alive[(live[start] + opt.n_angles - 1) % opt.n_angles])
      ++start;
    if (start == static_cast<int>(live.size())) start = 0;
    std::rotate(live.begin(), live.begin() + start, live.end());
    for (std::size_t a = 0; a < live.size();) {
      std::size_t b = a;
      while (b + 1 < live.size() &&
             (live[b + 1] - live[b] + opt.n_angles) % opt.n_angles == 1)
        ++b;
      clusters.push_back({live[a], live[b]});
      a = b + 1;
    }
  }
  double step = M_PI / opt.n_angles;
  for (auto [ka, kb] : clusters) {
    // Best surviving grid angle of the cluster; the refinement may only
    // improve on it (near an exact survivor the defect bottoms out at the
    // numerical noise floor and the line search can drift within it).
    int kbest = ka;
    for (int k = ka;; k = (k + 1) % opt.n_angles) {
      if (worst[k] < worst[kbest]) kbest = k;
      if (k == kb) break;
    }
    double best_theta = angles[kbest], best_d = worst[kbest];

    auto subset = critical_subset(angles[kbest] + 0.5 * step);
    auto subset_defect = [&](double theta) {
      double w = 0.0;
      for (int i : subset) w = std::max(w, defect_at(i, theta));
      return w;
    };

    double lo = angles[ka] - step, hi = angles[kb >= ka ? kb : kb + opt.n_angles] + step;
    double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = subset_defect(x1), f2 = subset_defect(x2);
    for (int it = 0; it < opt.refine_iters && (b - a) > 1e-9; ++it) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = subset_defect(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = subset_defect(x2);
      }
    }
    double theta = 0.5 * (a + b);
    double d = worst_defect(theta);
    if (d < best_d) {
      best_theta = theta;
      best_d = d;
    }
    if (best_d <= th.tol) {
      double canon = std::fmod(best_theta, M_PI);
      if (canon < 0) canon += M_PI;
      if (M_PI - canon < 1e-6) canon -= M_PI;  // wrap angles just below pi to ~0
      out.survivors.push_back({canon, best_d, false});
    }
  }
  std::sort(out.survivors.begin(), out.survivors.end(),
            [](const SweepSurvivor& x, const SweepSurvivor& y) { return x.angle < y.angle; });
  return out;
}

inline SweepResult direction_sweep(const MetricSpec& m, const PlaneProvider& plane,
                                   const std::array<int, 2>& seed_axes, const RegionSpec& region,
                                   const Thresholds& th = {}, const SweepOptions& opt = {}) {
  auto pts = region.sample_points();
  const int N = static_cast<int>(pts.size());
  std::vector<CurvaturePoint> cps(N);
  std::vector<std::pair<VecJ, VecJ>> bases(N);
  std::vector<std::string> errors(N);
  decide_detail::parallel_for(N, [&](int i) {
    try {
      cps[i] = curvature_point(m, pts[i], 4);
      bases[i] = plane_basis_jets(cps[i], plane(cps[i]), seed_axes);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (int i = 0; i < N; ++i)
    if (!errors[i].empty()) throw SingularPointError("sweep sample failed: " + errors[i]);
  std::vector<const CurvaturePoint*> ptrs(N);
  for (int i = 0; i < N; ++i) ptrs[i] = &cps[i];
  return direction_sweep_core(ptrs, bases, seed_axes, th, opt);
}

// ---------------------------------------------------------------------------
// Product-of-surfaces reduction
// ---------------------------------------------------------------------------

// Closed form for the top Weyl-operator entry of an isothermal product
// diag(f, f, h, h) with f = f(t,x), h = h(y,z), in the operator
// normalization used by weyl_operator.
inline double product_surface_lambda(const ExprPtr& f, const ExprPtr& h,
                                     const std::vector<double>& p) {
  Jet fj = eval_expr_jet(f, p, 2);
  Jet hj = eval_expr_jet(h, p, 2);
  auto d1 = [](const Jet& j, int i) { return j.derivative(i).value(); };
  auto d2 = [](const Jet& j, int i) { return j.derivative(i).derivative(i).value(); };
  double fv = fj.value(), hv = hj.value();
  double num_f = d1(fj, 0) * d1(fj, 0) + d1(fj, 1) * d1(fj, 1) - fv * d2(fj, 0) - fv * d2(fj, 1);
  double num_h = d1(hj, 2) * d1(hj, 2) + d1(hj, 3) * d1(hj, 3) - hv * d2(hj, 2) - hv * d2(hj, 3);
  return 0.25 * (num_h / (6.0 * hv * hv * hv) + num_f / (6.0 * fv * fv * fv));
}

namespace decide_detail {

// Integral over [0, h] of the quintic two-point interpolant from value,
// first and second derivative at both ends.
inline double hermite_quintic_integral(double h, double f0, double d0, double s0, double f1,
                                       double d1, double s1) {
  return h * (0.5 * (f0 + f1)) + h * h * (d0 - d1) / 10.0 + h * h * h * (s0 + s1) / 120.0;
}

// Integral of the pullback of -Phi along the straight segment a -> b, using
// jets of Phi (so the integrand's first two derivatives are exact).
inline double integrate_minus_phi(const MetricSpec& m, const DistributionSpec& D,
                                  const std::vector<double>& a, const std::vector<double>& b,
                                  int segments = 8) {
  const int n = m.dim;
  std::vector<double> dir(n);
  for (int i = 0; i < n; ++i) dir[i] = b[i] - a[i];
  double total = 0.0;
  for (int s = 0; s < segments; ++s) {
    double t0 = static_cast<double>(s) / segments, t1 = static_cast<double>(s + 1) / segments;
    std::vector<double> p0(n), p1(n);
    for (int i = 0; i < n; ++i) {
      p0[i] = a[i] + t0 * dir[i];
      p1[i] = a[i] + t1 * dir[i];
    }
    auto eval = [&](const std::vector<double>& q, double& f, double& d1v, double& d2v) {
      CurvaturePoint cp = curvature_point(m, q, 3);
      PhiForm ph = phi_form_point(cp, projector_from_fields(cp, D.fields));
      // f(t) = -Phi_i(c(t)) dir^i, with c the full segment parametrization
      f = 0.0;
      d1v = 0.0;
      d2v = 0.0;
      for (int i = 0; i < n; ++i) {
        Jet c0 = -ph.phi[i];
        f += c0.value() * dir[i];
        Jet cd = constant_like(c0, 0.0);
        for (int j = 0; j < n; ++j) cd += c0.derivative(j) * dir[j];
        d1v += cd.value() * dir[i];
        Jet cdd = constant_like(cd, 0.0);
        for (int j = 0; j < n; ++j) cdd += cd.derivative(j) * dir[j];
        d2v += cdd.value() * dir[i];
      }
    };
    double f0, d0, s0, f1, d1v, s1;
    eval(p0, f0, d0, s0);
    eval(p1, f1, d1v, s1);
    total += hermite_quintic_integral(t1 - t0, f0, d0, s0, f1, d1v, s1);
  }
  return total;
}

}  // namespace decide_detail

// Conformal rescale verification: nabla-tilde of the unit field vanishes.
inline CheckResult parallel_check(const MetricSpec& m_rescaled, const VectorFieldSpec& X,
                                  const RegionSpec& region, double tol = 1e-8) {
  CheckResult out;
  out.threshold = tol;
  for (const auto& p : region.sample_points()) {
    CurvaturePoint cp = curvature_point(m_rescaled, p, 2);
    VecJ xj = X.jets_at(p, 2);
    Jet n2 = dot_g(cp.g, xj, xj);
    VecJ xhat = xj * (1.0 / sqrt(n2));
    double defect = 0.0, scale = 0.0;
    for (int i = 0; i < cp.dim; ++i)
      for (int k = 0; k < cp.dim; ++k) {
        double v = xhat[k].derivative(i).value();
        for (int mm = 0; mm < cp.dim; ++mm) {
          double gt = cp.gamma[k](i, mm).value();
          v += gt * xhat[mm].value();
          scale = std::max(scale, std::abs(gt));
        }
        defect = std::max(defect, std::abs(v));
      }
    out.worst = std::max(out.worst, defect / (1.0 + scale));
  }
  out.pass = out.worst <= tol;
  return out;
}

// Recovers the conformal exponent on the leaf of a coordinate 2-plane through
// the region center and runs the surface Killing detector on the factor.
// `axes` are the two coordinate indices spanning the factor.
struct FactorSurface {
  std::array<int, 2> axes{};
  SurfaceMetricFn metric;
  RegionSpec region2;
  double path_independence = 0.0;
};

inline FactorSurface build_factor_surface(const MetricSpec& m, const std::array<int, 2>& axes,
                                          const RegionSpec& region, const Thresholds& th) {
  using decide_detail::integrate_minus_phi;
  FactorSurface out;
  out.axes = axes;
  DistributionSpec D;
  D.fields = {VectorFieldSpec::coordinate(axes[0], m.dim),
              VectorFieldSpec::coordinate(axes[1], m.dim)};
  std::vector<double> base = region.center();

  out.region2.intervals = {region.intervals[axes[0]], region.intervals[axes[1]]};
  out.region2.samples_per_axis = region.samples_per_axis;
  out.region2.extra_samples = std::min(region.extra_samples, 20);
  out.region2.seed = region.seed;

  // Path independence of the exponent over the leaf: compare the two
  // axis-ordered staircase integrals to the far corner of the leaf patch.
  {
    std::vector<double> corner = base;
    corner[axes[0]] = region.intervals[axes[0]].hi;
    corner[axes[1]] = region.intervals[axes[1]].hi;
    std::vector<double> via1 = base, via2 = base;
    via1[axes[0]] = corner[axes[0]];
    via2[axes[1]] = corner[axes[1]];
    double p1 = integrate_minus_phi(m, D, base, via1) + integrate_minus_phi(m, D, via1, corner);
    double p2 = integrate_minus_phi(m, D, base, via2) + integrate_minus_phi(m, D, via2, corner);
    out.path_independence = std::abs(p1 - p2) / (1.0 + std::max(std::abs(p1), std::abs(p2)));
  }

  MetricSpec mcopy = m;
  out.metric = [mcopy, D, axes, base](const std::vector<double>& p2, int order) -> MatJ {
    const int n = mcopy.dim;
    std::vector<double> q = base;
    q[axes[0]] = p2[0];
    q[axes[1]] = p2[1];

    // alpha jets on the leaf: value by line integration from the leaf base,
    // higher coefficients from d(alpha) = -Phi.
    std::vector<double> mid = base;
    mid[axes[0]] = p2[0];
    double alpha0 = integrate_minus_phi(mcopy, D, base, mid) +
                    integrate_minus_phi(mcopy, D, mid, q);

    int phi_order = std::min(order, 4);
    CurvaturePoint cp = curvature_point(mcopy, q, phi_order + 1);
    PhiForm ph = phi_form_point(cp, projector_from_fields(cp, D.fields));

    // Restrict a 4-var jet to the leaf variables (others held constant).
    auto restrict2 = [&](const Jet& j, int ord) {
      Jet r(2, ord);
      const auto& T4 = jet_detail::vtab(n);
      const auto& T2 = jet_detail::vtab(2);
      for (int k = 0; k < r.size(); ++k) {
        auto mono = T2.mono[k];
        std::array<int, 4> beta{};
        beta[axes[0]] = mono[0];
        beta[axes[1]] = mono[1];
        r.raw(k) = j.coeff(beta);
      }
      (void)T4;
      return r;
    };

    Jet alpha(2, order);
    alpha.raw(0) = alpha0;
    {
      Jet phi1 = restrict2(ph.phi[axes[0]], order - 1 >= 0 ? std::min(order - 1, phi_order) : 0);
      Jet phi2 = restrict2(ph.phi[axes[1]], order - 1 >= 0 ? std::min(order - 1, phi_order) : 0);
      const auto& T2 = jet_detail::vtab(2);
      for (int k = 1; k < alpha.size(); ++k) {
        auto mono = T2.mono[k];
        if (mono[0] >= 1) {
          std::array<int, 4> beta{mono[0] - 1, mono[1], 0, 0};
          alpha.raw(k) = -phi1.coeff(beta) / mono[0];
        } else {
          std::array<int, 4> beta{0, mono[1] - 1, 0, 0};
          alpha.raw(k) = -phi2.coeff(beta) / mono[1];
        }
      }
    }

    MatJ g4 = mcopy.jets_at(q, std::min(order, phi_order + 1));
    Jet scale = exp(alpha);
    MatJ g2(2, 2, Jet(2, order));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        g2(i, j) = scale * restrict2(g4(axes[i], axes[j]), order);
    return g2;
  };
  (void)th;
  return out;
}

// Checks whether a plane projector (values, coordinates) is the span of two
// coordinate axes; returns them if so.
inline std::optional<std::array<int, 2>> coordinate_axes_of_plane(const MatD& proj,
                                                                  double tol = 1e-6) {
  int n = proj.rows();
  std::array<int, 2> axes{-1, -1};
  int found = 0;
  for (int s = 0; s < n; ++s) {
    double defect = 0.0;
    for (int i = 0; i < n; ++i) defect = std::max(defect, std::abs(proj(i, s) - (i == s ? 1 : 0)));
    if (defect <= tol) {
      if (found < 2) axes[found] = s;
      ++found;
    }
  }
  if (found != 2) return std::nullopt;
  return axes;
}

// The product branch for a verified type-C conformal product: recover the
// exponent from Phi, restrict to the leaves, and look for a Killing field on
// each factor. Constant-curvature factors are surfaces of revolution locally,
// so they carry Killing fields; the gradient-based detector cannot certify
// them itself and that delegation is recorded in the report.
inline ProductBranchReport product_reduction(const MetricSpec& m,
                                             const std::array<std::array<int, 2>, 2>& axes,
                                             const RegionSpec& region, const Thresholds& th,
                                             std::vector<Reason>* reasons) {
  ProductBranchReport out;
  out.attempted = true;
  out.coordinate_aligned = true;
  out.axes = axes;

  // Consequence check: for the verified conformal product, the rescaled
  // block e^{alpha} g_S must not vary along the complementary coordinates.
  {
    using decide_detail::integrate_minus_phi;
    DistributionSpec D1;
    D1.fields = {VectorFieldSpec::coordinate(axes[0][0], m.dim),
                 VectorFieldSpec::coordinate(axes[0][1], m.dim)};
    std::vector<double> q0 = region.center(), q1 = region.center();
    q1[axes[1][0]] = region.intervals[axes[1][0]].hi;
    q1[axes[1][1]] = region.intervals[axes[1][1]].hi;
    std::vector<double> mid = q0;
    mid[axes[1][0]] = q1[axes[1][0]];
    double dalpha = integrate_minus_phi(m, D1, q0, mid) + integrate_minus_phi(m, D1, mid, q1);
    MatD g0 = m.value_at(q0), g1 = m.value_at(q1);
    double defect = 0.0, scale = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double a0 = g0(axes[0][i], axes[0][j]);
        double a1 = std::exp(dalpha) * g1(axes[0][i], axes[0][j]);
        defect = std::max(defect, std::abs(a1 - a0));
        scale = std::max(scale, std::abs(a0));
      }
    out.cross_independence = defect / (1.0 + scale);
    if (out.cross_independence > 1e-6 && reasons)
      reasons->push_back({"product-consequence-defect",
                          "rescaled factor block varies along the complementary coordinates"});
  }

  for (int fct = 0; fct < 2; ++fct) {
    FactorSurface fs = build_factor_surface(m, axes[fct], region, th);
    out.path_independence = std::max(out.path_independence, fs.path_independence);
    KillingDetection kd = killing_detect_surface(fs.metric, fs.region2, th);
    out.factor_verdict[fct] = kd.verdict;
    out.factor_residual[fct] = std::max(kd.worst_residual, kd.worst_closedness);
    std::string fname = "factor(" + m.var_names[axes[fct][0]] + "," + m.var_names[axes[fct][1]] + ")";
    switch (kd.verdict) {
      case KillingVerdict::Found:
        out.lcw = true;
        if (reasons)
          reasons->push_back({"factor-killing-found",
                              fname + " carries a Killing field; LCW tangent to this factor"});
        break;
      case KillingVerdict::Inapplicable:
        out.lcw = true;
        if (reasons)
          reasons->push_back(
              {"factor-constant-curvature",
               fname + " has constant Gaussian curvature: locally a surface of revolution, so an "
                       "LCW tangent to this factor exists (gradient-based detector inapplicable)"});
        break;
      case KillingVerdict::None:
        if (reasons)
          reasons->push_back({"factor-killing-none",
                              fname + " has no Killing field (worst residual " +
                                  std::to_string(out.factor_residual[fct]) + ")"});
        break;
      case KillingVerdict::Mixed:
        if (reasons)
          reasons->push_back({"factor-killing-mixed",
                              fname + ": grad K vanishes on part of the region; unresolved"});
        break;
    }
  }
  if (out.path_independence > th.tol && reasons)
    reasons->push_back({"exponent-path-dependence",
                        "line integrals of Phi disagree across paths beyond tolerance"});
  return out;
}

// ---------------------------------------------------------------------------
// Four dimensions
// ---------------------------------------------------------------------------

inline Verdict decide_lcw_4d(const MetricSpec& m, const RegionSpec& region,
                             const Thresholds& th = {}, const SweepOptions& sweep_opt = {}) {
  using namespace decide_detail;
  if (m.dim != 4) throw std::invalid_argument("decide_lcw_4d requires dim = 4");
  Verdict v;
  v.dim = 4;
  v.thresholds = th;

  auto pts = region.sample_points();
  const int N = static_cast<int>(pts.size());
  const int order = 4;

  struct PerPoint {
    CurvaturePoint cp;
    Frame frame;
    WeylClass cls;
    WeylJetStructure structure;  // dirs (B) or planes (C), frame components
  };
  std::vector<PerPoint> data(N);
  std::vector<std::string> errors(N), structure_err(N);
  parallel_for(N, [&](int i) {
    try {
      PerPoint d;
      d.cp = curvature_point(m, pts[i], order);
      d.frame = orthonormal_frame(d.cp);
      WeylOperator W = weyl_operator(d.cp, d.frame);
      double tau_zero_abs = th.tau_zero * (1.0 + d.cp.riemann_scale());
      d.cls = classify_weyl(W.values(), tau_zero_abs, th);
      if (d.cls.type == WeylType::B || d.cls.type == WeylType::C) {
        try {
          d.structure = weyl_jet_structure(W, d.cls);
        } catch (const SingularPointError& e) {
          structure_err[i] = e.what();
        }
      }
      data[i] = std::move(d);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (int i = 0; i < N; ++i)
    if (!errors[i].empty()) throw SingularPointError("sample evaluation failed: " + errors[i]);

  std::map<WeylType, int> counts;
  for (int i = 0; i < N; ++i) {
    const auto& c = data[i].cls;
    PointRecord rec;
    rec.p = pts[i];
    rec.cls = to_string(c.type);
    rec.spectrum.assign(c.spectrum.begin(), c.spectrum.end());
    rec.ambiguous = c.ambiguous;
    rec.min_gap_ratio = c.min_gap_ratio;
    v.ambiguous = v.ambiguous || rec.ambiguous;
    v.class_counts[rec.cls]++;
    v.per_point.push_back(std::move(rec));
    counts[c.type]++;
  }

  if (counts[WeylType::A] > 0) {
    v.outcome = RegionOutcome::NoLcw;
    v.reasons.push_back({"weyl-type-A", "type A present at " +
                                            std::to_string(counts[WeylType::A]) + " of " +
                                            std::to_string(N) + " samples"});
    return v;
  }
  if (counts[WeylType::D] == N) {
    v.outcome = RegionOutcome::ConformallyFlat;
    v.reasons.push_back({"weyl-type-D", "Weyl vanishes at every sample; LCWs as in flat space"});
    return v;
  }
  for (int i = 0; i < N; ++i)
    if (!structure_err[i].empty()) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "eigenstructure refinement failed at sample %d: %s", i,
                    structure_err[i].c_str());
      v.outcome = RegionOutcome::Ambiguous;
      v.ambiguous = true;
      v.reasons.push_back({"structure-obstruction", buf});
      return v;
    }
  if (counts[WeylType::B] == N) {
    v.reasons.push_back({"weyl-type-B", "three doubled eigenvalues at every sample"});
    // Four eigenflag direction fields, matched over the grid.
    std::vector<std::vector<VecJ>> dirs(N);
    for (int i = 0; i < N; ++i) {
      for (const auto& df : data[i].structure.dirs)
        dirs[i].push_back(frame_to_coords(data[i].frame, df));
    }
    auto bfs = propagate_matching(region, pts, dirs, align_dirs_to);
    int root = bfs[0];
    std::vector<VecD> ref;
    for (const auto& dj : dirs[root]) {
      VecD r(4, 0.0);
      for (int k = 0; k < 4; ++k) r[k] = dj[k].value();
      ref.push_back(r);
    }
    MatD gval0(4, 4, 0.0);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) gval0(a, b) = data[root].cp.g(a, b).value();

    struct DirSample {
      std::array<FactorPoint, 4> fp;
      std::array<double, 4> par{};
    };
    std::vector<DirSample> dsamples(N);
    parallel_for(N, [&](int i) {
      for (int k = 0; k < 4; ++k) {
        ProjectorField D = projector_from_direction(data[i].cp, dirs[i][k]);
        dsamples[i].fp[k] = factor_point(data[i].cp, D);
        dsamples[i].par[k] =
            parallel_defect_from_phi(data[i].cp, dirs[i][k], dsamples[i].fp[k].phi.phi);
      }
    });
    std::array<CriteriaAccumulator, 4> acc;
    for (auto& a : acc) a.init(th);
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < 4; ++k) acc[k].add(dsamples[i].fp[k]);
    for (int k = 0; k < 4; ++k) {
      DirectionReport dr;
      dr.dir = ref[k];
      dr.label = direction_label(ref[k], m, gval0);
      dr.decision = acc[k].finish(th);
      if (dr.decision.is_conformal_factor) {
        double worst = 0.0;
        for (int i = 0; i < N; ++i) worst = std::max(worst, dsamples[i].par[k]);
        dr.parallel_defect = worst;
        v.lcw_directions.push_back(dr.label);
      }
      v.ambiguous = v.ambiguous || dr.decision.ambiguous;
      if (dr.decision.inconsistent)
        v.reasons.push_back(
            {"criteria-inconsistency", "criteria (2) and (3) disagree for " + dr.label});
      v.directions.push_back(std::move(dr));
    }
    if (!v.lcw_directions.empty()) {
      v.outcome = RegionOutcome::LcwExists;
      v.reasons.push_back({"factor-found", "an eigenflag direction is a conformal factor"});
    } else {
      v.outcome = RegionOutcome::NoLcw;
      v.reasons.push_back({"factor-none", "none of the four eigenflag directions is a conformal factor"});
    }
    v.sort_directions(m.var_names);
    return v;
  }
  if (counts[WeylType::C] == N) {
    v.reasons.push_back({"weyl-type-C", "4+2 eigenvalue pattern at every sample"});
    // Two complementary plane fields (projectors in coordinates), matched
    // over the grid.
    std::vector<std::vector<MatJ>> planes(N);
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < 2; ++k)
        planes[i].push_back(
            projector_from_frame(data[i].cp, data[i].frame, data[i].structure.planes[k], 2).P);
    auto bfs = propagate_matching(region, pts, planes, align_planes_to);
    int root = bfs[0];
    MatD ref0(4, 4, 0.0), ref1(4, 4, 0.0);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        ref0(a, b) = planes[root][0](a, b).value();
        ref1(a, b) = planes[root][1](a, b).value();
      }

    // Theorem criteria for both plane distributions.
    std::vector<std::array<FactorPoint, 2>> psamples(N);
    parallel_for(N, [&](int i) {
      for (int k = 0; k < 2; ++k) {
        ProjectorField D{2, planes[i][k]};
        psamples[i][k] = factor_point(data[i].cp, D);
      }
    });
    std::array<CriteriaAccumulator, 2> acc;
    acc[0].init(th);
    acc[1].init(th);
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < 2; ++k) acc[k].add(psamples[i][k]);
    std::array<FactorDecision, 2> pdec{acc[0].finish(th), acc[1].finish(th)};
    MatD gval0(4, 4, 0.0);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) gval0(a, b) = data[root].cp.g(a, b).value();
    for (int k = 0; k < 2; ++k) {
      DirectionReport dr;  // reuse the report type for plane verdicts
      dr.label = std::string("plane-") + (k == 0 ? "1" : "2");
      dr.dir = VecD(4, 0.0);
      dr.decision = pdec[k];
      v.ambiguous = v.ambiguous || pdec[k].ambiguous;
      if (pdec[k].inconsistent)
        v.reasons.push_back({"criteria-inconsistency", "criteria (2) and (3) disagree for " + dr.label});
      v.directions.push_back(std::move(dr));
    }

    bool product_lcw = false;
    if (pdec[0].is_conformal_factor && pdec[1].is_conformal_factor) {
      v.reasons.push_back(
          {"conformal-product", "both eigenflag planes satisfy the factor criteria"});
      auto ax0 = coordinate_axes_of_plane(ref0);
      auto ax1 = coordinate_axes_of_plane(ref1);
      if (ax0 && ax1) {
        v.product = product_reduction(m, {*ax0, *ax1}, region, th, &v.reasons);
        product_lcw = v.product.lcw;
        if (product_lcw) {
          for (int k = 0; k < 2; ++k) {
            if (v.product.factor_verdict[k] == KillingVerdict::Found ||
                v.product.factor_verdict[k] == KillingVerdict::Inapplicable) {
              v.lcw_directions.push_back("tangent-to-factor(" +
                                         m.var_names[v.product.axes[k][0]] + "," +
                                         m.var_names[v.product.axes[k][1]] + ")");
            }
          }
        }
        if (v.product.factor_verdict[0] == KillingVerdict::Mixed ||
            v.product.factor_verdict[1] == KillingVerdict::Mixed)
          v.ambiguous = true;
      } else {
        v.product.attempted = true;
        v.product.coordinate_aligned = false;
        v.reasons.push_back(
            {"product-unresolved",
             "eigenflag planes are not spans of coordinate axes; leaf-chart construction is not "
             "supported, manual analysis required"});
        v.ambiguous = true;
      }
    } else {
      v.reasons.push_back({"not-conformal-product",
                           "an eigenflag plane fails the factor criteria; the metric is not "
                           "conformal to a product of surfaces"});
    }

    // Rank-1 candidates inside each plane (needed when the product branch
    // fails; run regardless and report).
    for (int k = 0; k < 2; ++k) {
      const MatD& refp = k == 0 ? ref0 : ref1;
      std::array<int, 2> seeds{-1, -1};
      {
        std::array<double, 4> score{};
        for (int s = 0; s < 4; ++s) {
          double n2 = 0;
          for (int i = 0; i < 4; ++i) n2 += refp(i, s) * refp(i, s);
          score[s] = n2;
        }
        int s1 = 0;
        for (int s = 1; s < 4; ++s)
          if (score[s] > score[s1]) s1 = s;
        int s2 = -1;
        for (int s = 0; s < 4; ++s) {
          if (s == s1) continue;
          if (s2 < 0 || score[s] > score[s2]) s2 = s;
        }
        seeds = {std::min(s1, s2), std::max(s1, s2)};
      }
      std::vector<const CurvaturePoint*> cps(N);
      std::vector<std::pair<VecJ, VecJ>> bases(N);
      std::vector<std::string> base_err(N);
      parallel_for(N, [&](int i) {
        try {
          cps[i] = &data[i].cp;
          bases[i] = plane_basis_jets(data[i].cp, planes[i][k], seeds);
        } catch (const std::exception& e) {
          base_err[i] = e.what();
        }
      });
      bool obstructed = false;
      for (int i = 0; i < N && !obstructed; ++i)
        if (!base_err[i].empty()) {
          char buf[160];
          std::snprintf(buf, sizeof buf, "plane basis not orientable near sample %d", i);
          v.reasons.push_back({"sweep-obstruction", buf});
          v.ambiguous = true;
          obstructed = true;
        }
      if (obstructed) continue;
      SweepResult sw = direction_sweep_core(cps, bases, seeds, th, sweep_opt);
      sw.plane_index = k;
      if (!sw.all_angles) {
        for (auto& survivor : sw.survivors) {
          // Full factor decision for the surviving constant-angle field.
          CriteriaAccumulator a1;
          a1.init(th);
          double worst_par = 0.0;
          std::vector<FactorPoint> fps(N);
          std::vector<double> pars(N);
          parallel_for(N, [&](int i) {
            auto [u1, u2] = plane_basis_jets(data[i].cp, planes[i][k], seeds);
            VecJ Z = u1 * std::cos(survivor.angle) + u2 * std::sin(survivor.angle);
            ProjectorField D = projector_from_direction(data[i].cp, Z);
            fps[i] = factor_point(data[i].cp, D);
            pars[i] = parallel_defect_from_phi(data[i].cp, Z, fps[i].phi.phi);
          });
          for (int i = 0; i < N; ++i) {
            a1.add(fps[i]);
            worst_par = std::max(worst_par, pars[i]);
          }
          FactorDecision fd = a1.finish(th);
          survivor.factor_pass = fd.is_conformal_factor;
          DirectionReport dr;
          auto [u1, u2] = plane_basis_jets(data[root].cp, planes[root][k], seeds);
          VecJ Z = u1 * std::cos(survivor.angle) + u2 * std::sin(survivor.angle);
          dr.dir = VecD(4, 0.0);
          for (int i = 0; i < 4; ++i) dr.dir[i] = Z[i].value();
          dr.label = direction_label(dr.dir, m, gval0);
          dr.decision = fd;
          if (fd.is_conformal_factor) {
            dr.parallel_defect = worst_par;
            v.lcw_directions.push_back(dr.label);
          }
          v.ambiguous = v.ambiguous || fd.ambiguous;
          v.directions.push_back(std::move(dr));
        }
      } else {
        v.reasons.push_back({"sweep-degenerate",
                             "every angle in plane " + std::to_string(k + 1) +
                                 " passes the umbilicity filter"});
        v.ambiguous = true;
      }
      v.sweeps.push_back(std::move(sw));
    }

    if (!v.lcw_directions.empty()) {
      v.outcome = RegionOutcome::LcwExists;
      if (product_lcw)
        v.reasons.push_back({"product-lcw", "a factor surface carries a Killing field"});
      else
        v.reasons.push_back({"factor-found", "a rank-1 eigenflag candidate is a conformal factor"});
    } else {
      v.outcome = RegionOutcome::NoLcw;
      v.reasons.push_back({"factor-none",
                           "no eigenflag plane or in-plane direction yields a conformal factor"});
    }
    v.sort_directions(m.var_names);
    return v;
  }

  v.outcome = RegionOutcome::Ambiguous;
  std::string mix;
  for (auto& [t, c] : counts)
    if (c > 0) mix += std::string(to_string(t)) + ":" + std::to_string(c) + " ";
  v.reasons.push_back({"type-mixed", "region mixes Weyl types (" + mix + "); partition required"});
  return v;
}

// Full decision procedure, dispatching on dimension.
inline Verdict decide_lcw(const MetricSpec& m, const RegionSpec& region, const Thresholds& th = {},
                          const SweepOptions& sweep_opt = {}) {
  return m.dim == 3 ? decide_lcw_3d(m, region, th) : decide_lcw_4d(m, region, th, sweep_opt);
}

}  // namespace lcw
