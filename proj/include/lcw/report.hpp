#pragma once

#include <cstdio>
#include <string>

#include <json.hpp>

#include "lcw/decide.hpp"

namespace lcw {

using ordered_json = nlohmann::ordered_json;

inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Numbers are serialized as strings formatted with %.17g so reports are
// byte-identical across runs and JSON libraries cannot re-round them.
inline ordered_json json_number(double v) { return fmt_num(v); }

inline ordered_json thresholds_json(const Thresholds& th) {
  ordered_json j;
  j["tol"] = json_number(th.tol);
  j["tau_zero"] = json_number(th.tau_zero);
  j["tau_deg"] = json_number(th.tau_deg);
  j["tau_det"] = json_number(th.tau_det);
  j["eigenflag_tol"] = json_number(th.eigenflag_tol);
  j["ambiguity_factor"] = json_number(th.ambiguity_factor);
  return j;
}

inline ordered_json decision_json(const FactorDecision& d) {
  ordered_json j;
  j["is_conformal_factor"] = d.is_conformal_factor;
  j["criterion2"] = d.criterion2;
  j["inconsistent"] = d.inconsistent;
  j["ambiguous"] = d.ambiguous;
  ordered_json cs = ordered_json::array();
  for (const auto& c : d.criteria) {
    ordered_json cj;
    cj["name"] = c.name;
    cj["worst"] = json_number(c.worst);
    cj["threshold"] = json_number(c.threshold);
    cj["pass"] = c.pass();
    cj["margin_ratio"] = json_number(c.margin_ratio());
    cs.push_back(cj);
  }
  j["criteria"] = cs;
  return j;
}

inline ordered_json verdict_json(const Verdict& v, const ordered_json& input) {
  ordered_json j;
  j["input"] = input;
  j["tolerances"] = thresholds_json(v.thresholds);
  ordered_json pp = ordered_json::array();
  for (const auto& r : v.per_point) {
    ordered_json rj;
    ordered_json pj = ordered_json::array();
    for (double x : r.p) pj.push_back(json_number(x));
    rj["point"] = pj;
    rj["class"] = r.cls;
    ordered_json sj = ordered_json::array();
    for (double s : r.spectrum) sj.push_back(json_number(s));
    rj["spectrum"] = sj;
    rj["ambiguous"] = r.ambiguous;
    rj["min_gap_ratio"] = json_number(r.min_gap_ratio);
    pp.push_back(rj);
  }
  j["per_point"] = pp;

  ordered_json s;
  s["outcome"] = to_string(v.outcome);
  s["ambiguous"] = v.ambiguous;
  s["exit_code"] = v.exit_code();
  ordered_json cc;
  for (const auto& [k, n] : v.class_counts) cc[k] = n;
  s["class_counts"] = cc;
  ordered_json rs = ordered_json::array();
  for (const auto& r : v.reasons) {
    ordered_json rj;
    rj["rule"] = r.rule;
    rj["detail"] = r.detail;
    rs.push_back(rj);
  }
  s["reasons"] = rs;
  ordered_json ds = ordered_json::array();
  for (const auto& d : v.directions) {
    ordered_json dj;
    dj["label"] = d.label;
    ordered_json cj = ordered_json::array();
    for (int i = 0; i < d.dir.size(); ++i) cj.push_back(json_number(d.dir[i]));
    dj["components"] = cj;
    dj["decision"] = decision_json(d.decision);
    if (d.parallel_defect >= 0) dj["parallel_defect"] = json_number(d.parallel_defect);
    ds.push_back(dj);
  }
  s["candidates"] = ds;
  ordered_json lj = ordered_json::array();
  for (const auto& l : v.lcw_directions) lj.push_back(l);
  s["lcw_directions"] = lj;

  if (!v.sweeps.empty()) {
    ordered_json sw = ordered_json::array();
    for (const auto& t : v.sweeps) {
      ordered_json tj;
      tj["plane_index"] = t.plane_index;
      tj["n_angles"] = t.n_angles;
      tj["all_angles"] = t.all_angles;
      ordered_json ss = ordered_json::array();
      for (const auto& u : t.survivors) {
        ordered_json uj;
        uj["angle"] = json_number(u.angle);
        uj["defect"] = json_number(u.defect);
        uj["factor_pass"] = u.factor_pass;
        ss.push_back(uj);
      }
      tj["survivors"] = ss;
      sw.push_back(tj);
    }
    s["sweeps"] = sw;
  }
  if (v.product.attempted) {
    ordered_json pj;
    pj["coordinate_aligned"] = v.product.coordinate_aligned;
    if (v.product.coordinate_aligned) {
      pj["axes"] = {{v.product.axes[0][0], v.product.axes[0][1]},
                    {v.product.axes[1][0], v.product.axes[1][1]}};
      pj["path_independence"] = json_number(v.product.path_independence);
      pj["cross_independence"] = json_number(v.product.cross_independence);
      pj["factor_verdicts"] = {to_string(v.product.factor_verdict[0]),
                               to_string(v.product.factor_verdict[1])};
      pj["factor_residuals"] = {json_number(v.product.factor_residual[0]),
                                json_number(v.product.factor_residual[1])};
      pj["lcw"] = v.product.lcw;
    }
    s["product_branch"] = pj;
  }
  j["summary"] = s;
  return j;
}

// Human-readable rendering of the same data (every number in it also appears
// in the JSON report).
inline std::string human_report(const Verdict& v) {
  std::string out;
  out += "verdict: " + std::string(to_string(v.outcome)) + (v.ambiguous ? " (ambiguous)" : "") +
         "\n";
  out += "classes:";
  for (const auto& [k, n] : v.class_counts) out += " " + k + "=" + std::to_string(n);
  out += "\n";
  if (!v.lcw_directions.empty()) {
    out += "LCW directions:";
    for (std::size_t i = 0; i < v.lcw_directions.size(); ++i)
      out += (i ? ", " : " ") + v.lcw_directions[i];
    out += "\n";
  }
  for (const auto& d : v.directions) {
    out += "  candidate " + d.label + ": " +
           (d.decision.is_conformal_factor ? "conformal factor" : "rejected");
    for (const auto& c : d.decision.criteria)
      if (!c.pass()) out += " [" + c.name + " worst=" + fmt_num(c.worst) + "]";
    if (d.parallel_defect >= 0) out += " parallel_defect=" + fmt_num(d.parallel_defect);
    out += "\n";
  }
  for (const auto& t : v.sweeps) {
    out += "  sweep plane " + std::to_string(t.plane_index + 1) + ":";
    if (t.all_angles) {
      out += " all angles pass (degenerate)\n";
    } else {
      if (t.survivors.empty()) out += " no survivors";
      for (const auto& u : t.survivors)
        out += " angle=" + fmt_num(u.angle) + (u.factor_pass ? " (factor)" : " (rejected)");
      out += "\n";
    }
  }
  if (v.product.attempted) {
    out += "  product branch: ";
    if (!v.product.coordinate_aligned) {
      out += "planes not coordinate-aligned; unresolved\n";
    } else {
      out += std::string("factor verdicts ") + to_string(v.product.factor_verdict[0]) + ", " +
             to_string(v.product.factor_verdict[1]) +
             " path_independence=" + fmt_num(v.product.path_independence) + "\n";
    }
  }
  for (const auto& r : v.reasons) out += "reason: " + r.rule + " -- " + r.detail + "\n";
  return out;
}

}  // namespace lcw
