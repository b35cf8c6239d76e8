#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lcw/lcw.hpp"

namespace {

using namespace lcw;

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open metric file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<double> parse_point(const std::string& text, int dim) {
  std::vector<double> p;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) p.push_back(std::stod(tok));
  if (static_cast<int>(p.size()) != dim)
    throw std::runtime_error("--at expects " + std::to_string(dim) + " comma-separated values");
  return p;
}

std::vector<VectorFieldSpec> parse_dist(const std::string& text, const MetricSpec& m) {
  std::vector<VectorFieldSpec> fields;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (part.find_first_not_of(" \t") == std::string::npos) continue;
    fields.push_back(parse_vector_field(part, m.var_names));
  }
  if (fields.empty()) throw std::runtime_error("--dist is empty");
  return fields;
}

ordered_json input_json(const std::string& metric_path, const RegionSpec& region,
                        const MetricSpec& m) {
  ordered_json j;
  j["metric"] = metric_path;
  ordered_json ivs = ordered_json::array();
  for (int d = 0; d < region.dim(); ++d) {
    ordered_json iv;
    iv["var"] = m.var_names[d];
    iv["lo"] = fmt_num(region.intervals[d].lo);
    iv["hi"] = fmt_num(region.intervals[d].hi);
    ivs.push_back(iv);
  }
  j["region"] = ivs;
  j["samples_per_axis"] = region.samples_per_axis;
  j["extra_samples"] = region.extra_samples;
  j["seed"] = region.seed;
  return j;
}

ordered_json matjson(const MatD& m) {
  ordered_json rows = ordered_json::array();
  for (int i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(fmt_num(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

int run(int argc, char** argv) {
  CLI::App app{"conformal curvature classification and limiting Carleman weight detection"};
  app.require_subcommand(1);

  std::string metric_path, at_str, region_str, dist_str, field_str, plane_str;
  Thresholds th;
  int samples = 5, extra = 50, angles = 180, plane_index = -1;
  std::uint64_t seed = 12345;
  bool emit_json = false;

  app.add_option("--tol", th.tol, "relative tolerance for the factor criteria");
  app.add_option("--tau-zero", th.tau_zero, "tensor-is-zero threshold (relative)");
  app.add_option("--tau-deg", th.tau_deg, "eigenvalue degeneracy threshold (relative)");
  app.add_option("--tau-det", th.tau_det, "CY determinant threshold (relative)");
  app.add_flag("--json", emit_json, "machine-readable JSON report on stdout");

  auto add_common = [&](CLI::App* sub, bool needs_at) {
    sub->fallthrough();
    sub->add_option("--metric", metric_path, "metric file")->required();
    if (needs_at) sub->add_option("--at", at_str, "evaluation point, comma separated");
    sub->add_option("--region", region_str, "region '<var>:<lo>:<hi>[,...]'");
    sub->add_option("--samples", samples, "grid samples per axis");
    sub->add_option("--extra", extra, "quasi-random extra samples");
    sub->add_option("--seed", seed, "sample seed");
  };

  auto* c_curv = app.add_subcommand("curvature", "curvature quantities at a point");
  add_common(c_curv, true);
  auto* c_cls = app.add_subcommand("classify", "per-point conformal class");
  add_common(c_cls, true);
  auto* c_eig = app.add_subcommand("eigenflags", "eigenflag direction fields over a region");
  add_common(c_eig, false);
  auto* c_fac = app.add_subcommand("check-factor", "conformal-factor criteria for --dist");
  add_common(c_fac, false);
  c_fac->add_option("--dist", dist_str, "spanning fields, ';' separated")->required();
  auto* c_kil = app.add_subcommand("check-killing", "Killing check for --field");
  add_common(c_kil, false);
  c_kil->add_option("--field", field_str, "vector field, e.g. \"cos(x)*dt + sin(x)*dx\"")
      ->required();
  auto* c_swp = app.add_subcommand("sweep", "direction sweep inside an eigenflag plane");
  add_common(c_swp, false);
  c_swp->add_option("--plane", plane_str, "two spanning fields, ';' separated");
  c_swp->add_option("--plane-index", plane_index, "use plane 0 or 1 from the classification");
  c_swp->add_option("--angles", angles, "initial sweep angles");
  auto* c_dec = app.add_subcommand("decide", "full decision procedure");
  add_common(c_dec, false);
  c_dec->add_option("--angles", angles, "initial sweep angles");

  CLI11_PARSE(app, argc, argv);

  MetricSpec m = parse_metric(read_file(metric_path));
  RegionSpec region = region_from_string(region_str, m);
  region.samples_per_axis = samples;
  region.extra_samples = extra;
  region.seed = seed;

  ordered_json report;
  report["input"] = input_json(metric_path, region, m);
  report["tolerances"] = thresholds_json(th);
  report["per_point"] = ordered_json::array();
  std::string human;

  if (app.got_subcommand(c_curv)) {
    std::vector<double> p =
        at_str.empty() ? region.center() : parse_point(at_str, m.dim);
    CurvaturePoint cp = curvature_point(m, p, 3);
    ordered_json pj;
    pj["point"] = ordered_json::array();
    for (double x : p) pj["point"].push_back(fmt_num(x));
    MatD ric(m.dim, m.dim, 0.0), sch(m.dim, m.dim, 0.0);
    for (int i = 0; i < m.dim; ++i)
      for (int j = 0; j < m.dim; ++j) {
        ric(i, j) = cp.ric(i, j).value();
        sch(i, j) = cp.schouten(i, j).value();
      }
    pj["scal"] = fmt_num(cp.scal.value());
    pj["ricci"] = matjson(ric);
    pj["schouten"] = matjson(sch);
    ordered_json gj = ordered_json::array();
    for (int k = 0; k < m.dim; ++k) {
      for (int i = 0; i < m.dim; ++i)
        for (int j = i; j < m.dim; ++j) {
          double v = cp.gamma[k](i, j).value();
          if (std::abs(v) > 1e-14) {
            ordered_json e;
            e["k"] = m.var_names[k];
            e["ij"] = m.var_names[i] + m.var_names[j];
            e["value"] = fmt_num(v);
            gj.push_back(e);
          }
        }
    }
    pj["christoffel_nonzero"] = gj;
    human += "point:";
    for (double x : p) human += " " + fmt_num(x);
    human += "\nscal = " + fmt_num(cp.scal.value()) + "\n";
    if (m.dim == 3) {
      MatD cy = cotton_york(cp);
      pj["cotton_york"] = matjson(cy);
      human += "cotton-york:\n";
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) human += "  " + fmt_num(cy(i, j));
        human += "\n";
      }
    } else {
      Frame f = orthonormal_frame(cp);
      WeylOperator W = weyl_operator(cp, f);
      pj["weyl_operator"] = matjson(W.values());
      human += "weyl operator diag:";
      for (int i = 0; i < 6; ++i) human += " " + fmt_num(W.matrix(i, i).value());
      human += "\n";
    }
    report["per_point"].push_back(pj);
    ordered_json s;
    s["outcome"] = "evaluated";
    s["exit_code"] = 0;
    report["summary"] = s;
  } else if (app.got_subcommand(c_cls)) {
    std::vector<std::vector<double>> pts;
    if (!at_str.empty())
      pts.push_back(parse_point(at_str, m.dim));
    else
      pts = region.sample_points();
    bool ambiguous = false;
    for (const auto& p : pts) {
      CurvaturePoint cp = curvature_point(m, p, 3);
      double tz = th.tau_zero * (1.0 + cp.riemann_scale());
      ordered_json pj;
      pj["point"] = ordered_json::array();
      for (double x : p) pj["point"].push_back(fmt_num(x));
      human += "point:";
      for (double x : p) human += " " + fmt_num(x);
      if (m.dim == 3) {
        Frame f = orthonormal_frame(cp);
        MatJ cyf = f.e.transposed() * cp.cy * f.e;
        MatD cyv(3, 3, 0.0);
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) cyv(a, b) = cyf(a, b).value();
        CYClass c = classify_cy(cyv, tz, th.tau_det);
        pj["class"] = to_string(c.kind);
        pj["spectrum"] = {fmt_num(c.spectrum[0]), fmt_num(c.spectrum[1]), fmt_num(c.spectrum[2])};
        pj["det"] = fmt_num(c.det);
        human += std::string(" class ") + to_string(c.kind) + ", det = " + fmt_num(c.det) + "\n";
      } else {
        Frame f = orthonormal_frame(cp);
        WeylOperator W = weyl_operator(cp, f);
        WeylClass c = classify_weyl(W.values(), tz, th);
        pj["class"] = to_string(c.type);
        ordered_json lj = ordered_json::array();
        for (const auto& [mean, cnt] : c.clusters) {
          ordered_json e;
          e["lambda"] = fmt_num(mean);
          e["multiplicity"] = cnt;
          lj.push_back(e);
        }
        pj["lambdas"] = lj;
        pj["ambiguous"] = c.ambiguous;
        ambiguous = ambiguous || c.ambiguous;
        human += std::string(" type ") + to_string(c.type) + ", lambda = {";
        for (std::size_t i = 0; i < c.clusters.size(); ++i)
          human += (i ? ", " : "") + fmt_num(c.clusters[i].first);
        human += "}\n";
      }
      report["per_point"].push_back(pj);
    }
    ordered_json s;
    s["outcome"] = "classified";
    s["ambiguous"] = ambiguous;
    s["exit_code"] = ambiguous ? 2 : 0;
    report["summary"] = s;
  } else if (app.got_subcommand(c_eig)) {
    bool ambiguous = false;
    for (const auto& p : region.sample_points()) {
      CurvaturePoint cp = curvature_point(m, p, 3);
      double tz = th.tau_zero * (1.0 + cp.riemann_scale());
      Frame f = orthonormal_frame(cp);
      ordered_json pj;
      pj["point"] = ordered_json::array();
      for (double x : p) pj["point"].push_back(fmt_num(x));
      ordered_json dirs = ordered_json::array();
      auto emit_dir = [&](const VecD& frame_dir) {
        VecD d = f.to_coords(frame_dir);
        ordered_json c = ordered_json::array();
        for (int i = 0; i < d.size(); ++i) c.push_back(fmt_num(d[i]));
        dirs.push_back(c);
      };
      if (m.dim == 3) {
        MatJ cyf = f.e.transposed() * cp.cy * f.e;
        MatD cyv(3, 3, 0.0);
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) cyv(a, b) = cyf(a, b).value();
        CYClass c = classify_cy(cyv, tz, th.tau_det);
        pj["class"] = to_string(c.kind);
        for (const auto& d : c.eigenflag_dirs) emit_dir(d);
      } else {
        WeylOperator W = weyl_operator(cp, f);
        WeylClass c = classify_weyl(W.values(), tz, th);
        pj["class"] = to_string(c.type);
        ambiguous = ambiguous || c.ambiguous;
        for (const auto& d : c.eigenflag_dirs) emit_dir(d);
        ordered_json planes = ordered_json::array();
        for (const auto& pl : c.planes) {
          auto pe = jacobi_eigen(pl);
          ordered_json span = ordered_json::array();
          for (int which : {2, 3}) {
            VecD d(4, 0.0);
            for (int i = 0; i < 4; ++i) d[i] = pe.vectors(i, which);
            VecD dc = f.to_coords(d);
            ordered_json cjs = ordered_json::array();
            for (int i = 0; i < 4; ++i) cjs.push_back(fmt_num(dc[i]));
            span.push_back(cjs);
          }
          planes.push_back(span);
        }
        if (!c.planes.empty()) pj["planes"] = planes;
      }
      pj["directions"] = dirs;
      report["per_point"].push_back(pj);
      human += "point:";
      for (double x : p) human += " " + fmt_num(x);
      human += "  class " + pj["class"].get<std::string>() + " (" +
               std::to_string(dirs.size()) + " directions)\n";
    }
    ordered_json s;
    s["outcome"] = "evaluated";
    s["ambiguous"] = ambiguous;
    s["exit_code"] = ambiguous ? 2 : 0;
    report["summary"] = s;
  } else if (app.got_subcommand(c_fac)) {
    DistributionSpec D{parse_dist(dist_str, m)};
    FactorDecision fd = conformal_factor_decision(D, m, region, th);
    report["summary"] = decision_json(fd);
    report["summary"]["outcome"] = fd.is_conformal_factor ? "conformal-factor" : "not-a-factor";
    report["summary"]["exit_code"] = fd.ambiguous ? 2 : 0;
    human += std::string("conformal factor: ") + (fd.is_conformal_factor ? "yes" : "no") + "\n";
    for (const auto& c : fd.criteria)
      human += "  " + c.name + ": worst " + fmt_num(c.worst) + " vs " + fmt_num(c.threshold) +
               (c.pass() ? " pass" : " FAIL") + "\n";
    if (fd.inconsistent) human += "  WARNING: criteria (2) and (3) disagree\n";
    if (emit_json) {
      std::cout << report.dump(2) << "\n";
    } else {
      std::cout << human;
    }
    return fd.ambiguous ? 2 : 0;
  } else if (app.got_subcommand(c_kil)) {
    VectorFieldSpec X = parse_vector_field(field_str, m.var_names);
    CheckResult r = killing_check(m, X, region, th.tol);
    ordered_json s;
    s["outcome"] = r.pass ? "killing" : "not-killing";
    s["worst"] = fmt_num(r.worst);
    s["threshold"] = fmt_num(r.threshold);
    s["exit_code"] = 0;
    report["summary"] = s;
    human += std::string(r.pass ? "Killing field" : "not a Killing field") + " (worst " +
             fmt_num(r.worst) + ")\n";
  } else if (app.got_subcommand(c_swp)) {
    SweepOptions opt;
    opt.n_angles = angles;
    SweepResult sw;
    if (!plane_str.empty()) {
      auto fields = parse_dist(plane_str, m);
      if (fields.size() != 2) throw std::runtime_error("--plane needs exactly two fields");
      PlaneProvider provider = [&fields](const CurvaturePoint& cp) {
        return projector_from_fields(cp, fields).P;
      };
      CurvaturePoint cc = curvature_point(m, region.center(), 2);
      MatJ pc = provider(cc);
      std::array<int, 2> seeds{-1, -1};
      std::array<double, 4> score{};
      for (int s = 0; s < m.dim; ++s) {
        double n2 = 0;
        for (int i = 0; i < m.dim; ++i) n2 += pc(i, s).value() * pc(i, s).value();
        score[s] = n2;
      }
      int s1 = 0;
      for (int s = 1; s < m.dim; ++s)
        if (score[s] > score[s1]) s1 = s;
      int s2 = -1;
      for (int s = 0; s < m.dim; ++s) {
        if (s == s1) continue;
        if (s2 < 0 || score[s] > score[s2]) s2 = s;
      }
      seeds = {std::min(s1, s2), std::max(s1, s2)};
      sw = direction_sweep(m, provider, seeds, region, th, opt);
    } else {
      // Classify at the center and sweep the requested plane.
      CurvaturePoint cc = curvature_point(m, region.center(), 4);
      Frame f = orthonormal_frame(cc);
      WeylOperator W = weyl_operator(cc, f);
      double tz = th.tau_zero * (1.0 + cc.riemann_scale());
      WeylClass cls = classify_weyl(W.values(), tz, th);
      if (cls.type != WeylType::C)
        throw std::runtime_error("sweep without --plane requires a type-C classification");
      auto st = weyl_jet_structure(W, cls);
      int idx = plane_index < 0 ? 0 : plane_index;
      MatD refp(4, 4, 0.0);
      {
        MatJ p = projector_from_frame(cc, f, st.planes[idx], 2).P;
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) refp(a, b) = p(a, b).value();
      }
      PlaneProvider provider = [&m, &th, refp](const CurvaturePoint& cp) -> MatJ {
        Frame fr = orthonormal_frame(cp);
        WeylOperator Wp = weyl_operator(cp, fr);
        double tzp = th.tau_zero * (1.0 + cp.riemann_scale());
        WeylClass c = classify_weyl(Wp.values(), tzp, th);
        auto stt = weyl_jet_structure(Wp, c);
        MatJ p0 = projector_from_frame(cp, fr, stt.planes[0], 2).P;
        MatJ p1 = projector_from_frame(cp, fr, stt.planes[1], 2).P;
        double d0 = 0, d1 = 0;
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) {
            d0 = std::max(d0, std::abs(p0(a, b).value() - refp(a, b)));
            d1 = std::max(d1, std::abs(p1(a, b).value() - refp(a, b)));
          }
        return d0 <= d1 ? p0 : p1;
      };
      std::array<int, 2> seeds{-1, -1};
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
      sw = direction_sweep(m, provider, seeds, region, th, opt);
      sw.plane_index = idx;
    }
    ordered_json s;
    s["outcome"] = "swept";
    s["all_angles"] = sw.all_angles;
    ordered_json ss = ordered_json::array();
    human += "survivors:";
    for (const auto& u : sw.survivors) {
      ordered_json uj;
      uj["angle"] = fmt_num(u.angle);
      uj["defect"] = fmt_num(u.defect);
      ss.push_back(uj);
      human += " " + fmt_num(u.angle);
    }
    if (sw.all_angles) human += " (all angles pass)";
    human += "\n";
    s["survivors"] = ss;
    s["exit_code"] = 0;
    report["summary"] = s;
  } else if (app.got_subcommand(c_dec)) {
    SweepOptions opt;
    opt.n_angles = angles;
    Verdict v = decide_lcw(m, region, th, opt);
    report = verdict_json(v, input_json(metric_path, region, m));
    human = human_report(v);
    if (emit_json)
      std::cout << report.dump(2) << "\n";
    else
      std::cout << human;
    return v.exit_code();
  }

  if (emit_json)
    std::cout << report.dump(2) << "\n";
  else
    std::cout << human;
  int code = 0;
  if (report.contains("summary") && report["summary"].contains("exit_code"))
    code = report["summary"]["exit_code"].get<int>();
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const lcw::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
