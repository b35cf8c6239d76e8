#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "testutil.hpp"

using namespace lcw;

static MetricSpec load(const std::string& name) {
  std::ifstream f(std::string(LCW_FIXTURES) + "/" + name);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_metric(ss.str());
}

static RegionSpec box(std::vector<std::pair<double, double>> iv, int samples = 3, int extra = 8) {
  RegionSpec r;
  for (auto [lo, hi] : iv) r.intervals.push_back({lo, hi});
  r.samples_per_axis = samples;
  r.extra_samples = extra;
  return r;
}

TEST_CASE("hyperbolic jets") {
  Jet x = Jet::variable(0, 0.7, 1, 3);
  Jet ch = cosh(x), sh = sinh(x);
  auto fch = [](const std::vector<double>& p) { return std::cosh(p[0]); };
  auto fsh = [](const std::vector<double>& p) { return std::sinh(p[0]); };
  for (int k = 0; k <= 3; ++k) {
    std::array<int, 4> beta{k, 0, 0, 0};
    CHECK(ch.partial(beta) == Catch::Approx(testutil::fd_partial(fch, {0.7}, beta)).margin(1e-7));
    CHECK(sh.partial(beta) == Catch::Approx(testutil::fd_partial(fsh, {0.7}, beta)).margin(1e-7));
  }
  // cosh^2 - sinh^2 = 1 as jets
  Jet one = ch * ch - sh * sh;
  CHECK(one.value() == Catch::Approx(1.0));
  for (int i = 1; i < one.size(); ++i) CHECK(std::abs(one.raw(i)) < 1e-13);
}

TEST_CASE("cotton-york classification is conformally invariant") {
  MetricSpec m = load("rev3.gmet");
  auto alpha = parse_expression("0.3*t - 0.2*x + 0.1*y^2", m.var_names);
  MetricSpec mc = conformal_rescale(m, alpha);
  for (double x : {1.0, 1.5}) {
    std::vector<double> p{0.2, x, 0.4};
    std::vector<VecD> dirs[2];
    for (int which = 0; which < 2; ++which) {
      const MetricSpec& mm = which ? mc : m;
      CurvaturePoint cp = curvature_point(mm, p, 3);
      Frame f = orthonormal_frame(cp);
      MatJ cyf = f.e.transposed() * cp.cy * f.e;
      MatD cyv(3, 3, 0.0);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) cyv(a, b) = cyf(a, b).value();
      CYClass cls = classify_cy(cyv, 1e-9 * (1 + cp.riemann_scale()));
      REQUIRE(cls.kind == CYKind::Degenerate);
      for (const auto& d : cls.eigenflag_dirs) dirs[which].push_back(f.to_coords(d));
    }
    // direction sets agree up to normalization (compare g-angles)
    MatD gv = load("rev3.gmet").value_at(p);
    for (const auto& a : dirs[0]) {
      double best = 0;
      for (const auto& b : dirs[1]) {
        double num = 0, na = 0, nb = 0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            num += gv(i, j) * a[i] * b[j];
            na += gv(i, j) * a[i] * a[j];
            nb += gv(i, j) * b[i] * b[j];
          }
        best = std::max(best, std::abs(num) / std::sqrt(na * nb));
      }
      CHECK(best > 1.0 - 1e-6);
    }
  }
}

TEST_CASE("classify_weyl flags near-degenerate spectra as ambiguous") {
  MatD w(6, 6, 0.0);
  // doubled eigenvalues with one gap just 3x the degeneracy threshold
  double tau_deg_abs = 1e-7;  // tau_deg * max(1, norm), norm < 1 here
  double vals[6] = {-4e-7, -4e-7, 0.0, 0.0, 3e-7, 3e-7 + 3 * tau_deg_abs};
  for (int i = 0; i < 6; ++i) w(i, i) = vals[i];
  WeylClass cls = classify_weyl(w, 1e-12);
  CHECK(cls.ambiguous);
  CHECK(cls.min_gap_ratio < 10.0);
  MatD w2(6, 6, 0.0);
  double vals2[6] = {-4e-3, -4e-3, 0.0, 0.0, 4e-3, 4e-3};
  for (int i = 0; i < 6; ++i) w2(i, i) = vals2[i];
  CHECK_FALSE(classify_weyl(w2, 1e-12).ambiguous);
}

TEST_CASE("factor decisions flag margins within 10x of tolerance") {
  MetricSpec mb = load("typeb.gmet");
  RegionSpec r = box({{0, 1}, {1, 2}, {0, 1}, {0, 1}}, 2, 4);
  DistributionSpec D;
  D.fields = {parse_vector_field("dx", mb.var_names)};
  Thresholds th;
  auto fd = conformal_factor_decision(D, mb, r, th);
  REQUIRE_FALSE(fd.is_conformal_factor);
  double worst = fd.find("umbilicity(Dperp)")->worst;
  // rerun with the tolerance sitting right under the failing margin
  Thresholds near;
  near.tol = worst / 2;
  auto fd2 = conformal_factor_decision(D, mb, r, near);
  CHECK_FALSE(fd2.is_conformal_factor);
  CHECK(fd2.ambiguous);
  // and far below: decisive
  Thresholds far;
  far.tol = worst / 1e5;
  auto fd3 = conformal_factor_decision(D, mb, r, far);
  CHECK_FALSE(fd3.ambiguous);
}

TEST_CASE("killing detector reports mixed regions") {
  MetricSpec rev;
  rev.dim = 2;
  rev.var_names = {"x", "y"};
  rev.entries.assign(4, nullptr);
  rev.at(0, 0) = parse_expression("1", rev.var_names);
  rev.at(0, 1) = ExprNode::constant(0.0);
  rev.at(1, 0) = ExprNode::constant(0.0);
  rev.at(1, 1) = parse_expression("(2 + sin(x))^2", rev.var_names);
  // K = sin(x)/(2+sin(x)) has a critical line at x = pi/2; the middle grid
  // plane lands exactly on it.
  RegionSpec r = box({{M_PI / 2 - 0.5, M_PI / 2 + 0.5}, {0, 1}}, 3, 6);
  Thresholds th;
  auto det = killing_detect_surface(surface_metric_fn(rev), r, th);
  CHECK(det.verdict == KillingVerdict::Mixed);
  CHECK(det.const_curv_samples > 0);
  CHECK(det.variable_curv_samples > 0);
}

TEST_CASE("3d decide: mixed zero/degenerate region is ambiguous") {
  Verdict v = decide_lcw_3d(load("mixed3.gmet"), box({{0, 1}, {-0.5, 0.5}, {0, 1}}, 3, 6));
  CHECK(v.outcome == RegionOutcome::Ambiguous);
  CHECK(v.exit_code() == 2);
  CHECK(v.class_counts.at("zero") > 0);
  CHECK(v.class_counts.at("degenerate") > 0);
}

TEST_CASE("3d decide: nondegenerate present wins even in mixed regions") {
  // the determinant of CY vanishes on the coordinate planes of this fixture,
  // so a region touching t = 0 mixes degenerate and nondegenerate samples
  Verdict v = decide_lcw_3d(load("nondeg3.gmet"), box({{0, 0.8}, {0.2, 0.8}, {0.2, 0.8}}, 3, 6));
  CHECK(v.outcome == RegionOutcome::NoLcw);
  CHECK(v.class_counts.at("nondegenerate") > 0);
  CHECK(v.class_counts.count("degenerate") + v.class_counts.count("zero") > 0);
}

TEST_CASE("4d decide: generic metric is type A with no LCWs") {
  MetricSpec m = testutil::random_metric(41, 4);
  Verdict v = decide_lcw_4d(m, box({{-0.4, 0.4}, {-0.4, 0.4}, {-0.4, 0.4}, {-0.4, 0.4}}, 2, 4));
  CHECK(v.outcome == RegionOutcome::NoLcw);
  CHECK(v.class_counts.at("A") > 0);
  bool reason_a = false;
  for (const auto& r : v.reasons) reason_a = reason_a || r.rule == "weyl-type-A";
  CHECK(reason_a);
}

TEST_CASE("verdicts commute with coordinate relabeling") {
  // the type-B fixture with the roles of y and z exchanged
  MetricSpec swapped = parse_metric(
      "dim = 4\ng tt = 1\ng xx = 1\ng yy = x^2\ng zz = x\ndomain x > 0\n");
  Verdict v = decide_lcw_4d(swapped, box({{0, 1}, {1, 2}, {0, 1}, {0, 1}}, 2, 4));
  CHECK(v.outcome == RegionOutcome::LcwExists);
  REQUIRE(v.lcw_directions.size() == 3);
  CHECK(v.lcw_directions[0] == "dt");
  CHECK(v.lcw_directions[1] == "dy");
  CHECK(v.lcw_directions[2] == "dz");
}

TEST_CASE("product branch consequence checks on a true product") {
  Verdict v = decide_lcw_4d(load("rev_x_ellipsoid.gmet"),
                            box({{0.2, 0.9}, {0.0, 1.0}, {0.6, 1.0}, {0.3, 0.7}}, 2, 4));
  REQUIRE(v.product.attempted);
  CHECK(v.product.path_independence < 1e-8);
  CHECK(v.product.cross_independence < 1e-8);
}
