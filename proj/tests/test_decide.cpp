#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "testutil.hpp"

using namespace lcw;
using testutil::RandomExpr;

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

static bool has_direction(const Verdict& v, const std::string& label) {
  for (const auto& d : v.lcw_directions)
    if (d == label) return true;
  return false;
}

TEST_CASE("3d: flat space is conformally flat") {
  Verdict v = decide_lcw_3d(load("flat3.gmet"), box({{0, 1}, {0, 1}, {0, 1}}, 2, 6));
  CHECK(v.outcome == RegionOutcome::ConformallyFlat);
  CHECK(v.exit_code() == 0);
}

TEST_CASE("3d: revolution product has an LCW along dt") {
  Verdict v = decide_lcw_3d(load("rev3.gmet"), box({{0, 1}, {1, 2}, {0, 1}}, 3, 8));
  CHECK(v.outcome == RegionOutcome::LcwExists);
  CHECK(has_direction(v, "dt"));
  CHECK(v.class_counts.at("degenerate") > 0);
  CHECK(v.exit_code() == 0);
  // every reported LCW direction satisfies the parallel-field verification
  for (const auto& d : v.directions)
    if (d.decision.is_conformal_factor) {
      CHECK(d.parallel_defect >= 0);
      CHECK(d.parallel_defect < 1e-8);
    }
}

TEST_CASE("3d: nondegenerate cotton-york forbids LCWs") {
  Verdict v = decide_lcw_3d(load("nondeg3.gmet"),
                            box({{0.2, 0.8}, {0.2, 0.8}, {0.2, 0.8}}, 3, 8));
  CHECK(v.outcome == RegionOutcome::NoLcw);
  CHECK(v.class_counts.at("nondegenerate") > 0);
  CHECK(v.exit_code() == 0);
}

TEST_CASE("4d: type B fixture has LCWs along dt, dy, dz and rejects dx") {
  Verdict v = decide_lcw_4d(load("typeb.gmet"), box({{0, 1}, {1, 2}, {0, 1}, {0, 1}}, 3, 8));
  CHECK(v.outcome == RegionOutcome::LcwExists);
  CHECK(v.class_counts.at("B") == 3 * 3 * 3 * 3 + 8);
  REQUIRE(v.lcw_directions.size() == 3);
  CHECK(has_direction(v, "dt"));
  CHECK(has_direction(v, "dy"));
  CHECK(has_direction(v, "dz"));
  CHECK_FALSE(has_direction(v, "dx"));
  bool dx_rejected = false;
  for (const auto& d : v.directions)
    if (d.label == "dx" && !d.decision.is_conformal_factor) dx_rejected = true;
  CHECK(dx_rejected);
  CHECK_FALSE(v.ambiguous);
  for (const auto& d : v.directions)
    if (d.decision.is_conformal_factor) CHECK(d.parallel_defect < 1e-8);
}

TEST_CASE("4d: type C fixture is not a product but has three LCWs") {
  Verdict v = decide_lcw_4d(load("typec.gmet"), box({{0, 1}, {1, 2}, {0, 1}, {0, 1}}, 3, 8));
  CHECK(v.outcome == RegionOutcome::LcwExists);
  CHECK(v.class_counts.at("C") > 0);
  // the product branch is blocked by the umbilicity failure
  bool not_product = false;
  for (const auto& r : v.reasons)
    if (r.rule == "not-conformal-product") not_product = true;
  CHECK(not_product);
  CHECK_FALSE(v.product.attempted);
  REQUIRE(v.lcw_directions.size() == 3);
  CHECK(has_direction(v, "dt"));
  CHECK(has_direction(v, "dy"));
  CHECK(has_direction(v, "dz"));
  // sweeps: one survivor in the (t,x) plane, two in the (y,z) plane
  REQUIRE(v.sweeps.size() == 2);
  int n_survivors = 0;
  for (const auto& s : v.sweeps) n_survivors += static_cast<int>(s.survivors.size());
  CHECK(n_survivors == 3);
}

TEST_CASE("sweep angles on the type C fixture") {
  MetricSpec m = load("typec.gmet");
  RegionSpec r = box({{0, 1}, {1, 2}, {0, 1}, {0, 1}}, 3, 8);
  Thresholds th;
  // plane <dy, dz>
  {
    auto fields = std::vector<VectorFieldSpec>{parse_vector_field("dy", m.var_names),
                                               parse_vector_field("dz", m.var_names)};
    PlaneProvider provider = [&fields](const CurvaturePoint& cp) {
      return projector_from_fields(cp, fields).P;
    };
    SweepResult sw = direction_sweep(m, provider, {2, 3}, r, th);
    REQUIRE(sw.survivors.size() == 2);
    CHECK(sw.survivors[0].angle == Catch::Approx(0.0).margin(1e-4));
    CHECK(sw.survivors[1].angle == Catch::Approx(M_PI / 2).margin(1e-4));
  }
  // plane <dt, dx>
  {
    auto fields = std::vector<VectorFieldSpec>{parse_vector_field("dt", m.var_names),
                                               parse_vector_field("dx", m.var_names)};
    PlaneProvider provider = [&fields](const CurvaturePoint& cp) {
      return projector_from_fields(cp, fields).P;
    };
    SweepResult sw = direction_sweep(m, provider, {0, 1}, r, th);
    REQUIRE(sw.survivors.size() == 1);
    CHECK(sw.survivors[0].angle == Catch::Approx(0.0).margin(1e-4));
  }
  // flat metric: every angle passes and the sweep reports the degeneracy
  {
    MetricSpec f4 = load("flat4.gmet");
    auto fields = std::vector<VectorFieldSpec>{parse_vector_field("dt", f4.var_names),
                                               parse_vector_field("dx", f4.var_names)};
    PlaneProvider provider = [&fields](const CurvaturePoint& cp) {
      return projector_from_fields(cp, fields).P;
    };
    SweepResult sw =
        direction_sweep(f4, provider, {0, 1}, box({{0, 1}, {0, 1}, {0, 1}, {0, 1}}, 2, 4), th);
    CHECK(sw.all_angles);
  }
}

TEST_CASE("4d: product of unit spheres - constant curvature factors") {
  Verdict v = decide_lcw_4d(load("spheres.gmet"),
                            box({{0.1, 0.9}, {0.1, 0.9}, {0.1, 0.9}, {0.1, 0.9}}, 3, 8));
  CHECK(v.class_counts.at("C") > 0);
  REQUIRE(v.product.attempted);
  CHECK(v.product.coordinate_aligned);
  CHECK(v.product.factor_verdict[0] == KillingVerdict::Inapplicable);
  CHECK(v.product.factor_verdict[1] == KillingVerdict::Inapplicable);
  // constant-curvature surfaces are locally surfaces of revolution
  CHECK(v.outcome == RegionOutcome::LcwExists);
  bool delegated = false;
  for (const auto& r : v.reasons)
    if (r.rule == "factor-constant-curvature") delegated = true;
  CHECK(delegated);
}

TEST_CASE("4d: revolution times ellipsoid has an LCW tangent to the first factor") {
  Verdict v = decide_lcw_4d(load("rev_x_ellipsoid.gmet"),
                            box({{0.2, 0.9}, {0.0, 1.0}, {0.6, 1.0}, {0.3, 0.7}}, 3, 8));
  CHECK(v.outcome == RegionOutcome::LcwExists);
  REQUIRE(v.product.attempted);
  CHECK(v.product.coordinate_aligned);
  CHECK(v.product.factor_verdict[0] == KillingVerdict::Found);
  CHECK(v.product.factor_verdict[1] == KillingVerdict::None);
  CHECK(has_direction(v, "tangent-to-factor(t,x)"));
}

TEST_CASE("4d: product of scalene ellipsoids admits no LCW") {
  Verdict v = decide_lcw_4d(load("ellipsoids.gmet"),
                            box({{0.6, 1.0}, {0.3, 0.7}, {0.55, 0.95}, {0.25, 0.65}}, 3, 8));
  CHECK(v.class_counts.at("C") == 3 * 3 * 3 * 3 + 8);
  REQUIRE(v.product.attempted);
  CHECK(v.product.factor_verdict[0] == KillingVerdict::None);
  CHECK(v.product.factor_verdict[1] == KillingVerdict::None);
  CHECK(v.outcome == RegionOutcome::NoLcw);
  CHECK(v.exit_code() == 0);
}

TEST_CASE("product surface lambda closed form") {
  auto names = default_var_names(4);
  // flat
  auto one = parse_expression("1", names);
  CHECK(product_surface_lambda(one, one, {0.3, 0.4, 0.5, 0.6}) == 0.0);
  // sphere x hyperbolic: s1 + s2 = 0, type D
  auto fs = parse_expression("4/(1 + t^2 + x^2)^2", names);
  auto fh = parse_expression("4/(1 - y^2 - z^2)^2", names);
  CHECK(product_surface_lambda(fs, fh, {0.3, 0.2, 0.3, 0.2}) ==
        Catch::Approx(0.0).margin(1e-12));
  // two unit spheres: lambda = 1/6 in the operator normalization
  auto hs = parse_expression("4/(1 + y^2 + z^2)^2", names);
  for (auto p : {std::vector<double>{0.1, 0.2, 0.3, 0.4}, std::vector<double>{0.5, 0.5, 0.5, 0.5}})
    CHECK(product_surface_lambda(fs, hs, p) == Catch::Approx(1.0 / 6).epsilon(1e-12));

  // against the pipeline entry <W(e1^e2), e1^e2> on random isothermal products
  RandomExpr re(13579, 4);
  for (int trial = 0; trial < 20; ++trial) {
    auto mkexp = [&](int v1, int v2) {
      auto a1 = ExprNode::binary(ExprOp::Mul, ExprNode::constant(re.unif(-0.6, 0.6)),
                                 ExprNode::variable(v1));
      auto a2 = ExprNode::binary(ExprOp::Mul, ExprNode::constant(re.unif(-0.6, 0.6)),
                                 ExprNode::binary(ExprOp::Mul, ExprNode::variable(v2),
                                                  ExprNode::variable(v2)));
      return ExprNode::apply(FuncKind::Exp, ExprNode::binary(ExprOp::Add, a1, a2));
    };
    auto f = mkexp(0, 1), h = mkexp(2, 3);
    MetricSpec m = MetricSpec::diagonal(names, {f, f, h, h});
    auto p = re.point(-0.7, 0.7);
    double lam = product_surface_lambda(f, h, p);
    CurvaturePoint cp = curvature_point(m, p, 3);
    WeylOperator W = weyl_operator(cp, orthonormal_frame(cp));
    CHECK(lam == Catch::Approx(W.matrix(0, 0).value()).margin(1e-10 * (1 + std::abs(lam))));
    // complementary slot pairs with it, off-block entries vanish
    CHECK(W.matrix(3, 3).value() == Catch::Approx(lam).margin(1e-10 * (1 + std::abs(lam))));
  }
}

TEST_CASE("conformal rescale and parallel check") {
  MetricSpec mc = load("typec.gmet");
  RegionSpec r = box({{0, 1}, {1, 2}, {0, 1}, {0, 1}}, 2, 6);
  {
    MetricSpec resc = conformal_rescale(mc, parse_expression("-3*log(x)", mc.var_names));
    CHECK(parallel_check(resc, parse_vector_field("dy", mc.var_names), r).pass);
    CHECK_FALSE(parallel_check(resc, parse_vector_field("dx", mc.var_names), r).pass);
    MetricSpec resc2 = conformal_rescale(mc, parse_expression("log(x)", mc.var_names));
    CHECK(parallel_check(resc2, parse_vector_field("dz", mc.var_names), r).pass);
  }
  MetricSpec mb = load("typeb.gmet");
  {
    MetricSpec resc = conformal_rescale(mb, parse_expression("-2*log(x)", mb.var_names));
    CHECK(parallel_check(resc, parse_vector_field("dz", mb.var_names), r).pass);
    MetricSpec resc1 = conformal_rescale(mb, parse_expression("-log(x)", mb.var_names));
    CHECK(parallel_check(resc1, parse_vector_field("dy", mb.var_names), r).pass);
    // alpha = 0: dt is already parallel for any t-independent diagonal metric
    CHECK(parallel_check(mb, parse_vector_field("dt", mb.var_names), r).pass);
  }
}

TEST_CASE("verdicts are conformally invariant") {
  MetricSpec mb = load("typeb.gmet");
  RegionSpec r = box({{0, 1}, {1, 2}, {0, 1}, {0, 1}}, 2, 4);
  Verdict ref = decide_lcw_4d(mb, r);
  RandomExpr re(8642, 4);
  for (int trial = 0; trial < 2; ++trial) {
    auto alpha = ExprNode::binary(
        ExprOp::Add,
        ExprNode::binary(ExprOp::Mul, ExprNode::constant(re.unif(-0.4, 0.4)),
                         ExprNode::variable(re.var())),
        ExprNode::binary(ExprOp::Mul, ExprNode::constant(re.unif(-0.2, 0.2)),
                         ExprNode::binary(ExprOp::Mul, ExprNode::variable(re.var()),
                                          ExprNode::variable(re.var()))));
    Verdict v = decide_lcw_4d(conformal_rescale(mb, alpha), r);
    CHECK(v.outcome == ref.outcome);
    REQUIRE(v.lcw_directions.size() == ref.lcw_directions.size());
    for (const auto& d : ref.lcw_directions) CHECK(has_direction(v, d));
  }
}

TEST_CASE("mixed regions are reported as ambiguous partitions") {
  // A metric that is flat near small y but curved at larger y would mix
  // classes; simplest check: a region crossing x = 0 fails loudly instead.
  MetricSpec mc = load("typec.gmet");
  RegionSpec bad = box({{0, 1}, {-1, 1}, {0, 1}, {0, 1}}, 2, 2);
  CHECK_THROWS_AS(decide_lcw_4d(mc, bad), SingularPointError);
}
