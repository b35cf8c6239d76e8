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

static RegionSpec box(const MetricSpec& m, std::vector<std::pair<double, double>> iv,
                      int samples = 3, int extra = 10) {
  RegionSpec r;
  for (auto [lo, hi] : iv) r.intervals.push_back({lo, hi});
  r.samples_per_axis = samples;
  r.extra_samples = extra;
  (void)m;
  return r;
}

static DistributionSpec span_of(const MetricSpec& m, std::initializer_list<const char*> fields) {
  DistributionSpec d;
  for (const char* f : fields) d.fields.push_back(parse_vector_field(f, m.var_names));
  return d;
}

TEST_CASE("lie brackets") {
  auto names = default_var_names(4);
  VectorFieldSpec dt = parse_vector_field("dt", names);
  VectorFieldSpec dy = parse_vector_field("dy", names);
  VecD b = lie_bracket(dt, dy, {0.3, 0.4, 0.5, 0.6});
  for (int i = 0; i < 4; ++i) CHECK(b[i] == 0.0);

  // planar rotation: X = (-x, t) in the (t, x) plane; [X, dt] = (0, -1)
  VectorFieldSpec rot = parse_vector_field("-x*dt + t*dx", names);
  VecD b2 = lie_bracket(rot, dt, {0.7, -0.2, 0, 0});
  CHECK(b2[0] == Catch::Approx(0.0).margin(1e-14));
  CHECK(b2[1] == Catch::Approx(-1.0));

  // random polynomial fields against the finite-difference oracle
  RandomExpr re(808, 4);
  for (int trial = 0; trial < 5; ++trial) {
    VectorFieldSpec X, Y;
    for (int i = 0; i < 4; ++i) {
      X.comps.push_back(re.gen(2));
      Y.comps.push_back(re.gen(2));
    }
    auto p = re.point(-0.8, 0.8);
    VecD br = lie_bracket(X, Y, p);
    for (int i = 0; i < 4; ++i) {
      double fd = 0;
      for (int j = 0; j < 4; ++j) {
        std::array<int, 4> ej{};
        ej[j] = 1;
        auto yi = [&](const std::vector<double>& q) { return eval_expr_value(Y.comps[i], q); };
        auto xi = [&](const std::vector<double>& q) { return eval_expr_value(X.comps[i], q); };
        fd += eval_expr_value(X.comps[j], p) * testutil::fd_partial(yi, p, ej) -
              eval_expr_value(Y.comps[j], p) * testutil::fd_partial(xi, p, ej);
      }
      CHECK(br[i] == Catch::Approx(fd).margin(1e-6 * (1 + std::abs(fd))));
    }
  }
}

TEST_CASE("integrability") {
  MetricSpec mc = load("typec.gmet");
  RegionSpec r = box(mc, {{0, 1}, {1, 2}, {0, 1}, {0, 1}});
  CHECK(integrability_check(span_of(mc, {"dt", "dx"}), mc, r).pass);
  CHECK(integrability_check(span_of(mc, {"dy", "dz"}), mc, r).pass);

  // contact distribution span{ y dt + dx, dy } is not integrable:
  // [X1, X2] = -dt.
  MetricSpec f3 = load("flat3.gmet");
  RegionSpec r3 = box(f3, {{0, 1}, {0, 1}, {0, 1}});
  auto contact = span_of(f3, {"y*dt + dx", "dy"});
  auto res = integrability_check(contact, f3, r3);
  CHECK_FALSE(res.pass);
  CHECK(res.worst > 0.1);
  VecD br = lie_bracket(contact.fields[0], contact.fields[1], {0.2, 0.3, 0.4});
  CHECK(br[0] == Catch::Approx(-1.0));
}

TEST_CASE("second fundamental form of the fixtures") {
  MetricSpec mb = load("typeb.gmet");
  {
    auto D = span_of(mb, {"dt", "dy", "dz"});  // {dx}^perp
    auto sff = second_fundamental_form(D, mb, {0, 2, 0, 0});
    REQUIRE(sff.rank == 3);
    // basis is (dt, normalized dy, normalized dz); values along the unit
    // normal dx are the x-components.
    std::array<double, 3> expect{0.0, -0.25, -0.5};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double want = a == b ? expect[a] : 0.0;
        CHECK(sff.form[a][b][1].value() == Catch::Approx(want).margin(1e-12));
      }
    CHECK(sff.sym_defect < 1e-13);
  }
  MetricSpec mcx = load("typec.gmet");
  {
    auto D = span_of(mcx, {"dt", "dy", "dz"});
    auto sff = second_fundamental_form(D, mcx, {0, 1, 0, 0});
    std::array<double, 3> expect{0.0, -1.5, 0.5};
    for (int a = 0; a < 3; ++a)
      CHECK(sff.form[a][a][1].value() == Catch::Approx(expect[a]).margin(1e-12));
  }
  MetricSpec f4 = load("flat4.gmet");
  {
    auto D = span_of(f4, {"dt", "dx"});
    auto sff = second_fundamental_form(D, f4, {0.5, 0.5, 0.5, 0.5});
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int i = 0; i < 4; ++i) CHECK(sff.form[a][b][i].value() == 0.0);
  }
}

TEST_CASE("umbilicity of the fixtures") {
  MetricSpec mc = load("typec.gmet");
  RegionSpec r = box(mc, {{0, 1}, {1, 2}, {0, 1}, {0, 1}});
  {
    auto rep = umbilicity_check(span_of(mc, {"dy", "dz"}), mc, r);
    CHECK_FALSE(rep.umbilic);
    // at x: II = diag(-3/(2x), 1/(2x)) along dx; anisotropy 1/x relative to
    // 1 + 3/(2x); worst over the region is at x = 1: 1/2.5.
    CHECK(rep.anisotropy == Catch::Approx(0.4).epsilon(1e-6));
  }
  MetricSpec mb = load("typeb.gmet");
  {
    auto rep = umbilicity_check(span_of(mb, {"dt"}), mb, r);
    CHECK(rep.umbilic);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(rep.H[i]) < 1e-12);
  }
  MetricSpec f4 = load("flat4.gmet");
  RegionSpec rf = box(f4, {{0, 1}, {0, 1}, {0, 1}, {0, 1}});
  {
    auto rep = umbilicity_check(span_of(f4, {"dt", "dx"}), f4, rf);
    CHECK(rep.umbilic);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(rep.H[i]) < 1e-14);
  }
}

TEST_CASE("rank-1 mean curvature is the projected self-acceleration") {
  MetricSpec mb = load("typeb.gmet");
  auto D = span_of(mb, {"dy"});
  CurvaturePoint cp = curvature_point(mb, {0, 2, 0, 0}, 3);
  auto sff = second_fundamental_form_point(cp, projector_from_fields(cp, D.fields));
  // H = -1/(2x) dx at x = 2
  CHECK(sff.H[0].value() == Catch::Approx(0.0).margin(1e-13));
  CHECK(sff.H[1].value() == Catch::Approx(-0.25).margin(1e-12));
  CHECK(sff.H[2].value() == Catch::Approx(0.0).margin(1e-13));
  CHECK(sff.umb_defect < 1e-13);  // rank 1 is always umbilic
}

TEST_CASE("phi form on products") {
  // exact product: Phi = 0 identically
  MetricSpec prod = MetricSpec::diagonal(
      default_var_names(4),
      {parse_expression("exp(x)", default_var_names(4)),
       parse_expression("exp(x)", default_var_names(4)),
       parse_expression("exp(y)", default_var_names(4)),
       parse_expression("exp(y)", default_var_names(4))});
  auto D = span_of(prod, {"dt", "dx"});
  PhiForm ph = phi_form(D, prod, {0.3, 0.4, 0.5, 0.6});
  for (int i = 0; i < 4; ++i) CHECK(std::abs(ph.phi[i].value()) < 1e-13);
  CHECK(ph.closedness_defect < 1e-13);

  // conformally rescaled product: Phi = +d(alpha) when the input metric is
  // e^{alpha} (product); the product representative is e^{-alpha} g.
  auto alpha = parse_expression("x + y^2", default_var_names(4));
  MetricSpec resc = conformal_rescale(prod, alpha);
  RandomExpr re(606, 4);
  for (int trial = 0; trial < 3; ++trial) {
    auto p = re.point(-0.8, 0.8);
    PhiForm ph2 = phi_form(D, resc, p);
    CHECK(ph2.phi[0].value() == Catch::Approx(0.0).margin(1e-9));
    CHECK(ph2.phi[1].value() == Catch::Approx(1.0).epsilon(1e-9));
    CHECK(ph2.phi[2].value() == Catch::Approx(2 * p[2]).epsilon(1e-9));
    CHECK(ph2.phi[3].value() == Catch::Approx(0.0).margin(1e-9));
    CHECK(ph2.closedness_defect < 1e-10);
  }
}

TEST_CASE("phi form on the type C fixture") {
  // D = <dy, dz>: Phi = (1/x) dx, closed; umbilicity is what fails.
  MetricSpec mc = load("typec.gmet");
  auto D = span_of(mc, {"dy", "dz"});
  for (double x : {0.8, 1.0, 1.9}) {
    PhiForm ph = phi_form(D, mc, {0.1, x, 0.2, 0.3});
    CHECK(ph.phi[0].value() == Catch::Approx(0.0).margin(1e-12));
    CHECK(ph.phi[1].value() == Catch::Approx(1.0 / x).epsilon(1e-11));
    CHECK(ph.phi[2].value() == Catch::Approx(0.0).margin(1e-12));
    CHECK(ph.phi[3].value() == Catch::Approx(0.0).margin(1e-12));
    CHECK(ph.closedness_defect < 1e-11);
  }
  RegionSpec r = box(mc, {{0, 1}, {1, 2}, {0, 1}, {0, 1}});
  CHECK(closedness_check(D, mc, r).pass);

  // the two trace summands are reported separately and sum to Phi
  PhiForm ph = phi_form(D, mc, {0.1, 1.2, 0.2, 0.3});
  for (int i = 0; i < 4; ++i)
    CHECK(ph.phi[i].value() ==
          Catch::Approx(ph.term_D[i].value() + ph.term_perp[i].value()).margin(1e-14));
}

TEST_CASE("phi is tensorial in the spanning fields") {
  MetricSpec mc = load("typec.gmet");
  auto D1 = span_of(mc, {"dy", "dz"});
  auto D2 = span_of(mc, {"exp(t)*dy", "(2 + sin(x))*dz"});  // rescaled spans
  std::vector<double> p{0.2, 1.3, 0.4, 0.5};
  PhiForm a = phi_form(D1, mc, p), b = phi_form(D2, mc, p);
  for (int i = 0; i < 4; ++i)
    CHECK(a.phi[i].value() == Catch::Approx(b.phi[i].value()).margin(1e-9));
}

TEST_CASE("lie conformality") {
  MetricSpec prod = MetricSpec::diagonal(
      default_var_names(4),
      {parse_expression("exp(x)", default_var_names(4)),
       parse_expression("exp(x)", default_var_names(4)),
       parse_expression("exp(y)", default_var_names(4)),
       parse_expression("exp(y)", default_var_names(4))});
  RegionSpec r = box(prod, {{0, 1}, {0, 1}, {0, 1}, {0, 1}}, 2, 5);
  CHECK(lie_conformality_check(span_of(prod, {"dt", "dx"}), prod, r).pass);

  auto alpha = parse_expression("0.3*x + 0.2*y*z", default_var_names(4));
  MetricSpec resc = conformal_rescale(prod, alpha);
  CHECK(lie_conformality_check(span_of(resc, {"dt", "dx"}), resc, r).pass);

  MetricSpec mc = load("typec.gmet");
  RegionSpec rc = box(mc, {{0, 1}, {1, 2}, {0, 1}, {0, 1}}, 2, 5);
  auto res = lie_conformality_check(span_of(mc, {"dy", "dz"}), mc, rc);
  CHECK_FALSE(res.pass);
  CHECK(res.worst > 0.1);
}

TEST_CASE("conformal factor decisions on the fixtures") {
  MetricSpec mb = load("typeb.gmet");
  RegionSpec r = box(mb, {{0, 1}, {1, 2}, {0, 1}, {0, 1}}, 2, 6);
  for (const char* dir : {"dt", "dy", "dz"}) {
    auto fd = conformal_factor_decision(span_of(mb, {dir}), mb, r);
    CHECK(fd.is_conformal_factor);
    CHECK(fd.criterion2);
    CHECK_FALSE(fd.inconsistent);
  }
  {
    auto fd = conformal_factor_decision(span_of(mb, {"dx"}), mb, r);
    CHECK_FALSE(fd.is_conformal_factor);
    CHECK_FALSE(fd.criterion2);
    CHECK_FALSE(fd.inconsistent);
    CHECK(fd.find("umbilicity(Dperp)")->worst > 1e-3);
  }
  MetricSpec mc = load("typec.gmet");
  {
    auto fd = conformal_factor_decision(span_of(mc, {"dy", "dz"}), mc, r);
    CHECK_FALSE(fd.is_conformal_factor);
    CHECK(fd.find("umbilicity(D)")->worst > 0.1);
    CHECK(fd.find("closedness(Phi)")->pass());
    CHECK_FALSE(fd.inconsistent);
  }
  // true product: both factor distributions pass with H1 + H2 = 0
  MetricSpec prod = MetricSpec::diagonal(
      default_var_names(4),
      {parse_expression("exp(x)", default_var_names(4)),
       parse_expression("exp(x)", default_var_names(4)),
       parse_expression("exp(y)", default_var_names(4)),
       parse_expression("exp(y)", default_var_names(4))});
  RegionSpec rp = box(prod, {{0, 1}, {0, 1}, {0, 1}, {0, 1}}, 2, 6);
  for (auto fields : {std::initializer_list<const char*>{"dt", "dx"},
                      std::initializer_list<const char*>{"dy", "dz"}}) {
    auto fd = conformal_factor_decision(span_of(prod, fields), prod, rp);
    CHECK(fd.is_conformal_factor);
    CHECK(fd.criterion2);
  }
}

TEST_CASE("criteria (2) and (3) agree on random conformal products") {
  for (unsigned seed = 0; seed < 30; ++seed) {
    ExprPtr alpha;
    MetricSpec m = testutil::random_conformal_product(9000 + seed, &alpha);
    RegionSpec r = box(m, {{-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}}, 2, 6);
    auto D = span_of(m, {"dt", "dx"});
    auto fd = conformal_factor_decision(D, m, r);
    INFO("seed " << seed);
    CHECK(fd.is_conformal_factor);
    CHECK(fd.criterion2);
    CHECK_FALSE(fd.inconsistent);
  }
}

TEST_CASE("killing checks") {
  // e^{J(x)} (dt^2 + dx^2) with J = sin(x): dt is Killing
  auto names3 = default_var_names(3);
  MetricSpec m = MetricSpec::diagonal(
      default_var_names(4),
      {parse_expression("exp(sin(x))", default_var_names(4)),
       parse_expression("exp(sin(x))", default_var_names(4)),
       parse_expression("1", default_var_names(4)),
       parse_expression("1", default_var_names(4))});
  RegionSpec r = box(m, {{0, 1}, {0, 1}, {0, 1}, {0, 1}}, 2, 6);
  CHECK(killing_check(m, parse_vector_field("dt", m.var_names), r).pass);
  CHECK_FALSE(killing_check(m, parse_vector_field("dx", m.var_names), r).pass);

  // planar rotation is Killing for the flat metric
  MetricSpec f3 = load("flat3.gmet");
  RegionSpec r3 = box(f3, {{0, 1}, {0, 1}, {0, 1}}, 2, 6);
  CHECK(killing_check(f3, parse_vector_field("-y*dx + x*dy", names3), r3).pass);

  // dt is Killing whenever the entries are t-independent
  for (const char* fx : {"typeb.gmet", "typec.gmet"}) {
    MetricSpec mf = load(fx);
    RegionSpec rf = box(mf, {{0, 1}, {1, 2}, {0, 1}, {0, 1}}, 2, 6);
    CHECK(killing_check(mf, parse_vector_field("dt", mf.var_names), rf).pass);
  }

  // a coordinate field on a scalene ellipsoid chart is not Killing
  MetricSpec ell;
  ell.dim = 2;
  ell.var_names = {"x", "y"};
  ell.entries.assign(4, nullptr);
  ell.at(0, 0) = parse_expression("cos(x)^2*cos(y)^2 + 1.69*cos(x)^2*sin(y)^2 + 2.89*sin(x)^2",
                                  ell.var_names);
  auto off = parse_expression("0.69*sin(x)*cos(x)*sin(y)*cos(y)", ell.var_names);
  ell.at(0, 1) = off;
  ell.at(1, 0) = off;
  ell.at(1, 1) = parse_expression("sin(x)^2*sin(y)^2 + 1.69*sin(x)^2*cos(y)^2", ell.var_names);
  RegionSpec re2 = box(ell, {{0.6, 1.0}, {0.3, 0.7}}, 3, 6);
  VectorFieldSpec dx2;
  dx2.comps = {ExprNode::constant(1.0), ExprNode::constant(0.0)};
  auto kr = killing_check(ell, dx2, re2);
  CHECK_FALSE(kr.pass);
  CHECK(kr.worst > 1e-3);
}

TEST_CASE("killing detection on surfaces") {
  Thresholds th;
  // revolution surface with genuinely nonconstant curvature
  MetricSpec rev;
  rev.dim = 2;
  rev.var_names = {"x", "y"};
  rev.entries.assign(4, nullptr);
  rev.at(0, 0) = parse_expression("1", rev.var_names);
  rev.at(0, 1) = ExprNode::constant(0.0);
  rev.at(1, 0) = ExprNode::constant(0.0);
  rev.at(1, 1) = parse_expression("(2 + sin(x))^2", rev.var_names);
  RegionSpec r = box(rev, {{0.2, 0.9}, {0.0, 1.0}}, 3, 6);
  auto det = killing_detect_surface(surface_metric_fn(rev), r, th);
  CHECK(det.verdict == KillingVerdict::Found);
  REQUIRE_FALSE(det.directions.empty());
  for (const auto& d : det.directions) {
    CHECK(std::abs(d[0]) < 1e-8);  // direction is the rotational field dy
    CHECK(std::abs(d[1]) > 1e-3);
  }

  // constant curvature: gradient of K vanishes identically
  MetricSpec pses = rev;
  pses.at(1, 1) = parse_expression("cosh(x)^2", rev.var_names);
  CHECK(killing_detect_surface(surface_metric_fn(pses), r, th).verdict ==
        KillingVerdict::Inapplicable);

  MetricSpec sphere = rev;
  sphere.at(1, 1) = parse_expression("sin(x)^2", rev.var_names);
  RegionSpec rs = box(sphere, {{0.4, 1.0}, {0.0, 1.0}}, 3, 6);
  CHECK(killing_detect_surface(surface_metric_fn(sphere), rs, th).verdict ==
        KillingVerdict::Inapplicable);

  // scalene ellipsoid chart: no Killing field
  MetricSpec ell;
  ell.dim = 2;
  ell.var_names = {"x", "y"};
  ell.entries.assign(4, nullptr);
  ell.at(0, 0) = parse_expression("cos(x)^2*cos(y)^2 + 1.69*cos(x)^2*sin(y)^2 + 2.89*sin(x)^2",
                                  ell.var_names);
  auto off = parse_expression("0.69*sin(x)*cos(x)*sin(y)*cos(y)", ell.var_names);
  ell.at(0, 1) = off;
  ell.at(1, 0) = off;
  ell.at(1, 1) = parse_expression("sin(x)^2*sin(y)^2 + 1.69*sin(x)^2*cos(y)^2", ell.var_names);
  RegionSpec re2 = box(ell, {{0.6, 1.0}, {0.3, 0.7}}, 3, 6);
  auto dell = killing_detect_surface(surface_metric_fn(ell), re2, th);
  CHECK(dell.verdict == KillingVerdict::None);
  CHECK(std::max(dell.worst_residual, dell.worst_closedness) > 1e-4);
}

TEST_CASE("II symmetry matches bracket integrability on random spans") {
  RandomExpr re(2468, 4);
  MetricSpec m = testutil::random_metric(135, 4);
  for (int trial = 0; trial < 8; ++trial) {
    DistributionSpec D;
    for (int k = 0; k < 2; ++k) {
      VectorFieldSpec f;
      for (int i = 0; i < 4; ++i)
        f.comps.push_back(trial % 2 == 0 && k == 0 && i >= 2 ? re.gen(1)
                                                             : ExprNode::constant(i == k ? 1.0 : 0.0));
      D.fields.push_back(f);
    }
    RegionSpec r = box(m, {{-0.4, 0.4}, {-0.4, 0.4}, {-0.4, 0.4}, {-0.4, 0.4}}, 2, 4);
    auto br = integrability_check(D, m, r, 1e-8);
    double worst_sym = 0;
    for (const auto& p : r.sample_points()) {
      CurvaturePoint cp = curvature_point(m, p, 2);
      auto sff = second_fundamental_form_point(cp, projector_from_fields(cp, D.fields));
      worst_sym = std::max(worst_sym, sff.sym_defect);
    }
    INFO("trial " << trial << " bracket " << br.worst << " sym " << worst_sym);
    CHECK((br.worst <= 1e-7) == (worst_sym <= 1e-7));
  }
}
