#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "logitnets/erm.hpp"
#include "logitnets/random.hpp"

using namespace logitnets;

namespace {

DataDistribution dist1(RealFn eta) {
    DataDistribution P;
    P.d = 1;
    P.eta = std::move(eta);
    return P;
}

RealFn constant(double c) {
    return [c](std::span<const double>) { return c; };
}

}  // namespace

TEST_CASE("sample: degenerate and balanced labels") {
    auto s1 = sample(dist1(constant(1.0)), 1000, 1);
    CHECK(std::all_of(s1.y.begin(), s1.y.end(), [](int y) { return y == 1; }));
    auto s0 = sample(dist1(constant(0.0)), 1000, 1);
    CHECK(std::all_of(s0.y.begin(), s0.y.end(), [](int y) { return y == -1; }));

    auto s = sample(dist1(constant(0.5)), 100000, 2);
    double frac = std::count(s.y.begin(), s.y.end(), 1) / 1e5;
    CHECK(std::abs(frac - 0.5) <= 3.0 * std::sqrt(0.25 / 1e5));
    CHECK(std::abs(frac - 0.5) <= 0.01);
    for (double x : s.x) REQUIRE((x >= 0.0 && x < 1.0));
}

TEST_CASE("sample is reproducible and seed-sensitive") {
    auto P = dist1([](std::span<const double> x) { return x[0]; });
    auto a = sample(P, 500, 42), b = sample(P, 500, 42), c = sample(P, 500, 43);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.x != c.x);
}

TEST_CASE("sample from a finite marginal") {
    DataDistribution P = dist1([](std::span<const double> x) { return x[0] < 0.5 ? 0.0 : 1.0; });
    P.marginal.uniform = false;
    P.marginal.points = {{0.2}, {0.7}};
    P.marginal.weights = {0.25, 0.75};
    auto s = sample(P, 40000, 5);
    double hi = std::count(s.x.begin(), s.x.end(), 0.7) / 40000.0;
    CHECK(std::abs(hi - 0.75) <= 3.0 * std::sqrt(0.75 * 0.25 / 40000.0));
    for (std::size_t i = 0; i < s.size(); ++i) REQUIRE(s.y[i] == (s.x[i] > 0.5 ? 1 : -1));
}

TEST_CASE("erm_finite: exactness, ties, selection") {
    auto P = dist1(constant(0.9));
    double fs = target_function(0.9);
    std::vector<RealFn> cls{constant(fs), constant(-fs)};
    int picked = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) picked += erm_finite(cls, sample(P, 1000, seed)).index == 0;
    CHECK(picked >= 198);

    auto s = sample(P, 50, 7);
    CHECK(erm_finite({constant(0.3)}, s).index == 0);
    CHECK(erm_finite({constant(0.3), constant(0.3)}, s).index == 0);

    Rng g(1);
    std::vector<RealFn> many;
    for (int i = 0; i < 12; ++i) many.push_back(constant(4.0 * uniform01(g) - 2.0));
    auto r = erm_finite(many, s);
    for (const auto& f : many) CHECK(r.empirical_risk <= empirical_phi_risk(f, s));
    CHECK(r.empirical_risk == empirical_phi_risk(many[r.index], s));
    CHECK(erm_finite(many, sample(P, 50, 7)).index == r.index);
}

TEST_CASE("erm_train: constant eta, separable toy, projection, errors") {
    TrainConfig cfg;
    cfg.width = 4;
    cfg.depth = 1;
    cfg.B = 5.0;
    cfg.F = 5.0;
    cfg.steps = 1500;
    cfg.batch = 64;
    cfg.step_size = 0.02;
    cfg.seed = 3;

    auto s9 = sample(dist1(constant(0.9)), 2000, 11);
    double p = std::count(s9.y.begin(), s9.y.end(), 1) / double(s9.size());
    auto r9 = erm_train(s9, cfg);
    CHECK(r9.report.empirical_risk <= entropy_H(p) + 0.05);
    CHECK(r9.report.max_abs_param <= cfg.B);
    CHECK(r9.report.optimization_gap >= 0.0);
    CHECK(is_member(r9.net, cfg.budget(1), 101));

    DataDistribution sep = dist1([](std::span<const double> x) { return x[0] < 0.5 ? 0.0 : 1.0; });
    sep.marginal.uniform = false;
    for (int i = 0; i < 8; ++i) {
        sep.marginal.points.push_back({i < 4 ? 0.1 + 0.1 * i : 0.3 + 0.1 * i});
        sep.marginal.weights.push_back(1.0 / 8);
    }
    auto ss = sample(sep, 400, 4);
    auto rs = erm_train(ss, cfg);
    int wrong = 0;
    for (std::size_t i = 0; i < ss.size(); ++i) wrong += sgn(rs.net(ss.point(i))) != ss.y[i];
    CHECK(wrong == 0);

    Sample empty;
    CHECK_THROWS(erm_train(empty, cfg));
    TrainConfig bad = cfg;
    bad.F = 10.0;  // above max(B, 1)
    CHECK_THROWS(erm_train(ss, bad));
}

TEST_CASE("erm_train is deterministic for a fixed seed") {
    TrainConfig cfg;
    cfg.width = 6;
    cfg.depth = 2;
    cfg.steps = 300;
    cfg.seed = 8;
    auto s = sample(dist1([](std::span<const double> x) { return 0.2 + 0.6 * x[0]; }), 300, 2);
    auto a = erm_train(s, cfg), b = erm_train(s, cfg);
    CHECK(serialize(a.net) == serialize(b.net));
    CHECK(a.report.empirical_risk == b.report.empirical_risk);
}

TEST_CASE("internal covering number") {
    // Points 0, 1, 2, 3 on a line: gamma = 1 needs {1, 3} or {0, 2} etc.
    std::vector<std::vector<double>> d(4, std::vector<double>(4));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) d[i][j] = std::abs(i - j);
    CHECK(internal_covering_number(d, 1.0) == 2);
    CHECK(internal_covering_number(d, 0.5) == 4);
    CHECK(internal_covering_number(d, 3.0) == 1);
}

TEST_CASE("oracle inequality: two constants and a degenerate class") {
    OracleStudyConfig c;
    c.name = "two_constants";
    c.cls = {constant(-1.0), constant(1.0)};
    c.psi = truncated_psi(1.0 / (std::exp(1.0) + 1.0));
    c.n = 200;
    c.replications = 500;
    c.seed = 4;
    c.quadrature.per_axis = 1000;
    auto r = oracle_mc(c, dist1(constant(0.8)));
    CHECK(r.condition_mean);
    CHECK(r.condition_variance);
    CHECK(r.passed);
    CHECK(r.lhs <= r.rhs + 3.0 * r.lhs_half_width);
    CHECK(r.replicate_excess.size() == 500);

    // A single member: no sample error, LHS is the inf over the class.
    OracleStudyConfig one = c;
    one.name = "single";
    one.cls = {constant(1.0)};
    auto q = oracle_mc(one, dist1(constant(0.8)));
    CHECK(q.passed);
    CHECK(q.lhs_half_width == 0.0);
    CHECK(q.lhs == doctest::Approx(q.inf_risk - q.psi_integral).epsilon(1e-12));
    CHECK(q.term_approx == doctest::Approx((1.0 + one.eps) * q.lhs).epsilon(1e-12));
}

TEST_CASE("oracle inequality on the canonical cases") {
    auto cases = canonical_oracle_cases(300, 1);
    CHECK(cases.size() == 5);
    for (auto& oc : cases) {
        CHECK(oc.cfg.cls.size() <= 16);
        auto r = oracle_mc(oc.cfg, oc.P);
        INFO(oc.cfg.name);
        CHECK(r.passed);
    }
}

TEST_CASE("fit_line recovers an exact line") {
    std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
    auto f = fit_line(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.slope_se == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rate experiment on pure noise") {
    RateStudyConfig cfg;
    cfg.family = "half";
    cfg.n_grid = {64, 256, 1024};
    cfg.replications = 3;
    cfg.depth = 1;
    cfg.steps = 300;
    cfg.eval_points = 512;
    auto s = rate_experiment(cfg);
    CHECK(s.rows.size() == 9);
    CHECK(s.slope < 0.0);
    for (const auto& r : s.rows) CHECK(r.excess_phi >= -1e-12);
    CHECK_THROWS(rate_family("nope"));
}
