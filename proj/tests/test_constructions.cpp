#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "logitnets/constructions.hpp"
#include "logitnets/parallel.hpp"
#include "logitnets/random.hpp"

using namespace logitnets;

TEST_CASE("scale_pos_net values and budget") {
    CHECK(scale_pos_net(1).at(1.0) == 2.0);
    CHECK(scale_pos_net(5).at(-2.0) == 0.0);
    CHECK(scale_pos_net(10).at(0.125) == 128.0);
    for (int k = 1; k <= 12; ++k) {
        ReluNet n = scale_pos_net(k);
        CHECK(is_member(n, ComplexityBudget{double(k), 2, 4.0 * k, 1, kInf}, 16));
        for (double x : {0.0, 0.3, 1.0, 7.25}) CHECK(n.at(x) == std::ldexp(x, k));
    }
}

TEST_CASE("max_net values and budget") {
    CHECK(max_net(1).at(-0.7) == doctest::Approx(0.7).epsilon(1e-15));
    double x3[3] = {0.2, -0.7, 0.5};
    CHECK(max_net(3)(x3) == doctest::Approx(0.7).epsilon(1e-15));
    Rng g(17);
    for (int k : {2, 5, 8, 13}) {
        ReluNet n = max_net(k);
        double worst = 0.0;
        std::vector<double> x(k);
        for (int i = 0; i < 1000; ++i) {
            double m = 0.0;
            for (auto& v : x) {
                v = 2.0 * uniform01(g) - 1.0;
                m = std::max(m, std::abs(v));
            }
            worst = std::max(worst, std::abs(n(x) - m));
        }
        CHECK(worst <= 1e-12);
        int c = static_cast<int>(std::ceil(std::log2(k)));
        ComplexityBudget b{1.0 + 2 * c, 2.0 * k, 26.0 * std::ldexp(1.0, c) - 20 - 2 * c, 1, 1};
        CHECK(is_member(n, b, 2));
    }
}

TEST_CASE("mult_net: zero axes, endpoints, grid certificate") {
    for (double eps : {0.5, 0.1, 0.01, std::ldexp(1.0, -10)}) {
        ReluNet m = mult_net(eps);
        Rng g(static_cast<std::uint64_t>(1.0 / eps));
        for (int i = 0; i < 1000; ++i) {
            double t = uniform01(g);
            double a[2] = {t, 0.0}, b[2] = {0.0, t};
            REQUIRE(m(a) == 0.0);
            REQUIRE(m(b) == 0.0);
        }
        double one[2] = {1.0, 1.0};
        CHECK(std::abs(m(one) - 1.0) <= eps);
        double L = std::log(1.0 / eps);
        CHECK(is_member(m, ComplexityBudget{15 * L, 6, 900 * L, 1, 1}, 33));
    }
    double eps = std::ldexp(1.0, -10);
    ReluNet m = mult_net(eps);
    double half[2] = {0.5, 0.5};
    CHECK(std::abs(m(half) - 0.25) <= eps);
    Grid grid{{0.0, 0.0}, {1.0, 1.0}, 513};
    double err = grid_sup_error(m, [](std::span<const double> x) { return x[0] * x[1]; }, grid, Exec::Parallel);
    CHECK(err <= eps);
}

TEST_CASE("hat_net plateau and partition of unity") {
    const int I = 6;
    CHECK(hat_net(1, I).at(0.25) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hat_net(2, I).at(0.5) == 0.0);
    std::vector<ReluNet> hats;
    for (int k = 0; k <= I; ++k) hats.push_back(hat_net(k, I));
    double worst = 0.0, worst_ref = 0.0;
    for (int i = 0; i <= 10000; ++i) {
        double x = std::ldexp(1.0, -I) + (1.0 - std::ldexp(1.0, -I)) * i / 10000.0;
        double s = 0.0;
        for (int k = 0; k <= I; ++k) {
            double h = hats[k].at(x);
            s += h;
            worst_ref = std::max(worst_ref, std::abs(h - hat_value(k, x)));
        }
        worst = std::max(worst, std::abs(s - 1.0));
    }
    CHECK(worst <= 1e-12);
    CHECK(worst_ref <= 1e-12);
}

TEST_CASE("clip_net") {
    for (auto [lo, hi] : {std::pair{-1.0, 1.0}, std::pair{0.0, 2.0}, std::pair{0.5, 3.0}, std::pair{-4.0, -1.0}}) {
        ReluNet c = clip_net(lo, hi);
        CHECK(c.at(lo - 1.0) == doctest::Approx(lo).epsilon(1e-15));
        CHECK(c.at(0.5 * (lo + hi)) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-15));
        CHECK(c.at(hi + 5.0) == doctest::Approx(hi).epsilon(1e-15));
    }
    CHECK_THROWS(clip_net(1.0, 1.0));
}

TEST_CASE("holder_approx: exact affine cases and a smooth target") {
    auto c = holder_approx([](std::span<const double>) { return 0.3; }, 1, 1.0, 1.0, 0.1);
    CHECK(c.cert.measured_sup_error == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(c.cert.passed);
    auto lin = holder_approx([](std::span<const double> x) { return x[0]; }, 1, 1.0, 1.0, 0.1);
    CHECK(lin.cert.measured_sup_error <= 1e-15);
    auto s = holder_approx([](std::span<const double> x) { return std::sin(3.0 * x[0]) / 3.0; }, 1, 2.0, 3.0, 0.05);
    CHECK(s.cert.passed);
    CHECK(s.cert.measured_sup_error <= 0.05);
    CHECK(s.cert.grid_points >= 10000);
    // Independent check off the certificate grid.
    double worst = 0.0;
    for (int i = 0; i < 7919; ++i) {
        double x = (i + 0.5) / 7919.0;
        worst = std::max(worst, std::abs(s.net.at(x) - std::sin(3.0 * x) / 3.0));
    }
    CHECK(worst <= 0.05);

    auto d2 = holder_approx([](std::span<const double> x) { return 0.25 * x[0] * x[1]; }, 2, 2.0, 1.0, 0.05);
    CHECK(d2.cert.passed);
}

TEST_CASE("log_approx: certificate and range clamp") {
    for (double a : {0.25, 0.1, 0.01})
        for (double eps : {0.5, 0.25, 0.1}) {
            auto r = log_approx(a, 1.0 - a, 1.0, eps);
            CHECK(r.cert.passed);
            CHECK(r.cert.measured_sup_error <= eps);
            CHECK(r.clamp_ok);
            // Independent off-grid scan plus the t <= 0 clamp.
            double worst = 0.0;
            for (int i = 0; i < 3001; ++i) {
                double t = a + (1.0 - 2.0 * a) * (i + 0.37) / 3001.0;
                worst = std::max(worst, std::abs(r.net.at(t) - std::log(t)));
            }
            CHECK(worst <= eps);
            for (double t : {-10.0, -1.0, 0.0})
                CHECK((r.net.at(t) >= std::log(a) - kClampSlack && r.net.at(t) <= std::log(1.0 - a) + kClampSlack));
        }
    auto r = log_approx(0.25, 0.75, 1.0, 0.5);
    CHECK(std::abs(r.net.at(0.5) - std::log(0.5)) <= 0.5);
}

TEST_CASE("truncated_target_net") {
    const double delta = 0.1;
    // eta ~ 0: the clamp sends it to delta and the output stays in the band.
    ReluNet zero = truncated_target_net(linear_net(Matrix(1, 1, 0.0)), delta);
    double bound = std::log((1.0 - delta) / delta);
    CHECK(std::abs(zero.at(0.3)) <= bound + 1e-12);
    CHECK(zero.at(0.3) < 0.0);

    ReluNet t = truncated_target_net(identity_net(1), delta);
    CHECK(std::abs(t.at(0.5)) <= 1e-12);
    double worst = 0.0;
    for (int i = 0; i <= 2000; ++i) {
        double x = i / 2000.0;
        double ref = std::log(std::clamp(x, delta, 1.0 - delta) / (1.0 - std::clamp(x, delta, 1.0 - delta)));
        worst = std::max(worst, std::abs(t.at(x) - ref));
        CHECK(std::abs(t.at(x)) <= bound + 1e-12);
    }
    CHECK(worst <= 2.0 * delta);
    CHECK(t.stats().param_bound_B <= 1.0);
}

TEST_CASE("compositional_approx on the pairwise examples") {
    auto sum = compositional_approx(pairwise_sum_spec(), 0.4);
    CHECK(sum.cert.passed);
    CHECK(sum.merged_depth <= sum.stagewise_depth_bound);
    auto mx = compositional_approx(pairwise_max_spec(), 0.4);
    CHECK(mx.cert.passed);
    // Reference values of the targets.
    double x[4] = {0.1, 0.2, 0.3, 0.4};
    double s = 0.0, m = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            s += x[i] * x[j];
            m = std::max(m, x[i] * x[j]);
        }
    CHECK(pairwise_sum_spec().evaluate(x) == doctest::Approx(s).epsilon(1e-14));
    CHECK(pairwise_max_spec().evaluate(x) == doctest::Approx(m).epsilon(1e-14));
    CHECK(std::abs(sum.net(x) - s) <= 0.4);
}

TEST_CASE("single Holder stage reduces to holder_approx") {
    CompositionSpec spec;
    spec.q = 0;
    spec.K = 1;
    spec.d = 1;
    spec.d_ast = 1;
    spec.beta = 1.0;
    spec.r = 1.0;
    Component c;
    c.inputs = {0};
    c.beta = 1.0;
    c.r = 1.0;
    c.f = [](std::span<const double> x) { return 0.5 * x[0] * x[0]; };
    spec.stages = {{c}};
    auto comp = compositional_approx(spec, 0.1);
    auto direct = holder_approx(c.f, 1, 1.0, 1.0, 0.1);
    CHECK(comp.cert.passed);
    CHECK(direct.cert.passed);
    for (double x : {0.0, 0.2, 0.77, 1.0}) CHECK(std::abs(comp.net.at(x) - direct.net.at(x)) <= 0.2);
}

TEST_CASE("composition error bound dominates a perturbed composition") {
    // h0(x) = x, h1(y) = y^2 / 2 (Lipschitz 1 on [0,1]); perturb each stage by a constant.
    const double dev[2] = {0.01, 0.02};
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        double x = i / 1000.0;
        double exact = 0.5 * x * x;
        double y = std::clamp(x + dev[0], 0.0, 1.0);
        double pert = 0.5 * y * y + dev[1];
        worst = std::max(worst, std::abs(pert - exact));
    }
    double bound = composition_error_bound(1.0, 1, 1.0, dev);
    CHECK(worst <= bound);
}
