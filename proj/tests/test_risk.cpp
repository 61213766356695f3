#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "logitnets/checks.hpp"
#include "logitnets/net.hpp"
#include "logitnets/random.hpp"
#include "logitnets/risk.hpp"

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

Quadrature grid(int per_axis = 10000) {
    Quadrature q;
    q.per_axis = per_axis;
    return q;
}

const RealFn eta_x = [](std::span<const double> x) { return x[0]; };

}  // namespace

TEST_CASE("logistic loss, target function, entropy") {
    CHECK(logistic_loss(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(logistic_loss(50.0) < 1e-20);
    CHECK(std::abs(logistic_loss(-50.0) - 50.0) <= 1e-12);
    CHECK(logistic_loss(kInf) == 0.0);
    CHECK(logistic_loss(-kInf) == kInf);

    CHECK(target_function(0.5) == 0.0);
    CHECK(target_function(0.9) == doctest::Approx(std::log(9.0)).epsilon(1e-14));
    CHECK(target_function(1.0) == kInf);
    CHECK(target_function(0.0) == -kInf);

    CHECK(entropy_H(0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(entropy_H(0.0) == 0.0);
    CHECK(entropy_H(1.0) == 0.0);
    CHECK(entropy_H(0.1) == doctest::Approx(0.1 * std::log(10.0) + 0.9 * std::log(10.0 / 9.0)).epsilon(1e-14));
    CHECK(sgn(0.0) == 1);
    CHECK(sgn(-1e-300) == -1);
}

TEST_CASE("phi risk and Bayes level") {
    auto P = dist1(constant(0.5));
    // 1e4-node sums carry ~1e-13 of rounding.
    CHECK(phi_risk(constant(0.0), P, grid()).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(std::abs(excess_phi_risk(constant(0.0), P, grid()).value) <= 1e-12);

    auto one = dist1(constant(1.0));
    CHECK(phi_risk(constant(0.0), one, grid()).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bayes_phi_risk(one, grid()).value == 0.0);
    CHECK(excess_phi_risk(constant(0.0), one, grid()).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // f* truncated at +-3 over eta(x) = x: only the tails |f*| > 3 contribute.
    auto Px = dist1(eta_x);
    RealFn trunc = [](std::span<const double> x) { return std::clamp(target_function(x[0]), -3.0, 3.0); };
    double ex = excess_phi_risk(trunc, Px, grid(100000)).value;
    CHECK(ex > 0.0);
    CHECK(ex < 0.02);
    // Independent oracle: 2 * int_0^{s} [x phi(-3) + (1-x) phi(3) - H(x)] dx, s = 1/(1+e^3), by Simpson.
    double s = 1.0 / (1.0 + std::exp(3.0));
    auto g = [](double x) { return x * logistic_loss(-3.0) + (1 - x) * logistic_loss(3.0) - entropy_H(x); };
    const int m = 20000;
    double acc = g(0.0) + g(s);
    for (int i = 1; i < m; ++i) acc += (i % 2 ? 4.0 : 2.0) * g(s * i / m);
    CHECK(ex == doctest::Approx(2.0 * acc * s / (3.0 * m)).epsilon(1e-6));

    // Excess is nonnegative over a random family.
    Rng r(4);
    for (int k = 0; k < 20; ++k) {
        double a = 6.0 * uniform01(r) - 3.0, b = 6.0 * uniform01(r) - 3.0;
        RealFn f = [a, b](std::span<const double> x) { return a * x[0] + b; };
        CHECK(excess_phi_risk(f, Px, grid(2000)).value >= -1e-12);
    }
}

TEST_CASE("grid and Monte Carlo quadrature agree") {
    auto P = dist1([](std::span<const double> x) { return 0.5 + 0.4 * std::sin(2.0 * std::numbers::pi * x[0]); });
    RealFn f = [](std::span<const double> x) { return 2.0 * x[0] - 1.0; };
    Quadrature mc;
    mc.kind = Quadrature::Kind::MonteCarlo;
    mc.samples = 200000;
    mc.seed = 9;
    auto a = phi_risk(f, P, grid(100000));
    auto b = phi_risk(f, P, mc);
    CHECK(b.half_width > 0.0);
    CHECK(std::abs(a.value - b.value) <= 1.5 * b.half_width);  // 3 sigma with 1.96 sigma half-widths
}

TEST_CASE("misclassification examples") {
    auto P8 = dist1(constant(0.8));
    CHECK(std::abs(excess_misclass(constant(0.6), P8, grid()).value) <= 1e-15);
    CHECK(excess_misclass(constant(-0.6), P8, grid()).value == doctest::Approx(0.6).epsilon(1e-12));
    auto Px = dist1(eta_x);
    CHECK(excess_misclass(constant(1.0), Px, grid(100000)).value == doctest::Approx(0.25).epsilon(1e-6));
    RealFn two = [](std::span<const double> x) { return 2.0 * x[0] - 1.0; };
    CHECK(std::abs(excess_misclass(two, Px, grid()).value) <= 1e-15);
}

TEST_CASE("calibration examples") {
    auto Px = dist1(eta_x);
    RealFn fstar = [](std::span<const double> x) { return target_function(x[0]); };
    auto r0 = calibration_check(fstar, Px, grid());
    CHECK(r0.passed);
    CHECK(std::abs(r0.excess_misclass) <= 1e-15);

    // sgn(0) = +1, so f = 0 already predicts the Bayes label when eta = 0.9.
    auto P9 = dist1(constant(0.9));
    auto r9 = calibration_check(constant(0.0), P9, grid());
    CHECK(std::abs(r9.excess_misclass) <= 1e-12);
    CHECK(r9.rhs == doctest::Approx(2.0 * std::sqrt(2.0) * std::sqrt(std::log(2.0) - entropy_H(0.9))).epsilon(1e-10));
    CHECK(r9.passed);
    // Any negative constant predicts the wrong label everywhere: excess 2 eta - 1 = 0.8.
    auto rn = calibration_check(constant(-1.0), P9, grid());
    CHECK(rn.excess_misclass == doctest::Approx(0.8).epsilon(1e-12));
    double phi_ex = 0.9 * logistic_loss(-1.0) + 0.1 * logistic_loss(1.0) - entropy_H(0.9);
    CHECK(rn.rhs == doctest::Approx(2.0 * std::sqrt(2.0) * std::sqrt(phi_ex)).epsilon(1e-10));
    CHECK(rn.passed);

    // Random piecewise-constant f over eta(x) = x.
    Rng g(21);
    for (int k = 0; k < 10; ++k) {
        std::vector<double> levels(8);
        for (auto& v : levels) v = 4.0 * uniform01(g) - 2.0;
        RealFn f = [levels](std::span<const double> x) { return levels[std::min(7, static_cast<int>(x[0] * 8))]; };
        CHECK(calibration_check(f, Px, grid()).passed);
    }
}

TEST_CASE("psi functions") {
    auto tr = truncated_psi(0.1);
    CHECK(psi_eval(tr, 0.0, 1) == 0.0);
    CHECK(psi_eval(tr, 1.0, -1) == 0.0);
    CHECK(psi_eval(tr, 0.5, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(tr.delta1 > 0.0);
    CHECK(tr.delta1 <= 0.1 / std::log(10.0));
    CHECK(tr.delta1 >= 0.1 / (10.0 * std::log(10.0)));
    CHECK(entropy_H(tr.delta1) <= 0.8 * std::log(1.0 / 0.9) * (1 + 1e-12));

    auto mg = margin_psi(0.5, 1.0);
    double eta = 0.6;  // |2 eta - 1| = 0.2 <= eta0
    CHECK(psi_eval(mg, eta, 1) == doctest::Approx(logistic_loss(target_function(eta))).epsilon(1e-14));
    CHECK(psi_eval(mg, eta, -1) == doctest::Approx(logistic_loss(-target_function(eta))).epsilon(1e-14));
    CHECK(psi_gamma(mg) == doctest::Approx(8.0 / 0.75).epsilon(1e-15));
    CHECK(psi_gamma(tr) == doctest::Approx(125000.0 * std::log(0.1) * std::log(0.1)).epsilon(1e-15));
    CHECK_THROWS(margin_psi(0.5, 2.0));  // needs F0 < log 3
    CHECK_THROWS(truncated_psi(0.4));
}

TEST_CASE("variance bounds") {
    auto tr = truncated_psi(0.1);
    double band = psi_f_bound(tr);
    auto Px = dist1(eta_x);
    RealFn clipped = [band](std::span<const double> x) { return std::clamp(target_function(x[0]), -band, band); };
    auto r = variance_bound_check(tr, clipped, Px, grid());
    CHECK(r.passed);
    CHECK(r.ratio <= 1.0);

    auto z = variance_bound_check(tr, constant(0.0), dist1(constant(0.5)), grid());
    CHECK(z.passed);
    CHECK(std::abs(z.first_moment) <= 1e-15);
    CHECK(std::abs(z.second_moment) <= 1e-15);

    auto suite = variance_suite(1, 0.5);
    CHECK(suite.total == 80);
    CHECK(suite.failures == 0);
}

TEST_CASE("sandwich and variance ratio") {
    auto s0 = sandwich_check(0.3, target_function(0.3), -1.0, 1.0);
    CHECK(s0.middle == 0.0);
    CHECK(s0.upper == 0.0);
    CHECK(s0.passed);

    // a = 1/2, f = 1: excess = log2 - ... direct, bounds with A=-1, B=1.
    auto s = sandwich_check(0.5, 1.0, -1.0, 1.0);
    double direct = 0.5 * logistic_loss(1.0) + 0.5 * logistic_loss(-1.0) - std::log(2.0);
    CHECK(s.middle == doctest::Approx(direct).epsilon(1e-13));
    CHECK(s.lower == doctest::Approx(1.0 / (4.0 + 2.0 * std::exp(1.0) + 2.0 * std::exp(-1.0))).epsilon(1e-14));
    CHECK(s.upper == doctest::Approx(1.0 / 8.0).epsilon(1e-15));
    CHECK(s.passed);
    CHECK_THROWS(sandwich_check(0.5, 1.0, -1.0, 0.5));

    for (int ia = 1; ia <= 9; ++ia)
        for (int j = 0; j <= 40; ++j) {
            double a = 0.1 * ia, f = -2.0 + 0.1 * j, l = target_function(a);
            REQUIRE(sandwich_check(a, f, std::min(f, l), std::max(f, l)).passed);
        }

    auto q0 = variance_ratio_pointwise(0.3, target_function(0.3), 0.05);
    CHECK(q0.H == 0.0);
    CHECK(q0.passed);
    double edge = std::log(0.95 / 0.05);
    CHECK(variance_ratio_pointwise(0.05, edge, 0.05).passed);
    CHECK(variance_ratio_pointwise(0.95, -edge, 0.05).passed);
    CHECK_THROWS(variance_ratio_pointwise(0.01, 0.0, 0.05));
}

TEST_CASE("pointwise excess matches the direct formula away from cancellation") {
    Rng g(8);
    for (int k = 0; k < 1000; ++k) {
        double a = 0.02 + 0.96 * uniform01(g), f = 10.0 * uniform01(g) - 5.0;
        double direct = a * logistic_loss(f) + (1 - a) * logistic_loss(-f) - entropy_H(a);
        CHECK(pointwise_excess(a, f) == doctest::Approx(direct).epsilon(1e-9).scale(1.0));
        CHECK(pointwise_excess(a, f) >= 0.0);
    }
}

TEST_CASE("J function") {
    CHECK(J_function(0.3, 0.3) == doctest::Approx(0.0).epsilon(1e-15));
    double j = J_function(0.1, 0.3);
    CHECK(j > 0.025);
    CHECK(j < 0.1);
    double ref = 2.0 * entropy_H(0.3) - entropy_H(0.2) - entropy_H(0.4);
    CHECK(J_function(0.2, 0.4) == doctest::Approx(ref).epsilon(1e-15));
    auto suite = J_suite(1.0);
    CHECK(suite.total == 50 + 99 * 99);
    CHECK(suite.failures == 0);
}

TEST_CASE("KL divergence") {
    CHECK(kl_divergence(eta_x, eta_x, 1, grid(1000)) == 0.0);
    double eps = 0.1;
    double k = kl_divergence(constant(eps), constant(3 * eps), 1, grid(10));
    CHECK(k == doctest::Approx(eps * std::log(1.0 / 3.0) + (1 - eps) * std::log((1 - eps) / (1 - 3 * eps))).epsilon(1e-14));
    CHECK(k <= 9 * eps);
    // eta1 = eps (1 + 2x), eta2 = 2 eps: Simpson oracle.
    RealFn e1 = [eps](std::span<const double> x) { return eps * (1 + 2 * x[0]); };
    double q = kl_divergence(e1, constant(2 * eps), 1, grid(20000));
    auto h = [eps](double x) { return kl_pointwise(eps * (1 + 2 * x), 2 * eps); };
    const int m = 2000;
    double acc = h(0.0) + h(1.0);
    for (int i = 1; i < m; ++i) acc += (i % 2 ? 4.0 : 2.0) * h(static_cast<double>(i) / m);
    CHECK(q == doctest::Approx(acc / (3.0 * m)).epsilon(1e-7));
    auto suite = KL_suite(3, 0.5);
    CHECK(suite.total == 200);
    CHECK(suite.failures == 0);
}

TEST_CASE("covering bound") {
    CHECK(covering_bound(2, 4, 10, 1, 0.1, 2) == doctest::Approx(15.0 * 9.0 * std::log(300.0)).epsilon(1e-14));
    CHECK(std::abs(covering_bound(2, 4, 10, 1, 0.1, 2) - 770.01) <= 0.01);
    CHECK(covering_bound(2, 4, 10, 0.3, 0.1, 2) == covering_bound(2, 4, 10, 1, 0.1, 2));
    CHECK(covering_suite().failures == 0);
}

TEST_CASE("noise and margin curves") {
    auto spec = half_plane_spec();
    auto P = boundary_distribution(spec, 0.6);
    std::vector<double> t{0.05, 0.1, 0.2, 0.3, 0.59, 0.61};
    auto c = noise_margin_estimators(P, spec, t, 100000, 5);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(c.noise[i] == (t[i] < 0.6 ? 0.0 : 1.0));
        double exact = std::min(2.0 * t[i], 1.0);
        CHECK(std::abs(c.margin[i] - exact) <= 1.5 * c.margin_hw[i] + 1e-3);
    }

    // Two triangles: sampled-boundary distance is an upper estimate within the sampling spacing.
    auto tt = two_triangles_spec();
    auto sb = sample_boundary(tt);
    Rng g(12);
    for (int k = 0; k < 2000; ++k) {
        double x[2] = {uniform01(g), uniform01(g)};
        double exact = two_triangles_distance(x);
        double est = boundary_distance(sb, x);
        REQUIRE(est >= exact - 1e-12);
        REQUIRE(est <= exact + sb.spacing);
    }
    // MC margin curve against a fine-grid geometry oracle.
    auto Pt = boundary_distribution(tt, 0.5);
    std::vector<double> tg{0.02, 0.05, 0.1};
    auto mc = noise_margin_estimators(Pt, tt, tg, 200000, 6);
    const int m = 1000;
    for (std::size_t i = 0; i < tg.size(); ++i) {
        long long hit = 0;
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
                double x[2] = {(a + 0.5) / m, (b + 0.5) / m};
                hit += two_triangles_distance(x) <= tg[i];
            }
        double oracle = static_cast<double>(hit) / (double(m) * m);
        CHECK(std::abs(mc.margin[i] - oracle) <= 1.5 * mc.margin_hw[i] + 4.0 * sb.spacing + 2e-3);
    }
}
