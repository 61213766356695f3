#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "logitnets/constructions.hpp"
#include "logitnets/net.hpp"
#include "logitnets/parallel.hpp"
#include "logitnets/random.hpp"

using namespace logitnets;

namespace {

ReluNet two_neuron_abs() {
    return ReluNet(1, {{Matrix::from_rows({{1.0}, {-1.0}}), {0.0, 0.0}}}, Matrix::from_rows({{1.0, 1.0}}));
}

// Random dense net with weights in [-1, 1].
ReluNet random_net(Rng& g, int in, std::vector<int> widths, int out) {
    std::vector<Layer> layers;
    int prev = in;
    for (int w : widths) {
        Layer L{Matrix(w, prev), std::vector<double>(w)};
        for (auto& x : L.W.data) x = 2.0 * uniform01(g) - 1.0;
        for (auto& x : L.v) x = 2.0 * uniform01(g) - 1.0;
        layers.push_back(std::move(L));
        prev = w;
    }
    Matrix O(out, prev);
    for (auto& x : O.data) x = 2.0 * uniform01(g) - 1.0;
    return ReluNet(in, std::move(layers), O);
}

std::vector<double> random_point(Rng& g, int d, double lo = -1.0, double hi = 1.0) {
    std::vector<double> x(d);
    for (auto& v : x) v = lo + (hi - lo) * uniform01(g);
    return x;
}

}  // namespace

TEST_CASE("evaluate: linear net and dead units") {
    ReluNet lin(1, {}, Matrix::from_rows({{2.0}}));
    double x = 3.0;
    CHECK(lin.evaluate(std::span<const double>(&x, 1)) == std::vector<double>{6.0});

    // Shifts above every pre-activation: output is W_L 0.
    ReluNet dead(1, {{Matrix::from_rows({{1.0}, {2.0}}), {5.0, 5.0}}}, Matrix::from_rows({{3.0, -4.0}}));
    CHECK(dead.at(1.0) == 0.0);
    CHECK(scale_pos_net(3).at(1.0) == 8.0);
}

TEST_CASE("complexity counts") {
    auto s = two_neuron_abs().stats();
    CHECK(s.depth_G == 1);
    CHECK(s.width_N == 2);
    CHECK(s.nnz_S == 4);
    CHECK(s.param_bound_B == 1.0);

    ReluNet zero(2, {{Matrix(3, 2), {0.0, 0.0, 0.0}}}, Matrix(1, 3));
    CHECK(zero.stats().nnz_S == 0);
    CHECK(zero.stats().param_bound_B == 0.0);

    auto m = max_net(3).stats();
    CHECK(m.depth_G == 5);
    CHECK(m.width_N == 6);
    CHECK(m.nnz_S <= 80);
    CHECK(m.param_bound_B == 1.0);
}

TEST_CASE("is_member: budgets and monotonicity") {
    CHECK(is_member(scale_pos_net(4), ComplexityBudget{4, 2, 16, 1, kInf}, 16));
    CHECK_FALSE(is_member(scale_pos_net(4), ComplexityBudget{3, 2, 16, 1, kInf}, 16));
    double eps = 0.01, L = std::log(1.0 / eps);
    CHECK(is_member(mult_net(eps), ComplexityBudget{15 * L, 6, 900 * L, 1, 1}, 33));

    // Enlarging any component never flips true to false.
    ReluNet net = max_net(4);
    ComplexityBudget b = max_budget(4);
    REQUIRE(is_member(net, b, 3));
    for (int field = 0; field < 5; ++field) {
        ComplexityBudget e = b;
        double* slot[] = {&e.G, &e.N, &e.S, &e.B, &e.F};
        *slot[field] = *slot[field] * 2.0 + 1.0;
        CHECK(is_member(net, e, 3));
    }
    // F is checked against a grid sup norm: max_net(4) reaches 1 on [0,1]^4.
    ComplexityBudget tight = b;
    tight.F = 0.5;
    CHECK_FALSE(is_member(net, tight, 3));
}

TEST_CASE("compose adds depths and agrees with function composition") {
    ReluNet s1 = scale_pos_net(1);
    ReluNet cc = compose(s1, s1);
    CHECK(cc.at(1.0) == 4.0);
    CHECK(cc.depth() == 2);

    ReluNet id = compose(identity_net(1), two_neuron_abs());
    CHECK(id.depth() == 1);
    CHECK(id.at(-0.3) == two_neuron_abs().at(-0.3));

    Rng g(7);
    for (int pair = 0; pair < 5; ++pair) {
        ReluNet inner = random_net(g, 3, {4, 5}, 2);
        ReluNet outer = random_net(g, 2, {3}, 1);
        ReluNet c = compose(outer, inner);
        CHECK(c.depth() == 3);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            auto x = random_point(g, 3);
            double direct = outer(inner.evaluate(x));
            worst = std::max(worst, std::abs(c(x) - direct) / std::max(1.0, std::abs(direct)));
        }
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("parallel and stack") {
    Rng g(11);
    ReluNet f = random_net(g, 2, {3, 3, 3}, 1);
    ReluNet h = random_net(g, 2, {5}, 1);
    ReluNet p1 = parallel({f});
    ReluNet p2 = parallel({f, h});
    CHECK(p2.depth() == 3);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        auto x = random_point(g, 2);
        auto y = p2.evaluate(x);
        worst = std::max({worst, std::abs(p1(x) - f(x)), std::abs(y[0] - f(x)), std::abs(y[1] - h(x))});
    }
    CHECK(worst <= 1e-12);

    // Padding carries signed values through the passthrough.
    ReluNet st = stack({identity_net(1), scale_pos_net(2)});
    double x[2] = {-3.0, 0.5};
    auto y = st.evaluate(x);
    CHECK(y[0] == -3.0);
    CHECK(y[1] == 2.0);
}

TEST_CASE("serialization round trip") {
    Rng g(3);
    for (const ReluNet& net : {scale_pos_net(4), max_net(5), mult_net(std::ldexp(1.0, -8)), random_net(g, 3, {7, 2}, 2)}) {
        ReluNet back = deserialize(serialize(net));
        CHECK(back.stats().depth_G == net.stats().depth_G);
        CHECK(back.stats().width_N == net.stats().width_N);
        CHECK(back.stats().nnz_S == net.stats().nnz_S);
        CHECK(back.stats().param_bound_B == net.stats().param_bound_B);
        for (int i = 0; i < 100; ++i) {
            auto x = random_point(g, net.input_dim(), 0.0, 1.0);
            CHECK(back.evaluate(x) == net.evaluate(x));
        }
    }
    ReluNet m = mult_net(std::ldexp(1.0, -8));
    double half[2] = {0.5, 0.5};
    CHECK(deserialize(serialize(m))(half) == m(half));
    CHECK_THROWS_AS(deserialize("{}"), ParseError);
    CHECK_THROWS_AS(deserialize("not json"), ParseError);
}

TEST_CASE("format_double round trips") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) CHECK(std::stod(format_double(x)) == x);
}

TEST_CASE("constructor rejects shape mismatches") {
    CHECK_THROWS_AS(ReluNet(2, {{Matrix(3, 1), {0, 0, 0}}}, Matrix(1, 3)), NetError);
    CHECK_THROWS_AS(ReluNet(1, {{Matrix(3, 1), {0, 0}}}, Matrix(1, 3)), NetError);
    CHECK_THROWS_AS(ReluNet(1, {{Matrix(3, 1), {0, 0, 0}}}, Matrix(1, 2)), NetError);
}

TEST_CASE("serial and parallel batch evaluation agree bitwise") {
    Rng g(5);
    ReluNet net = random_net(g, 4, {16, 16}, 2);
    std::vector<double> pts(4 * 2000);
    for (auto& v : pts) v = uniform01(g);
    CHECK(evaluate_batch(net, pts, Exec::Serial) == evaluate_batch(net, pts, Exec::Parallel));
}
