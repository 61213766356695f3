#include "logitnets/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "logitnets/lower_bounds.hpp"
#include "logitnets/random.hpp"
#include "logitnets/risk.hpp"

namespace logitnets {

void SuiteResult::record(const std::string& case_name, double value, double bound, bool ok) {
    table.add({name, case_name, csv_num(value), csv_num(bound), ok ? "1" : "0"});
    ++total;
    if (!ok) ++failures;
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"sandwich", "variance", "calibration", "J",   "KL",
                                                "covering", "vg",       "bump",        "separation"};
    return names;
}

namespace {

using Clock = std::chrono::steady_clock;

int scaled(int base, double grid_scale) { return std::max(2, static_cast<int>(std::ceil(base * grid_scale))); }

double lin(double lo, double hi, int i, int count) { return lo + (hi - lo) * i / (count - 1); }

void finish(SuiteResult& r, Clock::time_point t0) {
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
}

Quadrature grid_quad(int per_axis) {
    Quadrature q;
    q.kind = Quadrature::Kind::Grid;
    q.per_axis = per_axis;
    return q;
}

DataDistribution unit_interval(RealFn eta, std::string tag) {
    DataDistribution P;
    P.d = 1;
    P.eta = std::move(eta);
    P.family_tag = std::move(tag);
    return P;
}

// Smooth random function on [0,1] with values strictly inside (-band, band).
RealFn random_bounded_fn(Rng& g, double band) {
    double a = 0.5 + 3.0 * uniform01(g);
    double k = 1.0 + std::floor(3.0 * uniform01(g));
    double phase = 2.0 * std::numbers::pi * uniform01(g);
    double b = 2.0 * uniform01(g) - 1.0;
    return [=](std::span<const double> x) {
        return band * std::tanh(a * std::sin(2.0 * std::numbers::pi * k * x[0] + phase) + b);
    };
}

}  // namespace

SuiteResult sandwich_suite(double grid_scale) {
    auto t0 = Clock::now();
    SuiteResult r;
    r.name = "sandwich";
    const int nf = scaled(527, grid_scale);
    for (int ia = 1; ia <= 19; ++ia) {
        double a = 0.05 * ia;
        double l = target_function(a);
        for (int j = 0; j < nf; ++j) {
            double f = lin(-3.0, 3.0, j, nf);
            auto s = sandwich_check(a, f, std::min(f, l), std::max(f, l));
            r.record("a=" + csv_num(a) + " f=" + csv_num(f), s.middle, s.upper, s.passed);
        }
    }
    finish(r, t0);
    return r;
}

SuiteResult ratio_suite(double grid_scale) {
    auto t0 = Clock::now();
    SuiteResult r;
    r.name = "ratio";
    const double delta = 0.05;
    const double band = std::log((1.0 - delta) / delta);
    const int na = scaled(91, grid_scale), nf = scaled(111, grid_scale);
    for (int i = 0; i < na; ++i) {
        double a = lin(delta, 1.0 - delta, i, na);
        for (int j = 0; j < nf; ++j) {
            double f = lin(-band, band, j, nf);
            auto q = variance_ratio_pointwise(a, f, delta);
            r.record("a=" + csv_num(a) + " f=" + csv_num(f), q.H, q.gamma * q.G, q.passed);
        }
    }
    finish(r, t0);
    return r;
}

SuiteResult variance_suite(std::uint64_t seed, double grid_scale) {
    auto t0 = Clock::now();
    SuiteResult r;
    r.name = "variance";
    const Quadrature q = grid_quad(scaled(4000, grid_scale));
    std::vector<DataDistribution> dists{
        unit_interval([](std::span<const double> x) { return x[0]; }, "eta=x"),
        unit_interval([](std::span<const double>) { return 0.8; }, "eta=0.8")};
    std::vector<std::pair<std::string, PsiFunction>> psis{{"truncated", truncated_psi(0.1)},
                                                          {"margin", margin_psi(0.5, 1.0)}};
    for (std::size_t v = 0; v < psis.size(); ++v) {
        const auto& [label, psi] = psis[v];
        double band = psi_f_bound(psi);
        for (std::size_t p = 0; p < dists.size(); ++p) {
            Rng g(stream_seed(seed, v, p));
            for (int k = 0; k < 20; ++k) {
                RealFn f = random_bounded_fn(g, band);
                auto rep = variance_bound_check(psi, f, dists[p], q);
                r.record(label + " " + dists[p].family_tag + " f" + std::to_string(k), rep.second_moment,
                         rep.gamma * rep.first_moment, rep.passed);
            }
        }
    }
    finish(r, t0);
    return r;
}

SuiteResult calibration_suite(std::uint64_t seed, double grid_scale) {
    auto t0 = Clock::now();
    SuiteResult r;
    r.name = "calibration";
    const Quadrature q = grid_quad(scaled(2000, grid_scale));
    Rng g(stream_seed(seed, 0xCA1, 0));
    for (int k = 0; k < 100; ++k) {
        RealFn eta;
        switch (k % 3) {
            case 0: {
                double s = 40.0 * uniform01(g) - 20.0, c = uniform01(g);
                eta = [=](std::span<const double> x) { return 1.0 / (1.0 + std::exp(-s * (x[0] - c))); };
                break;
            }
            case 1: {
                double amp = 0.49 * uniform01(g), w = 1.0 + std::floor(4.0 * uniform01(g));
                double ph = 2.0 * std::numbers::pi * uniform01(g);
                eta = [=](std::span<const double> x) {
                    return 0.5 + amp * std::sin(2.0 * std::numbers::pi * w * x[0] + ph);
                };
                break;
            }
            default: {
                double e = 0.02 + 0.96 * uniform01(g);
                eta = [=](std::span<const double>) { return e; };
            }
        }
        RealFn f;
        if (k % 2 == 0) {
            double s = 10.0 * uniform01(g) - 5.0, c = uniform01(g);
            f = [=](std::span<const double> x) { return s * (x[0] - c); };
        } else {
            f = random_bounded_fn(g, 0.1 + 4.0 * uniform01(g));
        }
        auto rep = calibration_check(f, unit_interval(eta, "random"), q);
        r.record("pair" + std::to_string(k), rep.excess_misclass, rep.rhs + rep.slack, rep.passed);
    }
    finish(r, t0);
    return r;
}

SuiteResult J_suite(double grid_scale) {
    auto t0 = Clock::now();
    SuiteResult r;
    r.name = "J";
    const int count = scaled(50, grid_scale);
    for (int k = 1; k <= count; ++k) {
        double eps = k / (6.0 * count);
        auto rep = J_bounds_check(eps);
        r.record("eps=" + csv_num(eps), rep.J, eps, rep.passed);
    }
    // Symmetry and nonnegativity on an interior grid.
    const int m = scaled(99, grid_scale);
    for (int i = 1; i <= m; ++i)
        for (int j = 1; j <= m; ++j) {
            double x = static_cast<double>(i) / (m + 1), y = static_cast<double>(j) / (m + 1);
            double a = J_function(x, y), b = J_function(y, x);
            // J sums three entropies, each below log 2; allow a few ulps of reordering.
            bool ok = a >= -1e-15 && std::abs(a - b) <= 1e-15;
            r.record("sym x=" + csv_num(x) + " y=" + csv_num(y), std::abs(a - b), 1e-15, ok);
        }
    finish(r, t0);
    return r;
}

SuiteResult KL_suite(std::uint64_t seed, double grid_scale) {
    auto t0 = Clock::now();
    SuiteResult r;
    r.name = "KL";
    const Quadrature q = grid_quad(scaled(2000, grid_scale));
    Rng g(stream_seed(seed, 0xB1, 0));
    auto random_eta = [&](double eps) -> RealFn {
        double k = 1.0 + std::floor(5.0 * uniform01(g)), ph = 2.0 * std::numbers::pi * uniform01(g);
        double sharp = 1.0 + 20.0 * uniform01(g);
        // values in [eps, 3 eps]
        return [=](std::span<const double> x) {
            double s = std::tanh(sharp * std::sin(2.0 * std::numbers::pi * k * x[0] + ph)) / std::tanh(sharp);
            return eps * (2.0 + std::clamp(s, -1.0, 1.0));
        };
    };
    for (int k = 0; k < 200; ++k) {
        double eps = 0.2 * (0.001 + 0.999 * uniform01(g));
        RealFn e1 = random_eta(eps), e2 = random_eta(eps);
        double kl = kl_divergence(e1, e2, 1, q);
        r.record("pair" + std::to_string(k) + " eps=" + csv_num(eps), kl, 9.0 * eps, kl >= 0.0 && kl <= 9.0 * eps);
    }
    finish(r, t0);
    return r;
}

SuiteResult covering_suite() {
    auto t0 = Clock::now();
    SuiteResult r;
    r.name = "covering";
    double ref = 15.0 * 9.0 * std::log(300.0);
    double v = covering_bound(2, 4, 10, 1, 0.1, 2);
    r.record("G=2 N=4 S=10 B=1 gamma=0.1 d=2", v, ref, std::abs(v - ref) <= 1e-9 * ref);
    // Nondecreasing in G, N, S, B and nonincreasing in gamma.
    const std::vector<double> Gs{1, 2, 4, 8}, Ns{1, 4, 16, 64}, Ss{1, 10, 100, 1000}, Bs{0.5, 1, 2, 10};
    const std::vector<double> gammas{0.5, 0.1, 0.01, 0.001};
    for (int d : {1, 2, 4})
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                for (std::size_t k = 0; k < 4; ++k)
                    for (std::size_t l = 0; l < 4; ++l)
                        for (std::size_t m = 0; m < 4; ++m) {
                            double base = covering_bound(Gs[i], Ns[j], Ss[k], Bs[l], gammas[m], d);
                            bool ok = true;
                            double worst = 0.0;
                            auto up = [&](double next) {
                                ok = ok && next >= base;
                                worst = std::min(worst, next - base);
                            };
                            if (i + 1 < 4) up(covering_bound(Gs[i + 1], Ns[j], Ss[k], Bs[l], gammas[m], d));
                            if (j + 1 < 4) up(covering_bound(Gs[i], Ns[j + 1], Ss[k], Bs[l], gammas[m], d));
                            if (k + 1 < 4) up(covering_bound(Gs[i], Ns[j], Ss[k + 1], Bs[l], gammas[m], d));
                            if (l + 1 < 4) up(covering_bound(Gs[i], Ns[j], Ss[k], Bs[l + 1], gammas[m], d));
                            if (m + 1 < 4) up(covering_bound(Gs[i], Ns[j], Ss[k], Bs[l], gammas[m + 1], d));
                            r.record("mono d=" + std::to_string(d) + " G=" + csv_num(Gs[i]) + " N=" + csv_num(Ns[j]) +
                                         " S=" + csv_num(Ss[k]) + " B=" + csv_num(Bs[l]) +
                                         " gamma=" + csv_num(gammas[m]),
                                     worst, 0.0, ok);
                        }
    finish(r, t0);
    return r;
}

SuiteResult vg_suite(int m_max) {
    auto t0 = Clock::now();
    SuiteResult r;
    r.name = "vg";
    for (int m = 2; m <= m_max; ++m) {
        auto c = certify_code(vg_code(m));
        r.record("m=" + std::to_string(m) + " size", static_cast<double>(c.size), c.required_size,
                 static_cast<double>(c.size) >= c.required_size);
        r.record("m=" + std::to_string(m) + " distance", c.min_distance, c.required_distance,
                 c.min_distance >= c.required_distance);
    }
    finish(r, t0);
    return r;
}

SuiteResult bump_suite(std::uint64_t seed, double grid_scale) {
    auto t0 = Clock::now();
    SuiteResult r;
    r.name = "bump";
    const int pairs = scaled(2000, grid_scale);
    const double rr = 1.0;
    for (int Q : {2, 4})
        for (int d : {1, 2})
            for (double beta : {0.5, 1.0, 2.0}) {
                std::size_t cells = d == 1 ? Q : Q * Q;
                Rng g(stream_seed(seed, Q * 10 + d, static_cast<std::uint64_t>(beta * 4)));
                std::vector<int> signs(cells);
                for (auto& s : signs) s = uniform01(g) < 0.5 ? -1 : 1;
                BumpGrid f = bump_grid_build(Q, d, beta, rr, signs);
                std::string tag = "Q=" + std::to_string(Q) + " d=" + std::to_string(d) + " beta=" + csv_num(beta);

                // Plateau: u = 1 on |Q(x - a)|^2 <= 1/9, so f is exactly T(a) c1 / Q^beta there.
                long long bad = 0, probes = 0;
                for (std::size_t c = 0; c < cells; ++c) {
                    auto a = f.center(c);
                    double target = signs[c] * f.amplitude;
                    for (int k = 0; k < 64; ++k) {
                        std::vector<double> x = a;
                        double rad = (k == 0 ? 0.0 : uniform01(g)) * (1.0 / 3.0) * (1.0 - 1e-9) / Q;
                        double dir = 2.0 * std::numbers::pi * uniform01(g);
                        x[0] += d == 1 ? (k % 2 ? rad : -rad) : rad * std::cos(dir);
                        if (d == 2) x[1] += rad * std::sin(dir);
                        ++probes;
                        if (f(x) != target) ++bad;
                    }
                }
                r.record(tag + " plateau", static_cast<double>(bad), 0.0, bad == 0 && probes > 0);

                // Cell boundaries carry no mass: f vanishes where |Q(x - a)|^2 >= 1/8 for every a.
                double worst = 0.0;
                for (std::size_t c = 0; c < cells; ++c) {
                    auto a = f.center(c);
                    std::vector<double> x = a;
                    x[0] = a[0] + 0.5 / Q;
                    worst = std::max(worst, std::abs(f(x)));
                }
                r.record(tag + " cell edge", worst, 0.0, worst == 0.0);

                auto h = holder_norm_estimate(f, pairs, stream_seed(seed, 0x40, cells));
                r.record(tag + " holder", h.norm, rr, h.norm <= rr);
            }
    finish(r, t0);
    return r;
}

SuiteResult separation_suite(double grid_scale) {
    auto t0 = Clock::now();
    SuiteResult r;
    r.name = "separation";
    FamilyParams p;
    p.Q = 4;
    p.d = 1;
    p.d_star = 1;
    p.beta = 1.0;
    auto fam = hypothesis_family(p);
    int per_axis = grid_scale == 1.0 ? 0 : scaled(100000, grid_scale);
    auto rep = separation_certificate(fam, per_axis);
    for (const auto& pr : rep.pairs)
        r.record("J " + std::to_string(pr.i) + "-" + std::to_string(pr.j), pr.J_integral, rep.s, pr.passed);
    for (std::size_t j = 0; j < rep.kl_to_0.size(); ++j)
        r.record("KL " + std::to_string(j) + "||0", rep.kl_to_0[j], rep.nine_eps, rep.kl_to_0[j] <= rep.nine_eps);
    r.record("membership", fam.membership_ok ? 1.0 : 0.0, 1.0, fam.membership_ok);
    finish(r, t0);
    return r;
}

SuiteResult run_suite(const std::string& name, std::uint64_t seed, double grid_scale) {
    if (!(grid_scale > 0.0)) throw std::invalid_argument("grid scale must be positive");
    if (name == "sandwich") {
        auto r = sandwich_suite(grid_scale);
        auto q = ratio_suite(grid_scale);
        for (const auto& row : q.table.data()) r.table.add(row);
        r.total += q.total;
        r.failures += q.failures;
        r.seconds += q.seconds;
        return r;
    }
    if (name == "variance") return variance_suite(seed, grid_scale);
    if (name == "calibration") return calibration_suite(seed, grid_scale);
    if (name == "J") return J_suite(grid_scale);
    if (name == "KL") return KL_suite(seed, grid_scale);
    if (name == "covering") return covering_suite();
    if (name == "vg") return vg_suite();
    if (name == "bump") return bump_suite(seed, grid_scale);
    if (name == "separation") return separation_suite(grid_scale);
    throw std::invalid_argument("unknown suite: " + name);
}

}  // namespace logitnets
