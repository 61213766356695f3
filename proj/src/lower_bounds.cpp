#include "logitnets/lower_bounds.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "logitnets/parallel.hpp"
#include "logitnets/random.hpp"

namespace logitnets {

namespace {

constexpr double kA = 1.0 / 9.0;
constexpr double kB = 1.0 / 8.0;
constexpr int kCells = 2048;

// exp(-1/(t-a) - 1/(b-t)) rescaled by its value at the midpoint so that the
// table stays far from underflow.
double rho(double t) {
    if (t <= kA || t >= kB) return 0.0;
    return std::exp(-1.0 / (t - kA) - 1.0 / (kB - t) + 4.0 / (kB - kA));
}

constexpr std::array<double, 8> kGlX = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                        -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                        0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlW = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                        0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                        0.2223810344533745, 0.1012285362903763};

double gauss(double lo, double hi) {
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo), s = 0.0;
    for (int i = 0; i < 8; ++i) s += kGlW[i] * rho(mid + half * kGlX[i]);
    return s * half;
}

// Tail integrals int_{t_i}^{b} rho on a uniform partition, built once.
struct KappaTable {
    std::vector<double> tail;
    double h = (kB - kA) / kCells;
    double Z = 0.0;

    KappaTable() : tail(kCells + 1, 0.0) {
        for (int i = kCells - 1; i >= 0; --i) tail[i] = tail[i + 1] + gauss(kA + i * h, kA + (i + 1) * h);
        Z = tail[0];
    }
};

const KappaTable& table() {
    static const KappaTable t;
    return t;
}

}  // namespace

double kappa(double t) {
    if (t <= kA) return 1.0;
    if (t >= kB) return 0.0;
    const auto& tb = table();
    int i = std::min(kCells - 1, static_cast<int>((t - kA) / tb.h));
    double right = kA + (i + 1) * tb.h;
    return (tb.tail[i + 1] + gauss(t, right)) / tb.Z;
}

double kappa_prime(double t) { return -rho(t) / table().Z; }

double kappa_second(double t) {
    if (t <= kA || t >= kB) return 0.0;
    double p = 1.0 / ((t - kA) * (t - kA)) - 1.0 / ((kB - t) * (kB - t));
    return -rho(t) * p / table().Z;
}

double mollifier_u(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return kappa(s);
}

double mollifier_norm_bound(double beta) {
    if (!(beta > 0.0 && beta <= 2.0)) throw std::invalid_argument("mollifier norm: beta must lie in (0, 2]");
    const int b = static_cast<int>(std::ceil(beta)) - 1;
    const double lambda = beta - b;
    // Radial sup of |grad u| = 2 s |kappa'(s^2)| and of the Lipschitz bound of
    // the first derivatives, 2 |kappa'| + 4 s^2 |kappa''|.
    double L = 0.0, L2 = 0.0;
    const int samples = 200000;
    for (int i = 0; i <= samples; ++i) {
        double t = kA + (kB - kA) * i / samples;
        double s = std::sqrt(t);
        L = std::max(L, 2.0 * s * std::abs(kappa_prime(t)));
        L2 = std::max(L2, 2.0 * std::abs(kappa_prime(t)) + 4.0 * t * std::abs(kappa_second(t)));
    }
    const double margin = 1.01;  // sampling slack
    L *= margin;
    L2 *= margin;
    if (b == 0) return 1.0 + std::pow(L, lambda);  // |u(x)-u(y)| <= min(1, L|x-y|)
    return std::max(1.0, L) + L2;
}

std::vector<double> BumpGrid::center(std::size_t idx) const {
    std::vector<double> c(d);
    for (int a = 0; a < d; ++a) {
        c[a] = (2.0 * static_cast<double>(idx % Q) + 1.0) / (2.0 * Q);
        idx /= Q;
    }
    return c;
}

namespace {

// Index of the grid cell containing x and Q (x - center).
std::size_t locate(const BumpGrid& g, std::span<const double> x, std::vector<double>& y) {
    std::size_t idx = 0, stride = 1;
    y.resize(g.d);
    for (int a = 0; a < g.d; ++a) {
        int k = std::clamp(static_cast<int>(std::floor(x[a] * g.Q)), 0, g.Q - 1);
        y[a] = g.Q * x[a] - (k + 0.5);
        idx += static_cast<std::size_t>(k) * stride;
        stride *= g.Q;
    }
    return idx;
}

}  // namespace

double BumpGrid::operator()(std::span<const double> x) const {
    // Supports sit strictly inside their own cells, so only one term is live.
    std::vector<double> y;
    std::size_t idx = locate(*this, x, y);
    return signs[idx] * amplitude * mollifier_u(y);
}

std::vector<double> BumpGrid::gradient(std::span<const double> x) const {
    std::vector<double> y;
    std::size_t idx = locate(*this, x, y);
    double s = 0.0;
    for (double v : y) s += v * v;
    double k = kappa_prime(s);
    std::vector<double> g(d);
    for (int a = 0; a < d; ++a) g[a] = signs[idx] * amplitude * Q * 2.0 * y[a] * k;
    return g;
}

BumpGrid bump_grid_build(int Q, int d, double beta, double r, std::vector<int> signs) {
    if (Q < 2) throw std::invalid_argument("bump grid: Q must be >= 2");
    if (d < 1) throw std::invalid_argument("bump grid: d must be positive");
    if (!(r > 0.0)) throw std::invalid_argument("bump grid: r must be positive");
    std::size_t cells = 1;
    for (int a = 0; a < d; ++a) cells *= static_cast<std::size_t>(Q);
    if (signs.empty()) signs.assign(cells, 1);
    if (signs.size() != cells) throw std::invalid_argument("bump grid: need one sign per cell");
    for (int s : signs)
        if (s != 1 && s != -1) throw std::invalid_argument("bump grid: signs must be +-1");
    BumpGrid g;
    g.Q = Q;
    g.d = d;
    g.beta = beta;
    g.r = r;
    g.c2_hat = mollifier_norm_bound(beta);
    g.c1 = std::min(r / (4.0 * g.c2_hat), 1e-4);
    g.amplitude = g.c1 / std::pow(static_cast<double>(Q), beta);
    g.signs = std::move(signs);
    return g;
}

HolderEstimate holder_norm_estimate(const BumpGrid& f, int pairs, std::uint64_t seed) {
    const int d = f.d;
    const int b = static_cast<int>(std::ceil(f.beta)) - 1;
    const double lambda = f.beta - b;
    HolderEstimate e;

    Grid grid;
    grid.lo.assign(d, 0.0);
    grid.hi.assign(d, 1.0);
    grid.per_axis = d == 1 ? 4001 : std::max(3, static_cast<int>(std::pow(40000.0, 1.0 / d)));
    std::vector<double> x(d), y(d);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.point(i, x.data());
        e.sup_terms = std::max(e.sup_terms, std::abs(f(x)));
        if (b == 1)
            for (double g : f.gradient(x)) e.sup_terms = std::max(e.sup_terms, std::abs(g));
    }
    for (std::size_t c = 0; c < f.cells(); ++c) e.sup_terms = std::max(e.sup_terms, std::abs(f(f.center(c))));

    Rng rng(stream_seed(seed, 0xB0B));
    for (int p = 0; p < pairs; ++p) {
        if (p % 2 == 0) {
            for (auto& v : x) v = uniform01(rng);
        } else {
            // Start inside the transition annulus of a random bump.
            auto c = f.center(static_cast<std::size_t>(uniform01(rng) * f.cells()));
            double rad = std::sqrt(kA + (kB - kA) * uniform01(rng)) / f.Q;
            std::vector<double> dir(d);
            double nrm = 0.0;
            for (auto& v : dir) {
                v = uniform01(rng) - 0.5;
                nrm += v * v;
            }
            nrm = std::sqrt(nrm) + 1e-300;
            for (int a = 0; a < d; ++a) x[a] = std::clamp(c[a] + rad * dir[a] / nrm, 0.0, 1.0);
        }
        double h = std::pow(10.0, -4.0 * uniform01(rng));
        double nrm = 0.0;
        std::vector<double> dir(d);
        for (auto& v : dir) {
            v = uniform01(rng) - 0.5;
            nrm += v * v;
        }
        nrm = std::sqrt(nrm) + 1e-300;
        double dist2 = 0.0;
        for (int a = 0; a < d; ++a) {
            y[a] = std::clamp(x[a] + h * dir[a] / nrm, 0.0, 1.0);
            dist2 += (y[a] - x[a]) * (y[a] - x[a]);
        }
        if (dist2 == 0.0) continue;
        double denom = std::pow(std::sqrt(dist2), lambda);
        if (b == 0) {
            e.seminorm = std::max(e.seminorm, std::abs(f(x) - f(y)) / denom);
        } else {
            auto gx = f.gradient(x), gy = f.gradient(y);
            for (int a = 0; a < d; ++a) e.seminorm = std::max(e.seminorm, std::abs(gx[a] - gy[a]) / denom);
        }
    }
    e.norm = e.sup_terms + e.seminorm;
    return e;
}

BinaryCode vg_code(int m) {
    if (m < 2) throw std::invalid_argument("vg code: m must be >= 2");
    if (m > 64) throw std::invalid_argument("vg code: m must be <= 64");
    BinaryCode c;
    c.m = m;
    const double need = 1.0 + std::pow(2.0, m / 8.0);
    const int dmin = static_cast<int>(std::ceil(m / 8.0));
    auto fits = [&](std::uint64_t w) {
        for (auto v : c.words)
            if (std::popcount(w ^ v) < dmin) return false;
        return true;
    };
    if (m <= 8) {
        for (std::uint64_t w = 0; w < (1ULL << m); ++w) c.words.push_back(w);
    } else if (m <= 24) {
        for (std::uint64_t w = 0; w < (1ULL << m) && static_cast<double>(c.words.size()) < need; ++w)
            if (fits(w)) c.words.push_back(w);
    } else {
        // Lexicographic scanning is too slow here; random candidates are
        // accepted under the same rule, starting from the zero word.
        c.words.push_back(0);
        Rng rng(stream_seed(0x76C0DE, m));
        const std::uint64_t mask = m == 64 ? ~0ULL : ((1ULL << m) - 1);
        for (long long tries = 0; static_cast<double>(c.words.size()) < need; ++tries) {
            if (tries > 100000000LL) throw std::runtime_error("vg code: greedy construction failed");
            std::uint64_t w = rng() & mask;
            if (fits(w)) c.words.push_back(w);
        }
    }
    if (static_cast<double>(c.words.size()) < need) throw std::runtime_error("vg code: greedy construction failed");
    c.min_distance = m;
    for (std::size_t i = 0; i < c.words.size(); ++i)
        for (std::size_t j = i + 1; j < c.words.size(); ++j)
            c.min_distance = std::min(c.min_distance, std::popcount(c.words[i] ^ c.words[j]));
    return c;
}

CodeCertificate certify_code(const BinaryCode& c) {
    CodeCertificate r;
    r.size = c.words.size();
    r.required_size = 1.0 + std::pow(2.0, c.m / 8.0);
    r.required_distance = c.m / 8.0;
    r.min_distance = c.m;
    const std::uint64_t mask = c.m == 64 ? ~0ULL : ((1ULL << c.m) - 1);
    bool in_range = true;
    for (std::size_t i = 0; i < c.words.size(); ++i) {
        in_range = in_range && (c.words[i] & ~mask) == 0;
        for (std::size_t j = i + 1; j < c.words.size(); ++j)
            r.min_distance = std::min(r.min_distance, std::popcount(c.words[i] ^ c.words[j]));
    }
    r.passed = in_range && static_cast<double>(r.size) >= r.required_size && r.min_distance >= r.required_distance;
    return r;
}

namespace {

double tau(double beta, int q) { return std::pow(std::min(1.0, beta), q); }

double outer_scale(const FamilyParams& p) {
    double e = 0.0;
    for (int k = 0; k < p.q; ++k) e += std::pow(std::min(1.0, p.beta), k);
    return std::pow(std::min(1.0, p.r) / 777.0, e);
}

}  // namespace

int family_Q_for_n(double n, int d_star, double beta, int q) {
    return static_cast<int>(std::floor(std::pow(n, 1.0 / (d_star + beta * tau(beta, q))))) + 1;
}

double HypothesisFamily::eta_closed(std::size_t j, std::span<const double> x) const {
    const auto& b = *bumps.at(j);
    double g = b.amplitude + b(x.first(params.d_star));
    return outer_scale(params) * std::pow(std::abs(g), tau(params.beta, params.q)) + epsilon;
}

HypothesisFamily hypothesis_family(const FamilyParams& p) {
    if (p.Q < 2) throw std::invalid_argument("family: Q must be >= 2");
    if (p.d_star < 1 || p.d_star > p.d) throw std::invalid_argument("family: need 1 <= d_star <= d");
    if (p.q > 0 && p.d_star > p.K) throw std::invalid_argument("family: need d_star <= K when q > 0");
    if (!(p.A >= 0.0 && p.A < 1.0)) throw std::invalid_argument("family: A must lie in [0, 1)");
    HypothesisFamily f;
    f.params = p;
    const double m_real = std::pow(static_cast<double>(p.Q), p.d_star);
    if (m_real > 64) throw std::invalid_argument("family: Q^d_star must be <= 64");
    const int m = static_cast<int>(m_real);
    f.M = static_cast<int>(std::ceil(std::pow(2.0, m / 8.0)));
    f.code = vg_code(m);
    if (static_cast<int>(f.code.words.size()) < f.M + 1) throw std::runtime_error("family: code too small");

    const double rr = std::min(1.0, p.r) / 777.0;
    const double t = tau(p.beta, p.q);
    for (int j = 0; j <= f.M; ++j) {
        std::vector<int> signs(m);
        for (int a = 0; a < m; ++a) signs[a] = (f.code.words[j] >> a & 1ULL) ? 1 : -1;
        f.bumps.push_back(std::make_shared<const BumpGrid>(bump_grid_build(p.Q, p.d_star, p.beta, rr, signs)));
    }
    f.c1 = f.bumps[0]->c1;
    f.epsilon = 0.5 * outer_scale(p) * std::pow(2.0 * f.bumps[0]->amplitude, t);
    f.s = std::pow(2.0 / std::sqrt(25.0 * p.d_star), p.d_star) * f.epsilon / 32.0;
    f.n_threshold = std::pow(7.0 / (1.0 - p.A), (p.d_star + p.beta * t) / (p.beta * t));
    f.membership_ok = 1.0 - 6.0 * f.epsilon > p.A;

    // eta_j = eps + h_q o ... o h_1 o h_{0,j}, composed stage by stage.
    for (int j = 0; j <= f.M; ++j) {
        auto bump = f.bumps[j];
        const double eps = f.epsilon;
        DataDistribution P;
        P.d = p.d;
        P.family_tag = "lower-bound j=" + std::to_string(j);
        P.eta = [bump, p, rr, eps](std::span<const double> x) {
            std::vector<double> z(p.q > 0 ? p.K : 1, 0.0);
            z[0] = bump->amplitude + (*bump)(x.first(p.d_star));
            for (int i = 1; i <= p.q; ++i) {
                double v = rr * std::pow(std::abs(z[0]), std::min(1.0, p.beta));
                std::fill(z.begin(), z.end(), 0.0);
                z[0] = v;
            }
            return eps + z[0];
        };
        f.dists.push_back(std::move(P));
    }
    return f;
}

SeparationReport separation_certificate(const HypothesisFamily& fam, int per_axis) {
    const int ds = fam.params.d_star;
    const int d = fam.params.d;
    if (per_axis <= 0) per_axis = std::max(2, static_cast<int>(std::pow(1e5, 1.0 / ds)));
    std::size_t nodes = 1;
    for (int a = 0; a < ds; ++a) nodes *= static_cast<std::size_t>(per_axis);
    const std::size_t nd = fam.dists.size();

    // eta_j on the midpoint grid; trailing coordinates are fixed at 1/2.
    std::vector<std::vector<double>> vals(nd, std::vector<double>(nodes));
    for_each_index(Exec::Parallel, nodes, [&](std::size_t k) {
        std::vector<double> x(d, 0.5);
        std::size_t r = k;
        for (int a = 0; a < ds; ++a) {
            x[a] = (static_cast<double>(r % per_axis) + 0.5) / per_axis;
            r /= per_axis;
        }
        for (std::size_t j = 0; j < nd; ++j) vals[j][k] = fam.dists[j].eta(x);
    });

    SeparationReport rep;
    rep.s = fam.s;
    rep.nine_eps = 9.0 * fam.epsilon;
    rep.n_threshold = fam.n_threshold;
    rep.min_J = kInf;
    rep.passed = fam.membership_ok;
    for (std::size_t i = 0; i < nd; ++i) {
        for (std::size_t j = i + 1; j < nd; ++j) {
            PairRow row;
            row.i = i;
            row.j = j;
            row.hamming = std::popcount(fam.code.words[i] ^ fam.code.words[j]);
            double s = 0.0;
            for (std::size_t k = 0; k < nodes; ++k) s += J_function(vals[i][k], vals[j][k]);
            row.J_integral = s / static_cast<double>(nodes);
            row.passed = row.J_integral >= fam.s;
            rep.min_J = std::min(rep.min_J, row.J_integral);
            rep.passed = rep.passed && row.passed;
            rep.pairs.push_back(row);
        }
    }
    for (std::size_t j = 0; j < nd; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < nodes; ++k) s += kl_pointwise(vals[j][k], vals[0][k]);
        double kl = s / static_cast<double>(nodes);
        rep.kl_to_0.push_back(kl);
        rep.max_kl = std::max(rep.max_kl, kl);
    }
    rep.passed = rep.passed && rep.max_kl <= rep.nine_eps;
    return rep;
}

}  // namespace logitnets
