#include "logitnets/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "logitnets/parallel.hpp"
#include "logitnets/random.hpp"

namespace logitnets {

namespace {

constexpr long long kMaxGridNodes = 1000000;
constexpr double kZ95 = 1.959963984540054;

using PointFn = std::function<void(std::span<const double>, double, double*)>;

// Integrates k functionals at once. Values are stored per node and reduced in
// node order, so the result does not depend on the thread count.
std::vector<Estimate> integrate_k(const DataDistribution& P, const Quadrature& q, int k, const PointFn& g) {
    P.validate();
    const int d = P.d;
    std::vector<double> vals;
    std::vector<double> w;
    std::size_t n = 0;
    bool mc = q.kind == Quadrature::Kind::MonteCarlo;

    if (!P.marginal.uniform && !mc) {
        n = P.marginal.points.size();
        vals.assign(n * k, 0.0);
        for_each_index(Exec::Parallel, n, [&](std::size_t i) {
            const auto& x = P.marginal.points[i];
            g(x, P.eta(x), vals.data() + i * k);
        });
        std::vector<Estimate> out(k);
        for (std::size_t i = 0; i < n; ++i)
            for (int j = 0; j < k; ++j) out[j].value += P.marginal.weights[i] * vals[i * k + j];
        return out;
    }

    std::vector<double> pts;
    if (mc) {
        if (q.samples < 2) throw std::invalid_argument("quadrature: need at least 2 samples");
        n = static_cast<std::size_t>(q.samples);
        pts.resize(n * d);
        Rng rng(stream_seed(q.seed, 0x51));
        if (P.marginal.uniform) {
            // Stratified along axis 0, plain uniform on the rest.
            for (std::size_t i = 0; i < n; ++i) {
                pts[i * d] = (static_cast<double>(i) + uniform01(rng)) / static_cast<double>(n);
                for (int a = 1; a < d; ++a) pts[i * d + a] = uniform01(rng);
            }
        } else {
            std::vector<double> cdf(P.marginal.weights.size());
            std::partial_sum(P.marginal.weights.begin(), P.marginal.weights.end(), cdf.begin());
            for (std::size_t i = 0; i < n; ++i) {
                double u = uniform01(rng) * cdf.back();
                auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
                std::size_t idx = std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1);
                std::copy(P.marginal.points[idx].begin(), P.marginal.points[idx].end(), pts.begin() + i * d);
            }
        }
    } else {
        long long m = std::max(2, q.per_axis);
        while (m > 2 && std::pow(static_cast<double>(m), d) > static_cast<double>(kMaxGridNodes)) --m;
        n = 1;
        for (int a = 0; a < d; ++a) n *= static_cast<std::size_t>(m);
        pts.resize(n * d);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = i;
            for (int a = 0; a < d; ++a) {
                pts[i * d + a] = (static_cast<double>(r % m) + 0.5) / static_cast<double>(m);
                r /= m;
            }
        }
    }

    vals.assign(n * k, 0.0);
    for_each_index(Exec::Parallel, n, [&](std::size_t i) {
        std::span<const double> x(pts.data() + i * d, d);
        g(x, P.eta(x), vals.data() + i * k);
    });

    std::vector<Estimate> out(k);
    for (int j = 0; j < k; ++j) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double v = vals[i * k + j];
            s += v;
            s2 += v * v;
        }
        double mean = s / static_cast<double>(n);
        out[j].value = mean;
        if (mc) {
            double var = std::max(0.0, s2 / static_cast<double>(n) - mean * mean) * n / (n - 1.0);
            out[j].half_width = kZ95 * std::sqrt(var / static_cast<double>(n));
        }
    }
    return out;
}

double clamp01(double t) { return std::min(1.0, std::max(0.0, t)); }

double entropy_inverse(double h) {
    // Inverse of H on (0, 1/2].
    if (h >= std::log(2.0)) return 0.5;
    double lo = 0.0, hi = 0.5;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (entropy_H(mid) < h ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace

double logistic_loss(double t) {
    if (t == kInf) return 0.0;
    if (t == -kInf) return kInf;
    return std::max(0.0, -t) + std::log1p(std::exp(-std::abs(t)));
}

double target_function(double eta) {
    if (eta <= 0.0) return -kInf;
    if (eta >= 1.0) return kInf;
    return std::log(eta) - std::log1p(-eta);
}

double entropy_H(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return -t * std::log(t) - (1.0 - t) * std::log1p(-t);
}

void DataDistribution::validate() const {
    if (d < 1) throw std::invalid_argument("distribution: d must be positive");
    if (!eta) throw std::invalid_argument("distribution: eta is empty");
    if (!marginal.uniform) {
        if (marginal.points.empty() || marginal.points.size() != marginal.weights.size())
            throw std::invalid_argument("distribution: grid marginal needs one weight per point");
        double s = 0.0;
        for (std::size_t i = 0; i < marginal.points.size(); ++i) {
            if (marginal.points[i].size() != static_cast<std::size_t>(d))
                throw std::invalid_argument("distribution: grid point has wrong dimension");
            if (marginal.weights[i] < 0.0) throw std::invalid_argument("distribution: negative weight");
            s += marginal.weights[i];
        }
        if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("distribution: weights must sum to 1");
    }
}

Estimate integrate(const DataDistribution& P, const Quadrature& q,
                   const std::function<double(std::span<const double>, double)>& g) {
    return integrate_k(P, q, 1, [&](std::span<const double> x, double e, double* out) { out[0] = g(x, e); })[0];
}

double conditional_phi_risk(double eta, double t) {
    double r = 0.0;
    if (eta > 0.0) r += eta * logistic_loss(t);
    if (eta < 1.0) r += (1.0 - eta) * logistic_loss(-t);
    return r;
}

Estimate phi_risk(const RealFn& f, const DataDistribution& P, const Quadrature& q) {
    return integrate(P, q, [&](std::span<const double> x, double e) { return conditional_phi_risk(e, f(x)); });
}

Estimate bayes_phi_risk(const DataDistribution& P, const Quadrature& q) {
    return integrate(P, q, [](std::span<const double>, double e) { return entropy_H(e); });
}

Estimate excess_phi_risk(const RealFn& f, const DataDistribution& P, const Quadrature& q) {
    return integrate(P, q, [&](std::span<const double> x, double e) { return pointwise_excess(e, f(x)); });
}

Estimate misclass_risk(const RealFn& f, const DataDistribution& P, const Quadrature& q) {
    return integrate(P, q, [&](std::span<const double> x, double e) { return sgn(f(x)) > 0 ? 1.0 - e : e; });
}

Estimate excess_misclass(const RealFn& f, const DataDistribution& P, const Quadrature& q) {
    return integrate(P, q, [&](std::span<const double> x, double e) {
        return sgn(f(x)) != sgn(2.0 * e - 1.0) ? std::abs(2.0 * e - 1.0) : 0.0;
    });
}

CalibrationReport calibration_check(const RealFn& f, const DataDistribution& P, const Quadrature& q) {
    auto est = integrate_k(P, q, 2, [&](std::span<const double> x, double e, double* out) {
        double fx = f(x);
        out[0] = sgn(fx) != sgn(2.0 * e - 1.0) ? std::abs(2.0 * e - 1.0) : 0.0;
        out[1] = pointwise_excess(e, fx);
    });
    CalibrationReport r;
    r.excess_misclass = est[0].value;
    r.excess_phi = est[1].value;
    r.rhs = 2.0 * std::sqrt(2.0) * std::sqrt(std::max(0.0, r.excess_phi));
    r.slack = est[0].half_width + 2.0 * std::sqrt(2.0) * std::sqrt(est[1].half_width) + 1e-12;
    r.passed = r.excess_misclass <= r.rhs + r.slack;
    return r;
}

PsiFunction truncated_psi(double delta0) {
    if (!(delta0 > 0.0 && delta0 < 1.0 / 3.0)) throw std::invalid_argument("truncated psi: delta0 must lie in (0, 1/3)");
    PsiFunction p;
    p.variant = PsiFunction::Variant::Truncated;
    p.delta0 = delta0;
    p.delta1 = std::min(delta0 / std::log(1.0 / delta0), entropy_inverse(0.8 * -std::log1p(-delta0)));
    return p;
}

PsiFunction margin_psi(double eta0, double F0) {
    if (!(eta0 > 0.0 && eta0 < 1.0)) throw std::invalid_argument("margin psi: eta0 must lie in (0, 1)");
    if (!(F0 > 0.0 && F0 < std::log((1.0 + eta0) / (1.0 - eta0))))
        throw std::invalid_argument("margin psi: F0 must lie in (0, log((1+eta0)/(1-eta0)))");
    PsiFunction p;
    p.variant = PsiFunction::Variant::Margin;
    p.eta0 = eta0;
    p.F0 = F0;
    return p;
}

double psi_eval(const PsiFunction& psi, double e, int y) {
    if (psi.variant == PsiFunction::Variant::Truncated) {
        if (e >= psi.delta1 && e <= 1.0 - psi.delta1) return logistic_loss(y * target_function(e));
        return entropy_H(e);
    }
    if (std::abs(2.0 * e - 1.0) > psi.eta0) return logistic_loss(y * psi.F0 * sgn(2.0 * e - 1.0));
    return logistic_loss(y * target_function(e));
}

double psi_gamma(const PsiFunction& psi) {
    if (psi.variant == PsiFunction::Variant::Truncated) {
        double l = std::log(psi.delta0);
        return 125000.0 * l * l;
    }
    return 8.0 / (1.0 - psi.eta0 * psi.eta0);
}

double psi_upper(const PsiFunction& psi) {
    if (psi.variant == PsiFunction::Variant::Truncated)
        return std::log(10.0 * std::log(1.0 / psi.delta0) / psi.delta0);
    return std::log(2.0 / (1.0 - psi.eta0));
}

double psi_f_bound(const PsiFunction& psi) {
    if (psi.variant == PsiFunction::Variant::Truncated) return std::log((1.0 - psi.delta0) / psi.delta0);
    return psi.F0;
}

VarianceReport variance_bound_check(const PsiFunction& psi, const RealFn& f, const DataDistribution& P,
                                    const Quadrature& q) {
    auto est = integrate_k(P, q, 2, [&](std::span<const double> x, double e, double* out) {
        double fx = f(x);
        double dp = logistic_loss(fx) - psi_eval(psi, e, 1);
        double dm = logistic_loss(-fx) - psi_eval(psi, e, -1);
        out[0] = e * dp + (1.0 - e) * dm;
        out[1] = e * dp * dp + (1.0 - e) * dm * dm;
    });
    VarianceReport r;
    r.first_moment = est[0].value;
    r.second_moment = est[1].value;
    r.gamma = psi_gamma(psi);
    double rhs = r.gamma * r.first_moment;
    r.ratio = rhs > 0.0 ? r.second_moment / rhs : (r.second_moment > 0.0 ? kInf : 0.0);
    r.passed = r.second_moment <= rhs + 1e-12 * (1.0 + r.second_moment);
    return r;
}

double pointwise_excess(double a, double f) {
    if (a <= 0.0) return logistic_loss(-f);
    if (a >= 1.0) return logistic_loss(f);
    if (!std::isfinite(f)) return kInf;
    double delta = f - target_function(a);
    if (std::abs(delta) > 500.0) return conditional_phi_risk(a, f) - entropy_H(a);
    return a * std::log1p((1.0 - a) * std::expm1(-delta)) + (1.0 - a) * std::log1p(a * std::expm1(delta));
}

SandwichReport sandwich_check(double a, double f, double A, double B) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("sandwich: a must lie in (0, 1)");
    double l = target_function(a);
    if (!(A <= std::min(f, l) && std::max(f, l) <= B)) throw std::invalid_argument("sandwich: need A <= min, max <= B");
    auto c = [](double z) { return 1.0 / (4.0 + 2.0 * std::exp(z) + 2.0 * std::exp(-z)); };
    double d2 = (f - l) * (f - l);
    SandwichReport r;
    r.lower = std::min(c(A), c(B)) * d2;
    r.upper = c(std::clamp(0.0, A, B)) * d2;
    r.quarter = d2 / 8.0;
    r.middle = pointwise_excess(a, f);
    double tol = 1e-12 * r.quarter;
    r.passed = r.lower <= r.middle + tol && r.middle <= r.upper + tol && r.upper <= r.quarter + tol;
    return r;
}

RatioReport variance_ratio_pointwise(double a, double f, double delta) {
    if (!(delta > 0.0 && delta < 0.5)) throw std::invalid_argument("variance ratio: delta must lie in (0, 1/2)");
    double band = std::log((1.0 - delta) / delta);
    if (a < delta || a > 1.0 - delta || std::abs(f) > band * (1.0 + 1e-15))
        throw std::invalid_argument("variance ratio: (a, f) outside the admissible box");
    double l = target_function(a);
    double dp = logistic_loss(f) - logistic_loss(l);
    double dm = logistic_loss(-f) - logistic_loss(-l);
    RatioReport r;
    r.H = a * dp * dp + (1.0 - a) * dm * dm;
    r.G = pointwise_excess(a, f);
    double ld = std::log(delta);
    r.gamma = 5000.0 * ld * ld;
    r.passed = r.H <= r.gamma * r.G + 1e-14;
    return r;
}

double J_function(double x, double y) { return 2.0 * entropy_H(0.5 * (x + y)) - entropy_H(x) - entropy_H(y); }

JBoundsReport J_bounds_check(double eps) {
    JBoundsReport r;
    r.J = J_function(eps, 3.0 * eps);
    r.passed = eps / 4.0 < r.J && r.J < eps;
    return r;
}

double kl_pointwise(double e1, double e2) {
    if (!(e2 > 0.0 && e2 < 1.0)) throw std::invalid_argument("kl: eta2 must lie in (0, 1)");
    double r = 0.0;
    if (e1 > 0.0) r += e1 * std::log(e1 / e2);
    if (e1 < 1.0) r += (1.0 - e1) * std::log((1.0 - e1) / (1.0 - e2));
    return r;
}

double kl_divergence(const RealFn& eta1, const RealFn& eta2, int d, const Quadrature& q) {
    DataDistribution P;
    P.d = d;
    P.eta = eta1;
    return integrate(P, q, [&](std::span<const double> x, double e) { return kl_pointwise(e, eta2(x)); }).value;
}

double covering_bound(double G, double N, double S, double B, double gamma, int d) {
    if (G < 1.0) throw std::invalid_argument("covering bound: G must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("covering bound: gamma must lie in (0, 1)");
    double D = static_cast<double>(d);
    return (S + G * D + 1.0) * (2.0 * G + 5.0) *
           std::log((std::max(N, D) + 1.0) * std::max(B, 1.0) * (2.0 * G + 2.0) / gamma);
}

namespace {

std::vector<double> drop_axis(std::span<const double> x, int axis) {
    std::vector<double> r;
    r.reserve(x.size() - 1);
    for (std::size_t i = 0; i < x.size(); ++i)
        if (static_cast<int>(i) != axis) r.push_back(x[i]);
    return r;
}

bool in_piece(const HorizonPiece& p, std::span<const double> x) {
    auto rest = drop_axis(x, p.axis);
    return x[p.axis] >= std::max(0.0, p.g(rest));
}

}  // namespace

bool BoundaryClassifierSpec::in_region(std::size_t t, std::span<const double> x) const {
    for (const auto& p : regions.at(t))
        if (!in_piece(p, x)) return false;
    return true;
}

int BoundaryClassifierSpec::classify(std::span<const double> x) const {
    for (std::size_t t = 0; t < regions.size(); ++t)
        if (in_region(t, x)) return 1;
    return -1;
}

void BoundaryClassifierSpec::check_disjoint(long long samples, std::uint64_t seed) const {
    Rng rng(stream_seed(seed, 0xD15));
    std::vector<double> x(d);
    for (long long s = 0; s < samples; ++s) {
        for (auto& v : x) v = uniform01(rng);
        int hits = 0;
        for (std::size_t t = 0; t < regions.size(); ++t) hits += in_region(t, x);
        if (hits > 1) throw std::invalid_argument("boundary spec: regions overlap");
    }
}

SampledBoundary sample_boundary(const BoundaryClassifierSpec& spec, int per_surface) {
    SampledBoundary out;
    const int d = spec.d;
    if (d < 2) throw std::invalid_argument("boundary: need d >= 2");
    int m = std::max(2, static_cast<int>(std::floor(std::pow(per_surface, 1.0 / (d - 1)) + 1e-9)));
    out.spacing = 1.0 / (m - 1);
    std::size_t total = 1;
    for (int a = 0; a < d - 1; ++a) total *= static_cast<std::size_t>(m);
    std::vector<double> u(d - 1), x(d);
    for (std::size_t t = 0; t < spec.regions.size(); ++t) {
        for (const auto& piece : spec.regions[t]) {
            for (std::size_t i = 0; i < total; ++i) {
                std::size_t r = i;
                for (int a = 0; a < d - 1; ++a) {
                    u[a] = static_cast<double>(r % m) / (m - 1);
                    r /= m;
                }
                double h = std::max(0.0, piece.g(u));
                if (h > 1.0) continue;
                for (int a = 0, k = 0; a < d; ++a) x[a] = a == piece.axis ? h : u[k++];
                if (spec.in_region(t, x)) out.points.push_back(x);
            }
        }
    }
    std::sort(out.points.begin(), out.points.end());
    return out;
}

double boundary_distance(const SampledBoundary& b, std::span<const double> x) {
    if (b.points.empty()) return kInf;
    // Points are sorted by their first coordinate; scan outwards and stop
    // once that coordinate alone exceeds the best distance.
    auto it = std::lower_bound(b.points.begin(), b.points.end(), x[0],
                               [](const std::vector<double>& p, double v) { return p[0] < v; });
    double best2 = kInf;
    auto dist2 = [&](const std::vector<double>& p) {
        double s = 0.0;
        for (std::size_t a = 0; a < p.size(); ++a) s += (p[a] - x[a]) * (p[a] - x[a]);
        return s;
    };
    for (auto r = it; r != b.points.end(); ++r) {
        double dx = (*r)[0] - x[0];
        if (dx * dx > best2) break;
        best2 = std::min(best2, dist2(*r));
    }
    for (auto l = it; l != b.points.begin();) {
        --l;
        double dx = x[0] - (*l)[0];
        if (dx * dx > best2) break;
        best2 = std::min(best2, dist2(*l));
    }
    return std::sqrt(best2);
}

NoiseMarginCurves noise_margin_estimators(const DataDistribution& P, const BoundaryClassifierSpec& spec,
                                          const std::vector<double>& t_grid, long long samples, std::uint64_t seed,
                                          int per_surface) {
    P.validate();
    if (spec.d != P.d) throw std::invalid_argument("noise/margin: dimension mismatch");
    if (samples < 1) throw std::invalid_argument("noise/margin: need samples");
    auto boundary = sample_boundary(spec, per_surface);
    const int d = P.d;
    const std::size_t n = static_cast<std::size_t>(samples);
    std::vector<double> pts(n * d);
    Rng rng(stream_seed(seed, 0x4E4D));
    for (auto& v : pts) v = uniform01(rng);
    std::vector<double> noise(n), dist(n);
    for_each_index(Exec::Parallel, n, [&](std::size_t i) {
        std::span<const double> x(pts.data() + i * d, d);
        noise[i] = std::abs(2.0 * P.eta(x) - 1.0);
        dist[i] = boundary_distance(boundary, x);
    });
    std::sort(noise.begin(), noise.end());
    std::sort(dist.begin(), dist.end());
    NoiseMarginCurves c;
    c.t = t_grid;
    auto frac = [&](const std::vector<double>& v, double t) {
        return static_cast<double>(std::upper_bound(v.begin(), v.end(), t) - v.begin()) / static_cast<double>(n);
    };
    auto hw = [&](double p) { return kZ95 * std::sqrt(p * (1.0 - p) / static_cast<double>(n)); };
    for (double t : t_grid) {
        double pn = frac(noise, t), pm = frac(dist, t);
        c.noise.push_back(pn);
        c.noise_hw.push_back(hw(pn));
        c.margin.push_back(pm);
        c.margin_hw.push_back(hw(pm));
    }
    return c;
}

DataDistribution boundary_distribution(const BoundaryClassifierSpec& spec, double eta0) {
    DataDistribution P;
    P.d = spec.d;
    P.family_tag = "boundary";
    P.eta = [spec, eta0](std::span<const double> x) { return 0.5 + 0.5 * eta0 * spec.classify(x); };
    return P;
}

BoundaryClassifierSpec half_plane_spec() {
    BoundaryClassifierSpec s;
    s.d = 2;
    s.regions = {{HorizonPiece{[](std::span<const double>) { return 0.5; }, 1}}};
    return s;
}

BoundaryClassifierSpec two_triangles_spec() {
    BoundaryClassifierSpec s;
    s.d = 2;
    s.regions = {{HorizonPiece{[](std::span<const double> u) { return 0.6 + u[0]; }, 1}},
                 {HorizonPiece{[](std::span<const double> u) { return 0.6 + u[0]; }, 0}}};
    return s;
}

double two_triangles_distance(std::span<const double> x) {
    auto seg = [&](double ax, double ay, double bx, double by) {
        double vx = bx - ax, vy = by - ay;
        double t = clamp01(((x[0] - ax) * vx + (x[1] - ay) * vy) / (vx * vx + vy * vy));
        double dx = x[0] - ax - t * vx, dy = x[1] - ay - t * vy;
        return std::sqrt(dx * dx + dy * dy);
    };
    return std::min(seg(0.0, 0.6, 0.4, 1.0), seg(0.6, 0.0, 1.0, 0.4));
}

}  // namespace logitnets
