#include "logitnets/erm.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "logitnets/constructions.hpp"
#include "logitnets/parallel.hpp"
#include "logitnets/random.hpp"

namespace logitnets {

namespace {

constexpr double kZ95 = 1.959963984540054;

double normal01(Rng& g) {
    double u1 = uniform01(g), u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

Sample sample(const DataDistribution& P, std::size_t n, std::uint64_t seed) {
    P.validate();
    Sample s;
    s.d = P.d;
    s.seed = seed;
    s.x.resize(n * P.d);
    s.y.resize(n);
    Rng rng(stream_seed(seed, 0x5A));
    std::vector<double> cdf;
    if (!P.marginal.uniform) {
        cdf.resize(P.marginal.weights.size());
        std::partial_sum(P.marginal.weights.begin(), P.marginal.weights.end(), cdf.begin());
    }
    for (std::size_t i = 0; i < n; ++i) {
        double* xi = s.x.data() + i * P.d;
        if (P.marginal.uniform) {
            for (int a = 0; a < P.d; ++a) xi[a] = uniform01(rng);
        } else {
            double u = uniform01(rng) * cdf.back();
            std::size_t idx = std::min<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(),
                                                    cdf.size() - 1);
            std::copy(P.marginal.points[idx].begin(), P.marginal.points[idx].end(), xi);
        }
        double e = P.eta(std::span<const double>(xi, P.d));
        s.y[i] = uniform01(rng) < e ? 1 : -1;
    }
    return s;
}

double empirical_phi_risk(const RealFn& f, const Sample& s) {
    if (s.size() == 0) throw std::invalid_argument("empirical risk: empty sample");
    double r = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) r += logistic_loss(s.y[i] * f(s.point(i)));
    return r / static_cast<double>(s.size());
}

ErmResult erm_finite(const std::vector<RealFn>& cls, const Sample& s) {
    if (cls.empty()) throw std::invalid_argument("erm: empty class");
    ErmResult r;
    r.risks.reserve(cls.size());
    for (const auto& f : cls) r.risks.push_back(empirical_phi_risk(f, s));
    for (std::size_t i = 1; i < cls.size(); ++i)
        if (r.risks[i] < r.risks[r.index]) r.index = i;
    r.empirical_risk = r.risks[r.index];
    return r;
}

ComplexityBudget TrainConfig::budget(int d) const {
    ComplexityBudget b;
    b.G = depth + 1;
    b.N = std::max(width, 4);
    double w = width;
    b.S = d * w + w + (depth - 1) * (w * w + w) + 4 * w + 2 + 4;
    b.B = std::max({B, F, 1.0});
    b.F = F;
    return b;
}

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct Params {
    std::vector<Mat> W;  // W[l]: width x fan_in
    std::vector<Vec> v;
    Eigen::RowVectorXd out;

    template <class Fn>
    void each(Fn&& fn) {
        for (auto& w : W) fn(w.data(), w.size());
        for (auto& b : v) fn(b.data(), b.size());
        fn(out.data(), out.size());
    }
};

Params init_params(int d, const TrainConfig& cfg, Rng& rng) {
    Params p;
    int fan = d;
    for (int l = 0; l < cfg.depth; ++l) {
        Mat w(cfg.width, fan);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = normal01(rng) * std::sqrt(2.0 / fan);
        Vec b(cfg.width);
        for (int i = 0; i < cfg.width; ++i) {
            if (l == 0) {
                // Put each first-layer kink through a random point of the cube.
                double s = 0.0;
                for (int a = 0; a < d; ++a) s += w(i, a) * uniform01(rng);
                b(i) = s;
            } else {
                b(i) = 0.1 * normal01(rng);
            }
        }
        p.W.push_back(std::move(w));
        p.v.push_back(std::move(b));
        fan = cfg.width;
    }
    p.out.resize(cfg.width);
    for (int i = 0; i < cfg.width; ++i) p.out(i) = normal01(rng) / std::sqrt(static_cast<double>(cfg.width));
    return p;
}

// Pre-clip outputs on columns of X.
Eigen::RowVectorXd forward(const Params& p, const Mat& X, std::vector<Mat>* acts) {
    Mat h = X;
    if (acts) acts->clear();
    for (std::size_t l = 0; l < p.W.size(); ++l) {
        Mat z = p.W[l] * h;
        z.colwise() -= p.v[l];
        h = z.cwiseMax(0.0);
        if (acts) acts->push_back(h);
    }
    return p.out * h;
}

double full_risk(const Params& p, const Mat& X, const Eigen::RowVectorXd& Y, double F) {
    Eigen::RowVectorXd g = forward(p, X, nullptr);
    double r = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) r += logistic_loss(Y(i) * std::clamp(g(i), -F, F));
    return r / static_cast<double>(g.size());
}

ReluNet to_net(const Params& p, int d, double F) {
    std::vector<Layer> layers;
    for (std::size_t l = 0; l < p.W.size(); ++l) {
        Matrix w(p.W[l].rows(), p.W[l].cols());
        for (Eigen::Index i = 0; i < p.W[l].rows(); ++i)
            for (Eigen::Index j = 0; j < p.W[l].cols(); ++j) w(i, j) = p.W[l](i, j);
        layers.push_back({std::move(w), std::vector<double>(p.v[l].data(), p.v[l].data() + p.v[l].size())});
    }
    const std::size_t width = p.out.size();
    Matrix clip(4, width);
    for (std::size_t j = 0; j < width; ++j) {
        clip(0, j) = p.out(j);
        clip(1, j) = p.out(j);
        clip(2, j) = -p.out(j);
        clip(3, j) = -p.out(j);
    }
    layers.push_back({std::move(clip), {0.0, F, 0.0, F}});
    return ReluNet(d, std::move(layers), Matrix::from_rows({{1.0, -1.0, -1.0, 1.0}}));
}

struct RunOutcome {
    Params p;
    double risk = kInf;
    double max_abs = 0.0;
    bool diverged = false;
};

RunOutcome train_once(const Mat& X, const Eigen::RowVectorXd& Y, const TrainConfig& cfg, Rng& rng) {
    const int d = static_cast<int>(X.rows());
    const Eigen::Index n = X.cols();
    RunOutcome o;
    o.p = init_params(d, cfg, rng);
    o.p.each([&](double* a, Eigen::Index k) {
        for (Eigen::Index i = 0; i < k; ++i) a[i] = std::clamp(a[i], -cfg.B, cfg.B);
    });
    Params m1 = o.p, m2 = o.p;
    m1.each([](double* a, Eigen::Index k) { std::fill(a, a + k, 0.0); });
    m2.each([](double* a, Eigen::Index k) { std::fill(a, a + k, 0.0); });

    const int batch = static_cast<int>(std::min<Eigen::Index>(cfg.batch, n));
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    Eigen::Index cursor = n;
    Mat Xb(d, batch);
    Eigen::RowVectorXd Yb(batch);
    std::vector<Mat> acts;
    Params grad = o.p;
    const double b1 = 0.9, b2 = 0.999;
    double b1t = 1.0, b2t = 1.0;

    for (int step = 0; step < cfg.steps; ++step) {
        for (int j = 0; j < batch; ++j) {
            if (cursor >= n) {
                for (Eigen::Index i = n - 1; i > 0; --i)
                    std::swap(order[i], order[static_cast<Eigen::Index>(uniform01(rng) * (i + 1))]);
                cursor = 0;
            }
            Eigen::Index k = order[cursor++];
            Xb.col(j) = X.col(k);
            Yb(j) = Y(k);
        }
        Eigen::RowVectorXd g = forward(o.p, Xb, &acts);
        Eigen::RowVectorXd dg(batch);
        double loss = 0.0;
        for (int j = 0; j < batch; ++j) {
            double c = std::clamp(g(j), -cfg.F, cfg.F);
            loss += logistic_loss(Yb(j) * c);
            double inside = std::abs(g(j)) < cfg.F ? 1.0 : 0.0;
            dg(j) = -Yb(j) / (1.0 + std::exp(Yb(j) * c)) * inside / batch;
        }
        if (!std::isfinite(loss)) {
            o.diverged = true;
            return o;
        }
        const std::size_t L = o.p.W.size();
        grad.out = dg * acts[L - 1].transpose();
        Mat delta = o.p.out.transpose() * dg;  // width x batch
        for (std::size_t l = L; l-- > 0;) {
            delta = delta.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
            const Mat& input = l == 0 ? Xb : acts[l - 1];
            grad.W[l] = delta * input.transpose();
            grad.v[l] = -delta.rowwise().sum();
            if (l > 0) delta = o.p.W[l].transpose() * delta;
        }

        double progress = static_cast<double>(step) / std::max(1, cfg.steps - 1);
        double lr = cfg.step_size * (0.05 + 0.95 * 0.5 * (1.0 + std::cos(M_PI * progress)));
        b1t *= b1;
        b2t *= b2;
        // Walk the four parameter sets in lockstep.
        std::vector<double*> P, G, A, V;
        std::vector<Eigen::Index> K;
        o.p.each([&](double* a, Eigen::Index k) { P.push_back(a); K.push_back(k); });
        grad.each([&](double* a, Eigen::Index) { G.push_back(a); });
        m1.each([&](double* a, Eigen::Index) { A.push_back(a); });
        m2.each([&](double* a, Eigen::Index) { V.push_back(a); });
        for (std::size_t t = 0; t < P.size(); ++t) {
            for (Eigen::Index i = 0; i < K[t]; ++i) {
                double gr = G[t][i];
                A[t][i] = b1 * A[t][i] + (1 - b1) * gr;
                V[t][i] = b2 * V[t][i] + (1 - b2) * gr * gr;
                double upd = lr * (A[t][i] / (1 - b1t)) / (std::sqrt(V[t][i] / (1 - b2t)) + 1e-8);
                double nv = std::clamp(P[t][i] - upd, -cfg.B, cfg.B);
                if (!std::isfinite(nv)) {
                    o.diverged = true;
                    return o;
                }
                P[t][i] = nv;
                o.max_abs = std::max(o.max_abs, std::abs(nv));
            }
        }
    }
    o.risk = full_risk(o.p, X, Y, cfg.F);
    if (!std::isfinite(o.risk)) o.diverged = true;
    return o;
}

}  // namespace

TrainResult erm_train(const Sample& s, const TrainConfig& cfg) {
    if (s.size() == 0) throw std::invalid_argument("train: empty sample");
    if (cfg.width < 1 || cfg.depth < 1) throw std::invalid_argument("train: width and depth must be positive");
    if (!(cfg.F > 0.0)) throw std::invalid_argument("train: F must be positive");
    if (cfg.F > std::max(cfg.B, 1.0)) throw std::invalid_argument("train: clip level F exceeds the parameter bound");
    const Eigen::Index n = static_cast<Eigen::Index>(s.size());
    Mat X(s.d, n);
    Eigen::RowVectorXd Y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int a = 0; a < s.d; ++a) X(a, i) = s.x[i * s.d + a];
        Y(i) = s.y[i];
    }

    TrainReport rep;
    std::optional<RunOutcome> best;
    double worst = -kInf;
    for (int r = 0; r < std::max(1, cfg.restarts); ++r) {
        Rng rng(stream_seed(cfg.seed, 0x7A, r));
        RunOutcome o = train_once(X, Y, cfg, rng);
        if (o.diverged) {
            ++rep.diverged;
            continue;
        }
        rep.max_abs_param = std::max(rep.max_abs_param, o.max_abs);
        worst = std::max(worst, o.risk);
        if (!best || o.risk < best->risk) {
            best = std::move(o);
            rep.best_restart = r;
        }
    }
    if (!best) throw std::runtime_error("train: every restart diverged");
    rep.empirical_risk = best->risk;
    rep.restart_gap = worst - best->risk;

    Rng probe_rng(stream_seed(cfg.seed, 0xBA5E));
    double probe_best = best->risk;
    for (int t = 0; t < cfg.baseline_trials; ++t) {
        Params q = best->p;
        q.each([&](double* a, Eigen::Index k) {
            for (Eigen::Index i = 0; i < k; ++i)
                a[i] = std::clamp(a[i] + cfg.baseline_scale * (std::abs(a[i]) + 1e-3) * normal01(probe_rng), -cfg.B,
                                  cfg.B);
        });
        probe_best = std::min(probe_best, full_risk(q, X, Y, cfg.F));
    }
    rep.optimization_gap = best->risk - probe_best;
    return {to_net(best->p, s.d, cfg.F), rep};
}

int internal_covering_number(const std::vector<std::vector<double>>& dist, double gamma) {
    const int m = static_cast<int>(dist.size());
    if (m == 0) return 0;
    if (m > 20) throw std::invalid_argument("covering number: exhaustive search limited to 20 members");
    std::vector<std::uint32_t> ball(m, 0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (dist[i][j] <= gamma) ball[i] |= 1u << j;
    const std::uint32_t all = m == 32 ? ~0u : ((1u << m) - 1);
    int best = m;
    for (std::uint32_t mask = 1; mask <= all; ++mask) {
        int c = __builtin_popcount(mask);
        if (c >= best) continue;
        std::uint32_t cov = 0;
        for (int i = 0; i < m; ++i)
            if (mask >> i & 1u) cov |= ball[i];
        if (cov == all) best = c;
    }
    return best;
}

OracleReport oracle_mc(const OracleStudyConfig& cfg, const DataDistribution& P) {
    if (cfg.cls.empty()) throw std::invalid_argument("oracle: empty class");
    if (cfg.replications < 2) throw std::invalid_argument("oracle: need at least 2 replications");
    if (!(cfg.eps > 0.0 && cfg.eps < 1.0)) throw std::invalid_argument("oracle: eps must lie in (0, 1)");
    OracleReport r;
    r.name = cfg.name;
    const int d = P.d;
    const std::size_t m = cfg.cls.size();

    // Sup norms and mutual distances on a grid.
    int per = cfg.sup_grid_per_axis > 0 ? cfg.sup_grid_per_axis
                                        : std::max(2, static_cast<int>(std::round(std::pow(1e4, 1.0 / d))) + 1);
    Grid grid;
    grid.lo.assign(d, 0.0);
    grid.hi.assign(d, 1.0);
    grid.per_axis = per;
    const std::size_t nodes = grid.size();
    std::vector<std::vector<double>> vals(m, std::vector<double>(nodes));
    std::vector<double> x(d);
    for (std::size_t k = 0; k < nodes; ++k) {
        grid.point(k, x.data());
        for (std::size_t i = 0; i < m; ++i) vals[i][k] = cfg.cls[i](x);
    }
    std::vector<std::vector<double>> dist(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (double v : vals[i]) r.sup_f = std::max(r.sup_f, std::abs(v));
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = 0; k < nodes; ++k) dist[i][j] = std::max(dist[i][j], std::abs(vals[i][k] - vals[j][k]));
    }
    r.W = std::max(3, internal_covering_number(dist, cfg.gamma));
    r.M = std::max(std::log1p(std::exp(r.sup_f)), psi_upper(cfg.psi));

    // Population quantities.
    r.psi_integral = integrate(P, cfg.quadrature, [&](std::span<const double>, double e) {
                         return e * psi_eval(cfg.psi, e, 1) + (1.0 - e) * psi_eval(cfg.psi, e, -1);
                     }).value;
    std::vector<double> risk(m);
    r.Gamma_lemma = psi_gamma(cfg.psi);
    r.condition_variance = true;
    double gamma_tight = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        risk[i] = phi_risk(cfg.cls[i], P, cfg.quadrature).value;
        auto v = variance_bound_check(cfg.psi, cfg.cls[i], P, cfg.quadrature);
        r.condition_variance = r.condition_variance && v.passed;
        if (v.first_moment > 0.0) gamma_tight = std::max(gamma_tight, v.second_moment / v.first_moment);
        else if (v.second_moment > 0.0) gamma_tight = kInf;
    }
    r.Gamma = std::min(r.Gamma_lemma, std::max(gamma_tight, 1e-12));
    r.inf_risk = *std::min_element(risk.begin(), risk.end());
    r.condition_mean = r.psi_integral <= r.inf_risk + 1e-12;

    // Replications of exact ERM.
    std::vector<double> excess(cfg.replications);
    r.replicate_index.assign(cfg.replications, 0);
    for_each_index(Exec::Parallel, excess.size(), [&](std::size_t rep) {
        Sample s = sample(P, cfg.n, stream_seed(cfg.seed, cfg.n, rep));
        r.replicate_index[rep] = erm_finite(cfg.cls, s).index;
        excess[rep] = risk[r.replicate_index[rep]] - r.psi_integral;
    });
    double mean = std::accumulate(excess.begin(), excess.end(), 0.0) / excess.size();
    double var = 0.0;
    for (double e : excess) var += (e - mean) * (e - mean);
    var /= excess.size() - 1.0;
    r.lhs = mean;
    r.replicate_excess = excess;
    r.lhs_half_width = kZ95 * std::sqrt(var / excess.size());

    const double n = static_cast<double>(cfg.n), e = cfg.eps, lw = std::log(r.W);
    r.term_variance = 80.0 * (1 + e) * (1 + e) / e * r.Gamma * lw / n;
    r.term_bounded = (20 + 20 * e) * r.M * lw / n;
    r.term_cross = (20 + 20 * e) * std::sqrt(cfg.gamma) * std::sqrt(r.Gamma * lw / n);
    r.term_gamma = 4 * cfg.gamma;
    r.term_approx = (1 + e) * (r.inf_risk - r.psi_integral);
    r.rhs = r.term_variance + r.term_bounded + r.term_cross + r.term_gamma + r.term_approx;
    r.passed = r.condition_mean && r.condition_variance && r.lhs <= r.rhs + 3.0 * r.lhs_half_width;
    return r;
}

std::vector<OracleCase> canonical_oracle_cases(int replications, std::uint64_t seed) {
    std::vector<OracleCase> cases;
    auto constant = [](double c) { return RealFn([c](std::span<const double>) { return c; }); };
    auto eta_const = [](double c) {
        DataDistribution P;
        P.d = 1;
        P.eta = [c](std::span<const double>) { return c; };
        return P;
    };
    auto eta_lin = [] {
        DataDistribution P;
        P.d = 1;
        P.eta = [](std::span<const double> x) { return 0.1 + 0.8 * x[0]; };
        return P;
    };
    auto base = [&](std::string name, std::size_t n) {
        OracleStudyConfig c;
        c.name = std::move(name);
        c.n = n;
        c.replications = replications;
        c.seed = seed;
        c.quadrature.kind = Quadrature::Kind::Grid;
        c.quadrature.per_axis = 2000;
        return c;
    };

    {
        auto c = base("const2_eta08_truncated", 100);
        c.cls = {constant(-1.0), constant(1.0)};
        c.psi = truncated_psi(1.0 / (std::exp(1.0) + 1.0));
        cases.push_back({c, eta_const(0.8)});
    }
    {
        auto c = base("const16_linear_truncated", 400);
        for (int i = 0; i < 16; ++i) c.cls.push_back(constant(-2.0 + 4.0 * i / 15.0));
        c.psi = truncated_psi(1.0 / (std::exp(2.0) + 1.0));
        cases.push_back({c, eta_lin()});
    }
    {
        auto c = base("affine8_linear_truncated", 100);
        for (int k = 0; k < 8; ++k) {
            double a = 4.0 * k / 7.0;
            c.cls.push_back([a](std::span<const double> x) { return a * (x[0] - 0.5); });
        }
        c.psi = truncated_psi(1.0 / (std::exp(2.0) + 1.0));
        cases.push_back({c, eta_lin()});
    }
    {
        auto c = base("step9_halfplane_margin", 100);
        c.quadrature.per_axis = 200;
        for (int k = 1; k <= 9; ++k) {
            double t = 0.1 * k;
            c.cls.push_back([t](std::span<const double> x) { return x[1] >= t ? 1.0 : -1.0; });
        }
        c.psi = margin_psi(0.5, 1.0);
        cases.push_back({c, boundary_distribution(half_plane_spec(), 0.6)});
    }
    {
        auto c = base("wave16_sine_margin", 400);
        const double F0 = 0.8;
        for (double a : {0.5, 1.0, 2.0, 4.0})
            for (double b : {-0.2, 0.0, 0.2, 0.4})
                c.cls.push_back([a, b, F0](std::span<const double> x) {
                    return F0 * std::clamp(a * std::sin(2.0 * M_PI * x[0]) + b, -1.0, 1.0);
                });
        c.psi = margin_psi(0.4, F0);
        DataDistribution P;
        P.d = 1;
        P.eta = [](std::span<const double> x) { return 0.5 + 0.4 * std::sin(2.0 * M_PI * x[0]); };
        cases.push_back({c, P});
    }
    return cases;
}

DataDistribution rate_family(const std::string& family) {
    DataDistribution P;
    P.family_tag = family;
    if (family == "sin1d") {
        P.d = 1;
        P.eta = [](std::span<const double> x) { return 0.5 * (1.0 + std::sin(2.0 * M_PI * x[0])); };
    } else if (family == "fig1y") {
        P.d = 4;
        auto spec = std::make_shared<CompositionSpec>(pairwise_sum_spec());
        P.eta = [spec](std::span<const double> x) { return 0.1 + 0.8 * spec->evaluate(x) / 6.0; };
    } else if (family == "control4d") {
        P.d = 4;
        P.eta = [](std::span<const double> x) {
            double p = 1.0;
            for (double v : x) p *= std::cos(2.0 * M_PI * v);
            return 0.5 + 0.4 * p;
        };
    } else if (family == "half") {
        P.d = 1;
        P.eta = [](std::span<const double>) { return 0.5; };
    } else {
        throw std::invalid_argument("unknown family '" + family + "'");
    }
    return P;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t k = x.size();
    if (k < 2 || y.size() != k) throw std::invalid_argument("fit: need matching vectors of length >= 2");
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / k;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / k;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (k > 2) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            double e = y[i] - f.intercept - f.slope * x[i];
            ssr += e * e;
        }
        f.slope_se = std::sqrt(ssr / (k - 2) / sxx);
    }
    return f;
}

RateSummary rate_experiment(const RateStudyConfig& cfg) {
    if (cfg.n_grid.size() < 3) throw std::invalid_argument("rate study: need at least 3 sample sizes");
    if (cfg.replications < 1) throw std::invalid_argument("rate study: need replications");
    DataDistribution P = rate_family(cfg.family);
    const int d = P.d;

    // Fixed evaluation points: midpoints in d = 1, a seeded uniform cloud otherwise.
    const int ne = cfg.eval_points;
    std::vector<double> ex(static_cast<std::size_t>(ne) * d), eeta(ne);
    Rng erng(stream_seed(cfg.seed, 0xE7A1));
    for (int i = 0; i < ne; ++i) {
        for (int a = 0; a < d; ++a) ex[i * d + a] = d == 1 ? (i + 0.5) / ne : uniform01(erng);
        eeta[i] = P.eta(std::span<const double>(ex.data() + i * d, d));
    }

    RateSummary out;
    out.theory_slope = cfg.theory_slope;
    const std::size_t tasks = cfg.n_grid.size() * cfg.replications;
    out.rows.resize(tasks);
    for_each_index(Exec::Parallel, tasks, [&](std::size_t t) {
        std::size_t ni = t / cfg.replications;
        int rep = static_cast<int>(t % cfg.replications);
        std::size_t n = cfg.n_grid[ni];
        RateRow row;
        row.n = n;
        row.rep = rep;
        row.width = std::clamp(static_cast<int>(std::ceil(cfg.width_c * std::pow(static_cast<double>(n), cfg.width_exp))),
                               cfg.width_min, cfg.width_max);
        row.F = cfg.F_c * std::log(static_cast<double>(n));
        Sample s = sample(P, n, stream_seed(cfg.seed, n, rep));
        TrainConfig tc;
        tc.width = row.width;
        tc.depth = cfg.depth;
        tc.B = cfg.B;
        tc.F = row.F;
        tc.steps = cfg.steps;
        if (cfg.epochs > 0)
            tc.steps = std::max(cfg.steps, static_cast<int>(std::ceil(cfg.epochs * n / cfg.batch)));
        tc.batch = cfg.batch;
        tc.step_size = cfg.step_size;
        tc.seed = stream_seed(cfg.seed, n, rep + 0x1000);
        auto tr = erm_train(s, tc);
        double ep = 0.0, em = 0.0;
        for (int i = 0; i < ne; ++i) {
            std::span<const double> x(ex.data() + i * d, d);
            double fx = tr.net(x);
            ep += pointwise_excess(eeta[i], fx);
            em += sgn(fx) != sgn(2.0 * eeta[i] - 1.0) ? std::abs(2.0 * eeta[i] - 1.0) : 0.0;
        }
        row.excess_phi = ep / ne;
        row.excess_misclass = em / ne;
        row.train_risk = tr.report.empirical_risk;
        row.optimization_gap = tr.report.optimization_gap;
        out.rows[t] = row;
    });

    std::vector<double> lx, ly;
    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
        double s = 0.0, s2 = 0.0, mc = 0.0;
        for (int rep = 0; rep < cfg.replications; ++rep) {
            const auto& row = out.rows[ni * cfg.replications + rep];
            s += row.excess_phi;
            s2 += row.excess_phi * row.excess_phi;
            mc += row.excess_misclass;
        }
        double R = cfg.replications;
        double mean = s / R;
        double var = R > 1 ? std::max(0.0, (s2 - R * mean * mean) / (R - 1)) : 0.0;
        out.n.push_back(cfg.n_grid[ni]);
        out.mean_excess.push_back(mean);
        out.half_width.push_back(kZ95 * std::sqrt(var / R));
        out.mean_misclass.push_back(mc / R);
        lx.push_back(std::log(static_cast<double>(cfg.n_grid[ni])));
        ly.push_back(std::log(mean));
    }
    auto fit = fit_line(lx, ly);
    out.slope = fit.slope;
    out.intercept = fit.intercept;
    out.slope_se = fit.slope_se;
    return out;
}

}  // namespace logitnets
