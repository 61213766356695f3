#include "logitnets/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "logitnets/csv.hpp"

namespace logitnets {

namespace {

int ceil_log2(int k) {
    int p = 0;
    while ((1 << p) < k) ++p;
    return p;
}

Matrix row_matrix(std::initializer_list<double> vals) {
    Matrix m(1, vals.size());
    std::copy(vals.begin(), vals.end(), m.data.begin());
    return m;
}

// x in R^n -> (x_i)_{i in idx}.
ReluNet selector(int n, const std::vector<int>& idx) {
    Matrix m(idx.size(), static_cast<std::size_t>(n));
    for (std::size_t r = 0; r < idx.size(); ++r) m(r, static_cast<std::size_t>(idx[r])) = 1.0;
    return linear_net(m);
}

ReluNet scaled_output(const ReluNet& net, double s) {
    Matrix out = net.output_matrix();
    for (double& w : out.data) w *= s;
    return ReluNet(net.input_dim(), net.layers(), std::move(out));
}

// n hidden layers of sigma(z) on one channel; identity for z >= 0.
ReluNet relu_carry(int n) {
    std::vector<Layer> layers;
    for (int i = 0; i < n; ++i) layers.push_back({Matrix::identity(1), {0.0}});
    return ReluNet(1, std::move(layers), Matrix::identity(1));
}

std::string fmt_params(std::initializer_list<std::pair<const char*, double>> kv) {
    std::string s;
    for (const auto& [k, v] : kv) {
        if (!s.empty()) s += ';';
        s += k;
        s += '=';
        s += format_double(v);
    }
    return s;
}

}  // namespace

ReluNet scale_pos_net(int k) {
    if (k < 1) throw std::invalid_argument("scale_pos_net: k must be >= 1");
    std::vector<Layer> layers;
    layers.push_back({Matrix(2, 1, 1.0), {0.0, 0.0}});
    for (int i = 1; i < k; ++i) layers.push_back({Matrix(2, 2, 1.0), {0.0, 0.0}});
    return ReluNet(1, std::move(layers), Matrix(1, 2, 1.0));
}

ComplexityBudget scale_pos_budget(int k) { return {double(k), 2.0, 4.0 * k, 1.0, kInf}; }

ReluNet max_net(int k) {
    if (k < 1) throw std::invalid_argument("max_net: k must be >= 1");
    if (k == 1) return ReluNet(1, {{Matrix::from_rows({{1.0}, {-1.0}}), {0.0, 0.0}}}, Matrix(1, 2, 1.0));
    ReluNet a = max_net((k + 1) / 2);
    ReluNet b = max_net(k / 2);
    if (b.depth() < a.depth()) b = compose(relu_carry(a.depth() - b.depth()), b);
    ReluNet both = stack({a, b});
    // max(a, b) = |a - b|/2 + a/2 + b/2 for a, b >= 0.
    std::vector<Layer> merge;
    merge.push_back({Matrix::identity(2), {0.0, 0.0}});
    merge.push_back({Matrix::from_rows({{0.5, -0.5}, {-0.5, 0.5}, {1.0, 0.0}, {0.0, 1.0}}), {0, 0, 0, 0}});
    ReluNet top(2, std::move(merge), row_matrix({1.0, 1.0, 0.5, 0.5}));
    return compose(top, both);
}

ComplexityBudget max_budget(int k) {
    int c = ceil_log2(k);
    return {1.0 + 2.0 * c, 2.0 * k, 26.0 * std::pow(2.0, c) - 20.0 - 2.0 * c, 1.0, 1.0};
}

int mult_levels(double eps) {
    int m = 1;
    while (std::ldexp(1.0, -2 * m - 2) > eps) ++m;
    return m;
}

// Squares of a = (x+y)/2 and b = |x-y|/2 by the sawtooth recursion
// R_k = min(R_{k-1}/2, 2^{1-2k} - R_{k-1}/2), c_k = c_{k-1} - R_k, so that
// c_m = a - sum_k g_k(a)/4^k >= a^2. Channels of the two branches are
// interleaved so that the final difference c_a - c_b cancels exactly when
// the branches carry the same value.
ReluNet mult_net(double eps) {
    if (!(eps > 0.0 && eps <= 0.5)) throw std::invalid_argument("mult_net: eps must lie in (0, 1/2]");
    const int m = mult_levels(eps);
    std::vector<Layer> layers;
    layers.push_back({Matrix::from_rows({{0.5, 0.5}, {0.5, -0.5}, {-0.5, 0.5}}), {0.0, 0.0, 0.0}});
    {
        const double c = 0.5;
        Matrix W = Matrix::from_rows({
            {0.5, 0.0, 0.0},  // t1_a
            {0.0, 0.5, 0.5},  // t1_b
            {1.0, 0.0, 0.0},  // t2_a
            {0.0, 1.0, 1.0},  // t2_b
            {1.0, 0.0, 0.0},  // cr_a
            {0.0, 1.0, 1.0},  // cr_b
        });
        layers.push_back({W, {0.0, 0.0, c, c, 0.0, 0.0}});
    }
    for (int k = 2; k <= m; ++k) {
        const double c = std::ldexp(1.0, 1 - 2 * k);
        Matrix W(6, 6);
        for (int br = 0; br < 2; ++br) {
            const std::size_t t1 = br, t2 = 2 + br, cr = 4 + br;
            W(t1, t1) = 0.5;
            W(t1, t2) = -0.5;
            W(t2, t1) = 1.0;
            W(t2, t2) = -1.0;
            W(cr, t1) = -1.0;
            W(cr, t2) = 1.0;
            W(cr, cr) = 1.0;
        }
        layers.push_back({W, {0.0, 0.0, c, c, 0.0, 0.0}});
    }
    Matrix fin = Matrix::from_rows({{-1.0, 1.0, 1.0, -1.0, 1.0, -1.0}, {-1.0, 1.0, 1.0, -1.0, 1.0, -1.0}});
    layers.push_back({fin, {0.0, 1.0}});
    return ReluNet(2, std::move(layers), row_matrix({1.0, -1.0}));
}

ComplexityBudget mult_budget(double eps) {
    const double l = std::log(1.0 / eps);
    return {15.0 * l, 6.0, 900.0 * l, 1.0, 1.0};
}

double hat_value(int k, double x) {
    auto s = [](double t) { return t > 0.0 ? t : 0.0; };
    if (k == 0) return 6.0 * s(x - 1.0 / 3.0) - 6.0 * s(x - 0.5);
    const double p = std::ldexp(1.0, k);
    return 6.0 * p * s(x - 1.0 / (3.0 * p)) - 6.0 * p * s(x - 1.0 / (2.0 * p)) + 3.0 * p * s(x - 1.0 / p) -
           3.0 * p * s(x - 2.0 / (3.0 * p));
}

ReluNet hat_net(int k, int I) {
    if (I < 1 || k < 0 || k > I) throw std::invalid_argument("hat_net: need 0 <= k <= I, I >= 1");
    std::vector<double> shifts, coef;
    if (k == 0) {
        shifts = {1.0 / 3.0, 0.5};
        coef = {6.0, -6.0};
    } else {
        const double p = std::ldexp(1.0, k);
        shifts = {1.0 / (3.0 * p), 1.0 / (2.0 * p), 1.0 / p, 2.0 / (3.0 * p)};
        coef = {6.0 * p, -6.0 * p, 3.0 * p, -3.0 * p};
    }
    const std::size_t n = shifts.size();
    ReluNet shift(1, {{Matrix(n, 1, 1.0), shifts}}, Matrix::identity(n));
    std::vector<ReluNet> scales(n, scale_pos_net(I + 3));
    ReluNet body = compose(stack(scales), shift);
    Matrix out(1, n);
    for (std::size_t i = 0; i < n; ++i) out(0, i) = std::ldexp(coef[i], -(I + 3));
    return compose(linear_net(out), body);
}

ReluNet clip_net(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("clip_net: need lo < hi");
    Layer first{Matrix(2, 1, 1.0), {lo, hi}};
    if (lo == 0.0) return rebalance(ReluNet(1, {first}, row_matrix({1.0, -1.0})));
    if (lo > 0.0)
        return rebalance(ReluNet(1, {first, {row_matrix({1.0, -1.0}), {-lo}}}, Matrix::identity(1)));
    Layer second{Matrix::from_rows({{1.0, -1.0}, {-1.0, 1.0}}), {-lo, lo}};
    return rebalance(ReluNet(1, {first, second}, row_matrix({1.0, -1.0})));
}

// ---------------------------------------------------------------------------
// Holder approximation

namespace {

// Multilinear interpolant of node values on {0, 1/M, ..., 1}^d, axis 0 slowest.
ReluNet interp_net(std::span<const double> vals, int d, int M, double eps_mult) {
    const double h = 1.0 / M;
    if (d == 1) {
        // c_0 + sum_k (s_k - s_{k-1}) sigma(x - x_k) plus a constant neuron.
        const std::size_t n = static_cast<std::size_t>(M) + 1;
        Matrix W(n, 1);
        std::vector<double> v(n);
        Matrix out(1, n);
        double prev = 0.0;
        for (int k = 0; k < M; ++k) {
            double s = (vals[k + 1] - vals[k]) * M;
            W(k, 0) = 1.0;
            v[k] = k * h;
            out(0, k) = s - prev;
            prev = s;
        }
        v[M] = -1.0;
        out(0, M) = vals[0];
        return ReluNet(1, {{W, v}}, out);
    }
    const std::size_t stride = vals.size() / (static_cast<std::size_t>(M) + 1);
    double amax = 0.0;
    for (double x : vals) amax = std::max(amax, std::abs(x));
    const double R = 1.25 * amax + 1e-3;

    std::vector<int> rest(d - 1);
    std::iota(rest.begin(), rest.end(), 1);
    const ReluNet drop = selector(d, rest);

    // Hats in x_0: r_k = sigma(x_0 - x_k), k = -1..M, then
    // phi_j = sigma(M (r_{j-1} - 2 r_j + r_{j+1})).
    const std::size_t nr = static_cast<std::size_t>(M) + 2;
    Matrix W1(nr, static_cast<std::size_t>(d));
    std::vector<double> v1(nr);
    for (std::size_t k = 0; k < nr; ++k) {
        W1(k, 0) = 1.0;
        v1[k] = (static_cast<double>(k) - 1.0) * h;
    }
    Matrix W2(static_cast<std::size_t>(M) + 1, nr);
    for (int j = 0; j <= M; ++j) {
        W2(j, j) = M;
        W2(j, j + 1) = -2.0 * M;
        if (j + 2 < static_cast<int>(nr)) W2(j, j + 2) = M;
    }
    std::vector<ReluNet> parts;
    parts.push_back(ReluNet(d, {{W1, v1}, {W2, std::vector<double>(M + 1, 0.0)}}, Matrix::identity(M + 1)));
    for (int j = 0; j <= M; ++j) {
        ReluNet sub = interp_net(vals.subspan(j * stride, stride), d - 1, M, eps_mult);
        const double half = 0.5;
        ReluNet u = add_constant(scaled_output(sub, 1.0 / (2.0 * R)), std::span<const double>(&half, 1));
        parts.push_back(compose(u, drop));
    }
    ReluNet pairs = parallel(parts);
    const std::size_t n = static_cast<std::size_t>(M) + 1;
    Matrix perm(2 * n, 2 * n);
    for (std::size_t j = 0; j < n; ++j) {
        perm(2 * j, j) = 1.0;
        perm(2 * j + 1, n + j) = 1.0;
    }
    std::vector<ReluNet> mults(n, mult_net(eps_mult));
    ReluNet prod = compose(stack(mults), compose(linear_net(perm), pairs));
    ReluNet summed = compose(linear_net(Matrix(1, n, 2.0 * R)), prod);
    const double negR = -R;
    return add_constant(summed, std::span<const double>(&negR, 1));
}

// Monomial coefficients of the 1-D Lagrange basis on nodes t_0..t_m:
// out[l][p] = coefficient of x^p in L_l(x).
std::vector<std::vector<double>> lagrange_monomials(const std::vector<double>& t) {
    const std::size_t m = t.size() - 1;
    std::vector<std::vector<double>> out(m + 1, std::vector<double>(m + 1, 0.0));
    for (std::size_t l = 0; l <= m; ++l) {
        std::vector<double> poly{1.0};
        double denom = 1.0;
        for (std::size_t i = 0; i <= m; ++i) {
            if (i == l) continue;
            std::vector<double> next(poly.size() + 1, 0.0);
            for (std::size_t p = 0; p < poly.size(); ++p) {
                next[p + 1] += poly[p];
                next[p] -= t[i] * poly[p];
            }
            poly = std::move(next);
            denom *= t[l] - t[i];
        }
        for (std::size_t p = 0; p <= m; ++p) out[l][p] = poly[p] / denom;
    }
    return out;
}

struct LocalPoly {
    int d = 1, M = 1, m = 0;
    // coef[alpha][node], alpha and node in mixed radix (m+1) and (M+1), axis 0 slowest.
    std::vector<std::vector<double>> coef;
    std::vector<double> nodal;  // m == 0: plain node values

    std::size_t nodes() const { return static_cast<std::size_t>(std::pow(M + 1, d) + 0.5); }
    std::size_t monos() const { return static_cast<std::size_t>(std::pow(m + 1, d) + 0.5); }

    double eval(std::span<const double> x) const {
        std::vector<int> base(d);
        std::vector<double> frac(d);
        for (int i = 0; i < d; ++i) {
            double s = std::clamp(x[i], 0.0, 1.0) * M;
            int b = std::min(static_cast<int>(std::floor(s)), M - 1);
            base[i] = b;
            frac[i] = s - b;
        }
        double total = 0.0;
        for (int corner = 0; corner < (1 << d); ++corner) {
            double w = 1.0;
            std::size_t node = 0;
            for (int i = 0; i < d; ++i) {
                int bit = (corner >> i) & 1;
                w *= bit ? frac[i] : 1.0 - frac[i];
                node = node * (M + 1) + static_cast<std::size_t>(base[i] + bit);
            }
            if (w == 0.0) continue;
            if (m == 0) {
                total += w * nodal[node];
                continue;
            }
            double p = 0.0;
            for (std::size_t a = 0; a < coef.size(); ++a) {
                double mono = 1.0;
                std::size_t rem = a;
                for (int i = d - 1; i >= 0; --i) {
                    int e = static_cast<int>(rem % (m + 1));
                    rem /= (m + 1);
                    mono *= std::pow(std::clamp(x[i], 0.0, 1.0), e);
                }
                p += coef[a][node] * mono;
            }
            total += w * p;
        }
        return total;
    }
};

std::vector<int> unflatten(std::size_t idx, int d, int radix) {
    std::vector<int> out(d);
    for (int i = d - 1; i >= 0; --i) {
        out[i] = static_cast<int>(idx % radix);
        idx /= radix;
    }
    return out;
}

LocalPoly build_local_poly(const Fn& f, int d, int M, int m) {
    LocalPoly lp;
    lp.d = d;
    lp.M = M;
    lp.m = m;
    const std::size_t nn = lp.nodes();
    std::vector<double> fv(nn);
    std::vector<double> x(d);
    for (std::size_t n = 0; n < nn; ++n) {
        auto j = unflatten(n, d, M + 1);
        for (int i = 0; i < d; ++i) x[i] = static_cast<double>(j[i]) / M;
        fv[n] = f(x);
    }
    if (m == 0) {
        lp.nodal = std::move(fv);
        return lp;
    }
    // One Lagrange table per stencil start.
    std::vector<std::vector<std::vector<double>>> tables(M - m + 1);
    for (int s = 0; s <= M - m; ++s) {
        std::vector<double> t(m + 1);
        for (int l = 0; l <= m; ++l) t[l] = static_cast<double>(s + l) / M;
        tables[s] = lagrange_monomials(t);
    }
    const std::size_t na = lp.monos();
    const std::size_t ns = na;  // stencil points, also (m+1)^d
    lp.coef.assign(na, std::vector<double>(nn, 0.0));
    for (std::size_t n = 0; n < nn; ++n) {
        auto j = unflatten(n, d, M + 1);
        std::vector<int> start(d);
        for (int i = 0; i < d; ++i) start[i] = std::clamp(j[i] - m / 2, 0, M - m);
        for (std::size_t sp = 0; sp < ns; ++sp) {
            auto l = unflatten(sp, d, m + 1);
            std::size_t node = 0;
            for (int i = 0; i < d; ++i) node = node * (M + 1) + static_cast<std::size_t>(start[i] + l[i]);
            const double val = fv[node];
            if (val == 0.0) continue;
            for (std::size_t a = 0; a < na; ++a) {
                auto al = unflatten(a, d, m + 1);
                double w = val;
                for (int i = 0; i < d; ++i) w *= tables[start[i]][l[i]][al[i]];
                lp.coef[a][n] += w;
            }
        }
    }
    return lp;
}

// x^alpha on [0,1]^d via a chain of products.
ReluNet monomial_net(int d, const std::vector<int>& alpha, double eps_mult) {
    std::vector<int> factors;
    for (int i = 0; i < d; ++i)
        for (int e = 0; e < alpha[i]; ++e) factors.push_back(i);
    ReluNet cur = selector(d, {factors[0]});
    for (std::size_t t = 1; t < factors.size(); ++t)
        cur = compose(mult_net(eps_mult), parallel({cur, selector(d, {factors[t]})}));
    return cur;
}

ReluNet local_poly_net(const LocalPoly& lp, double eps_net) {
    if (lp.m == 0) {
        double amax = 0.0;
        for (double v : lp.nodal) amax = std::max(amax, std::abs(v));
        const double R = 1.25 * amax + 1e-3;
        return interp_net(lp.nodal, lp.d, lp.M, std::min(0.5, eps_net / (4.0 * R * lp.d)));
    }
    const std::size_t na = lp.monos();
    std::vector<double> Rs(na);
    double weight = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
        double amax = 0.0;
        for (double v : lp.coef[a]) amax = std::max(amax, std::abs(v));
        Rs[a] = 1.25 * amax + 1e-3;
        weight += 3.0 * Rs[a] * (lp.d * lp.m + 1);
    }
    const double eps_mult = std::min(0.5, eps_net / (4.0 * lp.d * weight));
    std::vector<ReluNet> terms;
    for (std::size_t a = 0; a < na; ++a) {
        ReluNet G = interp_net(lp.coef[a], lp.d, lp.M, eps_mult);
        auto alpha = unflatten(a, lp.d, lp.m + 1);
        if (a == 0) {
            terms.push_back(G);
            continue;
        }
        const double R = Rs[a];
        const double half = 0.5;
        ReluNet u = add_constant(scaled_output(G, 1.0 / (2.0 * R)), std::span<const double>(&half, 1));
        ReluNet mono = monomial_net(lp.d, alpha, eps_mult);
        ReluNet um = parallel({u, mono});
        ReluNet pm = parallel({mult_net(eps_mult), selector(2, {1})});
        terms.push_back(compose(linear_net(row_matrix({2.0 * R, -R})), compose(pm, um)));
    }
    return compose(linear_net(Matrix(1, na, 1.0)), parallel(terms));
}

// Returns true and fills the net if f is affine to working precision on the grid.
bool try_affine(const Fn& f, int d, const Grid& grid, ReluNet& out) {
    std::vector<double> x(d, 0.0);
    const double c = f(x);
    std::vector<double> a(d);
    for (int i = 0; i < d; ++i) {
        x[i] = 1.0;
        a[i] = f(x) - c;
        x[i] = 0.0;
    }
    double scale = std::abs(c);
    for (double ai : a) scale += std::abs(ai);
    const std::size_t n = grid.size();
    for (std::size_t i = 0; i < n; ++i) {
        grid.point(i, x.data());
        double lin = c;
        for (int k = 0; k < d; ++k) lin += a[k] * x[k];
        if (std::abs(lin - f(x)) > 1e-14 * (1.0 + scale)) return false;
    }
    std::vector<int> active;
    for (int i = 0; i < d; ++i)
        if (a[i] != 0.0) active.push_back(i);
    const std::size_t h = 2 * active.size() + 1;
    Matrix W(h, static_cast<std::size_t>(d));
    std::vector<double> v(h, 0.0);
    Matrix o(1, h);
    for (std::size_t t = 0; t < active.size(); ++t) {
        W(2 * t, active[t]) = 1.0;
        W(2 * t + 1, active[t]) = -1.0;
        o(0, 2 * t) = a[active[t]];
        o(0, 2 * t + 1) = -a[active[t]];
    }
    v[h - 1] = -1.0;
    o(0, h - 1) = c;
    out = rebalance(ReluNet(d, {{W, v}}, o));
    return true;
}

Grid unit_grid(int d, int per_axis) {
    Grid g;
    g.lo.assign(d, 0.0);
    g.hi.assign(d, 1.0);
    g.per_axis = per_axis;
    return g;
}

int default_per_axis(int d, int requested) {
    if (requested > 0) return requested;
    if (d == 1) return 10000;
    // 10^2 per axis, thinned so that the grid stays near 10^6 nodes.
    int p = 100;
    while (p > 3 && std::pow(p, d) > 1.1e6) --p;
    return p;
}

double max_on_grid(const std::function<double(std::span<const double>)>& g, const Grid& grid, Exec exec) {
    const std::size_t n = grid.size(), d = grid.lo.size();
    std::vector<double> e(n);
    for_each_index(exec, n, [&](std::size_t i) {
        std::vector<double> x(d);
        grid.point(i, x.data());
        e[i] = g(x);
    });
    double m = 0.0;
    for (double v : e) m = (v > m || v != v) ? v : m;
    return m;
}

}  // namespace

HolderResult holder_approx(const Fn& f, int d, double beta, double r, double eps, const HolderOptions& opt) {
    if (d < 1) throw std::invalid_argument("holder_approx: d must be >= 1");
    if (!(eps > 0.0 && eps <= 0.5)) throw std::invalid_argument("holder_approx: eps must lie in (0, 1/2]");
    if (!(beta > 0.0) || !(r > 0.0)) throw std::invalid_argument("holder_approx: beta, r must be positive");
    const Grid grid = unit_grid(d, default_per_axis(d, opt.grid_per_axis));
    HolderResult res{identity_net(d), {}, 0, 0, 0.0};
    res.cert.construction = "holder";
    res.cert.params = fmt_params({{"d", double(d)}, {"beta", beta}, {"r", r}, {"eps", eps}});
    res.cert.domain = "[0,1]^" + std::to_string(d);
    res.cert.grid_points = static_cast<long long>(grid.size());
    res.cert.claimed_bound = eps;

    ReluNet net = identity_net(d);
    if (!try_affine(f, d, grid, net)) {
        const int m = beta <= 2.0 ? 0 : static_cast<int>(std::ceil(beta)) - 1;
        // A priori grid size for f in the Holder ball: local error is at most
        // r (d (m+1) h)^beta times a Lebesgue-constant factor.
        const double leb = m == 0 ? 1.0 : std::pow(2.0, m * d);
        const double prior = d * (m + 1) * std::pow(2.0 * r * (1.0 + leb) / eps, 1.0 / beta);
        const int M_prior = static_cast<int>(std::min<double>(opt.max_grid_M, std::ceil(prior)));
        // The exact approximant is cheap, so take the first M in a doubling
        // sequence that meets eps/2 on the grid, falling back on the a priori M.
        int M = std::max(1, m);
        LocalPoly lp;
        while (true) {
            lp = build_local_poly(f, d, M, m);
            double err = max_on_grid([&](std::span<const double> x) { return std::abs(lp.eval(x) - f(x)); }, grid,
                                     opt.exec);
            if (err <= 0.5 * eps) break;
            if (M >= M_prior) break;
            M = std::min(2 * M, M_prior);
        }
        res.grid_M = M;
        res.poly_order = m;
        net = rebalance(local_poly_net(lp, 0.25 * eps));
    }
    res.net = net;
    res.cert.measured_sup_error = grid_sup_error(res.net, f, grid, opt.exec);
    res.cert.passed = res.cert.measured_sup_error <= eps;
    const auto& s = res.net.stats();
    const double l = std::log(1.0 / eps), p = std::pow(eps, -d / beta);
    res.constant_C = std::max({s.depth_G / l, s.width_N / p, static_cast<double>(s.nnz_S) / (p * l)});
    return res;
}

// ---------------------------------------------------------------------------
// Logarithm approximant

namespace {

// Holder norm bound of x -> log(2x/3 + 1/3) on [0,1] at smoothness alpha:
// the n-th derivative is bounded by (n-1)! 2^n.
double log_holder_radius(double alpha) {
    double r = std::log(3.0);
    const int top = static_cast<int>(std::ceil(alpha));
    double fact = 1.0;
    for (int n = 1; n <= top; ++n) {
        r = std::max(r, fact * std::pow(2.0, n));
        fact *= n;
    }
    return r + 2.0;
}

}  // namespace

LogResult log_approx(double a, double b, double alpha, double eps, const LogOptions& opt) {
    if (!(a > 0.0 && a <= 0.5)) throw std::invalid_argument("log_approx: a must lie in (0, 1/2]");
    if (!(b > a && b <= 1.0)) throw std::invalid_argument("log_approx: b must lie in (a, 1]");
    if (!(alpha > 0.0)) throw std::invalid_argument("log_approx: alpha must be positive");
    if (!(eps > 0.0 && eps <= 0.5)) throw std::invalid_argument("log_approx: eps must lie in (0, 1/2]");
    const double L = std::log(1.0 / a);
    const int I = static_cast<int>(std::ceil(-std::log2(a)));
    const double log3 = std::log(3.0);

    Fn g = [](std::span<const double> x) { return std::log(2.0 * x[0] / 3.0 + 1.0 / 3.0); };
    HolderOptions hopt;
    hopt.exec = opt.exec;
    const ReluNet g1 = holder_approx(g, 1, alpha, log_holder_radius(alpha), 0.5 * eps, hopt).net;

    // Output stage of the branch: n1 = (g1 + log 3)_+ / 2, n2 = (log 3/2 - n1)_+
    // = -g2/2, h_k = sigma(n2 / (4L) + k log 2 / (8L)).
    const ReluNet S = scale_pos_net(I + 1);
    std::vector<ReluNet> pairs;
    for (int k = 0; k <= I; ++k) {
        const double w = 3.0 / (4.0 * std::ldexp(1.0, I - k));
        ReluNet y = compose(ReluNet(1, {{Matrix(1, 1, w), {0.5}}}, Matrix::identity(1)), S);
        ReluNet tail(1,
                     {{Matrix(1, 1, 0.5), {-0.5 * log3}},
                      {Matrix(1, 1, -1.0), {-0.5 * log3}},
                      {Matrix(1, 1, 1.0 / (4.0 * L)), {-k * std::log(2.0) / (8.0 * L)}}},
                     Matrix::identity(1));
        ReluNet h = compose(tail, compose(g1, y));
        pairs.push_back(parallel({h, hat_net(k, I)}));
    }
    const double eps_m = std::min(0.5, eps / (96.0 * L * L));
    std::vector<ReluNet> mults(I + 1, mult_net(eps_m));
    ReluNet g3 = compose(stack(mults), parallel(pairs));

    // s = sigma(sum M_k); clamp to [lo, 1/8] and read out 8 log(a) * s with
    // 8I equal terms so every weight stays within [-1, 1].
    const double lo = std::log(b) / (8.0 * std::log(a));
    const int copies = 8 * I;
    Matrix Wc(copies, 2);
    for (int i = 0; i < copies; ++i) {
        Wc(i, 0) = 1.0;
        Wc(i, 1) = -1.0;
    }
    ReluNet head(I + 1,
                 {{Matrix(1, I + 1, 1.0), {0.0}},
                  {Matrix(2, 1, 1.0), {lo, 0.125}},
                  {Wc, std::vector<double>(copies, -lo)}},
                 Matrix(1, copies, std::log(a) / I));
    LogResult res{rebalance(compose(head, g3)), {}, 0.0, false, I};

    Grid grid;
    grid.lo = {a};
    grid.hi = {b};
    grid.per_axis = opt.grid_points;
    res.cert.construction = "log";
    res.cert.params = fmt_params({{"a", a}, {"b", b}, {"alpha", alpha}, {"eps", eps}});
    res.cert.domain = "[" + format_double(a) + "," + format_double(b) + "]";
    res.cert.grid_points = opt.grid_points;
    res.cert.claimed_bound = eps;
    res.cert.measured_sup_error =
        grid_sup_error(res.net, [](std::span<const double> t) { return std::log(t[0]); }, grid, opt.exec);

    Grid wide;
    wide.lo = {opt.clamp_lo};
    wide.hi = {opt.clamp_hi};
    wide.per_axis = opt.clamp_points;
    const double la = std::log(a), lb = std::log(b);
    res.clamp_violation = max_on_grid(
        [&](std::span<const double> t) {
            double y = res.net(t);
            return std::max({0.0, la - y, y - lb});
        },
        wide, opt.exec);
    res.clamp_ok = res.clamp_violation <= kClampSlack;
    res.cert.passed = res.cert.measured_sup_error <= eps && res.clamp_ok;
    return res;
}

ReluNet truncated_target_net(const ReluNet& eta_net, double delta, double alpha) {
    if (eta_net.output_dim() != 1) throw std::invalid_argument("truncated_target_net: eta net must be scalar");
    if (!(delta > 0.0 && delta < 1.0 / 3.0)) throw std::invalid_argument("truncated_target_net: delta in (0,1/3)");
    LogOptions lopt;
    lopt.grid_points = 2001;
    lopt.clamp_points = 201;
    const ReluNet l = log_approx(delta, 1.0 - delta, alpha, delta, lopt).net;
    const double one = 1.0;
    ReluNet flipped = compose(l, linear_net(Matrix(1, 1, -1.0)), std::span<const double>(&one, 1));
    ReluNet diff = compose(linear_net(row_matrix({1.0, -1.0})), parallel({l, flipped}));
    return rebalance(compose(diff, compose(clip_net(delta, 1.0 - delta), eta_net)));
}

// ---------------------------------------------------------------------------
// Compositions

void CompositionSpec::validate() const {
    if (q < 0 || K < 1 || d < 1 || d_star < 1 || d_ast < 1) throw std::invalid_argument("composition: bad sizes");
    const int cap = std::min(d, K + (q == 0 ? d - K : 0));
    if (d_ast > cap) throw std::invalid_argument("composition: d_ast exceeds min{d, K + 1_{q=0}(d-K)}");
    if (static_cast<int>(stages.size()) != q + 1) throw std::invalid_argument("composition: need q+1 stages");
    for (int i = 0; i <= q; ++i) {
        const int in_dim = i == 0 ? d : K;
        const std::size_t want = i == q ? 1u : static_cast<std::size_t>(K);
        if (stages[i].size() != want)
            throw std::invalid_argument("composition: stage " + std::to_string(i) + " has wrong output count");
        for (const auto& c : stages[i]) {
            for (int j : c.inputs)
                if (j < 0 || j >= in_dim) throw std::invalid_argument("composition: input index out of range");
            if (c.kind == Component::Kind::Max && static_cast<int>(c.inputs.size()) > d_star)
                throw std::invalid_argument("composition: Max fan-in exceeds d_star");
            if (c.kind == Component::Kind::Holder && static_cast<int>(c.inputs.size()) != d_ast)
                throw std::invalid_argument("composition: Holder fan-in must equal d_ast");
            if (c.kind == Component::Kind::Holder && !c.f)
                throw std::invalid_argument("composition: Holder component without a function");
        }
    }
}

double CompositionSpec::evaluate(std::span<const double> x) const {
    std::vector<double> cur(x.begin(), x.end());
    for (const auto& stage : stages) {
        std::vector<double> next;
        for (const auto& c : stage) {
            std::vector<double> sel;
            for (int j : c.inputs) sel.push_back(cur[j]);
            if (c.kind == Component::Kind::Max)
                next.push_back(*std::max_element(sel.begin(), sel.end()));
            else
                next.push_back(c.f(sel));
        }
        cur = std::move(next);
    }
    return cur[0];
}

double composition_error_bound(double r, int d_ast, double beta, std::span<const double> dev) {
    const int q = static_cast<int>(dev.size()) - 1;
    const double b1 = std::min(1.0, beta);
    double expo = 0.0;
    for (int k = 0; k < q; ++k) expo += std::pow(b1, k);
    double sum = 0.0;
    for (int k = 0; k <= q; ++k) sum += std::pow(dev[k], std::pow(b1, q - k));
    return std::pow(r * std::pow(d_ast, b1), expo) * sum;
}

CompositionResult compositional_approx(const CompositionSpec& spec, double eps, const CompositionOptions& opt) {
    spec.validate();
    if (!(eps > 0.0 && eps <= 0.5)) throw std::invalid_argument("compositional_approx: eps must lie in (0, 1/2]");
    CompositionResult res{identity_net(spec.d), {}, 0.0, 0, 0};
    const double b1 = std::min(1.0, spec.beta);
    res.delta = 0.5 * std::pow(eps / (8.0 * std::pow(std::max(1.0, spec.r) * spec.d_ast, spec.q) * (spec.q + 1)),
                               1.0 / std::pow(b1, spec.q));
    ReluNet acc = identity_net(spec.d);
    for (int i = 0; i <= spec.q; ++i) {
        const int in_dim = i == 0 ? spec.d : spec.K;
        std::vector<ReluNet> parts;
        int deepest = 0;
        for (const auto& c : spec.stages[i]) {
            ReluNet piece = identity_net(1);
            if (c.kind == Component::Kind::Max) {
                piece = max_net(static_cast<int>(c.inputs.size()));
            } else {
                HolderOptions hopt;
                hopt.exec = opt.exec;
                piece = holder_approx(c.f, static_cast<int>(c.inputs.size()), c.beta, c.r, 2.0 * res.delta, hopt).net;
            }
            deepest = std::max(deepest, piece.depth());
            parts.push_back(compose(piece, selector(in_dim, c.inputs)));
        }
        ReluNet stage = parallel(parts);
        if (i < spec.q) {
            std::vector<ReluNet> clips(spec.stages[i].size(), clip_net(0.0, 1.0));
            stage = compose(stack(clips), stage);
        }
        // Stage-by-stage accounting: each component plus the two-layer
        // clamp sigma(sigma(z)) - sigma(sigma(z) - 1) on intermediate stages.
        res.stagewise_depth_bound += deepest + (i < spec.q ? 2 : 0);
        acc = compose(stage, acc);
    }
    res.net = rebalance(acc);
    res.merged_depth = res.net.depth();

    int per_axis = opt.grid_per_axis;
    if (per_axis <= 0) {
        per_axis = 2;
        while (std::pow(per_axis + 1, spec.d) <= 1e5) ++per_axis;
    }
    const Grid grid = unit_grid(spec.d, per_axis);
    res.cert.construction = "compositional";
    res.cert.params = fmt_params({{"q", double(spec.q)},
                                  {"K", double(spec.K)},
                                  {"d", double(spec.d)},
                                  {"d_star", double(spec.d_star)},
                                  {"d_ast", double(spec.d_ast)},
                                  {"beta", spec.beta},
                                  {"r", spec.r},
                                  {"eps", eps}});
    res.cert.domain = "[0,1]^" + std::to_string(spec.d);
    res.cert.grid_points = static_cast<long long>(grid.size());
    res.cert.claimed_bound = eps / 8.0;
    res.cert.measured_sup_error =
        grid_sup_error(res.net, [&](std::span<const double> x) { return spec.evaluate(x); }, grid, opt.exec);
    res.cert.passed = res.cert.measured_sup_error <= res.cert.claimed_bound;
    return res;
}

namespace {

Component holder(std::vector<int> in, double beta, double r, Fn f) {
    Component c;
    c.kind = Component::Kind::Holder;
    c.inputs = std::move(in);
    c.beta = beta;
    c.r = r;
    c.f = std::move(f);
    return c;
}

Component maxc(std::vector<int> in) {
    Component c;
    c.kind = Component::Kind::Max;
    c.inputs = std::move(in);
    return c;
}

}  // namespace

CompositionSpec pairwise_sum_spec() {
    CompositionSpec s;
    s.q = 2;
    s.K = 4;
    s.d = 4;
    s.d_star = 2;
    s.d_ast = 2;
    s.beta = 2.0;
    s.r = 8.0;
    auto prod = [](std::span<const double> v) { return v[0] * v[1]; };
    auto avg = [](std::span<const double> v) { return 0.5 * (v[0] + v[1]); };
    auto zero = [](std::span<const double>) { return 0.0; };
    s.stages.push_back({holder({0, 1}, 2, 8, prod), holder({0, 1}, 2, 8, avg), holder({2, 3}, 2, 8, prod),
                        holder({2, 3}, 2, 8, avg)});
    s.stages.push_back({holder({0, 1}, 2, 8, zero),
                        holder({0, 2}, 2, 8, [](std::span<const double> v) { return 0.25 * v[0] + 0.25 * v[1]; }),
                        holder({1, 3}, 2, 8, prod), holder({0, 1}, 2, 8, zero)});
    s.stages.push_back({holder({1, 2}, 2, 8, [](std::span<const double> v) { return 4.0 * v[0] + 4.0 * v[1]; })});
    return s;
}

CompositionSpec pairwise_max_spec() {
    CompositionSpec s;
    s.q = 2;
    s.K = 6;
    s.d = 4;
    s.d_star = 3;
    s.d_ast = 2;
    s.beta = 2.0;
    s.r = 2.0;
    auto prod = [](std::span<const double> v) { return v[0] * v[1]; };
    auto zero = [](std::span<const double>) { return 0.0; };
    std::vector<Component> h0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) h0.push_back(holder({i, j}, 2, 2, prod));
    s.stages.push_back(h0);
    std::vector<Component> h1{maxc({0, 1, 2}), maxc({3, 4, 5})};
    for (int i = 0; i < 4; ++i) h1.push_back(holder({0, 1}, 2, 2, zero));
    s.stages.push_back(h1);
    s.stages.push_back({maxc({0, 1})});
    return s;
}

std::string certificate_csv_header() {
    return csv_line({"construction", "params", "grid", "measured", "claimed", "passed"});
}

std::string certificate_csv_row(const ErrorCertificate& c) {
    return csv_line({c.construction, c.params, c.domain + "@" + std::to_string(c.grid_points),
                     csv_num(c.measured_sup_error), csv_num(c.claimed_bound), c.passed ? "1" : "0"});
}

}  // namespace logitnets
