#include "logitnets/net.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace logitnets {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols) throw NetError("ragged matrix rows", -1);
        std::copy(rows[i].begin(), rows[i].end(), m.data.begin() + i * m.cols);
    }
    return m;
}

// Zero entries are skipped, so structural zeros never leak rounding noise.
Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw NetError("matmul: inner dimensions differ", -1);
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) {
                double bkj = b(k, j);
                if (bkj != 0.0) c(i, j) += aik * bkj;
            }
        }
    return c;
}

Matrix vstack(const std::vector<Matrix>& blocks) {
    std::size_t rows = 0, cols = blocks.empty() ? 0 : blocks[0].cols;
    for (const auto& b : blocks) {
        if (b.cols != cols) throw NetError("vstack: column mismatch", -1);
        rows += b.rows;
    }
    Matrix m(rows, cols);
    std::size_t r0 = 0;
    for (const auto& b : blocks) {
        std::copy(b.data.begin(), b.data.end(), m.data.begin() + r0 * cols);
        r0 += b.rows;
    }
    return m;
}

Matrix block_diag(const std::vector<Matrix>& blocks) {
    std::size_t rows = 0, cols = 0;
    for (const auto& b : blocks) {
        rows += b.rows;
        cols += b.cols;
    }
    Matrix m(rows, cols);
    std::size_t r0 = 0, c0 = 0;
    for (const auto& b : blocks) {
        for (std::size_t i = 0; i < b.rows; ++i)
            for (std::size_t j = 0; j < b.cols; ++j) m(r0 + i, c0 + j) = b(i, j);
        r0 += b.rows;
        c0 += b.cols;
    }
    return m;
}

namespace {

void accumulate_stats(const Matrix& m, ComplexityStats& s) {
    for (double w : m.data)
        if (w != 0.0) {
            ++s.nnz_S;
            s.param_bound_B = std::max(s.param_bound_B, std::abs(w));
        }
}

}  // namespace

ReluNet::ReluNet(int input_dim, std::vector<Layer> layers, Matrix output_matrix)
    : input_dim_(input_dim), layers_(std::move(layers)), out_(std::move(output_matrix)) {
    if (input_dim_ <= 0) throw NetError("input_dim must be positive", -1);
    std::size_t cols = static_cast<std::size_t>(input_dim_);
    max_width_ = cols;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const Layer& l = layers_[k];
        if (l.W.cols != cols)
            throw NetError("layer " + std::to_string(k) + ": expected " + std::to_string(cols) +
                               " columns, got " + std::to_string(l.W.cols),
                           static_cast<int>(k));
        if (l.v.size() != l.W.rows)
            throw NetError("layer " + std::to_string(k) + ": shift length " + std::to_string(l.v.size()) +
                               " != rows " + std::to_string(l.W.rows),
                           static_cast<int>(k));
        cols = l.W.rows;
        max_width_ = std::max(max_width_, cols);
    }
    if (out_.cols != cols)
        throw NetError("output matrix: expected " + std::to_string(cols) + " columns, got " +
                           std::to_string(out_.cols),
                       static_cast<int>(layers_.size()));
    max_width_ = std::max(max_width_, out_.rows);

    stats_.depth_G = static_cast<int>(layers_.size());
    for (const Layer& l : layers_) {
        stats_.width_N = std::max(stats_.width_N, static_cast<int>(l.W.rows));
        accumulate_stats(l.W, stats_);
        for (double b : l.v)
            if (b != 0.0) {
                ++stats_.nnz_S;
                stats_.param_bound_B = std::max(stats_.param_bound_B, std::abs(b));
            }
        compiled_.push_back(compile(l.W));
    }
    accumulate_stats(out_, stats_);
    compiled_out_ = compile(out_);
}

ReluNet::Csc ReluNet::compile(const Matrix& m) {
    Csc c;
    c.rows = m.rows;
    c.col_ptr.assign(m.cols + 1, 0);
    for (std::size_t j = 0; j < m.cols; ++j) {
        for (std::size_t i = 0; i < m.rows; ++i)
            if (m(i, j) != 0.0) {
                c.row_idx.push_back(i);
                c.val.push_back(m(i, j));
            }
        c.col_ptr[j + 1] = c.val.size();
    }
    return c;
}

// acc = M z, summing each row in increasing column order and skipping zero
// inputs. The fixed order makes identical subexpressions cancel exactly.
void ReluNet::apply(const Csc& m, const double* z, std::size_t n, double* acc) {
    std::fill(acc, acc + m.rows, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double zj = z[j];
        if (zj == 0.0) continue;
        for (std::size_t p = m.col_ptr[j]; p < m.col_ptr[j + 1]; ++p) acc[m.row_idx[p]] += m.val[p] * zj;
    }
}

std::vector<double> ReluNet::evaluate(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(input_dim_))
        throw NetError("input: expected dimension " + std::to_string(input_dim_) + ", got " +
                           std::to_string(x.size()),
                       0);
    std::vector<double> a(x.begin(), x.end()), b(max_width_);
    std::size_t n = a.size();
    a.resize(max_width_);
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const auto& v = layers_[k].v;
        apply(compiled_[k], a.data(), n, b.data());
        n = v.size();
        for (std::size_t i = 0; i < n; ++i) {
            double t = b[i] - v[i];
            b[i] = t > 0.0 ? t : 0.0;
        }
        std::swap(a, b);
    }
    std::vector<double> y(out_.rows);
    apply(compiled_out_, a.data(), n, y.data());
    return y;
}

double ReluNet::operator()(std::span<const double> x) const { return evaluate(x)[0]; }

double ReluNet::at(double x) const { return evaluate(std::span<const double>(&x, 1))[0]; }

std::vector<double> evaluate(const ReluNet& net, std::span<const double> x) { return net.evaluate(x); }

ComplexityStats complexity(const ReluNet& net) {
    ComplexityStats s = net.stats();
    s.supnorm_F.reset();
    return s;
}

double sup_norm_estimate(const ReluNet& net, int resolution) {
    if (resolution < 2) throw NetError("grid resolution must be >= 2", -1);
    const int d = net.input_dim();
    std::vector<int> idx(d, 0);
    std::vector<double> x(d, 0.0);
    double sup = 0.0;
    const double h = 1.0 / (resolution - 1);
    while (true) {
        for (int i = 0; i < d; ++i) x[i] = idx[i] * h;
        for (double y : net.evaluate(x)) sup = std::max(sup, std::abs(y));
        int i = 0;
        while (i < d && ++idx[i] == resolution) idx[i++] = 0;
        if (i == d) break;
    }
    return sup;
}

bool is_member(const ReluNet& net, const ComplexityBudget& budget, int grid_resolution) {
    const ComplexityStats& s = net.stats();
    if (s.depth_G > budget.G || s.width_N > budget.N || static_cast<double>(s.nnz_S) > budget.S ||
        s.param_bound_B > budget.B)
        return false;
    if (std::isfinite(budget.F)) return sup_norm_estimate(net, grid_resolution) <= budget.F;
    return true;
}

ReluNet linear_net(const Matrix& A) { return ReluNet(static_cast<int>(A.cols), {}, A); }

ReluNet identity_net(int dim) { return linear_net(Matrix::identity(dim)); }

ReluNet compose(const ReluNet& outer, const ReluNet& inner) {
    if (inner.output_dim() != outer.input_dim())
        throw NetError("compose: inner output " + std::to_string(inner.output_dim()) + " != outer input " +
                           std::to_string(outer.input_dim()),
                       -1);
    if (outer.depth() == 0)
        return ReluNet(inner.input_dim(), inner.layers(), matmul(outer.output_matrix(), inner.output_matrix()));
    std::vector<Layer> layers = inner.layers();
    const auto& ol = outer.layers();
    layers.push_back({matmul(ol[0].W, inner.output_matrix()), ol[0].v});
    layers.insert(layers.end(), ol.begin() + 1, ol.end());
    return ReluNet(inner.input_dim(), std::move(layers), outer.output_matrix());
}

ReluNet compose(const ReluNet& outer, const ReluNet& inner, std::span<const double> offset) {
    if (offset.size() != static_cast<std::size_t>(outer.input_dim()))
        throw NetError("compose: offset length mismatch", -1);
    if (outer.depth() == 0) throw NetError("compose: offset needs a hidden layer in the outer net", -1);
    ReluNet merged = compose(outer, inner);
    std::vector<Layer> layers = merged.layers();
    Layer& l = layers[static_cast<std::size_t>(inner.depth())];
    const Matrix& W0 = outer.layers()[0].W;
    for (std::size_t i = 0; i < W0.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < W0.cols; ++j)
            if (W0(i, j) != 0.0 && offset[j] != 0.0) s += W0(i, j) * offset[j];
        l.v[i] -= s;
    }
    return ReluNet(merged.input_dim(), std::move(layers), merged.output_matrix());
}

ReluNet passthrough_net(int m, int k) {
    if (k == 0) return identity_net(m);
    const auto I = Matrix::identity(m);
    Matrix neg(m, m);
    for (int i = 0; i < m; ++i) neg(i, i) = -1.0;
    std::vector<Layer> layers;
    layers.push_back({vstack({I, neg}), std::vector<double>(2 * m, 0.0)});
    for (int t = 1; t < k; ++t) layers.push_back({Matrix::identity(2 * m), std::vector<double>(2 * m, 0.0)});
    Matrix out(m, 2 * m);
    for (int i = 0; i < m; ++i) {
        out(i, i) = 1.0;
        out(i, m + i) = -1.0;
    }
    return ReluNet(m, std::move(layers), out);
}

namespace {

std::vector<ReluNet> pad_to(const std::vector<ReluNet>& nets, int depth) {
    std::vector<ReluNet> out;
    for (const auto& n : nets)
        out.push_back(n.depth() == depth ? n : compose(passthrough_net(n.output_dim(), depth - n.depth()), n));
    return out;
}

ReluNet combine(const std::vector<ReluNet>& nets, bool shared_input) {
    if (nets.empty()) throw NetError("parallel/stack: empty list", -1);
    int depth = 0;
    for (const auto& n : nets) depth = std::max(depth, n.depth());
    auto padded = pad_to(nets, depth);
    int in_dim = 0;
    for (const auto& n : padded) {
        if (shared_input) {
            if (n.input_dim() != padded[0].input_dim()) throw NetError("parallel: input dimensions differ", -1);
            in_dim = n.input_dim();
        } else {
            in_dim += n.input_dim();
        }
    }
    std::vector<Layer> layers;
    for (int k = 0; k < depth; ++k) {
        std::vector<Matrix> ws;
        std::vector<double> v;
        for (const auto& n : padded) {
            ws.push_back(n.layers()[k].W);
            v.insert(v.end(), n.layers()[k].v.begin(), n.layers()[k].v.end());
        }
        layers.push_back({(k == 0 && shared_input) ? vstack(ws) : block_diag(ws), std::move(v)});
    }
    std::vector<Matrix> outs;
    for (const auto& n : padded) outs.push_back(n.output_matrix());
    Matrix W_out = (depth == 0 && shared_input) ? vstack(outs) : block_diag(outs);
    return ReluNet(in_dim, std::move(layers), std::move(W_out));
}

}  // namespace

ReluNet parallel(const std::vector<ReluNet>& nets) { return combine(nets, true); }

ReluNet stack(const std::vector<ReluNet>& nets) { return combine(nets, false); }

ReluNet add_constant(const ReluNet& net, std::span<const double> c) {
    if (net.depth() == 0) throw NetError("add_constant: needs a hidden layer", -1);
    if (c.size() != static_cast<std::size_t>(net.output_dim())) throw NetError("add_constant: length mismatch", -1);
    std::vector<Layer> layers = net.layers();
    Layer& last = layers.back();
    Matrix W(last.W.rows + 1, last.W.cols);
    std::copy(last.W.data.begin(), last.W.data.end(), W.data.begin());
    last.W = std::move(W);
    last.v.push_back(-1.0);
    const Matrix& o = net.output_matrix();
    Matrix out(o.rows, o.cols + 1);
    for (std::size_t i = 0; i < o.rows; ++i) {
        for (std::size_t j = 0; j < o.cols; ++j) out(i, j) = o(i, j);
        out(i, o.cols) = c[i];
    }
    return ReluNet(net.input_dim(), std::move(layers), std::move(out));
}

namespace {

// Smallest p >= 0 with m / 2^p <= 1.
int shrink_exponent(double m) {
    if (!(m > 1.0)) return 0;
    int e;
    double f = std::frexp(m, &e);  // m = f * 2^e, f in [0.5, 1)
    return f == 0.5 ? e - 1 : e;
}

}  // namespace

ReluNet rebalance(const ReluNet& net) {
    std::vector<Layer> layers = net.layers();
    Matrix out = net.output_matrix();
    for (std::size_t k = 0; k < layers.size(); ++k) {
        Layer& l = layers[k];
        Matrix& next = (k + 1 < layers.size()) ? layers[k + 1].W : out;
        for (std::size_t i = 0; i < l.W.rows; ++i) {
            double m = std::abs(l.v[i]);
            for (std::size_t j = 0; j < l.W.cols; ++j) m = std::max(m, std::abs(l.W(i, j)));
            int p = shrink_exponent(m);
            if (p == 0) continue;
            for (std::size_t j = 0; j < l.W.cols; ++j) l.W(i, j) = std::ldexp(l.W(i, j), -p);
            l.v[i] = std::ldexp(l.v[i], -p);
            for (std::size_t r = 0; r < next.rows; ++r) next(r, i) = std::ldexp(next(r, i), p);
        }
    }
    double m = 0.0;
    for (double w : out.data) m = std::max(m, std::abs(w));
    int p = shrink_exponent(m);
    if (p == 0) return ReluNet(net.input_dim(), std::move(layers), std::move(out));

    // Gain stage: channels (a, b, c, d) start at (y+, y+, y-, y-) and each
    // extra layer doubles them; the output reads a + b - c - d.
    for (double& w : out.data) w = std::ldexp(w, -p);
    const std::size_t o = out.rows;
    Matrix neg = out;
    for (double& w : neg.data) w = -w;
    ReluNet body(net.input_dim(), std::move(layers), vstack({out, out, neg, neg}));
    std::vector<Layer> gain;
    gain.push_back({Matrix::identity(4 * o), std::vector<double>(4 * o, 0.0)});
    for (int t = 1; t < p; ++t) {
        Matrix W(4 * o, 4 * o);
        for (std::size_t i = 0; i < o; ++i)
            for (std::size_t blk = 0; blk < 4; blk += 2)
                for (std::size_t r = 0; r < 2; ++r) {
                    W((blk + r) * o + i, blk * o + i) = 1.0;
                    W((blk + r) * o + i, (blk + 1) * o + i) = 1.0;
                }
        gain.push_back({std::move(W), std::vector<double>(4 * o, 0.0)});
    }
    Matrix read(o, 4 * o);
    for (std::size_t i = 0; i < o; ++i) {
        read(i, i) = 1.0;
        read(i, o + i) = 1.0;
        read(i, 2 * o + i) = -1.0;
        read(i, 3 * o + i) = -1.0;
    }
    ReluNet tail(static_cast<int>(4 * o), std::move(gain), std::move(read));
    return compose(tail, body);
}

std::string format_double(double x) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols; ++j) row.push_back(format_double(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

double parse_entry(const json& e, const std::string& where) {
    if (e.is_number()) return e.get<double>();
    if (!e.is_string()) throw ParseError(where + ": entry must be a decimal string", 0);
    const auto& s = e.get_ref<const std::string&>();
    double x = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ParseError(where + ": bad number '" + s + "'", 0);
    return x;
}

const json& field(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(where + ": missing field '" + key + "'", 0);
    return *it;
}

Matrix parse_matrix(const json& j, std::size_t cols_if_empty, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": matrix must be an array of rows", 0);
    Matrix m(j.size(), j.empty() ? cols_if_empty : 0);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& row = j[i];
        if (!row.is_array()) throw ParseError(where + ": row must be an array", 0);
        if (i == 0) m = Matrix(j.size(), row.size());
        if (row.size() != m.cols) throw ParseError(where + ": ragged rows", 0);
        for (std::size_t c = 0; c < row.size(); ++c) m(i, c) = parse_entry(row[c], where);
    }
    return m;
}

}  // namespace

std::string serialize(const ReluNet& net) {
    json j;
    j["input_dim"] = net.input_dim();
    json layers = json::array();
    for (const Layer& l : net.layers()) {
        json v = json::array();
        for (double b : l.v) v.push_back(format_double(b));
        layers.push_back({{"W", matrix_json(l.W)}, {"v", std::move(v)}});
    }
    j["layers"] = std::move(layers);
    j["W_out"] = matrix_json(net.output_matrix());
    return j.dump();
}

ReluNet deserialize(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
    }
    if (!j.is_object()) throw ParseError("network must be a JSON object", 0);
    const json& dim = field(j, "input_dim", "network");
    if (!dim.is_number_integer() || dim.get<long long>() <= 0)
        throw ParseError("input_dim must be a positive integer", 0);
    std::size_t cols = dim.get<std::size_t>();
    std::vector<Layer> layers;
    const json& lj = field(j, "layers", "network");
    if (!lj.is_array()) throw ParseError("layers must be an array", 0);
    for (std::size_t k = 0; k < lj.size(); ++k) {
        std::string where = "layer " + std::to_string(k);
        Layer l;
        l.W = parse_matrix(field(lj[k], "W", where), cols, where);
        const json& v = field(lj[k], "v", where);
        if (!v.is_array()) throw ParseError(where + ": v must be an array", 0);
        for (const auto& e : v) l.v.push_back(parse_entry(e, where));
        cols = l.W.rows;
        layers.push_back(std::move(l));
    }
    Matrix out = parse_matrix(field(j, "W_out", "network"), cols, "W_out");
    try {
        return ReluNet(static_cast<int>(dim.get<long long>()), std::move(layers), std::move(out));
    } catch (const NetError& e) {
        throw ParseError(e.what(), 0);
    }
}

}  // namespace logitnets
