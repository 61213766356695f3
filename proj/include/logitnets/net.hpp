#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace logitnets {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense row-major matrix. Small and explicit so that summation order in
// evaluation is fully under our control.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Matrix identity(std::size_t n);
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix vstack(const std::vector<Matrix>& blocks);
Matrix block_diag(const std::vector<Matrix>& blocks);

// One hidden layer: z -> sigma(W z - v).
struct Layer {
    Matrix W;
    std::vector<double> v;
};

struct ComplexityStats {
    int depth_G = 0;
    int width_N = 0;
    long long nnz_S = 0;
    double param_bound_B = 0.0;
    std::optional<double> supnorm_F;
};

struct ComplexityBudget {
    double G = kInf;
    double N = kInf;
    double S = kInf;
    double B = kInf;
    double F = kInf;
};

class NetError : public std::runtime_error {
public:
    NetError(const std::string& what, int layer) : std::runtime_error(what), layer_(layer) {}
    // Index of the offending weight matrix (0-based, output matrix = depth), or -1.
    int layer() const { return layer_; }

private:
    int layer_;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (byte " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

// f(x) = W_L sigma_{v_L} W_{L-1} ... W_1 sigma_{v_1} W_0 x. Immutable once
// built; evaluate() is reentrant.
class ReluNet {
public:
    ReluNet(int input_dim, std::vector<Layer> layers, Matrix output_matrix);

    int input_dim() const { return input_dim_; }
    int output_dim() const { return static_cast<int>(out_.rows); }
    int depth() const { return static_cast<int>(layers_.size()); }
    const std::vector<Layer>& layers() const { return layers_; }
    const Matrix& output_matrix() const { return out_; }
    const ComplexityStats& stats() const { return stats_; }

    std::vector<double> evaluate(std::span<const double> x) const;
    // Scalar shortcut for single-output nets.
    double operator()(std::span<const double> x) const;
    double at(double x) const;

private:
    struct Csc {
        std::size_t rows = 0;
        std::vector<std::size_t> col_ptr;
        std::vector<std::size_t> row_idx;
        std::vector<double> val;
    };
    static Csc compile(const Matrix& m);
    static void apply(const Csc& m, const double* z, std::size_t n, double* acc);

    int input_dim_;
    std::vector<Layer> layers_;
    Matrix out_;
    std::vector<Csc> compiled_;
    Csc compiled_out_;
    ComplexityStats stats_;
    std::size_t max_width_ = 0;
};

std::vector<double> evaluate(const ReluNet& net, std::span<const double> x);
ComplexityStats complexity(const ReluNet& net);

// Grid estimate of sup_{[0,1]^d} max_i |f_i(x)| with `resolution` nodes per axis.
double sup_norm_estimate(const ReluNet& net, int resolution);

// Necessary-condition check: exact G,N,S,B and, for finite F, a grid sup-norm.
bool is_member(const ReluNet& net, const ComplexityBudget& budget, int grid_resolution);

// x -> A x as a net with no hidden layer.
ReluNet linear_net(const Matrix& A);
ReluNet identity_net(int dim);

// outer(inner(x) + offset); boundary affine maps are merged so depths add.
ReluNet compose(const ReluNet& outer, const ReluNet& inner);
ReluNet compose(const ReluNet& outer, const ReluNet& inner, std::span<const double> offset);

// Shared input, concatenated outputs. Shallower nets are padded with the
// two-channel passthrough y = sigma(y) - sigma(-y).
ReluNet parallel(const std::vector<ReluNet>& nets);
// Concatenated inputs and outputs (block-diagonal), same padding rule.
ReluNet stack(const std::vector<ReluNet>& nets);

// Depth-k net carrying a signed m-vector through k hidden layers.
ReluNet passthrough_net(int m, int k);

// Appends a neuron with constant value 1 to the last hidden layer and adds
// c_i to output i. Requires depth >= 1.
ReluNet add_constant(const ReluNet& net, std::span<const double> c);

// Rescales rows by powers of two (pushed forward into the next layer) and,
// when the output matrix still exceeds 1, appends doubling layers. The
// computed values are bitwise unchanged barring over/underflow; afterwards
// every parameter has magnitude <= 1.
ReluNet rebalance(const ReluNet& net);

std::string serialize(const ReluNet& net);
ReluNet deserialize(const std::string& text);

// Shortest decimal string that round-trips a binary64.
std::string format_double(double x);

}  // namespace logitnets
