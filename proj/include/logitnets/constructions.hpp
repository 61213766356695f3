#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "logitnets/net.hpp"
#include "logitnets/parallel.hpp"

namespace logitnets {

using Fn = std::function<double(std::span<const double>)>;

struct ErrorCertificate {
    std::string construction;
    std::string params;
    std::string domain;
    long long grid_points = 0;
    double measured_sup_error = 0.0;
    double claimed_bound = 0.0;
    bool passed = false;
};

// 2^k * sigma(x), width 2.
ReluNet scale_pos_net(int k);
ComplexityBudget scale_pos_budget(int k);

// ||x||_inf by recursive halving.
ReluNet max_net(int k);
ComplexityBudget max_budget(int k);

// Sawtooth product approximant on [0,1]^2 with M(t,0) = M(0,t) = 0 exactly.
ReluNet mult_net(double eps);
ComplexityBudget mult_budget(double eps);
// Number of sawtooth levels used by mult_net(eps).
int mult_levels(double eps);

// Trapezoid f_k supported on [1/(3*2^k), 1/2^k] (k >= 1) or the ramp f_0.
ReluNet hat_net(int k, int I);
// Closed-form reference for hat_net.
double hat_value(int k, double x);

// t -> min(max(t, lo), hi).
ReluNet clip_net(double lo, double hi);

struct HolderOptions {
    int grid_per_axis = 0;  // 0: 10^4 in d = 1, 10^2 per axis otherwise
    int max_grid_M = 4096;
    Exec exec = Exec::Parallel;
};

struct HolderResult {
    ReluNet net;
    ErrorCertificate cert;
    int grid_M = 0;        // interpolation nodes per axis minus one; 0 for exact affine nets
    int poly_order = 0;    // local polynomial degree per axis
    double constant_C = 0.0;
};

HolderResult holder_approx(const Fn& f, int d, double beta, double r, double eps, const HolderOptions& opt = {});

struct LogOptions {
    int grid_points = 100000;
    int clamp_points = 20001;
    double clamp_lo = -10.0, clamp_hi = 10.0;
    Exec exec = Exec::Parallel;
};

struct LogResult {
    ReluNet net;
    ErrorCertificate cert;
    double clamp_violation = 0.0;  // max amount by which the output leaves [log a, log b] on the clamp grid
    bool clamp_ok = false;
    int I = 0;
};

// Float slack allowed on the structural range clamp (summing 8I equal terms).
inline constexpr double kClampSlack = 1e-12;

LogResult log_approx(double a, double b, double alpha, double eps, const LogOptions& opt = {});

// x -> l(P(eta(x))) - l(1 - P(eta(x))), P the clamp to [delta, 1 - delta] and
// l the logarithm approximant on [delta, 1 - delta] at accuracy delta.
ReluNet truncated_target_net(const ReluNet& eta_net, double delta, double alpha = 1.0);

struct Component {
    enum class Kind { Holder, Max } kind = Kind::Holder;
    std::vector<int> inputs;  // 0-based coordinates of the stage input
    double beta = 1.0;
    double r = 1.0;
    Fn f;  // Holder only; receives the selected coordinates
};

struct CompositionSpec {
    int q = 0;
    int K = 1;
    int d = 1;
    int d_star = 1;  // max fan-in of Max components
    int d_ast = 1;   // fan-in of Holder components
    double beta = 1.0;
    double r = 1.0;
    std::vector<std::vector<Component>> stages;  // q + 1 stages; the last has one component

    void validate() const;
    double evaluate(std::span<const double> x) const;
};

struct CompositionOptions {
    int grid_per_axis = 0;  // 0: chosen so the grid has at most ~10^5 nodes
    Exec exec = Exec::Parallel;
};

struct CompositionResult {
    ReluNet net;
    ErrorCertificate cert;
    double delta = 0.0;
    int merged_depth = 0;          // depth of the assembled net
    int stagewise_depth_bound = 0;  // sum over stages of (1 + max component depth)
};

CompositionResult compositional_approx(const CompositionSpec& spec, double eps, const CompositionOptions& opt = {});

// Stage-perturbation bound for h_q o ... o h_0:
// (r d_ast^{1^beta})^{sum_{k<q} (1^beta)^k} * sum_k dev_k^{(1^beta)^{q-k}}.
double composition_error_bound(double r, int d_ast, double beta, std::span<const double> stage_deviation);

// Example decompositions on [0,1]^4: the sum of pairwise products and the max
// of pairwise products.
CompositionSpec pairwise_sum_spec();
CompositionSpec pairwise_max_spec();

std::string certificate_csv_header();
std::string certificate_csv_row(const ErrorCertificate& c);

}  // namespace logitnets
