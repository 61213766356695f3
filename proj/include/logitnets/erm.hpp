#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "logitnets/net.hpp"
#include "logitnets/risk.hpp"

namespace logitnets {

struct Sample {
    int d = 1;
    std::vector<double> x;  // row-major n x d
    std::vector<int> y;     // +-1
    std::uint64_t seed = 0;

    std::size_t size() const { return y.size(); }
    std::span<const double> point(std::size_t i) const { return {x.data() + i * d, static_cast<std::size_t>(d)}; }
};

Sample sample(const DataDistribution& P, std::size_t n, std::uint64_t seed);

double empirical_phi_risk(const RealFn& f, const Sample& s);

struct ErmResult {
    std::size_t index = 0;
    double empirical_risk = 0.0;
    std::vector<double> risks;
};

// Exact minimizer by enumeration; ties go to the lowest index.
ErmResult erm_finite(const std::vector<RealFn>& cls, const Sample& s);

struct TrainConfig {
    int width = 8;
    int depth = 2;      // trainable hidden layers; the output clip adds one more
    double B = 1.0;     // parameter bound enforced after every step
    double F = 1.0;     // output clip level
    int steps = 2000;
    double step_size = 0.01;
    int batch = 64;
    int restarts = 1;
    std::uint64_t seed = 1;
    int baseline_trials = 32;  // random-search probes around the trained net
    double baseline_scale = 0.01;

    // Budget the trained net is a member of.
    ComplexityBudget budget(int d) const;
};

struct TrainReport {
    double empirical_risk = 0.0;       // of the returned net on the full sample
    double restart_gap = 0.0;          // worst minus best final risk over restarts
    double optimization_gap = 0.0;     // returned risk minus the best random-search probe (>= 0)
    int best_restart = 0;
    int diverged = 0;
    double max_abs_param = 0.0;        // over all steps
};

struct TrainResult {
    ReluNet net;
    TrainReport report;
};

// Adam on the empirical logistic risk with clamping to [-B, B] after each step
// and an architectural output clip to [-F, F]. Throws if every restart diverges.
TrainResult erm_train(const Sample& s, const TrainConfig& cfg);

// Minimal size of a subset A of the class with every member within gamma of A
// in the sup norm, from a matrix of pairwise distances (exhaustive for <= 20 members).
int internal_covering_number(const std::vector<std::vector<double>>& dist, double gamma);

struct OracleStudyConfig {
    std::string name;
    std::vector<RealFn> cls;
    PsiFunction psi;
    double eps = 0.5;
    double gamma = 0.1;
    std::size_t n = 100;
    int replications = 300;
    std::uint64_t seed = 1;
    Quadrature quadrature;    // for risks and moment checks
    int sup_grid_per_axis = 0;  // 0: ~10^4 nodes in total
};

struct OracleReport {
    std::string name;
    double lhs = 0.0, lhs_half_width = 0.0;
    double rhs = 0.0;
    double term_variance = 0.0, term_bounded = 0.0, term_cross = 0.0, term_gamma = 0.0, term_approx = 0.0;
    double M = 0.0, Gamma = 0.0, Gamma_lemma = 0.0, W = 0.0, sup_f = 0.0;
    double psi_integral = 0.0, inf_risk = 0.0;
    bool condition_mean = false;     // int psi <= inf risk
    bool condition_variance = false;  // moment inequality with Gamma on every member
    bool passed = false;
    std::vector<std::size_t> replicate_index;  // ERM choice per replication
    std::vector<double> replicate_excess;
};

// Monte Carlo check of the oracle inequality for exact finite-class ERM.
// Gamma is the smallest constant satisfying the moment inequality on the class
// (never above the variant's closed-form constant).
OracleReport oracle_mc(const OracleStudyConfig& cfg, const DataDistribution& P);

// Canonical finite-class configurations for the oracle check.
struct OracleCase {
    OracleStudyConfig cfg;
    DataDistribution P;
};
std::vector<OracleCase> canonical_oracle_cases(int replications, std::uint64_t seed);

struct RateStudyConfig {
    std::string family = "sin1d";  // sin1d, fig1y, control4d, half
    std::vector<std::size_t> n_grid;
    int replications = 30;
    std::uint64_t seed = 1;
    double width_c = 1.0, width_exp = 0.5;  // width = ceil(width_c * n^width_exp)
    int width_min = 4, width_max = 256;
    int depth = 2;
    double F_c = 0.5;   // F = F_c * log n
    double B = 1e6;
    int steps = 3000;   // minimum step count
    double epochs = 0;  // when positive, steps = max(steps, epochs * n / batch)
    int batch = 128;
    double step_size = 0.01;
    int eval_points = 4096;
    double theory_slope = -0.5;
};

struct RateRow {
    std::size_t n = 0;
    int rep = 0;
    int width = 0;
    double F = 0.0;
    double excess_phi = 0.0;
    double excess_misclass = 0.0;
    double train_risk = 0.0;
    double optimization_gap = 0.0;
};

struct RateSummary {
    std::vector<RateRow> rows;
    std::vector<std::size_t> n;
    std::vector<double> mean_excess, half_width, mean_misclass;
    double slope = 0.0, slope_se = 0.0, intercept = 0.0;
    double theory_slope = 0.0;
};

DataDistribution rate_family(const std::string& family);
RateSummary rate_experiment(const RateStudyConfig& cfg);

// Least-squares fit of y = a + b x; returns {b, a, se(b)}.
struct LineFit {
    double slope = 0.0, intercept = 0.0, slope_se = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace logitnets
