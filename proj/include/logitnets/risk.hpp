#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace logitnets {

using RealFn = std::function<double(std::span<const double>)>;

// phi(t) = log(1 + e^{-t}), stable for large |t|; phi(+inf) = 0, phi(-inf) = inf.
double logistic_loss(double t);
// log(eta / (1 - eta)) with +-inf at the endpoints.
double target_function(double eta);
// t log(1/t) + (1-t) log(1/(1-t)), zero at the endpoints.
double entropy_H(double t);
// sgn(0) = +1.
inline int sgn(double t) { return t >= 0.0 ? 1 : -1; }

// Input marginal: Lebesgue on [0,1]^d, or a finite weighted point set.
struct Marginal {
    bool uniform = true;
    std::vector<std::vector<double>> points;
    std::vector<double> weights;
};

struct DataDistribution {
    int d = 1;
    RealFn eta;
    Marginal marginal;
    std::string family_tag;

    void validate() const;
};

struct Quadrature {
    enum class Kind { Grid, MonteCarlo } kind = Kind::Grid;
    int per_axis = 10000;     // grid: midpoint nodes per axis
    long long samples = 100000;  // Monte Carlo
    std::uint64_t seed = 1;
};

// Value with a 95% half-width (zero for deterministic quadrature).
struct Estimate {
    double value = 0.0;
    double half_width = 0.0;
};

// Integral over P_X of g(x, eta(x)).
Estimate integrate(const DataDistribution& P, const Quadrature& q,
                   const std::function<double(std::span<const double>, double)>& g);

// Pointwise E[phi(Y t) | eta] with the conventions 0 * inf = 0.
double conditional_phi_risk(double eta, double t);

Estimate phi_risk(const RealFn& f, const DataDistribution& P, const Quadrature& q);
Estimate bayes_phi_risk(const DataDistribution& P, const Quadrature& q);
Estimate excess_phi_risk(const RealFn& f, const DataDistribution& P, const Quadrature& q);
Estimate misclass_risk(const RealFn& f, const DataDistribution& P, const Quadrature& q);
Estimate excess_misclass(const RealFn& f, const DataDistribution& P, const Quadrature& q);

struct CalibrationReport {
    double excess_misclass = 0.0;
    double excess_phi = 0.0;
    double rhs = 0.0;  // 2 sqrt(2) sqrt(excess_phi)
    double slack = 0.0;
    bool passed = false;
};

CalibrationReport calibration_check(const RealFn& f, const DataDistribution& P, const Quadrature& q);

struct PsiFunction {
    enum class Variant { Truncated, Margin } variant = Variant::Truncated;
    double delta0 = 0.0, delta1 = 0.0;  // truncated
    double eta0 = 0.0, F0 = 0.0;        // margin
};

// delta1 = min(delta0 / log(1/delta0), H^{-1}(0.8 log(1/(1-delta0)))) on (0, 1/2).
PsiFunction truncated_psi(double delta0);
PsiFunction margin_psi(double eta0, double F0);

double psi_eval(const PsiFunction& psi, double eta_x, int y);
// Variance constant of the variant.
double psi_gamma(const PsiFunction& psi);
// Upper bound of psi over all (x, y).
double psi_upper(const PsiFunction& psi);
// Admissible |f| for the variance bound.
double psi_f_bound(const PsiFunction& psi);

struct VarianceReport {
    double second_moment = 0.0;
    double first_moment = 0.0;
    double gamma = 0.0;
    double ratio = 0.0;  // second / (gamma * first), 0 when both vanish
    bool passed = false;
};

VarianceReport variance_bound_check(const PsiFunction& psi, const RealFn& f, const DataDistribution& P,
                                    const Quadrature& q);

struct SandwichReport {
    double lower = 0.0, middle = 0.0, upper = 0.0, quarter = 0.0;
    bool passed = false;
};

// a phi(f) + (1-a) phi(-f) - H(a), evaluated without cancellation.
double pointwise_excess(double a, double f);
SandwichReport sandwich_check(double a, double f, double A, double B);

struct RatioReport {
    double H = 0.0, G = 0.0, gamma = 0.0;
    bool passed = false;
};

RatioReport variance_ratio_pointwise(double a, double f, double delta);

double J_function(double x, double y);
struct JBoundsReport {
    double J = 0.0;
    bool passed = false;
};
JBoundsReport J_bounds_check(double eps);

// KL(P_{eta1,Q} || P_{eta2,Q}) by quadrature over the marginal of P1.
double kl_divergence(const RealFn& eta1, const RealFn& eta2, int d, const Quadrature& q);
double kl_pointwise(double e1, double e2);

double covering_bound(double G, double N, double S, double B, double gamma, int d);

// Horizon pieces: Lambda_{g,j} = {x : x_j >= max(0, g(x_{-j}))}.
struct HorizonPiece {
    RealFn g;  // on [0,1]^{d-1}
    int axis = 0;
};

struct BoundaryClassifierSpec {
    int d = 2;
    std::vector<std::vector<HorizonPiece>> regions;  // Theta regions, each an intersection of I pieces

    bool in_region(std::size_t t, std::span<const double> x) const;
    int classify(std::span<const double> x) const;  // +1 inside some region, -1 otherwise
    // Monte Carlo disjointness check; throws if two regions share a sample.
    void check_disjoint(long long samples, std::uint64_t seed) const;
};

// Points on each surface S_{g,j} that also lie in the region's closure.
struct SampledBoundary {
    std::vector<std::vector<double>> points;
    double spacing = 0.0;  // largest gap between consecutive parameter nodes
};

SampledBoundary sample_boundary(const BoundaryClassifierSpec& spec, int per_surface = 10000);
double boundary_distance(const SampledBoundary& b, std::span<const double> x);

struct NoiseMarginCurves {
    std::vector<double> t;
    std::vector<double> noise, noise_hw;
    std::vector<double> margin, margin_hw;
};

NoiseMarginCurves noise_margin_estimators(const DataDistribution& P, const BoundaryClassifierSpec& spec,
                                          const std::vector<double>& t_grid, long long samples, std::uint64_t seed,
                                          int per_surface = 10000);

// Closed-form examples used as oracles: eta = 1/2 + eta0 C(x) / 2.
DataDistribution boundary_distribution(const BoundaryClassifierSpec& spec, double eta0);
BoundaryClassifierSpec half_plane_spec();        // x_2 >= 1/2
BoundaryClassifierSpec two_triangles_spec();     // x_2 >= 0.6 + x_1 and x_1 >= 0.6 + x_2
// Exact distance to the decision boundary of two_triangles_spec.
double two_triangles_distance(std::span<const double> x);

}  // namespace logitnets
