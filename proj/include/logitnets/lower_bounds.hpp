#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "logitnets/risk.hpp"

namespace logitnets {

// Smoothed step: 1 on t <= 1/9, 0 on t >= 1/8, normalized incomplete
// integral of exp(-1/(s-1/9)) exp(-1/(1/8-s)) in between.
double kappa(double t);
double kappa_prime(double t);
double kappa_second(double t);

// u(x) = kappa(|x|^2).
double mollifier_u(std::span<const double> x);

// Over-estimate of the C^{b,lambda}([-2,2]^d) norm of u, b = ceil(beta) - 1,
// from dense sampling of the radial derivatives. Supports beta in (0, 2].
double mollifier_norm_bound(double beta);

struct BumpGrid {
    int Q = 2;
    int d = 1;
    double beta = 1.0;
    double r = 1.0;
    double c1 = 0.0;
    double c2_hat = 0.0;
    double amplitude = 0.0;  // c1 / Q^beta
    std::vector<int> signs;  // T(a), a indexed with axis 0 fastest

    std::size_t cells() const { return signs.size(); }
    std::vector<double> center(std::size_t idx) const;
    double operator()(std::span<const double> x) const;
    // Gradient of the bump sum.
    std::vector<double> gradient(std::span<const double> x) const;
};

// f(x) = sum_a T(a) c1/Q^beta u(Q (x - a)) over the odd multiples of 1/(2Q).
BumpGrid bump_grid_build(int Q, int d, double beta, double r, std::vector<int> signs);

struct HolderEstimate {
    double sup_terms = 0.0;  // max over |m| <= b of sup |D^m f|
    double seminorm = 0.0;   // max over |m| = b of the lambda-Holder quotient
    double norm = 0.0;       // sum of the two
};

// Norm estimate from a sup grid plus random pairs at scales 10^{-4}..1.
HolderEstimate holder_norm_estimate(const BumpGrid& f, int pairs, std::uint64_t seed);

struct BinaryCode {
    int m = 0;
    std::vector<std::uint64_t> words;  // bit i = coordinate i
    int min_distance = 0;
};

// All words for m <= 8, otherwise greedy Gilbert construction until
// 1 + 2^{m/8} words with pairwise distance >= m/8.
BinaryCode vg_code(int m);

struct CodeCertificate {
    std::size_t size = 0;
    double required_size = 0.0;
    int min_distance = 0;
    double required_distance = 0.0;
    bool passed = false;
};

// Exhaustive pairwise scan.
CodeCertificate certify_code(const BinaryCode& c);

struct FamilyParams {
    int Q = 4;
    int d = 1;
    int d_star = 1;
    int K = 1;
    int q = 0;
    double beta = 1.0;
    double r = 1.0;
    double A = 0.5;
};

struct HypothesisFamily {
    FamilyParams params;
    double c1 = 0.0;
    double epsilon = 0.0;
    double s = 0.0;            // separation lower bound
    double n_threshold = 0.0;  // sample sizes above this give |2 eta - 1| > A
    bool membership_ok = false;
    int M = 0;                 // distributions are indexed 0..M
    BinaryCode code;
    std::vector<std::shared_ptr<const BumpGrid>> bumps;
    std::vector<DataDistribution> dists;

    // Closed form of eta_j on the first d_star coordinates.
    double eta_closed(std::size_t j, std::span<const double> x) const;
};

// Q from n: floor(n^{1/(d_star + beta (1^beta)^q)}) + 1.
int family_Q_for_n(double n, int d_star, double beta, int q);
HypothesisFamily hypothesis_family(const FamilyParams& p);

struct PairRow {
    std::size_t i = 0, j = 0;
    int hamming = 0;
    double J_integral = 0.0;
    bool passed = false;
};

struct SeparationReport {
    std::vector<PairRow> pairs;
    std::vector<double> kl_to_0;  // KL(P_j || P_0), j = 0..M
    double s = 0.0;
    double nine_eps = 0.0;
    double n_threshold = 0.0;
    double min_J = 0.0;
    double max_kl = 0.0;
    bool passed = false;
};

// Midpoint quadrature over the first d_star coordinates (the others do not
// enter eta). per_axis = 0 picks ~10^5 nodes.
SeparationReport separation_certificate(const HypothesisFamily& fam, int per_axis = 0);

}  // namespace logitnets
