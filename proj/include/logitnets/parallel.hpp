#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "logitnets/net.hpp"

namespace logitnets {

enum class Exec { Serial, Parallel };

// Thread count for Exec::Parallel. Defaults to LOGITNETS_JOBS, else the
// OpenMP default.
int jobs();
void set_jobs(int n);

// Calls body(i) for i in [0, n). Each index must write only its own slot so
// results do not depend on the schedule.
template <class Body>
void for_each_index(Exec exec, std::size_t n, Body&& body) {
    if (exec == Exec::Serial) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(jobs())
    for (long long i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
}

// Row-major points (n x input_dim) -> row-major outputs (n x output_dim).
std::vector<double> evaluate_batch(const ReluNet& net, std::span<const double> points, Exec exec);

// Uniform tensor grid on a box; node i along axis a is lo[a] + i*(hi[a]-lo[a])/(per_axis-1).
struct Grid {
    std::vector<double> lo, hi;
    int per_axis = 2;

    std::size_t size() const;
    void point(std::size_t idx, double* out) const;
};

// max over grid nodes of |net(x) - f(x)| for scalar nets. f must be
// thread-safe when exec is Parallel.
template <class F>
double grid_sup_error(const ReluNet& net, F&& f, const Grid& grid, Exec exec) {
    const std::size_t n = grid.size();
    const std::size_t d = grid.lo.size();
    std::vector<double> err(n);
    for_each_index(exec, n, [&](std::size_t i) {
        std::vector<double> x(d);
        grid.point(i, x.data());
        err[i] = std::abs(net.evaluate(x)[0] - f(std::span<const double>(x)));
    });
    double m = 0.0;
    for (double e : err) m = (e > m || e != e) ? e : m;
    return m;
}

}  // namespace logitnets
