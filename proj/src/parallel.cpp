#include "logitnets/parallel.hpp"

#include <cstdlib>
#include <omp.h>

namespace logitnets {

namespace {
int g_jobs = 0;
}

int jobs() {
    if (g_jobs > 0) return g_jobs;
    if (const char* env = std::getenv("LOGITNETS_JOBS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return omp_get_max_threads();
}

void set_jobs(int n) { g_jobs = n > 0 ? n : 0; }

std::vector<double> evaluate_batch(const ReluNet& net, std::span<const double> points, Exec exec) {
    const std::size_t d = static_cast<std::size_t>(net.input_dim());
    const std::size_t o = static_cast<std::size_t>(net.output_dim());
    if (points.size() % d != 0) throw NetError("evaluate_batch: point buffer not a multiple of input_dim", 0);
    const std::size_t n = points.size() / d;
    std::vector<double> out(n * o);
    for_each_index(exec, n, [&](std::size_t i) {
        auto y = net.evaluate(points.subspan(i * d, d));
        std::copy(y.begin(), y.end(), out.begin() + static_cast<std::ptrdiff_t>(i * o));
    });
    return out;
}

std::size_t Grid::size() const {
    std::size_t n = 1;
    for (std::size_t a = 0; a < lo.size(); ++a) n *= static_cast<std::size_t>(per_axis);
    return n;
}

void Grid::point(std::size_t idx, double* out) const {
    for (std::size_t a = 0; a < lo.size(); ++a) {
        std::size_t i = idx % static_cast<std::size_t>(per_axis);
        idx /= static_cast<std::size_t>(per_axis);
        out[a] = per_axis == 1 ? lo[a] : lo[a] + (hi[a] - lo[a]) * static_cast<double>(i) / (per_axis - 1);
    }
}

}  // namespace logitnets
