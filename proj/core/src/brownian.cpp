#include "tic/brownian.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "tic/parallel.hpp"

namespace tic {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 over the (seed, stream) pair.
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

BrownianEnsemble::BrownianEnsemble(TimeGrid grid, std::size_t m_paths, std::uint64_t seed)
    : grid_(grid), m_(m_paths), seed_(seed), dw_(m_paths * grid.n_steps) {
    if (m_paths == 0)
        throw std::invalid_argument("BrownianEnsemble: path count must be >= 1");
    const double sqrt_dt = std::sqrt(grid_.dt());
    const int n = grid_.n_steps;
    parallel_for_blocks(m_, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t m = lo; m < hi; ++m) {
            std::mt19937_64 gen(mix_seed(seed_, m));
            std::normal_distribution<double> normal(0.0, 1.0);
            double* row = dw_.data() + m * n;
            for (int i = 0; i < n; ++i) row[i] = normal(gen) * sqrt_dt;
        }
    });
}

double BrownianEnsemble::w(std::size_t path, int knot) const {
    double acc = 0.0;
    const double* row = dw_.data() + path * grid_.n_steps;
    for (int i = 0; i < knot; ++i) acc += row[i];
    return acc;
}

BrownianEnsemble BrownianEnsemble::suffix(int i0) const {
    BrownianEnsemble out;
    out.grid_ = grid_.suffix(i0);
    out.m_ = m_;
    out.seed_ = seed_;
    out.dw_.resize(m_ * out.grid_.n_steps);
    const int n_old = grid_.n_steps, n_new = out.grid_.n_steps;
    for (std::size_t m = 0; m < m_; ++m)
        for (int i = 0; i < n_new; ++i) out.dw_[m * n_new + i] = dw_[m * n_old + i0 + i];
    return out;
}

BrownianEnsemble generate_brownian(const TimeGrid& grid, std::size_t m_paths, std::uint64_t seed) {
    return BrownianEnsemble(grid, m_paths, seed);
}

} // namespace tic
