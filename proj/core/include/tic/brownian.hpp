#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tic/time_grid.hpp"

namespace tic {

/// Seeded Brownian increments on a shared time grid, M paths x N steps.
/// Each path draws from its own substream derived from (seed, path index),
/// so path k is bit-identical whether generated alone or in a batch and the
/// ensemble does not depend on the worker count.
class BrownianEnsemble {
public:
    BrownianEnsemble() = default;
    BrownianEnsemble(TimeGrid grid, std::size_t m_paths, std::uint64_t seed);

    const TimeGrid& grid() const { return grid_; }
    std::size_t paths() const { return m_; }
    std::uint64_t seed() const { return seed_; }

    /// Increment dW_i of path m over [s_i, s_{i+1}].
    double dw(std::size_t path, int step) const { return dw_[path * grid_.n_steps + step]; }
    std::span<const double> increments(std::size_t path) const {
        return {dw_.data() + path * grid_.n_steps, static_cast<std::size_t>(grid_.n_steps)};
    }

    /// W(s_i) - W(t_start) for path m.
    double w(std::size_t path, int knot) const;

    /// Ensemble on the sub-grid starting at knot i0, reusing the same
    /// increments (common random numbers for restarted problems).
    BrownianEnsemble suffix(int i0) const;

private:
    TimeGrid grid_;
    std::size_t m_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<double> dw_;
};

BrownianEnsemble generate_brownian(const TimeGrid& grid, std::size_t m_paths, std::uint64_t seed);

/// Deterministic stream splitter used for per-path and per-cell substreams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace tic
