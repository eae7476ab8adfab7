#pragma once

#include <cstddef>
#include <functional>

namespace tic {

/// Worker count: TIC_THREADS env var if set, else hardware concurrency.
int thread_count();

/// Runs fn(begin, end) over fixed-size blocks of [0, n).
/// Block boundaries do not depend on the worker count, so any block-ordered
/// combination of per-block results is reproducible.
void parallel_for_blocks(std::size_t n,
                         const std::function<void(std::size_t, std::size_t)>& fn,
                         std::size_t block_size = 8192);

constexpr std::size_t kDefaultBlock = 8192;

} // namespace tic
