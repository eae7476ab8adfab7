#include "tic/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace tic {

int thread_count() {
    if (const char* env = std::getenv("TIC_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

void parallel_for_blocks(std::size_t n,
                         const std::function<void(std::size_t, std::size_t)>& fn,
                         std::size_t block_size) {
    if (n == 0) return;
    const std::size_t n_blocks = (n + block_size - 1) / block_size;
    const int workers = thread_count();
    if (workers <= 1 || n_blocks <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b)
            fn(b * block_size, std::min(n, (b + 1) * block_size));
        return;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            std::size_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            fn(b * block_size, std::min(n, (b + 1) * block_size));
        }
    };
    std::vector<std::thread> pool;
    const std::size_t n_threads = std::min<std::size_t>(workers, n_blocks);
    pool.reserve(n_threads - 1);
    for (std::size_t i = 0; i + 1 < n_threads; ++i) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
}

} // namespace tic
