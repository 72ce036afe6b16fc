#ifndef ADVLAB_PARALLEL_HPP
#define ADVLAB_PARALLEL_HPP

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace advlab {

inline int& thread_count_ref() {
    static int n = [] {
        if (const char* env = std::getenv("ADVLAB_THREADS")) {
            int v = std::atoi(env);
            if (v >= 1) return v;
        }
        unsigned hc = std::thread::hardware_concurrency();
        return hc ? static_cast<int>(hc) : 1;
    }();
    return n;
}

inline void set_thread_count(int n) {
    if (n >= 1) thread_count_ref() = n;
}

/// Runs fn(chunk_index, begin, end) over fixed-size chunks of [0, n).
/// Chunk boundaries depend only on (n, chunk_size), never on the number of
/// workers, so any per-chunk partial results are schedule-invariant; callers
/// that reduce must combine partials in chunk-index order.
template <typename Fn>
void parallel_chunks(std::size_t n, std::size_t chunk_size, Fn&& fn) {
    if (n == 0) return;
    std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
    int workers = std::min<int>(thread_count_ref(), static_cast<int>(n_chunks));
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c)
            fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= n_chunks) return;
            fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int t = 0; t < workers - 1; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

/// Per-index parallel map; results written to disjoint slots by index.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    parallel_chunks(n, 1, [&](std::size_t, std::size_t b, std::size_t) { fn(b); });
}

} // namespace advlab

#endif // ADVLAB_PARALLEL_HPP
