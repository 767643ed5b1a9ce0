// parallel.hpp — Deterministic work partitioning. Reductions are chunked at a
// fixed size and folded in chunk order, so results do not depend on how many
// workers ran the chunks.

#pragma once

#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace spinbath::parallel {

inline constexpr std::size_t kChunkSize = 4096;

// Worker count: SPINBATH_THREADS if set, otherwise hardware concurrency.
inline std::size_t worker_count() {
    if (const char* env = std::getenv("SPINBATH_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Runs fn(i) for i in [0, count). Tasks must be independent; each index is
// processed exactly once. workers == 0 means worker_count().
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, std::size_t workers = 0) {
    if (workers == 0) workers = worker_count();
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    workers = std::min(workers, count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&fn, w, workers, count] {
            for (std::size_t i = w; i < count; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

// Chunked deterministic reduction over [0, n). For every chunk c the functor
// produces map(begin, end) -> Partial; partials are folded left-to-right in
// chunk order by the caller-supplied fold. The chunk grid is fixed by
// kChunkSize, so the result is bit-stable for any worker count.
template <typename Partial, typename MapFn, typename FoldFn>
Partial chunk_reduce(std::size_t n, Partial init, MapFn&& map, FoldFn&& fold,
                     std::size_t workers = 0) {
    const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
    if (chunks <= 1) {
        Partial acc = init;
        if (n > 0) fold(acc, map(std::size_t{0}, n));
        return acc;
    }
    std::vector<Partial> partials(chunks);
    parallel_for(
        chunks,
        [&](std::size_t c) {
            const std::size_t begin = c * kChunkSize;
            const std::size_t end = std::min(begin + kChunkSize, n);
            partials[c] = map(begin, end);
        },
        workers);
    Partial acc = init;
    for (const auto& p : partials) fold(acc, p);
    return acc;
}

} // namespace spinbath::parallel
