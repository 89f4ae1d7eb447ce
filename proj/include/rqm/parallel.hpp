#ifndef RQM_PARALLEL_HPP
#define RQM_PARALLEL_HPP

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rqm {

// Runs fn(chunk_index, begin, end) over a fixed partition of [0, count).
// The partition depends only on count and chunk_size, never on the worker
// count, so callers that give each chunk its own output slot and combine the
// slots in chunk order get bitwise identical results at any thread count.
inline void for_chunks(
    std::size_t count, std::size_t chunk_size, unsigned n_threads,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (count == 0) return;
    if (chunk_size == 0) chunk_size = 1;
    const std::size_t n_chunks = (count + chunk_size - 1) / chunk_size;
    if (n_threads <= 1 || n_chunks == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) {
            const std::size_t b = c * chunk_size;
            fn(c, b, std::min(b + chunk_size, count));
        }
        return;
    }
    std::mutex mu;
    std::size_t next = 0;
    std::exception_ptr first_error;
    auto worker = [&]() {
        for (;;) {
            std::size_t c;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (first_error || next >= n_chunks) return;
                c = next++;
            }
            try {
                const std::size_t b = c * chunk_size;
                fn(c, b, std::min(b + chunk_size, count));
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::min<std::size_t>(n_threads, n_chunks);
    pool.reserve(n);
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline std::size_t chunk_count(std::size_t count, std::size_t chunk_size) {
    if (count == 0) return 0;
    if (chunk_size == 0) chunk_size = 1;
    return (count + chunk_size - 1) / chunk_size;
}

}  // namespace rqm

#endif
