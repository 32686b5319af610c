#include "mte/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace mte {

std::uint64_t mix_seed(std::uint64_t root, std::uint64_t stream)
{
    std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

unsigned default_threads()
{
    if (const char* env = std::getenv("MTE_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0)
                return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return 1;
}

void for_each_chunk(std::size_t n, std::size_t chunk, unsigned threads,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& body)
{
    if (n == 0)
        return;
    const std::size_t chunks = (n + chunk - 1) / chunk;
    if (threads == 0)
        threads = default_threads();
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
    if (threads <= 1) {
        for (std::size_t c = 0; c < chunks; ++c)
            body(c, c * chunk, std::min(n, (c + 1) * chunk));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t c = next++; c < chunks; c = next++) {
                try {
                    body(c, c * chunk, std::min(n, (c + 1) * chunk));
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace mte
