#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace mte {

// SplitMix64 finalizer; derives independent stream seeds from a root seed.
std::uint64_t mix_seed(std::uint64_t root, std::uint64_t stream);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    // Uniform on the open interval (0, 1) built from 53 random bits.
    double uniform01() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// Worker count used when a caller passes 0: MTE_THREADS if set, else 1.
unsigned default_threads();

// Runs body(chunk, begin, end) over fixed-size chunks of [0, n). Chunk
// boundaries do not depend on the thread count, so results seeded per chunk
// are identical for any number of workers.
void for_each_chunk(std::size_t n, std::size_t chunk, unsigned threads,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

inline constexpr std::size_t kChunk = 4096;

} // namespace mte
