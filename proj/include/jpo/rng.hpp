#pragma once

#include <array>
#include <cstdint>

namespace jpo {

/// Philox4x32-10 counter-based generator. A stream is identified by
/// (seed, stream id); draws are a pure function of (seed, stream, draw index),
/// so results do not depend on which thread consumes a stream.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

    /// Independent child stream keyed by an index (example id, replicate id, ...).
    [[nodiscard]] CounterRng substream(std::uint64_t index) const;

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] std::uint64_t stream() const { return stream_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Named stream ids used across the library.
namespace streams {
inline constexpr std::uint64_t problems = 0x70726f62;
inline constexpr std::uint64_t network = 0x6e657477;
inline constexpr std::uint64_t synthetic = 0x73796e74;
inline constexpr std::uint64_t landscape = 0x6c616e64;
inline constexpr std::uint64_t sampling = 0x73616d70;
}  // namespace streams

}  // namespace jpo
