#pragma once

#include <cstdint>

namespace steinprune {

// Counter-based pseudo-random stream. Every draw is a pure function of
// (seed, stream, counter), so a stream can be checkpointed and resumed by
// storing the counter alone, and draw k of a stream is the same no matter
// how the preceding draws were interleaved with other streams.
struct RngState {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t counter = 0;

    RngState() = default;
    RngState(std::uint64_t seed_, std::uint64_t stream_) : seed(seed_), stream(stream_) {}

    std::uint64_t next_u64();
    // Uniform on the open interval (0,1); never returns 0 or 1 exactly.
    double next_uniform();
    // Standard normal via Box-Muller; consumes two counter slots per draw.
    double next_gaussian();
};

// Stateless avalanche hash, also used to derive per-cell seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace steinprune
