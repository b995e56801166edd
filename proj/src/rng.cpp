#include "steinprune/rng.hpp"

#include <cmath>

namespace steinprune {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t avalanche(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace

std::uint64_t mix64(std::uint64_t x) { return avalanche(x + kGolden); }

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return avalanche(avalanche(a + kGolden) ^ (b + kGolden));
}

std::uint64_t RngState::next_u64() {
    // SplitMix64 indexed at `counter`, with the stream folded into the base
    // state. Random access by counter keeps resume-from-checkpoint exact.
    const std::uint64_t base = avalanche(seed + kGolden) ^ avalanche(stream + kGolden);
    const std::uint64_t state = base + kGolden * (counter++ + 1);
    return avalanche(state);
}

double RngState::next_uniform() {
    const std::uint64_t bits = next_u64() >> 11;  // 53 bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RngState::next_gaussian() {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace steinprune
