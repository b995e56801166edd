#pragma once

#include <cstdint>
#include <string>

#include "steinprune/dataio.hpp"
#include "steinprune/pruning.hpp"
#include "steinprune/train.hpp"

namespace steinprune {

// Versioned binary container (magic "DLLPCKPT", little-endian fields,
// length-prefixed CRC32-protected sections). Round trips are bit-exact,
// including RNG counters, so a resumed run matches an unbroken one.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::uint32_t format_version = kCheckpointVersion;
    ParticleEnsemble ensemble;
    TrainState train_state;
    Normalization normalization;
    std::uint64_t config_hash = 0;
};

// Refuses ensembles with fewer than 2 particles. Writes atomically.
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Mask container: magic "DLLPMASK", u32 version, u64 M, bit-packed keep
// array (LSB-first), CRC32 over the packed bytes. The origin tag is a
// runtime attribute and not stored; loads default it to DllpSlab.
void save_mask(const PruneMask& mask, const std::string& path);
PruneMask load_mask(const std::string& path);

}  // namespace steinprune
