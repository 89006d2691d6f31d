#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "scar/codec.hpp"
#include "scar/denoiser.hpp"
#include "scar/schedule.hpp"

namespace scar {

/// Everything needed to resume training or to sample: model parameters with
/// optimizer moments, the frozen codec, the schedule, the RunConfig snapshot
/// of the producing run, the step counter and the RNG state. Single binary
/// container with a versioned header.
struct Checkpoint {
    std::string config_text;
    NoiseSchedule schedule;
    LatentCodec codec;
    DenoiserState state;
    std::uint64_t step = 0;
    std::uint64_t rng_state = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

/// Loads and, unless `allow_mismatch`, rejects checkpoints whose layer count,
/// width or split index differ from `expected` (pass nullptr to skip the
/// check).
Checkpoint load_checkpoint(const std::filesystem::path& path, const RunConfig* expected,
                           bool allow_mismatch = false);

}  // namespace scar
