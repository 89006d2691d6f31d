#pragma once

#include <cstdint>
#include <vector>

#include "scar/codec.hpp"
#include "scar/denoiser.hpp"
#include "scar/schedule.hpp"

namespace scar {

struct SampleResult {
    std::vector<RgbImage> rgb;
    std::vector<ScarFrame> scar;
};

/// Encodes the observed frame as the temporal-index-0 conditioning block:
/// the frame is replicated across one temporal patch and patchified.
Eigen::MatrixXd encode_first_frame(const RgbImage& frame, const LatentCodec& codec);

/// Deterministic DDIM reverse process over the full unified sequence. Both
/// modality blocks are denoised jointly; the conditioning tokens replace the
/// visual block's temporal-index-0 rows at every step. Decoded pixels are
/// clamped to [0,1].
SampleResult sample_clip(const RgbImage& first_frame, int task_id, const DenoiserState& state,
                         const LatentCodec& codec, const NoiseSchedule& sched, int steps,
                         std::uint64_t seed);

}  // namespace scar
