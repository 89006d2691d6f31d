#pragma once

#include <map>
#include <string>
#include <vector>

#include "scar/image.hpp"

namespace scar {

/// On-disk clip description. `stream_patterns` maps a stream name
/// (rgb, hand_mask, object_mask, depth, scar) to a printf-style file
/// pattern relative to the manifest directory, e.g. "rgb_%05d.ppm".
struct ClipManifest {
    std::string clip_id;
    int frame_count = 0;
    int width = 0;
    int height = 0;
    double fps = 0.0;
    std::string task_description;
    std::map<std::string, std::string> stream_patterns;
};

/// Fully materialized sample: RGB frames, per-frame hand/object masks and
/// depth, all aligned and of identical resolution.
struct Clip {
    ClipManifest manifest;
    std::vector<RgbImage> rgb;
    std::vector<BinaryMask> hand_masks;
    std::vector<BinaryMask> object_masks;
    std::vector<DepthFrame> depth;

    int frames() const { return static_cast<int>(rgb.size()); }
};

/// Curated structure-and-contact-aware video: one composite frame per input
/// frame (colored contours + contact region alpha-blended over depth).
struct ScarVideo {
    std::string clip_id;
    double fps = 0.0;
    std::string task_description;
    std::vector<ScarFrame> frames;
};

}  // namespace scar
