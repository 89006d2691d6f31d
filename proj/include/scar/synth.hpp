#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scar/clip.hpp"
#include "scar/rng.hpp"

namespace scar {

struct BlobSpec {
    int width = 0;
    int height = 0;
    int x = 0;  // start position, top-left
    int y = 0;
};

/// Deterministic scene description. The motion program is a piecewise script:
/// frames [0, hold_frames) are static, [hold_frames, contact_frame) approach
/// while keeping the silhouettes more than r_h + r_max apart, and from
/// contact_frame on the hand abuts the object and the task program runs
/// (translate left/up/right at `speed` px/frame, or rotate at `speed`
/// deg/frame for the rotate task).
struct SceneSpec {
    std::uint64_t seed = 0;
    int frame_count = 16;
    int width = 64;
    int height = 64;
    double fps = 8.0;
    int task_id = 0;
    BlobSpec hand{12, 12, 2, 24};
    BlobSpec object{12, 10, 38, 26};
    double speed = 2.0;
    int hold_frames = 4;
    int contact_frame = 8;
    int depth_dir = 0;  // gradient axis: 0 +x, 1 +y, 2 -x, 3 -y

    void validate() const;  // throws InvalidSpec
};

/// Hand/object placement at frame f, before rasterization. Exposed so tests
/// can check motion analytically.
struct FramePose {
    int hand_x = 0, hand_y = 0;
    int object_x = 0, object_y = 0;
    double object_angle_deg = 0.0;
};

FramePose scene_pose(const SceneSpec& spec, int frame);

/// Closed task vocabulary; task_id indexes into it.
const std::vector<std::string>& task_vocabulary();
int task_id_for(const std::string& description);  // throws BadManifest if unknown

/// Pure function of the spec: rasterized masks, planar-gradient depth with
/// hand nearest, flat-shaded RGB over a smooth static background.
Clip generate_scene(const SceneSpec& spec);

/// Randomized but deterministic spec for dataset generation; retries until
/// the spec validates.
SceneSpec random_scene_spec(std::uint64_t seed, int task_id, int frame_count, int width,
                            int height, double fps, int hold_frames);

// ---------------------------------------------------------------------------
// Reference semantics for the morphology fast paths (brute force, O(N^2)).

BinaryMask oracle_dilate(const BinaryMask& image, double radius);
ContactRegion oracle_contact(const BinaryMask& hand, const BinaryMask& object, int r_h, int r_o);

/// Random test mask: scattered rectangles, disks and lone pixels.
BinaryMask random_mask(Rng& rng, int width, int height);

}  // namespace scar
