#include "scar/synth.hpp"

#include <algorithm>
#include <cmath>

#include "scar/errors.hpp"

namespace scar {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kStageGap = 18;      // pre-contact clearance, > r_h + r_max at defaults
constexpr int kMinPreContactGap = 16;

int offset_px(double speed, int frames_since_contact) {
    return static_cast<int>(std::lround(speed * frames_since_contact));
}

struct Rect {
    int x, y, w, h;
};

void fill_rect(BinaryMask& mask, const Rect& r) {
    for (int y = std::max(0, r.y); y < std::min(mask.height, r.y + r.h); ++y)
        for (int x = std::max(0, r.x); x < std::min(mask.width, r.x + r.w); ++x)
            mask.set(x, y);
}

// Hand silhouette: palm block plus two finger bars reaching the leading edge.
std::vector<Rect> hand_rects(const BlobSpec& hand, int hx, int hy) {
    const int palm_w = std::max(1, 2 * hand.width / 3);
    const int finger_len = hand.width - palm_w;
    std::vector<Rect> rects{{hx, hy, palm_w, hand.height}};
    if (finger_len > 0) {
        const int fh = std::max(1, hand.height / 4);
        const int top = hy + hand.height / 6;
        const int bottom = hy + hand.height - hand.height / 6 - fh;
        rects.push_back({hx + palm_w, top, finger_len, fh});
        if (bottom > top) rects.push_back({hx + palm_w, bottom, finger_len, fh});
    }
    return rects;
}

BinaryMask rasterize_hand(const SceneSpec& spec, const FramePose& pose) {
    BinaryMask mask(spec.width, spec.height);
    for (const Rect& r : hand_rects(spec.hand, pose.hand_x, pose.hand_y)) fill_rect(mask, r);
    return mask;
}

BinaryMask rasterize_object(const SceneSpec& spec, const FramePose& pose) {
    BinaryMask mask(spec.width, spec.height);
    if (pose.object_angle_deg == 0.0) {
        fill_rect(mask, {pose.object_x, pose.object_y, spec.object.width, spec.object.height});
        return mask;
    }
    // Pixel-center test against the rotated rectangle.
    const double cx = pose.object_x + spec.object.width / 2.0;
    const double cy = pose.object_y + spec.object.height / 2.0;
    const double a = pose.object_angle_deg * kPi / 180.0;
    const double ca = std::cos(a), sa = std::sin(a);
    const double hw = spec.object.width / 2.0, hh = spec.object.height / 2.0;
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const double u = x + 0.5 - cx, v = y + 0.5 - cy;
            const double ru = u * ca + v * sa;
            const double rv = -u * sa + v * ca;
            if (std::abs(ru) <= hw && std::abs(rv) <= hh) mask.set(x, y);
        }
    }
    return mask;
}

// Per-clip appearance parameters, drawn once from the seed.
struct SceneLook {
    float bg_base[3];
    float bg_amp;
    int bg_kx, bg_ky;
    float bg_phase;
    float bg_shade;
    float object_color[3];
    float hand_color[3];
    float object_depth, hand_depth;
};

SceneLook make_look(std::uint64_t seed) {
    Rng rng(hash_mix(seed, 0x5ce9e1));
    SceneLook look;
    for (int c = 0; c < 3; ++c) look.bg_base[c] = static_cast<float>(rng.uniform(0.45, 0.7));
    look.bg_amp = static_cast<float>(rng.uniform(0.04, 0.08));
    look.bg_kx = rng.uniform_int(1, 2);
    look.bg_ky = rng.uniform_int(1, 2);
    look.bg_phase = static_cast<float>(rng.uniform(0.0, 2.0 * kPi));
    look.bg_shade = static_cast<float>(rng.uniform(0.02, 0.06));
    static const float palette[4][3] = {
        {0.85f, 0.25f, 0.2f}, {0.2f, 0.35f, 0.85f}, {0.9f, 0.75f, 0.2f}, {0.55f, 0.2f, 0.75f}};
    const int p = rng.uniform_int(0, 3);
    for (int c = 0; c < 3; ++c)
        look.object_color[c] =
            std::clamp(palette[p][c] + static_cast<float>(rng.uniform(-0.05, 0.05)), 0.f, 1.f);
    const float skin[3] = {0.84f, 0.64f, 0.5f};
    for (int c = 0; c < 3; ++c)
        look.hand_color[c] =
            std::clamp(skin[c] + static_cast<float>(rng.uniform(-0.04, 0.04)), 0.f, 1.f);
    look.object_depth = static_cast<float>(rng.uniform(0.28, 0.36));
    look.hand_depth = static_cast<float>(rng.uniform(0.1, 0.16));
    return look;
}

float gradient_t(const SceneSpec& spec, int x, int y) {
    const float tx = spec.width > 1 ? static_cast<float>(x) / (spec.width - 1) : 0.f;
    const float ty = spec.height > 1 ? static_cast<float>(y) / (spec.height - 1) : 0.f;
    switch (spec.depth_dir & 3) {
        case 0: return tx;
        case 1: return ty;
        case 2: return 1.f - tx;
        default: return 1.f - ty;
    }
}

int hand_x_at_contact(const SceneSpec& spec) { return spec.object.x - spec.hand.width; }
int hand_y_at_contact(const SceneSpec& spec) {
    return spec.object.y + spec.object.height / 2 - spec.hand.height / 2;
}

}  // namespace

FramePose scene_pose(const SceneSpec& spec, int frame) {
    FramePose pose;
    pose.object_x = spec.object.x;
    pose.object_y = spec.object.y;
    const int cx = hand_x_at_contact(spec);
    const int cy = hand_y_at_contact(spec);

    if (frame < spec.contact_frame) {
        if (frame < spec.hold_frames || spec.contact_frame == spec.hold_frames) {
            pose.hand_x = spec.hand.x;
            pose.hand_y = spec.hand.y;
        } else {
            const int stage_x = spec.object.x - kStageGap - spec.hand.width;
            const double u = static_cast<double>(frame - spec.hold_frames + 1) /
                             (spec.contact_frame - spec.hold_frames);
            pose.hand_x = static_cast<int>(std::lround(spec.hand.x + u * (stage_x - spec.hand.x)));
            pose.hand_y = static_cast<int>(std::lround(spec.hand.y + u * (cy - spec.hand.y)));
        }
        return pose;
    }

    const int k = frame - spec.contact_frame;
    pose.hand_x = cx;
    pose.hand_y = cy;
    switch (spec.task_id) {
        case 0: {
            const int dx = -offset_px(spec.speed, k);
            pose.hand_x += dx;
            pose.object_x += dx;
            break;
        }
        case 1: {
            const int dy = -offset_px(spec.speed, k);
            pose.hand_y += dy;
            pose.object_y += dy;
            break;
        }
        case 2:
            pose.object_angle_deg = spec.speed * k;
            break;
        case 3: {
            const int dx = offset_px(spec.speed, k);
            pose.hand_x += dx;
            pose.object_x += dx;
            break;
        }
        default: break;
    }
    return pose;
}

const std::vector<std::string>& task_vocabulary() {
    static const std::vector<std::string> vocab = {
        "move the object to the left",
        "lift the object",
        "rotate the object",
        "move the object to the right",
    };
    return vocab;
}

int task_id_for(const std::string& description) {
    const auto& vocab = task_vocabulary();
    for (std::size_t i = 0; i < vocab.size(); ++i)
        if (vocab[i] == description) return static_cast<int>(i);
    throw BadManifest("task description not in the closed vocabulary: '" + description + "'");
}

void SceneSpec::validate() const {
    if (frame_count < 1) throw InvalidSpec("frame_count must be >= 1");
    if (width < 16 || height < 16) throw InvalidSpec("resolution must be at least 16x16");
    if (fps <= 0) throw InvalidSpec("fps must be > 0");
    if (task_id < 0 || task_id >= static_cast<int>(task_vocabulary().size()))
        throw InvalidSpec("task_id outside the registered program set");
    if (speed < 0) throw InvalidSpec("speed must be >= 0");
    if (hold_frames < 0 || contact_frame < hold_frames)
        throw InvalidSpec("need 0 <= hold_frames <= contact_frame");
    if (hand.width < 2 || hand.height < 2 || object.width < 2 || object.height < 2)
        throw InvalidSpec("blobs must be at least 2x2");

    const double objr =
        std::sqrt(object.width * object.width + object.height * object.height) / 2.0 + 0.5;
    for (int f = 0; f < frame_count; ++f) {
        const FramePose pose = scene_pose(*this, f);
        if (pose.hand_x < 0 || pose.hand_y < 0 || pose.hand_x + hand.width > width ||
            pose.hand_y + hand.height > height)
            throw InvalidSpec("hand leaves the frame at frame " + std::to_string(f));
        if (pose.object_angle_deg == 0.0) {
            if (pose.object_x < 0 || pose.object_y < 0 || pose.object_x + object.width > width ||
                pose.object_y + object.height > height)
                throw InvalidSpec("object leaves the frame at frame " + std::to_string(f));
        } else {
            const double cx = pose.object_x + object.width / 2.0;
            const double cy = pose.object_y + object.height / 2.0;
            if (cx - objr < 0 || cy - objr < 0 || cx + objr > width || cy + objr > height)
                throw InvalidSpec("rotating object may leave the frame at frame " +
                                  std::to_string(f));
        }
        if (f < contact_frame) {
            const int gap = pose.object_x - (pose.hand_x + hand.width);
            if (gap < kMinPreContactGap)
                throw InvalidSpec("pre-contact gap " + std::to_string(gap) + " too small at frame " +
                                  std::to_string(f));
        }
    }
}

Clip generate_scene(const SceneSpec& spec) {
    spec.validate();
    const SceneLook look = make_look(spec.seed);

    Clip clip;
    clip.manifest.clip_id = "scene_" + std::to_string(spec.seed);
    clip.manifest.frame_count = spec.frame_count;
    clip.manifest.width = spec.width;
    clip.manifest.height = spec.height;
    clip.manifest.fps = spec.fps;
    clip.manifest.task_description = task_vocabulary()[spec.task_id];

    clip.rgb.reserve(spec.frame_count);
    clip.hand_masks.reserve(spec.frame_count);
    clip.object_masks.reserve(spec.frame_count);
    clip.depth.reserve(spec.frame_count);

    for (int f = 0; f < spec.frame_count; ++f) {
        const FramePose pose = scene_pose(spec, f);
        BinaryMask hand = rasterize_hand(spec, pose);
        BinaryMask object = rasterize_object(spec, pose);

        DepthFrame depth(spec.width, spec.height);
        RgbImage rgb(spec.width, spec.height);
        for (int y = 0; y < spec.height; ++y) {
            for (int x = 0; x < spec.width; ++x) {
                const float t = gradient_t(spec, x, y);
                float d = 0.55f + 0.4f * t;
                float r, g, b;
                const float wave =
                    look.bg_amp *
                    std::sin(2.f * static_cast<float>(kPi) *
                                 (look.bg_kx * static_cast<float>(x) / spec.width +
                                  look.bg_ky * static_cast<float>(y) / spec.height) +
                             look.bg_phase);
                r = look.bg_base[0] + wave + look.bg_shade * t;
                g = look.bg_base[1] + wave + look.bg_shade * t;
                b = look.bg_base[2] + wave + look.bg_shade * t;
                if (object.at(x, y)) {
                    d = look.object_depth;
                    r = look.object_color[0];
                    g = look.object_color[1];
                    b = look.object_color[2];
                }
                if (hand.at(x, y)) {  // hand is nearest, drawn on top
                    d = look.hand_depth;
                    r = look.hand_color[0];
                    g = look.hand_color[1];
                    b = look.hand_color[2];
                }
                depth.at(x, y) = d;
                rgb.set(x, y, std::clamp(r, 0.f, 1.f), std::clamp(g, 0.f, 1.f),
                        std::clamp(b, 0.f, 1.f));
            }
        }

        clip.hand_masks.push_back(std::move(hand));
        clip.object_masks.push_back(std::move(object));
        clip.depth.push_back(std::move(depth));
        clip.rgb.push_back(std::move(rgb));
    }
    return clip;
}

SceneSpec random_scene_spec(std::uint64_t seed, int task_id, int frame_count, int width,
                            int height, double fps, int hold_frames) {
    Rng rng(hash_mix(seed, 0x5eed5));
    for (int attempt = 0; attempt < 64; ++attempt) {
        SceneSpec spec;
        spec.seed = seed;
        spec.frame_count = frame_count;
        spec.width = width;
        spec.height = height;
        spec.fps = fps;
        spec.task_id = task_id;
        spec.hold_frames = std::min(hold_frames, frame_count);
        spec.contact_frame = std::min(std::max(hold_frames, frame_count / 2), frame_count);
        spec.speed = task_id == 2 ? 4.0 : 2.0;
        spec.depth_dir = rng.uniform_int(0, 3);

        spec.object.width = rng.uniform_int(10, 13);
        spec.object.height = rng.uniform_int(8, 11);
        spec.hand.width = rng.uniform_int(10, 12);
        spec.hand.height = rng.uniform_int(10, 13);

        const int manip = std::max(0, frame_count - spec.contact_frame - 1);
        const int travel = task_id == 0 || task_id == 1 || task_id == 3
                               ? offset_px(spec.speed, manip)
                               : 0;

        // Horizontal placement: object to the right with staging clearance.
        const int ox_min = 1 + spec.hand.width + kStageGap +
                           (task_id == 0 ? travel : 0);
        const int ox_max = width - 1 - spec.object.width - (task_id == 3 ? travel : 6);
        if (ox_max < ox_min) continue;
        spec.object.x = rng.uniform_int(ox_min, ox_max);

        const int oy_min = 2 + (task_id == 2 ? 6 : 0) + (task_id == 1 ? travel + 4 : 0);
        const int oy_max = height - 2 - spec.object.height - (task_id == 2 ? 6 : 0);
        if (oy_max < oy_min) continue;
        spec.object.y = rng.uniform_int(oy_min, oy_max);

        spec.hand.x = rng.uniform_int(1, std::max(1, spec.object.x - kStageGap - spec.hand.width));
        const int hyc = spec.object.y + spec.object.height / 2 - spec.hand.height / 2;
        spec.hand.y = std::clamp(hyc + rng.uniform_int(-4, 4), 1, height - 1 - spec.hand.height);

        try {
            spec.validate();
            return spec;
        } catch (const InvalidSpec&) {
            continue;
        }
    }
    throw InvalidSpec("could not place a valid scene for seed " + std::to_string(seed));
}

BinaryMask oracle_dilate(const BinaryMask& image, double radius) {
    if (radius < 0.0) throw InvalidRadius("dilation radius must be >= 0");
    BinaryMask out(image.width, image.height);
    const double r2 = radius * radius;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            bool hit = false;
            for (int qy = 0; qy < image.height && !hit; ++qy) {
                for (int qx = 0; qx < image.width; ++qx) {
                    if (!image.at(qx, qy)) continue;
                    const double dx = x - qx, dy = y - qy;
                    if (dx * dx + dy * dy <= r2) {
                        hit = true;
                        break;
                    }
                }
            }
            if (hit) out.set(x, y);
        }
    }
    return out;
}

ContactRegion oracle_contact(const BinaryMask& hand, const BinaryMask& object, int r_h, int r_o) {
    if (!hand.same_shape(object)) throw ShapeMismatch("oracle_contact");
    // Independent boundary extraction: set pixels with a background 4-neighbor
    // or on the border.
    const auto boundary = [](const BinaryMask& m) {
        BinaryMask edge(m.width, m.height);
        for (int y = 0; y < m.height; ++y)
            for (int x = 0; x < m.width; ++x) {
                if (!m.at(x, y)) continue;
                bool exposed = false;
                const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
                for (const auto& d : nb) {
                    const int nx = x + d[0], ny = y + d[1];
                    if (nx < 0 || ny < 0 || nx >= m.width || ny >= m.height || !m.at(nx, ny)) {
                        exposed = true;
                        break;
                    }
                }
                if (exposed) edge.set(x, y);
            }
        return edge;
    };
    const BinaryMask hd = oracle_dilate(boundary(hand), r_h);
    const BinaryMask od = oracle_dilate(boundary(object), r_o);
    ContactRegion out(hand.width, hand.height);
    for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] = hd.bits[i] & od.bits[i];
    return out;
}

BinaryMask random_mask(Rng& rng, int width, int height) {
    BinaryMask mask(width, height);
    const int rects = rng.uniform_int(0, 3);
    for (int i = 0; i < rects; ++i) {
        const int w = rng.uniform_int(1, std::max(1, width / 3));
        const int h = rng.uniform_int(1, std::max(1, height / 3));
        const int x = rng.uniform_int(0, std::max(0, width - w));
        const int y = rng.uniform_int(0, std::max(0, height - h));
        fill_rect(mask, {x, y, w, h});
    }
    const int disks = rng.uniform_int(0, 2);
    for (int i = 0; i < disks; ++i) {
        const int r = rng.uniform_int(1, std::max(1, std::min(width, height) / 6));
        const int cx = rng.uniform_int(0, width - 1);
        const int cy = rng.uniform_int(0, height - 1);
        for (int y = std::max(0, cy - r); y <= std::min(height - 1, cy + r); ++y)
            for (int x = std::max(0, cx - r); x <= std::min(width - 1, cx + r); ++x)
                if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) mask.set(x, y);
    }
    const int dots = rng.uniform_int(0, 12);
    for (int i = 0; i < dots; ++i)
        mask.set(rng.uniform_int(0, width - 1), rng.uniform_int(0, height - 1));
    return mask;
}

}  // namespace scar
