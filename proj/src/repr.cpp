#include "scar/repr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scar {

namespace {

void require_same_shape(const BinaryMask& a, const BinaryMask& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeMismatch(std::string(what) + " (" + std::to_string(a.width) + "x" +
                            std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                            std::to_string(b.height) + ")");
}

// Offsets of the Euclidean disk of the given radius, origin included.
std::vector<std::pair<int, int>> disk_offsets(double radius) {
    const int r = static_cast<int>(std::floor(radius));
    const double r2 = radius * radius;
    std::vector<std::pair<int, int>> off;
    off.reserve(static_cast<std::size_t>((2 * r + 1) * (2 * r + 1)));
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (dx * dx + dy * dy <= r2) off.emplace_back(dx, dy);
    return off;
}

}  // namespace

Contour extract_contour(const BinaryMask& mask) {
    Contour out = mask;
    std::fill(out.bits.begin(), out.bits.end(), 0);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            const bool border = x == 0 || y == 0 || x == mask.width - 1 || y == mask.height - 1;
            const bool exposed = border || !mask.at(x - 1, y) || !mask.at(x + 1, y) ||
                                 !mask.at(x, y - 1) || !mask.at(x, y + 1);
            if (exposed) out.set(x, y);
        }
    }
    return out;
}

BinaryMask dilate_binary(const BinaryMask& image, double radius) {
    if (radius < 0.0) throw InvalidRadius("dilation radius must be >= 0");
    if (radius == 0.0) return image;
    BinaryMask out = image;
    const auto offsets = disk_offsets(radius);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            if (!image.at(x, y)) continue;
            for (const auto& [dx, dy] : offsets) {
                const int nx = x + dx, ny = y + dy;
                if (nx >= 0 && ny >= 0 && nx < image.width && ny < image.height) out.set(nx, ny);
            }
        }
    }
    return out;
}

double bbox_diagonal(const BinaryMask& mask) {
    int min_x = std::numeric_limits<int>::max(), min_y = min_x;
    int max_x = -1, max_y = -1;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            min_x = std::min(min_x, x);
            min_y = std::min(min_y, y);
            max_x = std::max(max_x, x);
            max_y = std::max(max_y, y);
        }
    }
    if (max_x < 0) throw EmptyMask("bbox_diagonal requires a non-empty mask");
    const double w = max_x - min_x + 1;
    const double h = max_y - min_y + 1;
    return std::sqrt(w * w + h * h);
}

int adaptive_object_radius(double diag, const RadiusParams& params) {
    params.validate();
    const double r = std::min<double>(params.r_max, std::max<double>(params.r_min, params.beta * diag));
    return static_cast<int>(std::floor(r + 0.5));
}

ContactRegion estimate_contact(const BinaryMask& hand, const BinaryMask& object,
                               const RadiusParams& params) {
    require_same_shape(hand, object, "estimate_contact");
    params.validate();
    ContactRegion out(hand.width, hand.height);
    if (hand.none() || object.none()) return out;
    const int r_o = adaptive_object_radius(bbox_diagonal(object), params);
    const BinaryMask hand_d = dilate_binary(extract_contour(hand), params.r_h);
    const BinaryMask object_d = dilate_binary(extract_contour(object), r_o);
    for (std::size_t i = 0; i < out.bits.size(); ++i)
        out.bits[i] = hand_d.bits[i] & object_d.bits[i];
    return out;
}

std::vector<DepthFrame> normalize_depth(const std::vector<DepthFrame>& frames) {
    if (frames.empty()) throw EmptyClip("normalize_depth requires at least one frame");
    for (std::size_t i = 1; i < frames.size(); ++i)
        if (!frames[i].same_shape(frames[0]))
            throw ShapeMismatch("normalize_depth: frame " + std::to_string(i));

    float lo = std::numeric_limits<float>::max(), hi = std::numeric_limits<float>::lowest();
    for (const auto& f : frames)
        for (float v : f.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }

    std::vector<DepthFrame> out = frames;
    if (hi - lo <= 0.f) {
        for (auto& f : out) std::fill(f.values.begin(), f.values.end(), 0.5f);
        return out;
    }
    const float inv = 1.f / (hi - lo);
    for (auto& f : out)
        for (float& v : f.values) v = (v - lo) * inv;
    return out;
}

ScarFrame compose_scar_frame(const Contour& hand_contour, const Contour& object_contour,
                             const ContactRegion& contact, const DepthFrame& normalized_depth,
                             float alpha, const OverlayColors& colors) {
    if (hand_contour.width != normalized_depth.width ||
        hand_contour.height != normalized_depth.height)
        throw ShapeMismatch("compose_scar_frame: hand contour vs depth");
    require_same_shape(hand_contour, object_contour, "compose_scar_frame: contours");
    require_same_shape(hand_contour, contact, "compose_scar_frame: contact");

    ScarFrame out(normalized_depth.width, normalized_depth.height);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const float g = normalized_depth.at(x, y);
            const float* color = nullptr;
            if (contact.at(x, y))
                color = colors.contact.data();
            else if (hand_contour.at(x, y))
                color = colors.hand.data();
            else if (object_contour.at(x, y))
                color = colors.object.data();
            if (color == nullptr) {
                out.set(x, y, g, g, g);
            } else {
                out.set(x, y, alpha * color[0] + (1.f - alpha) * g,
                        alpha * color[1] + (1.f - alpha) * g,
                        alpha * color[2] + (1.f - alpha) * g);
            }
        }
    }
    return out;
}

ScarVideo curate_clip(const Clip& clip, const RadiusParams& params, float alpha,
                      const OverlayColors& colors) {
    const int n = clip.frames();
    if (n == 0) throw EmptyClip("curate_clip: clip has no frames");
    for (int i = 0; i < n; ++i) {
        const auto& m = clip.hand_masks[i];
        if (!m.same_shape(clip.object_masks[i]) || m.width != clip.depth[i].width ||
            m.height != clip.depth[i].height || m.width != clip.rgb[i].width ||
            m.height != clip.rgb[i].height)
            throw ShapeMismatch("curate_clip: frame " + std::to_string(i));
    }

    const std::vector<DepthFrame> depth = normalize_depth(clip.depth);

    ScarVideo video;
    video.clip_id = clip.manifest.clip_id;
    video.fps = clip.manifest.fps;
    video.task_description = clip.manifest.task_description;
    video.frames.resize(n);
    for (int i = 0; i < n; ++i) {
        const BinaryMask& hand = clip.hand_masks[i];
        const BinaryMask& object = clip.object_masks[i];
        const Contour hand_c = hand.none() ? BinaryMask(hand.width, hand.height)
                                           : extract_contour(hand);
        const Contour object_c = object.none() ? BinaryMask(object.width, object.height)
                                               : extract_contour(object);
        const ContactRegion contact = estimate_contact(hand, object, params);
        video.frames[i] = compose_scar_frame(hand_c, object_c, contact, depth[i], alpha, colors);
    }
    return video;
}

}  // namespace scar
