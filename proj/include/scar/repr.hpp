#pragma once

#include <array>
#include <vector>

#include "scar/clip.hpp"
#include "scar/image.hpp"

namespace scar {

/// Dilation radii for contact estimation. The hand radius is fixed; the
/// object radius is derived per frame from its bounding-box diagonal,
/// scaled by `beta` and clamped to [r_min, r_max].
struct RadiusParams {
    int r_h = 3;
    int r_min = 2;
    int r_max = 12;
    double beta = 0.02;

    void validate() const {
        if (r_h <= 0) throw ValidationError("RadiusParams: r_h must be > 0");
        if (r_min <= 0 || r_min > r_max)
            throw ValidationError("RadiusParams: need 0 < r_min <= r_max");
        if (beta <= 0.0) throw ValidationError("RadiusParams: beta must be > 0");
    }
};

struct OverlayColors {
    std::array<float, 3> hand{0.f, 1.f, 0.f};
    std::array<float, 3> object{0.f, 0.f, 1.f};
    std::array<float, 3> contact{1.f, 0.f, 0.f};
};

/// 1-pixel inner boundary: mask minus its 4-connected erosion. Pixels outside
/// the image count as background, so set pixels on the border are boundary.
Contour extract_contour(const BinaryMask& mask);

/// Euclidean dilation: output pixel set iff some input pixel lies within
/// `radius` (squared-distance test, so integer radii are exact).
BinaryMask dilate_binary(const BinaryMask& image, double radius);

/// Diagonal of the tight bounding box, using inclusive pixel extents
/// (max - min + 1), so a single pixel has diagonal sqrt(2).
double bbox_diagonal(const BinaryMask& mask);

/// r_o = round_half_up(clamp(beta * diag, r_min, r_max)).
int adaptive_object_radius(double diag, const RadiusParams& params);

/// Contact region: intersection of the dilated hand contour (radius r_h) and
/// the dilated object contour (adaptive radius). Either mask empty yields an
/// empty region.
ContactRegion estimate_contact(const BinaryMask& hand, const BinaryMask& object,
                               const RadiusParams& params);

/// Clip-global min-max normalization to [0,1]. A constant-depth clip maps to
/// all 0.5 rather than dividing by zero.
std::vector<DepthFrame> normalize_depth(const std::vector<DepthFrame>& frames);

/// Alpha-blend contours and contact over grayscale depth. Overlay precedence
/// where regions overlap: contact > hand contour > object contour; the blend
/// is always against the depth base, never against another overlay.
ScarFrame compose_scar_frame(const Contour& hand_contour, const Contour& object_contour,
                             const ContactRegion& contact, const DepthFrame& normalized_depth,
                             float alpha, const OverlayColors& colors = {});

/// Full curation pipeline over a clip. Depth normalization is clip-global;
/// everything else is per-frame. Frames with an empty hand or object mask
/// render whatever contours exist (possibly none) and no contact.
ScarVideo curate_clip(const Clip& clip, const RadiusParams& params, float alpha,
                      const OverlayColors& colors = {});

}  // namespace scar
