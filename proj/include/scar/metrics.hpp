#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scar/image.hpp"
#include "scar/ingest.hpp"
#include "scar/repr.hpp"

namespace scar {

struct ClipMetrics {
    std::string clip_id;
    double rgb_mse = 0;
    double rgb_psnr = 0;  // +inf for identical pairs
    double hoi_mse = 0;
    double contact_iou = 0;
};

struct MetricsReport {
    std::vector<ClipMetrics> clips;
    ClipMetrics aggregate;  // clip_id = "aggregate"
};

/// 0 = background, 1 = hand, 2 = object, 3 = contact: nearest configured
/// overlay color within Euclidean RGB distance `tol`, else background.
int classify_overlay(float r, float g, float b, const OverlayColors& colors, double tol);

/// Pixels classified as contact in a (possibly generated) composite frame.
BinaryMask contact_pixels(const RgbImage& frame, const OverlayColors& colors, double tol);

/// |A and B| / |A or B|; two empty masks count as a perfect match.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

double video_mse(const std::vector<RgbImage>& a, const std::vector<RgbImage>& b);
double psnr_from_mse(double mse);

ClipMetrics evaluate_pair(const PairedClip& generated, const PairedClip& reference,
                          const OverlayColors& colors, double tol);

/// Matches generated clip ids against the reference directory; every
/// generated clip must have a reference or MissingReference is thrown.
MetricsReport evaluate_dirs(const std::filesystem::path& generated_dir,
                            const std::filesystem::path& reference_dir,
                            const OverlayColors& colors, double tol);

std::string report_text(const MetricsReport& report);

}  // namespace scar
