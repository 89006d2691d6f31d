#include "scar/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace scar {

int classify_overlay(float r, float g, float b, const OverlayColors& colors, double tol) {
    const auto dist2 = [&](const std::array<float, 3>& c) {
        const double dr = r - c[0], dg = g - c[1], db = b - c[2];
        return dr * dr + dg * dg + db * db;
    };
    const double d_hand = dist2(colors.hand), d_obj = dist2(colors.object),
                 d_contact = dist2(colors.contact);
    double best = d_hand;
    int cls = 1;
    if (d_obj < best) {
        best = d_obj;
        cls = 2;
    }
    if (d_contact < best) {
        best = d_contact;
        cls = 3;
    }
    return best <= tol * tol ? cls : 0;
}

BinaryMask contact_pixels(const RgbImage& frame, const OverlayColors& colors, double tol) {
    BinaryMask mask(frame.width, frame.height);
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x)
            if (classify_overlay(frame.at(x, y, 0), frame.at(x, y, 1), frame.at(x, y, 2), colors,
                                 tol) == 3)
                mask.set(x, y);
    return mask;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("mask_iou");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        inter += a.bits[i] & b.bits[i];
        uni += a.bits[i] | b.bits[i];
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double video_mse(const std::vector<RgbImage>& a, const std::vector<RgbImage>& b) {
    if (a.size() != b.size() || a.empty()) throw ShapeMismatch("video_mse: frame counts");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].same_shape(b[i])) throw ShapeMismatch("video_mse: frame " + std::to_string(i));
        for (std::size_t k = 0; k < a[i].rgb.size(); ++k) {
            const double d = static_cast<double>(a[i].rgb[k]) - b[i].rgb[k];
            sum += d * d;
        }
        count += a[i].rgb.size();
    }
    return sum / static_cast<double>(count);
}

double psnr_from_mse(double mse) {
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

ClipMetrics evaluate_pair(const PairedClip& generated, const PairedClip& reference,
                          const OverlayColors& colors, double tol) {
    ClipMetrics m;
    m.clip_id = generated.manifest.clip_id;
    m.rgb_mse = video_mse(generated.rgb, reference.rgb);
    m.rgb_psnr = psnr_from_mse(m.rgb_mse);
    m.hoi_mse = video_mse(generated.scar, reference.scar);

    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < generated.scar.size(); ++i) {
        const BinaryMask g = contact_pixels(generated.scar[i], colors, tol);
        const BinaryMask r = contact_pixels(reference.scar[i], colors, tol);
        for (std::size_t k = 0; k < g.bits.size(); ++k) {
            inter += g.bits[k] & r.bits[k];
            uni += g.bits[k] | r.bits[k];
        }
    }
    m.contact_iou = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    return m;
}

MetricsReport evaluate_dirs(const std::filesystem::path& generated_dir,
                            const std::filesystem::path& reference_dir,
                            const OverlayColors& colors, double tol) {
    const auto gen_manifests = find_clip_manifests(generated_dir);
    if (gen_manifests.empty())
        throw BadConfig("no clips found under " + generated_dir.string());

    std::map<std::string, std::filesystem::path> reference_index;
    for (const auto& m : find_clip_manifests(reference_dir))
        reference_index[read_manifest(m).clip_id] = m;

    MetricsReport report;
    report.aggregate.clip_id = "aggregate";
    for (const auto& gm : gen_manifests) {
        const PairedClip generated = load_pair(gm);
        const auto it = reference_index.find(generated.manifest.clip_id);
        if (it == reference_index.end())
            throw MissingReference("no reference clip for id '" + generated.manifest.clip_id +
                                   "' under " + reference_dir.string());
        const PairedClip reference = load_pair(it->second);
        report.clips.push_back(evaluate_pair(generated, reference, colors, tol));
    }

    const double n = static_cast<double>(report.clips.size());
    for (const ClipMetrics& c : report.clips) {
        report.aggregate.rgb_mse += c.rgb_mse / n;
        report.aggregate.hoi_mse += c.hoi_mse / n;
        report.aggregate.contact_iou += c.contact_iou / n;
    }
    report.aggregate.rgb_psnr = psnr_from_mse(report.aggregate.rgb_mse);
    return report;
}

std::string report_text(const MetricsReport& report) {
    std::ostringstream os;
    os << "clip_id\trgb_mse\trgb_psnr\thoi_mse\tcontact_iou\n";
    const auto row = [&os](const ClipMetrics& c) {
        os << c.clip_id << "\t" << c.rgb_mse << "\t" << c.rgb_psnr << "\t" << c.hoi_mse << "\t"
           << c.contact_iou << "\n";
    };
    for (const ClipMetrics& c : report.clips) row(c);
    row(report.aggregate);
    return os.str();
}

}  // namespace scar
