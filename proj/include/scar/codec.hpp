#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "scar/image.hpp"
#include "scar/schedule.hpp"

namespace scar {

struct PatchShape {
    int t = 4;
    int h = 8;
    int w = 8;
    int volume() const { return t * h * w * 3; }
};

struct TokenGrid {
    int t = 0, h = 0, w = 0;
    int count() const { return t * h * w; }
    bool operator==(const TokenGrid&) const = default;
};

/// Unified latent: S visual tokens followed by S interaction tokens, each a
/// row of `tokens`. The grid records the (t,h,w) patch layout of one modality.
struct TokenSequence {
    TokenGrid grid;
    Eigen::MatrixXd tokens;  // (2*S) x channels
    int per_modality() const { return grid.count(); }
};

/// Linear stand-in for a video VAE: non-overlapping 3D patchify followed by a
/// frozen linear projection with per-channel normalization. Two modes:
///  - "pca": basis fitted to dataset patches (fit once, then frozen),
///  - "orthonormal": random square orthonormal basis; encode/decode is then
///    bijective up to float arithmetic, which makes round-trips testable.
class LatentCodec {
public:
    LatentCodec() = default;
    LatentCodec(PatchShape patch, Eigen::VectorXd mean, Eigen::MatrixXd basis,
                Eigen::VectorXd scale, std::string mode);

    static LatentCodec orthonormal(PatchShape patch, std::uint64_t seed);
    static LatentCodec fit_pca(PatchShape patch, int channels,
                               const std::vector<const std::vector<RgbImage>*>& videos,
                               double scale_floor);

    TokenGrid grid_for(int frames, int height, int width) const;  // IndivisibleShape
    Eigen::MatrixXd encode_video(const std::vector<RgbImage>& frames) const;  // S x channels
    std::vector<RgbImage> decode_video(const Eigen::MatrixXd& tokens, int frames, int height,
                                       int width) const;  // values unclamped

    /// Mean squared pixel error of decode(encode(v)) over a video.
    double roundtrip_mse(const std::vector<RgbImage>& frames) const;

    int channels() const { return static_cast<int>(basis_.cols()); }
    const PatchShape& patch() const { return patch_; }
    const std::string& mode() const { return mode_; }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& basis() const { return basis_; }
    const Eigen::VectorXd& scale() const { return scale_; }

private:
    PatchShape patch_;
    Eigen::VectorXd mean_;   // patch volume
    Eigen::MatrixXd basis_;  // patch volume x channels, orthonormal columns
    Eigen::VectorXd scale_;  // channels
    std::string mode_ = "pca";
};

/// Patchifies both streams with the same codec and concatenates
/// [X_RGB ; X_HOI]. Streams must share shape and divide by the patch.
TokenSequence encode_pair(const std::vector<RgbImage>& rgb, const std::vector<RgbImage>& hoi,
                          const LatentCodec& codec);

/// Corruption of the full unified sequence with a single noise draw.
TokenSequence forward_noising(const TokenSequence& z, int t, const Eigen::MatrixXd& eps,
                              const NoiseSchedule& sched);

}  // namespace scar
