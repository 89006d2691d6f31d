#include "scar/codec.hpp"

#include <Eigen/Dense>

#include "scar/errors.hpp"
#include "scar/rng.hpp"

namespace scar {

namespace {

// Gathers the patch at grid cell (ti, yi, xi) into a flat vector. Component
// order: (dt, dy, dx, channel), matching decode below.
void gather_patch(const std::vector<RgbImage>& frames, const PatchShape& p, int ti, int yi,
                  int xi, Eigen::Ref<Eigen::VectorXd> out) {
    int k = 0;
    for (int dt = 0; dt < p.t; ++dt) {
        const RgbImage& f = frames[ti * p.t + dt];
        for (int dy = 0; dy < p.h; ++dy)
            for (int dx = 0; dx < p.w; ++dx)
                for (int c = 0; c < 3; ++c)
                    out[k++] = f.at(xi * p.w + dx, yi * p.h + dy, c);
    }
}

void scatter_patch(std::vector<RgbImage>& frames, const PatchShape& p, int ti, int yi, int xi,
                   const Eigen::Ref<const Eigen::VectorXd>& in) {
    int k = 0;
    for (int dt = 0; dt < p.t; ++dt) {
        RgbImage& f = frames[ti * p.t + dt];
        for (int dy = 0; dy < p.h; ++dy)
            for (int dx = 0; dx < p.w; ++dx)
                for (int c = 0; c < 3; ++c)
                    f.at(xi * p.w + dx, yi * p.h + dy, c) = static_cast<float>(in[k++]);
    }
}

Eigen::MatrixXd collect_patches(const std::vector<RgbImage>& frames, const PatchShape& p,
                                const TokenGrid& g) {
    Eigen::MatrixXd patches(g.count(), p.volume());
    Eigen::VectorXd buf(p.volume());
    int row = 0;
    for (int ti = 0; ti < g.t; ++ti)
        for (int yi = 0; yi < g.h; ++yi)
            for (int xi = 0; xi < g.w; ++xi) {
                gather_patch(frames, p, ti, yi, xi, buf);
                patches.row(row++) = buf;
            }
    return patches;
}

}  // namespace

LatentCodec::LatentCodec(PatchShape patch, Eigen::VectorXd mean, Eigen::MatrixXd basis,
                         Eigen::VectorXd scale, std::string mode)
    : patch_(patch),
      mean_(std::move(mean)),
      basis_(std::move(basis)),
      scale_(std::move(scale)),
      mode_(std::move(mode)) {
    if (mean_.size() != patch_.volume() || basis_.rows() != patch_.volume() ||
        scale_.size() != basis_.cols())
        throw ShapeMismatch("LatentCodec: inconsistent projection shapes");
}

LatentCodec LatentCodec::orthonormal(PatchShape patch, std::uint64_t seed) {
    const int n = patch.volume();
    Rng rng(hash_mix(seed, 0xc0dec));
    Eigen::MatrixXd gauss(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gauss(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    return LatentCodec(patch, Eigen::VectorXd::Zero(n), std::move(q), Eigen::VectorXd::Ones(n),
                       "orthonormal");
}

LatentCodec LatentCodec::fit_pca(PatchShape patch, int channels,
                                 const std::vector<const std::vector<RgbImage>*>& videos,
                                 double scale_floor) {
    const int n = patch.volume();
    if (channels < 1 || channels > n)
        throw BadConfig("codec.channels must lie in [1, patch volume = " + std::to_string(n) +
                        "]");
    if (videos.empty()) throw EmptyClip("fit_pca: no videos");

    LatentCodec probe;  // only for grid_for
    probe.patch_ = patch;

    std::size_t total = 0;
    std::vector<TokenGrid> grids;
    for (const auto* v : videos) {
        const TokenGrid g = probe.grid_for(static_cast<int>(v->size()), (*v)[0].height,
                                           (*v)[0].width);
        grids.push_back(g);
        total += g.count();
    }

    Eigen::MatrixXd all(total, n);
    std::size_t row = 0;
    for (std::size_t i = 0; i < videos.size(); ++i) {
        all.middleRows(static_cast<Eigen::Index>(row), grids[i].count()) =
            collect_patches(*videos[i], patch, grids[i]);
        row += grids[i].count();
    }

    const Eigen::VectorXd mean = all.colwise().mean();
    all.rowwise() -= mean.transpose();
    const Eigen::MatrixXd cov = all.transpose() * all / static_cast<double>(all.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw RuntimeFailure("fit_pca: eigendecomposition failed");

    // Eigen returns ascending eigenvalues; take the top `channels` columns.
    Eigen::MatrixXd basis(n, channels);
    Eigen::VectorXd scale(channels);
    for (int c = 0; c < channels; ++c) {
        const int src = n - 1 - c;
        basis.col(c) = eig.eigenvectors().col(src);
        scale[c] = std::max(std::sqrt(std::max(eig.eigenvalues()[src], 0.0)), scale_floor);
    }
    return LatentCodec(patch, mean, std::move(basis), std::move(scale), "pca");
}

TokenGrid LatentCodec::grid_for(int frames, int height, int width) const {
    if (frames % patch_.t != 0 || height % patch_.h != 0 || width % patch_.w != 0)
        throw IndivisibleShape(std::to_string(frames) + "x" + std::to_string(height) + "x" +
                               std::to_string(width) + " not divisible by patch " +
                               std::to_string(patch_.t) + "x" + std::to_string(patch_.h) + "x" +
                               std::to_string(patch_.w));
    return TokenGrid{frames / patch_.t, height / patch_.h, width / patch_.w};
}

Eigen::MatrixXd LatentCodec::encode_video(const std::vector<RgbImage>& frames) const {
    if (frames.empty()) throw EmptyClip("encode_video: no frames");
    const TokenGrid g = grid_for(static_cast<int>(frames.size()), frames[0].height,
                                 frames[0].width);
    Eigen::MatrixXd patches = collect_patches(frames, patch_, g);
    patches.rowwise() -= mean_.transpose();
    Eigen::MatrixXd tokens = patches * basis_;
    tokens.array().rowwise() /= scale_.transpose().array();
    return tokens;
}

std::vector<RgbImage> LatentCodec::decode_video(const Eigen::MatrixXd& tokens, int frames,
                                                int height, int width) const {
    const TokenGrid g = grid_for(frames, height, width);
    if (tokens.rows() != g.count() || tokens.cols() != channels())
        throw ShapeMismatch("decode_video: token matrix is " + std::to_string(tokens.rows()) +
                            "x" + std::to_string(tokens.cols()));
    Eigen::MatrixXd scaled = tokens;
    scaled.array().rowwise() *= scale_.transpose().array();
    Eigen::MatrixXd patches = scaled * basis_.transpose();
    patches.rowwise() += mean_.transpose();

    std::vector<RgbImage> out(frames, RgbImage(width, height));
    int row = 0;
    for (int ti = 0; ti < g.t; ++ti)
        for (int yi = 0; yi < g.h; ++yi)
            for (int xi = 0; xi < g.w; ++xi) scatter_patch(out, patch_, ti, yi, xi, patches.row(row++));
    return out;
}

double LatentCodec::roundtrip_mse(const std::vector<RgbImage>& frames) const {
    const auto decoded = decode_video(encode_video(frames), static_cast<int>(frames.size()),
                                      frames[0].height, frames[0].width);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        for (std::size_t k = 0; k < frames[i].rgb.size(); ++k) {
            const double d = static_cast<double>(frames[i].rgb[k]) - decoded[i].rgb[k];
            sum += d * d;
        }
        count += frames[i].rgb.size();
    }
    return sum / static_cast<double>(count);
}

TokenSequence encode_pair(const std::vector<RgbImage>& rgb, const std::vector<RgbImage>& hoi,
                          const LatentCodec& codec) {
    if (rgb.empty() || hoi.empty()) throw EmptyClip("encode_pair: empty stream");
    if (rgb.size() != hoi.size() || !rgb[0].same_shape(hoi[0]))
        throw ShapeMismatch("encode_pair: rgb and hoi streams differ in shape");
    TokenSequence seq;
    seq.grid = codec.grid_for(static_cast<int>(rgb.size()), rgb[0].height, rgb[0].width);
    const Eigen::MatrixXd x_rgb = codec.encode_video(rgb);
    const Eigen::MatrixXd x_hoi = codec.encode_video(hoi);
    seq.tokens.resize(2 * seq.grid.count(), codec.channels());
    seq.tokens.topRows(seq.grid.count()) = x_rgb;
    seq.tokens.bottomRows(seq.grid.count()) = x_hoi;
    return seq;
}

TokenSequence forward_noising(const TokenSequence& z, int t, const Eigen::MatrixXd& eps,
                              const NoiseSchedule& sched) {
    TokenSequence out;
    out.grid = z.grid;
    out.tokens = forward_noising_at(z.tokens, sched.at(t), eps);
    return out;
}

}  // namespace scar
