#include "scar/sampler.hpp"

#include <cmath>

#include "scar/errors.hpp"

namespace scar {

Eigen::MatrixXd encode_first_frame(const RgbImage& frame, const LatentCodec& codec) {
    const std::vector<RgbImage> chunk(static_cast<std::size_t>(codec.patch().t), frame);
    return codec.encode_video(chunk);
}

SampleResult sample_clip(const RgbImage& first_frame, int task_id, const DenoiserState& state,
                         const LatentCodec& codec, const NoiseSchedule& sched, int steps,
                         std::uint64_t seed) {
    const ModelConfig& cfg = state.cfg;
    if (steps < 1 || steps > sched.timesteps)
        throw InvalidSteps("steps must lie in [1, " + std::to_string(sched.timesteps) + "]");
    const int frames = cfg.grid_t * codec.patch().t;
    const int height = cfg.grid_h * codec.patch().h;
    const int width = cfg.grid_w * codec.patch().w;
    if (first_frame.width != width || first_frame.height != height)
        throw ShapeMismatch("conditioning frame is " + std::to_string(first_frame.width) + "x" +
                            std::to_string(first_frame.height) + ", model expects " +
                            std::to_string(width) + "x" + std::to_string(height));

    Conditioning cond;
    cond.task_id = task_id;
    cond.first_frame_tokens = encode_first_frame(first_frame, codec);

    const int S = cfg.tokens_per_modality();
    Rng rng(hash_mix(seed, 0x5a39));
    Eigen::MatrixXd z(2 * S, cfg.channels);
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = rng.normal();

    // Uniform-stride timestep ladder T = t_0 > t_1 > ... > t_steps = 0.
    std::vector<int> ladder(steps + 1);
    for (int k = 0; k <= steps; ++k)
        ladder[k] = static_cast<int>(std::lround(
            static_cast<double>(sched.timesteps) * (steps - k) / steps));

    for (int k = 0; k < steps; ++k) {
        const int t = ladder[k], t_next = ladder[k + 1];
        const double abar = sched.at(t), abar_next = sched.at(t_next);
        z = apply_first_frame_conditioning(std::move(z), cond, cfg);

        TokenSequence seq;
        seq.grid = TokenGrid{cfg.grid_t, cfg.grid_h, cfg.grid_w};
        seq.tokens = z;
        const ForwardResult out = denoiser_forward(seq, t, cond, state);

        Eigen::MatrixXd x0, eps_hat;
        if (cfg.target == "velocity") {
            x0 = std::sqrt(abar) * z - std::sqrt(1.0 - abar) * out.prediction;
            eps_hat = std::sqrt(1.0 - abar) * z + std::sqrt(abar) * out.prediction;
        } else {
            eps_hat = out.prediction;
            x0 = (z - std::sqrt(1.0 - abar) * eps_hat) / std::sqrt(abar);
        }
        z = std::sqrt(abar_next) * x0 + std::sqrt(1.0 - abar_next) * eps_hat;
    }
    z = apply_first_frame_conditioning(std::move(z), cond, cfg);

    SampleResult result;
    result.rgb = codec.decode_video(z.topRows(S), frames, height, width);
    result.scar = codec.decode_video(z.bottomRows(S), frames, height, width);
    for (auto* stream : {&result.rgb, &result.scar})
        for (RgbImage& img : *stream)
            for (float& v : img.rgb) v = std::clamp(v, 0.f, 1.f);
    return result;
}

}  // namespace scar
