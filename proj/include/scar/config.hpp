#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace scar {

/// Every tunable of the pipeline, with defaults. Keys use dotted namespaces
/// (repr.r_h, loss.lambda_align, ...). Precedence when loading:
/// CLI overrides > environment (SCAR_CONFIG_<KEY>) > config file > defaults.
/// Unknown keys are fatal.
struct RunConfig {
    std::uint64_t seed = 7;

    // repr
    int repr_r_h = 3;
    int repr_r_min = 2;
    int repr_r_max = 12;
    double repr_beta = 0.02;
    double repr_alpha = 0.8;
    std::array<double, 3> repr_hand_color{0, 1, 0};
    std::array<double, 3> repr_object_color{0, 0, 1};
    std::array<double, 3> repr_contact_color{1, 0, 0};

    // synth
    int synth_clips = 8;
    int synth_frames = 16;
    int synth_width = 64;
    int synth_height = 64;
    double synth_fps = 8.0;
    int synth_hold_frames = 4;

    // codec
    int codec_patch_t = 4;
    int codec_patch_h = 8;
    int codec_patch_w = 8;
    int codec_channels = 128;
    std::string codec_mode = "pca";  // pca | orthonormal
    double codec_scale_floor = 1e-3;

    // model
    int model_dim = 128;
    int model_layers = 8;
    int model_heads = 4;
    int model_k_star = 4;
    int model_mlp_ratio = 4;
    int model_lora_rank = 8;
    double model_lora_gamma = 1.0;
    bool model_freeze_base_attention = false;
    std::string model_target = "epsilon";  // epsilon | velocity

    // loss
    double loss_lambda_hoi = 1.0;
    double loss_lambda_align = 0.1;

    // schedule
    std::string sched_family = "cosine";
    int sched_timesteps = 1000;

    // train
    int train_steps = 1500;
    int train_batch = 2;
    double train_lr = 0.002;
    int train_checkpoint_every = 500;
    bool train_detach_alignment = false;

    // sample
    int sample_steps = 50;

    // eval
    double eval_color_tolerance = 0.25;

    // paths (usually given on the command line instead)
    std::string data_dir;
    std::string out_dir;

    static const std::vector<std::string>& keys();
    std::string get(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    void apply_file(const std::filesystem::path& path);
    void apply_env();
    std::string to_text() const;
    void validate() const;  // throws BadConfig

    /// defaults -> file (if non-empty) -> env -> `overrides` ("key=value").
    static RunConfig load(const std::filesystem::path& file,
                          const std::vector<std::string>& overrides = {}, bool use_env = true);
};

}  // namespace scar
