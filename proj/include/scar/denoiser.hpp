#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scar/autodiff.hpp"
#include "scar/codec.hpp"
#include "scar/config.hpp"
#include "scar/rng.hpp"

namespace scar {

struct ModelConfig {
    int dim = 128;
    int layers = 8;
    int heads = 4;
    int k_star = 4;  // Shared Semantics covers layers 1..k_star
    int mlp_ratio = 4;
    int lora_rank = 8;
    double lora_gamma = 1.0;
    int channels = 128;  // token width from the codec
    int grid_t = 4, grid_h = 8, grid_w = 8;
    int n_tasks = 4;
    std::string target = "epsilon";  // epsilon | velocity
    bool freeze_base_attention = false;

    int tokens_per_modality() const { return grid_t * grid_h * grid_w; }
    int conditioned_rows() const { return grid_h * grid_w; }  // temporal index 0
    void validate() const;

    static ModelConfig from_run_config(const RunConfig& cfg, const TokenGrid& grid,
                                       int codec_channels, int n_tasks);
};

struct Param {
    std::string name;
    ad::Mat value;
    ad::Mat adam_m, adam_v;  // optimizer moments, persisted for exact resume
    bool trainable = true;
};

/// All DiT parameters: per-layer attention/MLP/norm weights, masked LoRA
/// adapters, the shared positional table, the interaction embedding d_HOI,
/// and the conditioning embedders.
class DenoiserState {
public:
    ModelConfig cfg;
    std::vector<Param> params;

    static DenoiserState init(const ModelConfig& cfg, std::uint64_t seed);

    Param& param(const std::string& name);
    const Param& param(const std::string& name) const;
    int param_index(const std::string& name) const;

    /// Overwrites every parameter with scale * N(0,1); test helper for
    /// exercising mechanisms away from the zero-init point.
    void randomize(Rng& rng, double scale);

    std::size_t parameter_count() const;

private:
    std::map<std::string, int> index_;
    friend DenoiserState make_state_shell(const ModelConfig&);
    void reindex();
};

/// Shell with allocated-but-unset parameters (used by checkpoint loading).
DenoiserState make_state_shell(const ModelConfig& cfg);

// ---------------------------------------------------------------------------
// The architectural mechanisms as pure functions (the forward pass composes
// the same math on the tape).

/// Adds the shared positional table to both modality blocks: row m and row
/// S+m receive the identical p^m. `h` has 2S rows, `table` has S.
Eigen::MatrixXd positional_modulate(const Eigen::MatrixXd& h, const Eigen::MatrixXd& table);

/// X* = P W + gamma * diag(M) LoRA(P) with M selecting interaction rows.
/// Visual rows are copied from the base projection, so they match it bitwise.
Eigen::MatrixXd masked_lora_project(const Eigen::MatrixXd& P, const Eigen::MatrixXd& W,
                                    const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                    double gamma, int S);

/// Adds d_HOI to rows m > S only; visual rows are bitwise untouched.
Eigen::MatrixXd inject_interaction_embedding(const Eigen::MatrixXd& h,
                                             const Eigen::RowVectorXd& d_hoi, int S);

/// Sum over paired tokens of (1 - cosine similarity), eps-stabilized.
double alignment_loss(const Eigen::MatrixXd& h_kstar, int S, double eps = 1e-8);

// ---------------------------------------------------------------------------

struct Conditioning {
    int task_id = 0;
    Eigen::MatrixXd first_frame_tokens;  // conditioned_rows() x channels; empty = unconditioned
};

/// Replaces the visual block's temporal-index-0 tokens with the clean
/// conditioning tokens (no-op when the conditioning is empty).
Eigen::MatrixXd apply_first_frame_conditioning(Eigen::MatrixXd z, const Conditioning& cond,
                                               const ModelConfig& cfg);

struct ForwardResult {
    Eigen::MatrixXd prediction;  // 2S x channels
    Eigen::MatrixXd h_kstar;     // 2S x dim, output of layer k*
};

/// Full co-denoising pass: shared layers, interaction-embedding injection,
/// specialized layers; positional modulation and masked LoRA in every layer.
ForwardResult denoiser_forward(const TokenSequence& z_t, int t, const Conditioning& cond,
                               const DenoiserState& state);

/// Tape version used by training. `param_vars` must align with state.params.
struct ForwardVars {
    ad::Var prediction;
    ad::Var h_kstar;
};
ForwardVars build_forward(ad::Tape& tape, const DenoiserState& state,
                          const std::vector<ad::Var>& param_vars, const Eigen::MatrixXd& z_in,
                          int t, const Conditioning& cond);

std::vector<ad::Var> insert_params(ad::Tape& tape, const DenoiserState& state, bool with_grad);

// ---------------------------------------------------------------------------

struct LossWeights {
    double lambda_hoi = 1.0;
    double lambda_align = 0.1;
};

struct LossComponents {
    double rgb = 0, hoi = 0, align = 0, total = 0;
};

/// L = L_RGB + lambda_HOI * L_HOI + lambda_align * L_align, where the two
/// diffusion terms are MSE over the visual and interaction blocks.
LossComponents composite_loss(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target,
                              const Eigen::MatrixXd& h_kstar, int S, const LossWeights& weights);

/// Sinusoidal features of the raw timestep, 1 x dim.
Eigen::MatrixXd timestep_embedding(int t, int dim);

}  // namespace scar
