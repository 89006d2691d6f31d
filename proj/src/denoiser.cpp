#include "scar/denoiser.hpp"

#include <cmath>

#include "scar/errors.hpp"

namespace scar {

void ModelConfig::validate() const {
    if (dim < 2 || dim % 2 != 0) throw BadConfig("model dim must be even and >= 2");
    if (layers < 2) throw BadConfig("need at least 2 layers");
    if (k_star < 1 || k_star >= layers) throw BadConfig("need 1 <= k_star < layers");
    if (heads < 1 || dim % heads != 0) throw BadConfig("heads must divide dim");
    if (lora_rank < 1) throw BadConfig("lora_rank must be >= 1");
    if (mlp_ratio < 1) throw BadConfig("mlp_ratio must be >= 1");
    if (channels < 1) throw BadConfig("channels must be >= 1");
    if (grid_t < 1 || grid_h < 1 || grid_w < 1) throw BadConfig("empty token grid");
    if (n_tasks < 1) throw BadConfig("need at least one task");
    if (target != "epsilon" && target != "velocity")
        throw BadConfig("target must be 'epsilon' or 'velocity'");
}

ModelConfig ModelConfig::from_run_config(const RunConfig& cfg, const TokenGrid& grid,
                                         int codec_channels, int n_tasks) {
    ModelConfig m;
    m.dim = cfg.model_dim;
    m.layers = cfg.model_layers;
    m.heads = cfg.model_heads;
    m.k_star = cfg.model_k_star;
    m.mlp_ratio = cfg.model_mlp_ratio;
    m.lora_rank = cfg.model_lora_rank;
    m.lora_gamma = cfg.model_lora_gamma;
    m.channels = codec_channels;
    m.grid_t = grid.t;
    m.grid_h = grid.h;
    m.grid_w = grid.w;
    m.n_tasks = n_tasks;
    m.target = cfg.model_target;
    m.freeze_base_attention = cfg.model_freeze_base_attention;
    m.validate();
    return m;
}

namespace {

std::string layer_key(int i, const char* suffix) {
    return "layer" + std::to_string(i) + "." + suffix;
}

void add_param(DenoiserState& s, const std::string& name, int rows, int cols,
               bool trainable = true) {
    Param p;
    p.name = name;
    p.value = ad::Mat::Zero(rows, cols);
    p.adam_m = ad::Mat::Zero(rows, cols);
    p.adam_v = ad::Mat::Zero(rows, cols);
    p.trainable = trainable;
    s.params.push_back(std::move(p));
}

void fill_normal(ad::Mat& m, Rng& rng, double std_dev) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = std_dev * rng.normal();
}

double xavier_std(int fan_in, int fan_out) { return std::sqrt(2.0 / (fan_in + fan_out)); }

}  // namespace

DenoiserState make_state_shell(const ModelConfig& cfg) {
    cfg.validate();
    DenoiserState s;
    s.cfg = cfg;
    const int d = cfg.dim, c = cfg.channels, r = cfg.lora_rank, mlp = cfg.mlp_ratio * cfg.dim;
    const int S = cfg.tokens_per_modality();
    const bool base_trainable = !cfg.freeze_base_attention;

    add_param(s, "embed.w", c, d);
    add_param(s, "embed.b", 1, d);
    add_param(s, "pos.table", S, d);
    add_param(s, "task.table", cfg.n_tasks, d);
    add_param(s, "d_hoi", 1, d);
    add_param(s, "tmlp.w1", d, d);
    add_param(s, "tmlp.b1", 1, d);
    add_param(s, "tmlp.w2", d, d);
    add_param(s, "tmlp.b2", 1, d);

    for (int i = 0; i < cfg.layers; ++i) {
        add_param(s, layer_key(i, "ln1.g"), 1, d);
        add_param(s, layer_key(i, "ln1.b"), 1, d);
        add_param(s, layer_key(i, "ln2.g"), 1, d);
        add_param(s, layer_key(i, "ln2.b"), 1, d);
        add_param(s, layer_key(i, "mod.w"), d, 6 * d);
        add_param(s, layer_key(i, "mod.b"), 1, 6 * d);
        for (const char* z : {"wq", "wk", "wv"})
            add_param(s, layer_key(i, (std::string("attn.") + z).c_str()), d, d, base_trainable);
        add_param(s, layer_key(i, "attn.wo"), d, d);
        add_param(s, layer_key(i, "attn.bo"), 1, d);
        for (const char* z : {"q", "k", "v"}) {
            add_param(s, layer_key(i, (std::string("lora.a") + z).c_str()), d, r);
            add_param(s, layer_key(i, (std::string("lora.b") + z).c_str()), r, d);
        }
        add_param(s, layer_key(i, "mlp.w1"), d, mlp);
        add_param(s, layer_key(i, "mlp.b1"), 1, mlp);
        add_param(s, layer_key(i, "mlp.w2"), mlp, d);
        add_param(s, layer_key(i, "mlp.b2"), 1, d);
    }

    add_param(s, "head.mod.w", d, 2 * d);
    add_param(s, "head.mod.b", 1, 2 * d);
    add_param(s, "head.w", d, c);
    add_param(s, "head.b", 1, c);

    s.reindex();
    return s;
}

DenoiserState DenoiserState::init(const ModelConfig& cfg, std::uint64_t seed) {
    DenoiserState s = make_state_shell(cfg);
    Rng rng(hash_mix(seed, 0xd17));
    const int d = cfg.dim, c = cfg.channels, mlp = cfg.mlp_ratio * cfg.dim;

    // adaLN-zero style: modulation projections, gates and the output head all
    // start at zero so the network is the identity map at step 0. Layer norms
    // start at gain 1 / bias 0; LoRA B is zero so adapters start inactive.
    s.param("embed.w").value.setZero();
    fill_normal(s.param("embed.w").value, rng, xavier_std(c, d));
    fill_normal(s.param("pos.table").value, rng, 0.02);
    fill_normal(s.param("task.table").value, rng, 0.02);
    fill_normal(s.param("tmlp.w1").value, rng, xavier_std(d, d));
    fill_normal(s.param("tmlp.w2").value, rng, xavier_std(d, d));

    for (int i = 0; i < cfg.layers; ++i) {
        s.param(layer_key(i, "ln1.g")).value.setOnes();
        s.param(layer_key(i, "ln2.g")).value.setOnes();
        for (const char* z : {"wq", "wk", "wv", "wo"})
            fill_normal(s.param(layer_key(i, (std::string("attn.") + z).c_str())).value, rng,
                        xavier_std(d, d));
        for (const char* z : {"q", "k", "v"})
            fill_normal(s.param(layer_key(i, (std::string("lora.a") + z).c_str())).value, rng,
                        0.02);
        fill_normal(s.param(layer_key(i, "mlp.w1")).value, rng, xavier_std(d, mlp));
        fill_normal(s.param(layer_key(i, "mlp.w2")).value, rng, xavier_std(mlp, d));
    }
    return s;
}

void DenoiserState::reindex() {
    index_.clear();
    for (std::size_t i = 0; i < params.size(); ++i) index_[params[i].name] = static_cast<int>(i);
}

int DenoiserState::param_index(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw RuntimeFailure("unknown parameter '" + name + "'");
    return it->second;
}

Param& DenoiserState::param(const std::string& name) { return params[param_index(name)]; }
const Param& DenoiserState::param(const std::string& name) const {
    return params[param_index(name)];
}

void DenoiserState::randomize(Rng& rng, double scale) {
    for (Param& p : params) fill_normal(p.value, rng, scale);
}

std::size_t DenoiserState::parameter_count() const {
    std::size_t n = 0;
    for (const Param& p : params) n += static_cast<std::size_t>(p.value.size());
    return n;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd positional_modulate(const Eigen::MatrixXd& h, const Eigen::MatrixXd& table) {
    const Eigen::Index S = table.rows();
    if (h.rows() != 2 * S || h.cols() != table.cols())
        throw ShapeMismatch("positional_modulate: h is " + std::to_string(h.rows()) + "x" +
                            std::to_string(h.cols()) + ", table is " + std::to_string(S) + "x" +
                            std::to_string(table.cols()));
    Eigen::MatrixXd out = h;
    out.topRows(S) += table;
    out.bottomRows(S) += table;
    return out;
}

Eigen::MatrixXd masked_lora_project(const Eigen::MatrixXd& P, const Eigen::MatrixXd& W,
                                    const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                    double gamma, int S) {
    if (P.rows() != 2 * S) throw ShapeMismatch("masked_lora_project: expected 2*S rows");
    Eigen::MatrixXd out = P * W;
    // diag(M) zeroes the visual rows, so only the interaction block is touched;
    // the visual rows of `out` remain the untouched base projection.
    out.bottomRows(S) += gamma * ((P.bottomRows(S) * A) * B);
    return out;
}

Eigen::MatrixXd inject_interaction_embedding(const Eigen::MatrixXd& h,
                                             const Eigen::RowVectorXd& d_hoi, int S) {
    if (h.rows() != 2 * S) throw ShapeMismatch("inject_interaction_embedding: expected 2*S rows");
    if (h.cols() != d_hoi.size())
        throw ShapeMismatch("inject_interaction_embedding: embedding width");
    Eigen::MatrixXd out = h;
    out.bottomRows(S).rowwise() += d_hoi;
    return out;
}

double alignment_loss(const Eigen::MatrixXd& h_kstar, int S, double eps) {
    if (h_kstar.rows() != 2 * S) throw ShapeMismatch("alignment_loss: expected 2*S rows");
    double total = 0.0;
    for (int m = 0; m < S; ++m) {
        const auto a = h_kstar.row(m), b = h_kstar.row(S + m);
        const double na = std::max(a.norm(), eps), nb = std::max(b.norm(), eps);
        total += 1.0 - a.dot(b) / (na * nb);
    }
    return total;
}

Eigen::MatrixXd apply_first_frame_conditioning(Eigen::MatrixXd z, const Conditioning& cond,
                                               const ModelConfig& cfg) {
    if (cond.first_frame_tokens.size() == 0) return z;
    const int n0 = cfg.conditioned_rows();
    if (cond.first_frame_tokens.rows() != n0 || cond.first_frame_tokens.cols() != z.cols())
        throw ShapeMismatch("first-frame conditioning tokens are " +
                            std::to_string(cond.first_frame_tokens.rows()) + "x" +
                            std::to_string(cond.first_frame_tokens.cols()) + ", expected " +
                            std::to_string(n0) + "x" + std::to_string(z.cols()));
    z.topRows(n0) = cond.first_frame_tokens;
    return z;
}

Eigen::MatrixXd timestep_embedding(int t, int dim) {
    const int half = dim / 2;
    Eigen::MatrixXd emb(1, dim);
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / half);
        emb(0, i) = std::sin(t * freq);
        emb(0, half + i) = std::cos(t * freq);
    }
    return emb;
}

std::vector<ad::Var> insert_params(ad::Tape& tape, const DenoiserState& state, bool with_grad) {
    std::vector<ad::Var> vars;
    vars.reserve(state.params.size());
    for (const Param& p : state.params)
        vars.push_back(tape.leaf(p.value, with_grad && p.trainable));
    return vars;
}

ForwardVars build_forward(ad::Tape& tape, const DenoiserState& state,
                          const std::vector<ad::Var>& pv, const Eigen::MatrixXd& z_in, int t,
                          const Conditioning& cond) {
    const ModelConfig& cfg = state.cfg;
    const int S = cfg.tokens_per_modality();
    const int d = cfg.dim;
    if (z_in.rows() != 2 * S || z_in.cols() != cfg.channels)
        throw ShapeMismatch("denoiser input is " + std::to_string(z_in.rows()) + "x" +
                            std::to_string(z_in.cols()) + ", expected " + std::to_string(2 * S) +
                            "x" + std::to_string(cfg.channels));
    if (cond.task_id < 0 || cond.task_id >= cfg.n_tasks)
        throw ValidationError("task_id " + std::to_string(cond.task_id) + " out of range");

    const auto P = [&](const std::string& name) { return pv[state.param_index(name)]; };

    ad::Var x = tape.constant(z_in);
    ad::Var h = tape.add_row_broadcast(tape.matmul(x, P("embed.w")), P("embed.b"));

    // Conditioning vector: timestep MLP plus task embedding.
    ad::Var t_emb = tape.constant(timestep_embedding(t, d));
    ad::Var th = tape.silu(tape.add_row_broadcast(tape.matmul(t_emb, P("tmlp.w1")), P("tmlp.b1")));
    ad::Var c = tape.add(tape.add_row_broadcast(tape.matmul(th, P("tmlp.w2")), P("tmlp.b2")),
                         tape.select_row(P("task.table"), cond.task_id));
    ad::Var c_act = tape.silu(c);

    ad::Var pos2 = tape.vstack2(P("pos.table"), P("pos.table"));

    const int dh = d / cfg.heads;
    const double attn_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    ad::Var h_kstar;

    for (int i = 0; i < cfg.layers; ++i) {
        const auto L = [&](const char* suffix) { return P(layer_key(i, suffix)); };
        ad::Var mod = tape.add_row_broadcast(tape.matmul(c_act, L("mod.w")), L("mod.b"));
        ad::Var sa = tape.slice_cols(mod, 0, d), ba = tape.slice_cols(mod, d, d);
        ad::Var ga = tape.slice_cols(mod, 2 * d, d), sm = tape.slice_cols(mod, 3 * d, d);
        ad::Var bm = tape.slice_cols(mod, 4 * d, d), gm = tape.slice_cols(mod, 5 * d, d);

        ad::Var n = tape.modulate(tape.layer_norm(h, L("ln1.g"), L("ln1.b")), sa, ba);
        ad::Var p = tape.add(n, pos2);  // Eq. 4: shared positional encodings

        // Eq. 5: base projection plus LoRA update gated to interaction rows.
        const auto project = [&](const char* w, const char* a, const char* b) {
            ad::Var base = tape.matmul(p, L(w));
            ad::Var delta = tape.matmul(tape.matmul(p, L(a)), L(b));
            return tape.masked_residual(base, delta, cfg.lora_gamma, S, 2 * S);
        };
        ad::Var q = project("attn.wq", "lora.aq", "lora.bq");
        ad::Var k = project("attn.wk", "lora.ak", "lora.bk");
        ad::Var v = project("attn.wv", "lora.av", "lora.bv");

        std::vector<ad::Var> head_outs;
        head_outs.reserve(cfg.heads);
        for (int hd = 0; hd < cfg.heads; ++hd) {
            ad::Var qh = tape.slice_cols(q, hd * dh, dh);
            ad::Var kh = tape.slice_cols(k, hd * dh, dh);
            ad::Var vh = tape.slice_cols(v, hd * dh, dh);
            ad::Var attn = tape.softmax_rows(tape.scale(tape.matmul_nt(qh, kh), attn_scale));
            head_outs.push_back(tape.matmul(attn, vh));
        }
        ad::Var o = tape.add_row_broadcast(
            tape.matmul(tape.concat_cols(head_outs), L("attn.wo")), L("attn.bo"));
        h = tape.add(h, tape.row_gate(o, ga));

        ad::Var n2 = tape.modulate(tape.layer_norm(h, L("ln2.g"), L("ln2.b")), sm, bm);
        ad::Var mlp = tape.add_row_broadcast(
            tape.matmul(tape.gelu(tape.add_row_broadcast(tape.matmul(n2, L("mlp.w1")),
                                                         L("mlp.b1"))),
                        L("mlp.w2")),
            L("mlp.b2"));
        h = tape.add(h, tape.row_gate(mlp, gm));

        if (i == cfg.k_star - 1) {
            h_kstar = h;  // alignment reads the layer's final output
            h = tape.add_rows_range(h, P("d_hoi"), S, 2 * S);
        }
    }

    ad::Var ones = tape.constant(ad::Mat::Ones(1, d));
    ad::Var zeros = tape.constant(ad::Mat::Zero(1, d));
    ad::Var hm = tape.add_row_broadcast(tape.matmul(c_act, P("head.mod.w")), P("head.mod.b"));
    ad::Var sf = tape.slice_cols(hm, 0, d), bf = tape.slice_cols(hm, d, d);
    ad::Var nf = tape.modulate(tape.layer_norm(h, ones, zeros), sf, bf);
    ad::Var pred = tape.add_row_broadcast(tape.matmul(nf, P("head.w")), P("head.b"));

    return ForwardVars{pred, h_kstar};
}

ForwardResult denoiser_forward(const TokenSequence& z_t, int t, const Conditioning& cond,
                               const DenoiserState& state) {
    const Eigen::MatrixXd z_in = apply_first_frame_conditioning(z_t.tokens, cond, state.cfg);
    ad::Tape tape;
    const auto pv = insert_params(tape, state, /*with_grad=*/false);
    const ForwardVars fv = build_forward(tape, state, pv, z_in, t, cond);
    return ForwardResult{tape.val(fv.prediction), tape.val(fv.h_kstar)};
}

LossComponents composite_loss(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target,
                              const Eigen::MatrixXd& h_kstar, int S, const LossWeights& weights) {
    if (prediction.rows() != target.rows() || prediction.cols() != target.cols())
        throw ShapeMismatch("composite_loss: prediction vs target");
    if (prediction.rows() != 2 * S) throw ShapeMismatch("composite_loss: expected 2*S rows");
    LossComponents out;
    const double denom = static_cast<double>(S) * prediction.cols();
    out.rgb = (prediction.topRows(S) - target.topRows(S)).squaredNorm() / denom;
    out.hoi = (prediction.bottomRows(S) - target.bottomRows(S)).squaredNorm() / denom;
    out.align = alignment_loss(h_kstar, S);
    out.total = out.rgb + weights.lambda_hoi * out.hoi + weights.lambda_align * out.align;
    return out;
}

}  // namespace scar
