#include "scar/checkpoint.hpp"

#include <fstream>

#include "scar/errors.hpp"

namespace scar {

namespace {

constexpr char kMagic[8] = {'S', 'C', 'A', 'R', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_str(std::ostream& out, const std::string& s) {
    put_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void put_mat(std::ostream& out, const ad::Mat& m) {
    put_u64(out, static_cast<std::uint64_t>(m.rows()));
    put_u64(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
}
void put_vec(std::ostream& out, const Eigen::VectorXd& v) {
    put_u64(out, static_cast<std::uint64_t>(v.size()));
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(sizeof(double) * v.size()));
}

std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw DecodeError("truncated checkpoint");
    return v;
}
std::uint64_t get_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw DecodeError("truncated checkpoint");
    return v;
}
std::string get_str(std::istream& in) {
    const std::uint64_t n = get_u64(in);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw DecodeError("truncated checkpoint");
    return s;
}
ad::Mat get_mat(std::istream& in) {
    const std::uint64_t rows = get_u64(in), cols = get_u64(in);
    ad::Mat m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in) throw DecodeError("truncated checkpoint");
    return m;
}
Eigen::VectorXd get_vec(std::istream& in) {
    const std::uint64_t n = get_u64(in);
    Eigen::VectorXd v(n);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * v.size()));
    if (!in) throw DecodeError("truncated checkpoint");
    return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path.string());

    out.write(kMagic, sizeof(kMagic));
    put_u32(out, kVersion);
    put_u64(out, ckpt.step);
    put_u64(out, ckpt.rng_state);
    put_str(out, ckpt.config_text);

    put_str(out, ckpt.schedule.family);
    put_u32(out, static_cast<std::uint32_t>(ckpt.schedule.timesteps));
    out.write(reinterpret_cast<const char*>(ckpt.schedule.alpha_bar.data()),
              static_cast<std::streamsize>(sizeof(double) * ckpt.schedule.alpha_bar.size()));

    put_str(out, ckpt.codec.mode());
    put_u32(out, static_cast<std::uint32_t>(ckpt.codec.patch().t));
    put_u32(out, static_cast<std::uint32_t>(ckpt.codec.patch().h));
    put_u32(out, static_cast<std::uint32_t>(ckpt.codec.patch().w));
    put_vec(out, ckpt.codec.mean());
    put_mat(out, ckpt.codec.basis());
    put_vec(out, ckpt.codec.scale());

    const ModelConfig& cfg = ckpt.state.cfg;
    for (int v : {cfg.dim, cfg.layers, cfg.heads, cfg.k_star, cfg.mlp_ratio, cfg.lora_rank,
                  cfg.channels, cfg.grid_t, cfg.grid_h, cfg.grid_w, cfg.n_tasks})
        put_u32(out, static_cast<std::uint32_t>(v));
    out.write(reinterpret_cast<const char*>(&cfg.lora_gamma), sizeof(double));
    put_str(out, cfg.target);
    out.put(cfg.freeze_base_attention ? 1 : 0);

    put_u32(out, static_cast<std::uint32_t>(ckpt.state.params.size()));
    for (const Param& p : ckpt.state.params) {
        put_str(out, p.name);
        put_mat(out, p.value);
        put_mat(out, p.adam_m);
        put_mat(out, p.adam_v);
        out.put(p.trainable ? 1 : 0);
    }
    if (!out) throw IoError("short write: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const RunConfig* expected,
                           bool allow_mismatch) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("checkpoint: " + path.string());

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::string(magic, 8) != std::string(kMagic, 8))
        throw DecodeError("not a checkpoint file: " + path.string());
    const std::uint32_t version = get_u32(in);
    if (version != kVersion)
        throw DecodeError("unsupported checkpoint version " + std::to_string(version));

    Checkpoint ckpt;
    ckpt.step = get_u64(in);
    ckpt.rng_state = get_u64(in);
    ckpt.config_text = get_str(in);

    ckpt.schedule.family = get_str(in);
    ckpt.schedule.timesteps = static_cast<int>(get_u32(in));
    ckpt.schedule.alpha_bar.resize(ckpt.schedule.timesteps + 1);
    in.read(reinterpret_cast<char*>(ckpt.schedule.alpha_bar.data()),
            static_cast<std::streamsize>(sizeof(double) * ckpt.schedule.alpha_bar.size()));
    if (!in) throw DecodeError("truncated checkpoint");
    ckpt.schedule.validate();

    const std::string codec_mode = get_str(in);
    PatchShape patch;
    patch.t = static_cast<int>(get_u32(in));
    patch.h = static_cast<int>(get_u32(in));
    patch.w = static_cast<int>(get_u32(in));
    Eigen::VectorXd mean = get_vec(in);
    ad::Mat basis = get_mat(in);
    Eigen::VectorXd scale = get_vec(in);
    ckpt.codec = LatentCodec(patch, std::move(mean), std::move(basis), std::move(scale),
                             codec_mode);

    ModelConfig cfg;
    cfg.dim = static_cast<int>(get_u32(in));
    cfg.layers = static_cast<int>(get_u32(in));
    cfg.heads = static_cast<int>(get_u32(in));
    cfg.k_star = static_cast<int>(get_u32(in));
    cfg.mlp_ratio = static_cast<int>(get_u32(in));
    cfg.lora_rank = static_cast<int>(get_u32(in));
    cfg.channels = static_cast<int>(get_u32(in));
    cfg.grid_t = static_cast<int>(get_u32(in));
    cfg.grid_h = static_cast<int>(get_u32(in));
    cfg.grid_w = static_cast<int>(get_u32(in));
    cfg.n_tasks = static_cast<int>(get_u32(in));
    in.read(reinterpret_cast<char*>(&cfg.lora_gamma), sizeof(double));
    if (!in) throw DecodeError("truncated checkpoint");
    cfg.target = get_str(in);
    cfg.freeze_base_attention = in.get() == 1;

    if (expected && !allow_mismatch) {
        const auto complain = [&](const char* what, int have, int want) {
            throw BadConfig(std::string("checkpoint ") + what + " is " + std::to_string(have) +
                            " but the config expects " + std::to_string(want) +
                            "; pass the migration flag to load anyway");
        };
        if (cfg.layers != expected->model_layers)
            complain("layer count", cfg.layers, expected->model_layers);
        if (cfg.dim != expected->model_dim) complain("dim", cfg.dim, expected->model_dim);
        if (cfg.k_star != expected->model_k_star)
            complain("k_star", cfg.k_star, expected->model_k_star);
    }

    ckpt.state = make_state_shell(cfg);
    const std::uint32_t n_params = get_u32(in);
    if (n_params != ckpt.state.params.size())
        throw DecodeError("checkpoint parameter count mismatch");
    for (std::uint32_t i = 0; i < n_params; ++i) {
        const std::string name = get_str(in);
        Param& p = ckpt.state.param(name);
        ad::Mat value = get_mat(in);
        ad::Mat m = get_mat(in);
        ad::Mat v = get_mat(in);
        if (value.rows() != p.value.rows() || value.cols() != p.value.cols())
            throw DecodeError("checkpoint tensor shape mismatch for '" + name + "'");
        p.value = std::move(value);
        p.adam_m = std::move(m);
        p.adam_v = std::move(v);
        p.trainable = in.get() == 1;
    }
    return ckpt;
}

}  // namespace scar
