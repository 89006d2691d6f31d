#include "scar/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "scar/errors.hpp"

namespace scar {

namespace {

struct Binding {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(15);
    os << v;
    return os.str();
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw BadConfig("bad numeric value for '" + key + "': " + v);
    }
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw BadConfig("bad integer value for '" + key + "': " + v);
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw BadConfig("bad boolean value for '" + key + "': " + v);
}

std::array<double, 3> parse_color(const std::string& key, const std::string& v) {
    std::array<double, 3> c{};
    std::stringstream ss(v);
    std::string part;
    int i = 0;
    while (std::getline(ss, part, ',')) {
        if (i >= 3) throw BadConfig("color for '" + key + "' needs exactly 3 components: " + v);
        c[i++] = parse_double(key, part);
    }
    if (i != 3) throw BadConfig("color for '" + key + "' needs exactly 3 components: " + v);
    return c;
}

std::string fmt_color(const std::array<double, 3>& c) {
    return fmt_double(c[0]) + "," + fmt_double(c[1]) + "," + fmt_double(c[2]);
}

std::vector<Binding> make_bindings() {
    std::vector<Binding> b;
    const auto add_int = [&](const std::string& key, int RunConfig::*field) {
        b.push_back({key, [field](const RunConfig& c) { return std::to_string(c.*field); },
                     [field, key](RunConfig& c, const std::string& v) {
                         c.*field = static_cast<int>(parse_int(key, v));
                     }});
    };
    const auto add_double = [&](const std::string& key, double RunConfig::*field) {
        b.push_back({key, [field](const RunConfig& c) { return fmt_double(c.*field); },
                     [field, key](RunConfig& c, const std::string& v) {
                         c.*field = parse_double(key, v);
                     }});
    };
    const auto add_bool = [&](const std::string& key, bool RunConfig::*field) {
        b.push_back({key,
                     [field](const RunConfig& c) { return (c.*field) ? std::string("true")
                                                                     : std::string("false"); },
                     [field, key](RunConfig& c, const std::string& v) {
                         c.*field = parse_bool(key, v);
                     }});
    };
    const auto add_string = [&](const std::string& key, std::string RunConfig::*field) {
        b.push_back({key, [field](const RunConfig& c) { return c.*field; },
                     [field](RunConfig& c, const std::string& v) { c.*field = v; }});
    };
    const auto add_color = [&](const std::string& key, std::array<double, 3> RunConfig::*field) {
        b.push_back({key, [field](const RunConfig& c) { return fmt_color(c.*field); },
                     [field, key](RunConfig& c, const std::string& v) {
                         c.*field = parse_color(key, v);
                     }});
    };

    b.push_back({"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
                 [](RunConfig& c, const std::string& v) {
                     c.seed = static_cast<std::uint64_t>(parse_int("seed", v));
                 }});

    add_int("repr.r_h", &RunConfig::repr_r_h);
    add_int("repr.r_min", &RunConfig::repr_r_min);
    add_int("repr.r_max", &RunConfig::repr_r_max);
    add_double("repr.beta", &RunConfig::repr_beta);
    add_double("repr.alpha", &RunConfig::repr_alpha);
    add_color("repr.hand_color", &RunConfig::repr_hand_color);
    add_color("repr.object_color", &RunConfig::repr_object_color);
    add_color("repr.contact_color", &RunConfig::repr_contact_color);

    add_int("synth.clips", &RunConfig::synth_clips);
    add_int("synth.frames", &RunConfig::synth_frames);
    add_int("synth.width", &RunConfig::synth_width);
    add_int("synth.height", &RunConfig::synth_height);
    add_double("synth.fps", &RunConfig::synth_fps);
    add_int("synth.hold_frames", &RunConfig::synth_hold_frames);

    add_int("codec.patch_t", &RunConfig::codec_patch_t);
    add_int("codec.patch_h", &RunConfig::codec_patch_h);
    add_int("codec.patch_w", &RunConfig::codec_patch_w);
    add_int("codec.channels", &RunConfig::codec_channels);
    add_string("codec.mode", &RunConfig::codec_mode);
    add_double("codec.scale_floor", &RunConfig::codec_scale_floor);

    add_int("model.dim", &RunConfig::model_dim);
    add_int("model.layers", &RunConfig::model_layers);
    add_int("model.heads", &RunConfig::model_heads);
    add_int("model.k_star", &RunConfig::model_k_star);
    add_int("model.mlp_ratio", &RunConfig::model_mlp_ratio);
    add_int("model.lora_rank", &RunConfig::model_lora_rank);
    add_double("model.lora_gamma", &RunConfig::model_lora_gamma);
    add_bool("model.freeze_base_attention", &RunConfig::model_freeze_base_attention);
    add_string("model.target", &RunConfig::model_target);

    add_double("loss.lambda_hoi", &RunConfig::loss_lambda_hoi);
    add_double("loss.lambda_align", &RunConfig::loss_lambda_align);

    add_string("sched.family", &RunConfig::sched_family);
    add_int("sched.timesteps", &RunConfig::sched_timesteps);

    add_int("train.steps", &RunConfig::train_steps);
    add_int("train.batch", &RunConfig::train_batch);
    add_double("train.lr", &RunConfig::train_lr);
    add_int("train.checkpoint_every", &RunConfig::train_checkpoint_every);
    add_bool("train.detach_alignment", &RunConfig::train_detach_alignment);

    add_int("sample.steps", &RunConfig::sample_steps);
    add_double("eval.color_tolerance", &RunConfig::eval_color_tolerance);

    add_string("data.dir", &RunConfig::data_dir);
    add_string("out.dir", &RunConfig::out_dir);
    return b;
}

const std::vector<Binding>& bindings() {
    static const std::vector<Binding> b = make_bindings();
    return b;
}

const Binding* find_binding(const std::string& key) {
    for (const auto& b : bindings())
        if (b.key == key) return &b;
    return nullptr;
}

std::string env_name(const std::string& key) {
    std::string name = "SCAR_CONFIG_";
    for (char ch : key) name.push_back(ch == '.' ? '_' : static_cast<char>(std::toupper(ch)));
    return name;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& b : bindings()) out.push_back(b.key);
        return out;
    }();
    return k;
}

std::string RunConfig::get(const std::string& key) const {
    const Binding* b = find_binding(key);
    if (!b) throw BadConfig("unknown config key '" + key + "'");
    return b->get(*this);
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const Binding* b = find_binding(key);
    if (!b) throw BadConfig("unknown config key '" + key + "'");
    b->set(*this, value);
}

void RunConfig::apply_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw BadConfig("cannot open config file: " + path.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw BadConfig("line " + std::to_string(lineno) + ": expected 'key = value'");
        set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
}

void RunConfig::apply_env() {
    for (const auto& b : bindings()) {
        const char* v = std::getenv(env_name(b.key).c_str());
        if (v) b.set(*this, v);
    }
}

std::string RunConfig::to_text() const {
    std::string out;
    for (const auto& b : bindings()) out += b.key + " = " + b.get(*this) + "\n";
    return out;
}

void RunConfig::validate() const {
    const auto check = [](bool ok, const std::string& msg) {
        if (!ok) throw BadConfig(msg);
    };
    check(repr_r_h > 0, "repr.r_h must be > 0");
    check(repr_r_min > 0 && repr_r_min <= repr_r_max, "need 0 < repr.r_min <= repr.r_max");
    check(repr_beta > 0, "repr.beta must be > 0");
    check(repr_alpha >= 0 && repr_alpha <= 1, "repr.alpha must be in [0,1]");
    for (const auto* c : {&repr_hand_color, &repr_object_color, &repr_contact_color})
        for (double v : *c) check(v >= 0 && v <= 1, "overlay colors must be in [0,1]");
    check(synth_clips >= 0, "synth.clips must be >= 0");
    check(synth_frames >= 1, "synth.frames must be >= 1");
    check(synth_width >= 16 && synth_height >= 16, "synth resolution must be at least 16x16");
    check(synth_fps > 0, "synth.fps must be > 0");
    check(synth_hold_frames >= 0, "synth.hold_frames must be >= 0");
    check(codec_patch_t >= 1 && codec_patch_h >= 1 && codec_patch_w >= 1,
          "codec patch dims must be >= 1");
    check(codec_channels >= 1, "codec.channels must be >= 1");
    check(codec_mode == "pca" || codec_mode == "orthonormal",
          "codec.mode must be 'pca' or 'orthonormal'");
    check(codec_scale_floor > 0, "codec.scale_floor must be > 0");
    check(model_dim >= 2 && model_dim % 2 == 0, "model.dim must be even and >= 2");
    check(model_layers >= 2, "model.layers must be >= 2");
    check(model_heads >= 1 && model_dim % model_heads == 0,
          "model.heads must divide model.dim");
    check(model_k_star >= 1 && model_k_star < model_layers,
          "need 1 <= model.k_star < model.layers");
    check(model_mlp_ratio >= 1, "model.mlp_ratio must be >= 1");
    check(model_lora_rank >= 1, "model.lora_rank must be >= 1");
    check(model_target == "epsilon" || model_target == "velocity",
          "model.target must be 'epsilon' or 'velocity'");
    check(loss_lambda_hoi >= 0 && loss_lambda_align >= 0, "loss weights must be >= 0");
    check(sched_family == "cosine", "sched.family: only 'cosine' is registered");
    check(sched_timesteps >= 2, "sched.timesteps must be >= 2");
    check(train_steps >= 1, "train.steps must be >= 1");
    check(train_batch >= 1, "train.batch must be >= 1");
    check(train_lr > 0, "train.lr must be > 0");
    check(train_checkpoint_every >= 1, "train.checkpoint_every must be >= 1");
    check(sample_steps >= 1, "sample.steps must be >= 1");
    check(sample_steps <= sched_timesteps, "sample.steps cannot exceed sched.timesteps");
    check(eval_color_tolerance > 0, "eval.color_tolerance must be > 0");
}

RunConfig RunConfig::load(const std::filesystem::path& file,
                          const std::vector<std::string>& overrides, bool use_env) {
    RunConfig cfg;
    if (!file.empty()) cfg.apply_file(file);
    if (use_env) cfg.apply_env();
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw BadConfig("override must look like key=value, got: " + kv);
        cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

}  // namespace scar
