#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "scar/checkpoint.hpp"
#include "scar/sampler.hpp"
#include "scar/train.hpp"

using namespace scar;
namespace fs = std::filesystem;

namespace {

ModelConfig micro_config() {
    ModelConfig cfg;
    cfg.dim = 8;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.k_star = 1;
    cfg.mlp_ratio = 2;
    cfg.lora_rank = 2;
    cfg.channels = 8;
    cfg.grid_t = 2;
    cfg.grid_h = 2;
    cfg.grid_w = 1;  // S = 4
    cfg.n_tasks = 2;
    return cfg;
}

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
    return m;
}

std::vector<TrainItem> micro_dataset(const ModelConfig& cfg, int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TrainItem> items(n);
    const int S = cfg.tokens_per_modality();
    for (TrainItem& item : items) {
        item.z0 = random_matrix(rng, 2 * S, cfg.channels);
        item.cond.task_id = rng.uniform_int(0, cfg.n_tasks - 1);
        item.cond.first_frame_tokens = random_matrix(rng, cfg.conditioned_rows(), cfg.channels);
    }
    return items;
}

// Training loss of the micro model for a fixed (t, eps) draw; used to
// finite-difference the full gradient.
double training_loss(const DenoiserState& state, const NoiseSchedule& sched,
                     const TrainItem& item, int t, const Eigen::MatrixXd& eps,
                     const LossWeights& weights) {
    const double abar = sched.at(t);
    const Eigen::MatrixXd z_t = forward_noising_at(item.z0, abar, eps);
    const Eigen::MatrixXd z_in = apply_first_frame_conditioning(z_t, item.cond, state.cfg);
    ad::Tape tape;
    const auto pv = insert_params(tape, state, false);
    const ForwardVars fv = build_forward(tape, state, pv, z_in, t, item.cond);
    return composite_loss(tape.val(fv.prediction), eps, tape.val(fv.h_kstar),
                          state.cfg.tokens_per_modality(), weights)
        .total;
}

}  // namespace

TEST_CASE("training gradient matches central finite differences on the micro model") {
    const ModelConfig cfg = micro_config();
    DenoiserState state = DenoiserState::init(cfg, 17);
    Rng rng(18);
    state.randomize(rng, 0.2);

    const NoiseSchedule sched = NoiseSchedule::cosine(100);
    const LossWeights weights{1.0, 0.1};
    const TrainItem item = micro_dataset(cfg, 1, 19)[0];
    const int t = 37;
    const Eigen::MatrixXd eps = random_matrix(rng, 2 * cfg.tokens_per_modality(), cfg.channels);

    // Analytic gradient via the tape.
    const double abar = sched.at(t);
    const Eigen::MatrixXd z_in =
        apply_first_frame_conditioning(forward_noising_at(item.z0, abar, eps), item.cond, cfg);
    ad::Tape tape;
    const auto pv = insert_params(tape, state, true);
    const ForwardVars fv = build_forward(tape, state, pv, z_in, t, item.cond);
    const int S = cfg.tokens_per_modality();
    const ad::Var target = tape.constant(eps);
    const ad::Var total = tape.add(
        tape.add(tape.mse_rows(fv.prediction, target, 0, S),
                 tape.scale(tape.mse_rows(fv.prediction, target, S, 2 * S), weights.lambda_hoi)),
        tape.scale(tape.alignment_pairs(fv.h_kstar, S), weights.lambda_align));
    tape.backward(total);
    CHECK(tape.val(total)(0, 0) ==
          doctest::Approx(training_loss(state, sched, item, t, eps, weights)));

    const double step = 1e-5;
    double num = 0.0, den = 0.0;
    for (std::size_t p = 0; p < state.params.size(); ++p) {
        const Eigen::MatrixXd& analytic = tape.grad(pv[p]);
        Param& param = state.params[p];
        for (Eigen::Index i = 0; i < param.value.size(); ++i) {
            const double saved = param.value.data()[i];
            param.value.data()[i] = saved + step;
            const double up = training_loss(state, sched, item, t, eps, weights);
            param.value.data()[i] = saved - step;
            const double down = training_loss(state, sched, item, t, eps, weights);
            param.value.data()[i] = saved;
            const double fd = (up - down) / (2 * step);
            num += (fd - analytic.data()[i]) * (fd - analytic.data()[i]);
            den += fd * fd;
        }
    }
    REQUIRE(den > 0.0);
    CHECK(std::sqrt(num / den) < 1e-3);
}

TEST_CASE("a training step is reproducible from the seed") {
    const ModelConfig cfg = micro_config();
    const auto items = micro_dataset(cfg, 3, 100);
    const auto run = [&](int steps) {
        Trainer trainer(DenoiserState::init(cfg, 4), NoiseSchedule::cosine(50), LossWeights{},
                        AdamConfig{}, false, 7);
        LossComponents last;
        for (int i = 0; i < steps; ++i) last = trainer.step(items, 2);
        return std::pair{last, trainer.state().param("head.w").value};
    };
    const auto [loss_a, head_a] = run(3);
    const auto [loss_b, head_b] = run(3);
    CHECK(loss_a.total == loss_b.total);
    CHECK(loss_a.rgb == loss_b.rgb);
    CHECK((head_a - head_b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("alignment weight only acts through the alignment path") {
    const ModelConfig cfg = micro_config();
    const auto items = micro_dataset(cfg, 2, 200);

    const auto one_step = [&](double lambda_align, bool detach) {
        Trainer trainer(DenoiserState::init(cfg, 9), NoiseSchedule::cosine(50),
                        LossWeights{1.0, lambda_align}, AdamConfig{}, detach, 13);
        trainer.step(items, 2);
        return trainer.state();
    };

    const DenoiserState zero = one_step(0.0, false);
    const DenoiserState detached = one_step(0.1, true);
    const DenoiserState attached = one_step(0.1, false);

    // Detached alignment contributes value but no gradient: identical update.
    double max_diff = 0.0, max_diff_attached = 0.0;
    for (std::size_t p = 0; p < zero.params.size(); ++p) {
        max_diff = std::max(max_diff,
                            (zero.params[p].value - detached.params[p].value).cwiseAbs().maxCoeff());
        max_diff_attached = std::max(
            max_diff_attached,
            (zero.params[p].value - attached.params[p].value).cwiseAbs().maxCoeff());
    }
    CHECK(max_diff == 0.0);
    CHECK(max_diff_attached > 0.0);
}

TEST_CASE("non-finite losses abort with a diagnostic") {
    const ModelConfig cfg = micro_config();
    const auto items = micro_dataset(cfg, 1, 300);
    DenoiserState state = DenoiserState::init(cfg, 2);
    state.param("embed.w").value(0, 0) = std::numeric_limits<double>::quiet_NaN();
    Trainer trainer(std::move(state), NoiseSchedule::cosine(50), LossWeights{}, AdamConfig{},
                    false, 1);
    CHECK_THROWS_AS(trainer.step(items, 1), NonFiniteLoss);
}

TEST_CASE("frozen base attention projections stay fixed while LoRA trains") {
    ModelConfig cfg = micro_config();
    cfg.freeze_base_attention = true;
    const auto items = micro_dataset(cfg, 2, 400);
    Trainer trainer(DenoiserState::init(cfg, 3), NoiseSchedule::cosine(50), LossWeights{},
                    AdamConfig{}, false, 5);
    const Eigen::MatrixXd wq_before = trainer.state().param("layer0.attn.wq").value;
    const Eigen::MatrixXd lora_before = trainer.state().param("layer0.lora.aq").value;
    for (int i = 0; i < 3; ++i) trainer.step(items, 2);
    CHECK((trainer.state().param("layer0.attn.wq").value - wq_before).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK((trainer.state().param("layer0.lora.aq").value - lora_before).cwiseAbs().maxCoeff() >
          0.0);
}

TEST_CASE("checkpoints round-trip and enforce the shape contract") {
    const ModelConfig cfg = micro_config();
    const auto items = micro_dataset(cfg, 2, 500);
    Trainer trainer(DenoiserState::init(cfg, 21), NoiseSchedule::cosine(60), LossWeights{},
                    AdamConfig{}, false, 23);
    for (int i = 0; i < 2; ++i) trainer.step(items, 2);

    Checkpoint ckpt;
    ckpt.config_text = RunConfig().to_text();
    ckpt.schedule = trainer.schedule();
    ckpt.codec = LatentCodec::orthonormal(PatchShape{1, 2, 2}, 3);
    ckpt.state = trainer.state();
    ckpt.step = trainer.steps_done();
    ckpt.rng_state = trainer.rng().state();

    const fs::path path = fs::temp_directory_path() / "scar_test_ckpt.bin";
    save_checkpoint(ckpt, path);

    SUBCASE("round-trip preserves every tensor, the step and the rng") {
        const Checkpoint back = load_checkpoint(path, nullptr);
        CHECK(back.step == ckpt.step);
        CHECK(back.rng_state == ckpt.rng_state);
        CHECK(back.config_text == ckpt.config_text);
        CHECK(back.schedule.alpha_bar == ckpt.schedule.alpha_bar);
        CHECK((back.codec.basis() - ckpt.codec.basis()).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(back.state.params.size() == ckpt.state.params.size());
        for (std::size_t p = 0; p < ckpt.state.params.size(); ++p) {
            CHECK((back.state.params[p].value - ckpt.state.params[p].value)
                      .cwiseAbs()
                      .maxCoeff() == 0.0);
            CHECK((back.state.params[p].adam_m - ckpt.state.params[p].adam_m)
                      .cwiseAbs()
                      .maxCoeff() == 0.0);
        }
    }
    SUBCASE("mismatched k*/layers/dim are rejected without the migration flag") {
        RunConfig expected;
        expected.model_dim = cfg.dim;
        expected.model_layers = cfg.layers;
        expected.model_k_star = cfg.k_star;
        CHECK_NOTHROW(load_checkpoint(path, &expected));
        expected.model_k_star = cfg.k_star + 1;  // still < layers in RunConfig terms
        CHECK_THROWS_AS(load_checkpoint(path, &expected), BadConfig);
        CHECK_NOTHROW(load_checkpoint(path, &expected, /*allow_mismatch=*/true));
    }
    fs::remove(path);
}

TEST_CASE("resume reproduces the uninterrupted loss trajectory") {
    const ModelConfig cfg = micro_config();
    const auto items = micro_dataset(cfg, 3, 600);
    const NoiseSchedule sched = NoiseSchedule::cosine(60);

    Trainer full(DenoiserState::init(cfg, 31), sched, LossWeights{}, AdamConfig{}, false, 37);
    std::vector<LossComponents> reference;
    for (int i = 0; i < 8; ++i) reference.push_back(full.step(items, 2));

    Trainer first(DenoiserState::init(cfg, 31), sched, LossWeights{}, AdamConfig{}, false, 37);
    for (int i = 0; i < 4; ++i) first.step(items, 2);

    Checkpoint ckpt;
    ckpt.config_text = "";
    ckpt.schedule = first.schedule();
    ckpt.codec = LatentCodec::orthonormal(PatchShape{1, 2, 2}, 3);
    ckpt.state = first.state();
    ckpt.step = first.steps_done();
    ckpt.rng_state = first.rng().state();
    const fs::path path = fs::temp_directory_path() / "scar_test_resume.bin";
    save_checkpoint(ckpt, path);

    const Checkpoint back = load_checkpoint(path, nullptr);
    Trainer second(back.state, back.schedule, LossWeights{}, AdamConfig{}, false, 0);
    second.set_steps_done(back.step);
    second.rng().set_state(back.rng_state);
    for (int i = 4; i < 8; ++i) {
        const LossComponents c = second.step(items, 2);
        CHECK(std::abs(c.total - reference[i].total) < 1e-4);
        CHECK(std::abs(c.rgb - reference[i].rgb) < 1e-4);
        CHECK(std::abs(c.hoi - reference[i].hoi) < 1e-4);
        CHECK(std::abs(c.align - reference[i].align) < 1e-4);
    }
    fs::remove(path);
}

TEST_CASE("sampling contracts on the micro model") {
    ModelConfig cfg = micro_config();
    cfg.grid_t = 2;
    cfg.grid_h = 2;
    cfg.grid_w = 2;  // 8 tokens per modality
    DenoiserState state = DenoiserState::init(cfg, 41);
    const LatentCodec codec = LatentCodec::orthonormal(PatchShape{2, 4, 4}, 5);
    // orthonormal codec has channels == 96, rebuild the model to match
    cfg.channels = codec.channels();
    state = DenoiserState::init(cfg, 41);
    const NoiseSchedule sched = NoiseSchedule::cosine(40);

    const RgbImage frame(4 * cfg.grid_w, 4 * cfg.grid_h, 0.4f, 0.5f, 0.6f);

    SUBCASE("shapes follow the conditioning resolution and configured frames") {
        const SampleResult out = sample_clip(frame, 0, state, codec, sched, 5, 11);
        CHECK(out.rgb.size() == static_cast<std::size_t>(cfg.grid_t * 2));
        CHECK(out.scar.size() == out.rgb.size());
        CHECK(out.rgb[0].width == frame.width);
        for (const auto& img : out.rgb)
            for (float v : img.rgb) {
                CHECK(v >= 0.f);
                CHECK(v <= 1.f);
            }
    }
    SUBCASE("same seed and conditioning give identical outputs") {
        const SampleResult a = sample_clip(frame, 0, state, codec, sched, 5, 11);
        const SampleResult b = sample_clip(frame, 0, state, codec, sched, 5, 11);
        for (std::size_t f = 0; f < a.rgb.size(); ++f) CHECK(a.rgb[f].rgb == b.rgb[f].rgb);
    }
    SUBCASE("a single step still produces validly shaped output") {
        const SampleResult out = sample_clip(frame, 0, state, codec, sched, 1, 11);
        CHECK(out.rgb.size() == static_cast<std::size_t>(cfg.grid_t * 2));
    }
    SUBCASE("step counts outside [1, T] are rejected") {
        CHECK_THROWS_AS(sample_clip(frame, 0, state, codec, sched, 0, 11), InvalidSteps);
        CHECK_THROWS_AS(sample_clip(frame, 0, state, codec, sched, 41, 11), InvalidSteps);
    }
    SUBCASE("wrong conditioning resolution is rejected") {
        const RgbImage small(4, 4);
        CHECK_THROWS_AS(sample_clip(small, 0, state, codec, sched, 5, 11), ShapeMismatch);
    }
}

TEST_CASE("velocity target algebra stays self-consistent") {
    ModelConfig cfg = micro_config();
    cfg.target = "velocity";
    const NoiseSchedule sched = NoiseSchedule::cosine(50);
    Rng rng(55);
    const Eigen::MatrixXd z0 = random_matrix(rng, 8, cfg.channels);
    const Eigen::MatrixXd eps = random_matrix(rng, 8, cfg.channels);
    const double abar = sched.at(25);
    const Eigen::MatrixXd z_t = forward_noising_at(z0, abar, eps);
    const Eigen::MatrixXd v = std::sqrt(abar) * eps - std::sqrt(1.0 - abar) * z0;
    // reconstruct x0 and eps from (z_t, v) the way the sampler does
    const Eigen::MatrixXd x0 = std::sqrt(abar) * z_t - std::sqrt(1.0 - abar) * v;
    const Eigen::MatrixXd eps_rec = std::sqrt(1.0 - abar) * z_t + std::sqrt(abar) * v;
    CHECK((x0 - z0).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((eps_rec - eps).cwiseAbs().maxCoeff() < 1e-12);
}
