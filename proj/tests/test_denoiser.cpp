#include <doctest.h>

#include <cmath>

#include "scar/denoiser.hpp"

using namespace scar;

namespace {

ModelConfig micro_config() {
    ModelConfig cfg;
    cfg.dim = 8;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.k_star = 1;
    cfg.mlp_ratio = 2;
    cfg.lora_rank = 2;
    cfg.lora_gamma = 1.0;
    cfg.channels = 8;
    cfg.grid_t = 2;
    cfg.grid_h = 2;
    cfg.grid_w = 1;  // S = 4, conditioned rows = 2
    cfg.n_tasks = 2;
    return cfg;
}

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
    return m;
}

}  // namespace

TEST_CASE("positional modulation pairs rows m and S+m") {
    Rng rng(101);
    const int S = 6, d = 5;
    const Eigen::MatrixXd h = random_matrix(rng, 2 * S, d);
    const Eigen::MatrixXd table = random_matrix(rng, S, d);
    const Eigen::MatrixXd out = positional_modulate(h, table);

    SUBCASE("additive term is shared across the pair") {
        for (int m = 0; m < S; ++m) {
            const Eigen::RowVectorXd da = out.row(m) - h.row(m);
            const Eigen::RowVectorXd db = out.row(S + m) - h.row(S + m);
            CHECK((da - db).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
    SUBCASE("zero hidden states collapse to two copies of the table") {
        const Eigen::MatrixXd z = positional_modulate(Eigen::MatrixXd::Zero(2 * S, d), table);
        CHECK((z.topRows(S) - z.bottomRows(S)).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("zero table is the identity") {
        const Eigen::MatrixXd z = positional_modulate(h, Eigen::MatrixXd::Zero(S, d));
        CHECK((z - h).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("length mismatch is rejected") {
        CHECK_THROWS_AS(positional_modulate(h, random_matrix(rng, S + 1, d)), ShapeMismatch);
    }
}

TEST_CASE("masked LoRA leaves visual rows bitwise on the base projection") {
    Rng rng(211);
    const int S = 5, d = 6, r = 2;
    const Eigen::MatrixXd P = random_matrix(rng, 2 * S, d);
    const Eigen::MatrixXd W = random_matrix(rng, d, d);
    const Eigen::MatrixXd A = random_matrix(rng, d, r);
    const Eigen::MatrixXd B = random_matrix(rng, r, d);

    SUBCASE("gamma 0 disables the adapter entirely") {
        const Eigen::MatrixXd out = masked_lora_project(P, W, A, B, 0.0, S);
        CHECK((out - P * W).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("visual rows match bitwise for arbitrary adapters") {
        const Eigen::MatrixXd out = masked_lora_project(P, W, A, B, 1.7, S);
        const Eigen::MatrixXd base = P * W;
        for (int m = 0; m < S; ++m)
            for (int j = 0; j < d; ++j) CHECK(out(m, j) == base(m, j));
        CHECK((out.bottomRows(S) - base.bottomRows(S)).cwiseAbs().maxCoeff() > 0.0);
    }
    SUBCASE("rank-1 adapter on a 2-token case matches the closed form") {
        const int S1 = 1, d1 = 2;
        Eigen::MatrixXd P1(2, 2);
        P1 << 1.0, 2.0, 3.0, 4.0;
        Eigen::MatrixXd W1(2, 2);
        W1 << 1.0, 0.0, 0.0, 1.0;
        Eigen::MatrixXd A1(2, 1);
        A1 << 1.0, 1.0;
        Eigen::MatrixXd B1(1, 2);
        B1 << 0.5, -0.5;
        const double gamma = 2.0;
        const Eigen::MatrixXd out = masked_lora_project(P1, W1, A1, B1, gamma, S1);
        // visual row: identity projection only
        CHECK(out(0, 0) == doctest::Approx(1.0));
        CHECK(out(0, 1) == doctest::Approx(2.0));
        // interaction row: (3+4) through A, spread by B, scaled by gamma
        CHECK(out(1, 0) == doctest::Approx(3.0 + 2.0 * 7.0 * 0.5));
        CHECK(out(1, 1) == doctest::Approx(4.0 - 2.0 * 7.0 * 0.5));
    }
}

TEST_CASE("interaction embedding touches only the interaction block") {
    Rng rng(331);
    const int S = 4, d = 7;
    const Eigen::MatrixXd h = random_matrix(rng, 2 * S, d);

    SUBCASE("zero embedding is the identity") {
        const Eigen::MatrixXd out = inject_interaction_embedding(h, Eigen::RowVectorXd::Zero(d), S);
        CHECK((out - h).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("visual rows are bitwise untouched") {
        Eigen::RowVectorXd e(d);
        for (int j = 0; j < d; ++j) e[j] = rng.normal();
        const Eigen::MatrixXd out = inject_interaction_embedding(h, e, S);
        for (int m = 0; m < S; ++m)
            for (int j = 0; j < d; ++j) CHECK(out(m, j) == h(m, j));
    }
    SUBCASE("all-ones embedding raises each interaction component by one") {
        const Eigen::MatrixXd out = inject_interaction_embedding(h, Eigen::RowVectorXd::Ones(d), S);
        CHECK((out.bottomRows(S) - h.bottomRows(S) -
               Eigen::MatrixXd::Ones(S, d)).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("alignment loss values") {
    const int d = 4;
    SUBCASE("identical pairs align perfectly") {
        Rng rng(7);
        const int S = 5;
        Eigen::MatrixXd h(2 * S, d);
        h.topRows(S) = random_matrix(rng, S, d);
        h.bottomRows(S) = h.topRows(S);
        CHECK(alignment_loss(h, S) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("anti-parallel pairs hit the 2S ceiling") {
        Rng rng(8);
        const int S = 5;
        Eigen::MatrixXd h(2 * S, d);
        h.topRows(S) = random_matrix(rng, S, d);
        h.bottomRows(S) = -h.topRows(S);
        CHECK(alignment_loss(h, S) == doctest::Approx(2.0 * S));
    }
    SUBCASE("the S=2 mixed example evaluates to 1") {
        Eigen::MatrixXd h(4, 2);
        h << 1, 0, 0, 1, 1, 0, 1, 0;
        CHECK(alignment_loss(h, 2) == doctest::Approx(1.0));
    }
    SUBCASE("zero-norm rows are stabilized, never NaN") {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(4, d);
        h(0, 0) = 1.0;
        const double loss = alignment_loss(h, 2);
        CHECK(std::isfinite(loss));
    }
    SUBCASE("range stays within [0, 2S] on random draws") {
        Rng rng(9);
        for (int i = 0; i < 50; ++i) {
            const int S = rng.uniform_int(1, 6);
            const Eigen::MatrixXd h = random_matrix(rng, 2 * S, d);
            const double loss = alignment_loss(h, S);
            CHECK(loss >= 0.0);
            CHECK(loss <= 2.0 * S + 1e-9);
        }
    }
}

TEST_CASE("alignment gradient matches central finite differences") {
    Rng rng(77);
    const int S = 4, d = 8;
    const Eigen::MatrixXd h0 = random_matrix(rng, 2 * S, d);

    ad::Tape tape;
    const ad::Var h = tape.leaf(h0, true);
    const ad::Var loss = tape.alignment_pairs(h, S);
    tape.backward(loss);
    const Eigen::MatrixXd analytic = tape.grad(h);

    const double step = 1e-6;
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < h0.rows(); ++i)
        for (Eigen::Index j = 0; j < h0.cols(); ++j) {
            Eigen::MatrixXd hp = h0, hm = h0;
            hp(i, j) += step;
            hm(i, j) -= step;
            const double fd = (alignment_loss(hp, S) - alignment_loss(hm, S)) / (2 * step);
            num += (fd - analytic(i, j)) * (fd - analytic(i, j));
            den += fd * fd;
        }
    CHECK(std::sqrt(num / den) < 1e-4);
}

TEST_CASE("denoiser forward contracts") {
    const ModelConfig cfg = micro_config();
    DenoiserState state = DenoiserState::init(cfg, 5);
    Rng rng(55);
    state.randomize(rng, 0.3);

    const int S = cfg.tokens_per_modality();
    TokenSequence z;
    z.grid = TokenGrid{cfg.grid_t, cfg.grid_h, cfg.grid_w};
    z.tokens = random_matrix(rng, 2 * S, cfg.channels);

    Conditioning cond;
    cond.task_id = 1;

    SUBCASE("output shape matches the input token block") {
        const ForwardResult out = denoiser_forward(z, 10, cond, state);
        CHECK(out.prediction.rows() == 2 * S);
        CHECK(out.prediction.cols() == cfg.channels);
        CHECK(out.h_kstar.rows() == 2 * S);
        CHECK(out.h_kstar.cols() == cfg.dim);
    }
    SUBCASE("two passes with the same weights are bit-identical") {
        const ForwardResult a = denoiser_forward(z, 10, cond, state);
        const ForwardResult b = denoiser_forward(z, 10, cond, state);
        CHECK((a.prediction - b.prediction).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("masking the interaction block changes the visual prediction") {
        const ForwardResult a = denoiser_forward(z, 10, cond, state);
        TokenSequence z2 = z;
        z2.tokens.bottomRows(S).setZero();
        const ForwardResult b = denoiser_forward(z2, 10, cond, state);
        CHECK((a.prediction.topRows(S) - b.prediction.topRows(S)).cwiseAbs().maxCoeff() > 1e-9);
    }
    SUBCASE("timestep outside the embedding contract still works, task id does not") {
        Conditioning bad;
        bad.task_id = 7;
        CHECK_THROWS_AS(denoiser_forward(z, 10, bad, state), ValidationError);
    }
    SUBCASE("first-frame conditioning replaces exactly the lead visual rows") {
        Conditioning with_ff;
        with_ff.task_id = 0;
        with_ff.first_frame_tokens = random_matrix(rng, cfg.conditioned_rows(), cfg.channels);
        const Eigen::MatrixXd z_in =
            apply_first_frame_conditioning(z.tokens, with_ff, cfg);
        CHECK((z_in.topRows(cfg.conditioned_rows()) - with_ff.first_frame_tokens)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
        CHECK((z_in.bottomRows(2 * S - cfg.conditioned_rows()) -
               z.tokens.bottomRows(2 * S - cfg.conditioned_rows()))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
}

TEST_CASE("modality symmetry with neutralized interaction mechanisms") {
    ModelConfig cfg = micro_config();
    DenoiserState state = DenoiserState::init(cfg, 6);
    Rng rng(66);
    state.randomize(rng, 0.25);

    // Neutralize everything that can tell the blocks apart.
    state.param("d_hoi").value.setZero();
    for (int i = 0; i < cfg.layers; ++i)
        for (const char* z : {"q", "k", "v"}) {
            state.param("layer" + std::to_string(i) + ".lora.a" + z).value.setZero();
            state.param("layer" + std::to_string(i) + ".lora.b" + z).value.setZero();
        }

    const int S = cfg.tokens_per_modality();
    TokenSequence z;
    z.grid = TokenGrid{cfg.grid_t, cfg.grid_h, cfg.grid_w};
    z.tokens.resize(2 * S, cfg.channels);
    const Eigen::MatrixXd block = random_matrix(rng, S, cfg.channels);
    z.tokens.topRows(S) = block;
    z.tokens.bottomRows(S) = block;

    Conditioning cond;
    cond.task_id = 0;
    const ForwardResult out = denoiser_forward(z, 123, cond, state);
    CHECK((out.prediction.topRows(S) - out.prediction.bottomRows(S)).cwiseAbs().maxCoeff() <
          1e-10);
}

TEST_CASE("composite loss") {
    LossWeights w{1.0, 0.1};

    SUBCASE("weighted sum with the published coefficients") {
        const int S = 4;
        Eigen::MatrixXd pred = Eigen::MatrixXd::Zero(2 * S, 1);
        Eigen::MatrixXd target(2 * S, 1);
        for (int m = 0; m < S; ++m) target(m, 0) = std::sqrt(0.5);
        for (int m = S; m < 2 * S; ++m) target(m, 0) = std::sqrt(0.3);
        Eigen::MatrixXd h(2 * S, 2);
        for (int m = 0; m < S; ++m) {
            h.row(m) << 1, 0;
            h.row(S + m) << 0, 1;  // orthogonal: align contributes 1 per pair
        }
        const LossComponents c = composite_loss(pred, target, h, S, w);
        CHECK(c.rgb == doctest::Approx(0.5));
        CHECK(c.hoi == doctest::Approx(0.3));
        CHECK(c.align == doctest::Approx(4.0));
        CHECK(c.total == doctest::Approx(1.2));
        CHECK(std::abs(c.total - (c.rgb + w.lambda_hoi * c.hoi + w.lambda_align * c.align)) <
              1e-7);
    }
    SUBCASE("zero weights reduce the total to the visual term") {
        Rng rng(3);
        const int S = 3;
        const Eigen::MatrixXd pred = random_matrix(rng, 2 * S, 4);
        const Eigen::MatrixXd target = random_matrix(rng, 2 * S, 4);
        const Eigen::MatrixXd h = random_matrix(rng, 2 * S, 4);
        const LossComponents c = composite_loss(pred, target, h, S, LossWeights{0.0, 0.0});
        CHECK(c.total == doctest::Approx(c.rgb));
        CHECK(c.align > 0.0);  // still reported
    }
    SUBCASE("perfect prediction with aligned states is exactly zero") {
        Rng rng(4);
        const int S = 3;
        const Eigen::MatrixXd pred = random_matrix(rng, 2 * S, 4);
        Eigen::MatrixXd h(2 * S, 4);
        h.topRows(S) = random_matrix(rng, S, 4);
        h.bottomRows(S) = h.topRows(S);
        const LossComponents c = composite_loss(pred, pred, h, S, w);
        CHECK(c.total == doctest::Approx(0.0).epsilon(1e-12));
    }
}
