#include "scar/train.hpp"

#include <cmath>

#include "scar/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace scar {

Trainer::Trainer(DenoiserState state, NoiseSchedule sched, LossWeights weights, AdamConfig adam,
                 bool detach_alignment, std::uint64_t seed)
    : state_(std::move(state)),
      sched_(std::move(sched)),
      weights_(weights),
      adam_(adam),
      detach_alignment_(detach_alignment),
      rng_(seed) {
    sched_.validate();
}

LossComponents Trainer::step(const std::vector<TrainItem>& dataset, int batch_size) {
    if (dataset.empty()) throw EmptyClip("train step: empty dataset");
    std::vector<const TrainItem*> batch(batch_size);
    for (int i = 0; i < batch_size; ++i)
        batch[i] = &dataset[rng_.uniform_int(0, static_cast<int>(dataset.size()) - 1)];
    return step_batch(batch);
}

LossComponents Trainer::step_batch(const std::vector<const TrainItem*>& batch) {
    if (batch.empty()) throw EmptyClip("train step: empty batch");
    const ModelConfig& cfg = state_.cfg;
    const int S = cfg.tokens_per_modality();
    const int B = static_cast<int>(batch.size());

    // Draw all randomness up front, in batch order, so the stream is
    // independent of how the example loop is scheduled.
    std::vector<int> ts(B);
    std::vector<Eigen::MatrixXd> eps(B);
    for (int b = 0; b < B; ++b) {
        ts[b] = rng_.uniform_int(1, sched_.timesteps);
        eps[b].resize(2 * S, cfg.channels);
        for (Eigen::Index i = 0; i < eps[b].rows(); ++i)
            for (Eigen::Index j = 0; j < eps[b].cols(); ++j) eps[b](i, j) = rng_.normal();
    }

    std::vector<int> trainable;
    for (std::size_t i = 0; i < state_.params.size(); ++i)
        if (state_.params[i].trainable) trainable.push_back(static_cast<int>(i));

    std::vector<std::vector<ad::Mat>> grads(B);
    std::vector<LossComponents> comps(B);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int b = 0; b < B; ++b) {
        const TrainItem& item = *batch[b];
        const double abar = sched_.at(ts[b]);
        const Eigen::MatrixXd z_t = forward_noising_at(item.z0, abar, eps[b]);
        const Eigen::MatrixXd z_in = apply_first_frame_conditioning(z_t, item.cond, cfg);

        Eigen::MatrixXd target;
        if (cfg.target == "velocity")
            target = std::sqrt(abar) * eps[b] - std::sqrt(1.0 - abar) * item.z0;
        else
            target = eps[b];

        ad::Tape tape;
        const auto pv = insert_params(tape, state_, /*with_grad=*/true);
        const ForwardVars fv = build_forward(tape, state_, pv, z_in, ts[b], item.cond);

        const ad::Var target_var = tape.constant(target);
        const ad::Var l_rgb = tape.mse_rows(fv.prediction, target_var, 0, S);
        const ad::Var l_hoi = tape.mse_rows(fv.prediction, target_var, S, 2 * S);
        const ad::Var align_src =
            detach_alignment_ ? tape.constant(tape.val(fv.h_kstar)) : fv.h_kstar;
        const ad::Var l_align = tape.alignment_pairs(align_src, S);
        const ad::Var total = tape.add(tape.add(l_rgb, tape.scale(l_hoi, weights_.lambda_hoi)),
                                       tape.scale(l_align, weights_.lambda_align));

        comps[b].rgb = tape.val(l_rgb)(0, 0);
        comps[b].hoi = tape.val(l_hoi)(0, 0);
        comps[b].align = tape.val(l_align)(0, 0);
        comps[b].total = tape.val(total)(0, 0);

        tape.backward(total);
        grads[b].reserve(trainable.size());
        for (int idx : trainable) grads[b].push_back(tape.grad(pv[idx]));
    }

    LossComponents mean;
    for (int b = 0; b < B; ++b) {
        mean.rgb += comps[b].rgb / B;
        mean.hoi += comps[b].hoi / B;
        mean.align += comps[b].align / B;
        mean.total += comps[b].total / B;
    }
    if (!std::isfinite(mean.total) || !std::isfinite(mean.rgb) || !std::isfinite(mean.hoi) ||
        !std::isfinite(mean.align))
        throw NonFiniteLoss("at optimizer step " + std::to_string(steps_done_ + 1) +
                            ": rgb=" + std::to_string(mean.rgb) + " hoi=" +
                            std::to_string(mean.hoi) + " align=" + std::to_string(mean.align));

    // Reduce in fixed order, then Adam.
    const double t_adam = static_cast<double>(steps_done_ + 1);
    const double bc1 = 1.0 - std::pow(adam_.beta1, t_adam);
    const double bc2 = 1.0 - std::pow(adam_.beta2, t_adam);
    for (std::size_t k = 0; k < trainable.size(); ++k) {
        Param& p = state_.params[trainable[k]];
        ad::Mat g = grads[0][k];
        for (int b = 1; b < B; ++b) g += grads[b][k];
        g /= static_cast<double>(B);

        p.adam_m = adam_.beta1 * p.adam_m + (1.0 - adam_.beta1) * g;
        p.adam_v = adam_.beta2 * p.adam_v + (1.0 - adam_.beta2) * g.cwiseProduct(g);
        const ad::Mat m_hat = p.adam_m / bc1;
        const ad::Mat v_hat = p.adam_v / bc2;
        p.value -= adam_.lr * (m_hat.array() / (v_hat.array().sqrt() + adam_.eps)).matrix();
    }
    ++steps_done_;
    return mean;
}

}  // namespace scar
