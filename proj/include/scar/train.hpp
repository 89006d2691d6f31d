#pragma once

#include <cstdint>
#include <vector>

#include "scar/denoiser.hpp"
#include "scar/schedule.hpp"

namespace scar {

struct AdamConfig {
    double lr = 2e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// One training example in token space: clean unified sequence plus its
/// conditioning (first-frame tokens and task id).
struct TrainItem {
    Eigen::MatrixXd z0;
    Conditioning cond;
};

/// Owns the model, optimizer moments and the RNG stream. A step samples a
/// timestep and noise per example, runs the co-denoising forward, applies the
/// composite loss and takes one Adam step. Fully deterministic given the
/// seed; the RNG counter and moments persist through checkpoints so resumed
/// runs match uninterrupted ones.
class Trainer {
public:
    Trainer(DenoiserState state, NoiseSchedule sched, LossWeights weights, AdamConfig adam,
            bool detach_alignment, std::uint64_t seed);

    /// Draws `batch_size` items (with replacement) and takes one step.
    LossComponents step(const std::vector<TrainItem>& dataset, int batch_size);

    /// One gradient step on an explicit batch.
    LossComponents step_batch(const std::vector<const TrainItem*>& batch);

    DenoiserState& state() { return state_; }
    const DenoiserState& state() const { return state_; }
    const NoiseSchedule& schedule() const { return sched_; }
    const LossWeights& weights() const { return weights_; }

    std::uint64_t steps_done() const { return steps_done_; }
    void set_steps_done(std::uint64_t n) { steps_done_ = n; }
    Rng& rng() { return rng_; }

private:
    DenoiserState state_;
    NoiseSchedule sched_;
    LossWeights weights_;
    AdamConfig adam_;
    bool detach_alignment_;
    Rng rng_;
    std::uint64_t steps_done_ = 0;
};

}  // namespace scar
