#pragma once

#include <filesystem>

#include "scar/config.hpp"
#include "scar/repr.hpp"

namespace scar::harness {

RadiusParams radius_params(const RunConfig& cfg);
OverlayColors overlay_colors(const RunConfig& cfg);

/// Writes `synth.clips` procedurally generated clips in dataset format plus
/// an index.txt describing each motion program.
void cmd_synth_gen(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Curates every clip of a dataset into RGB/SCAR training pairs and writes a
/// per-frame contact-pixel summary.
void cmd_curate(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                const std::filesystem::path& out_dir);

/// Fits (or restores) the codec, encodes the curated pairs and trains the
/// joint denoiser. Emits loss_log.tsv, loss_curve.ppm and checkpoints.
void cmd_train(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
               const std::filesystem::path& out_dir,
               const std::filesystem::path& resume = {}, bool allow_mismatch = false);

/// Samples RGB + SCAR conditioned on a clip's first frame and task, writing
/// frames plus side-by-side montages.
void cmd_sample(const RunConfig& cfg, const std::filesystem::path& checkpoint_path,
                const std::filesystem::path& cond_manifest,
                const std::filesystem::path& out_dir, bool allow_mismatch = false);

/// Compares generated clips against references; writes report.txt.
void cmd_eval(const RunConfig& cfg, const std::filesystem::path& generated_dir,
              const std::filesystem::path& reference_dir,
              const std::filesystem::path& out_dir);

/// Runs the randomized oracle-equivalence suite. Returns true when every
/// case matches; on failure the first counterexample is dumped to out_dir.
/// `inject_fault` is a test hook that biases the fast path's radius by one.
bool cmd_oracle_check(const RunConfig& cfg, const std::filesystem::path& out_dir,
                      bool inject_fault = false);

}  // namespace scar::harness
