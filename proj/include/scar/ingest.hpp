#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scar/clip.hpp"

namespace scar {

/// Parses a key/value manifest. Unknown keys are skipped; if `warnings` is
/// non-null a note is appended for each one.
ClipManifest read_manifest(const std::filesystem::path& path,
                           std::vector<std::string>* warnings = nullptr);

void write_manifest(const ClipManifest& manifest, const std::filesystem::path& path);

/// Loads and validates a full clip (rgb + hand_mask + object_mask + depth).
/// Masks binarize at half of full scale; depth is read as 16-bit and scaled
/// by 1/65535. Shape or count problems throw before a partial Clip escapes.
Clip load_clip(const std::filesystem::path& manifest_path,
               std::vector<std::string>* warnings = nullptr);

/// Writes one 8-bit RGB image per frame plus a manifest; returns the manifest
/// path. Round-trips within 8-bit quantization.
std::filesystem::path write_scar_video(const ScarVideo& video,
                                       const std::filesystem::path& out_dir);

ScarVideo load_scar_video(const std::filesystem::path& manifest_path);

/// Writes a full synthetic clip in dataset format (all four streams).
std::filesystem::path write_clip(const Clip& clip, const std::filesystem::path& out_dir);

/// Curated training pair: the source RGB video next to its curated
/// representation, a single manifest covering both streams.
struct PairedClip {
    ClipManifest manifest;
    std::vector<RgbImage> rgb;
    std::vector<ScarFrame> scar;
};

std::filesystem::path write_pair(const Clip& clip, const ScarVideo& video,
                                 const std::filesystem::path& out_dir);
PairedClip load_pair(const std::filesystem::path& manifest_path);

/// Non-fatal diagnostics: empty masks, suspiciously high hand/object IoU,
/// flat depth. An unremarkable clip yields an empty list.
std::vector<std::string> validate_clip(const Clip& clip);

/// Sorted list of manifest paths for every immediate subdirectory of
/// `dataset_dir` containing a manifest.txt.
std::vector<std::filesystem::path> find_clip_manifests(const std::filesystem::path& dataset_dir);

/// Frame file name for a stream pattern, e.g. pattern "rgb_%05d.ppm", 7 ->
/// "rgb_00007.ppm". Patterns must contain exactly one %05d placeholder.
std::string frame_file_name(const std::string& pattern, int index);

}  // namespace scar
