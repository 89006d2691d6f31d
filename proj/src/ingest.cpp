#include "scar/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "scar/pnm.hpp"

namespace scar {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kStreamKeys = {"rgb", "hand_mask", "object_mask", "depth", "scar"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

void check_pattern(const std::string& pattern, const std::string& key) {
    if (pattern.find("%05d") == std::string::npos)
        throw BadManifest("stream pattern for '" + key + "' must contain %05d: " + pattern);
}

std::uint8_t quantize8(float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.f, 1.f) * 255.f));
}

void write_frames_rgb(const fs::path& dir, const std::string& pattern,
                      const std::vector<RgbImage>& frames) {
    for (std::size_t i = 0; i < frames.size(); ++i)
        pnm::write_rgb8(dir / frame_file_name(pattern, static_cast<int>(i)), frames[i]);
}

ClipManifest base_manifest(const std::string& clip_id, int frames, int width, int height,
                           double fps, const std::string& task) {
    ClipManifest m;
    m.clip_id = clip_id;
    m.frame_count = frames;
    m.width = width;
    m.height = height;
    m.fps = fps;
    m.task_description = task.empty() ? "n/a" : task;
    return m;
}

// Decodes one stream of a clip, checking existence for the declared frame
// count before any decode so count mismatches surface as MissingFile.
template <typename Decode>
void load_stream(const fs::path& dir, const ClipManifest& m, const std::string& stream,
                 Decode&& decode) {
    const auto it = m.stream_patterns.find(stream);
    if (it == m.stream_patterns.end())
        throw BadManifest("manifest is missing required stream '" + stream + "'");
    for (int i = 0; i < m.frame_count; ++i) {
        const fs::path p = dir / frame_file_name(it->second, i);
        if (!fs::exists(p))
            throw MissingFile(stream + ", frame " + std::to_string(i) + ": " + p.string());
    }
    for (int i = 0; i < m.frame_count; ++i) decode(dir / frame_file_name(it->second, i), i);
}

void check_frame_shape(int w, int h, const ClipManifest& m, const std::string& stream, int index) {
    if (w != m.width || h != m.height)
        throw ShapeMismatch(stream + ", frame " + std::to_string(index) + ": got " +
                            std::to_string(w) + "x" + std::to_string(h) + ", expected " +
                            std::to_string(m.width) + "x" + std::to_string(m.height));
}

}  // namespace

std::string frame_file_name(const std::string& pattern, int index) {
    const auto pos = pattern.find("%05d");
    if (pos == std::string::npos) throw BadManifest("pattern lacks %05d: " + pattern);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d", index);
    return pattern.substr(0, pos) + buf + pattern.substr(pos + 4);
}

ClipManifest read_manifest(const fs::path& path, std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw MissingFile("manifest: " + path.string());

    ClipManifest m;
    std::set<std::string> seen;
    std::string line;
    while (std::getline(in, line)) {
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw BadManifest("expected 'key = value', got: " + stripped);
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        seen.insert(key);
        try {
            if (key == "clip_id")
                m.clip_id = value;
            else if (key == "frame_count")
                m.frame_count = std::stoi(value);
            else if (key == "width")
                m.width = std::stoi(value);
            else if (key == "height")
                m.height = std::stoi(value);
            else if (key == "fps")
                m.fps = std::stod(value);
            else if (key == "task_description")
                m.task_description = value;
            else if (kStreamKeys.count(key)) {
                check_pattern(value, key);
                m.stream_patterns[key] = value;
            } else if (warnings) {
                warnings->push_back("ignoring unknown manifest key '" + key + "'");
            }
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw BadManifest("bad value for '" + key + "': " + value);
        }
    }

    for (const char* req : {"clip_id", "frame_count", "width", "height", "fps"})
        if (!seen.count(req)) throw BadManifest("missing required key '" + std::string(req) + "'");
    if (m.frame_count < 1) throw BadManifest("frame_count must be >= 1");
    if (m.width < 1 || m.height < 1) throw BadManifest("width and height must be >= 1");
    if (m.fps <= 0) throw BadManifest("fps must be > 0");
    if (m.task_description.empty()) throw BadManifest("task_description must be non-empty");
    return m;
}

void write_manifest(const ClipManifest& manifest, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    out << "clip_id = " << manifest.clip_id << "\n";
    out << "frame_count = " << manifest.frame_count << "\n";
    out << "width = " << manifest.width << "\n";
    out << "height = " << manifest.height << "\n";
    out << "fps = " << manifest.fps << "\n";
    out << "task_description = " << manifest.task_description << "\n";
    for (const auto& [stream, pattern] : manifest.stream_patterns)
        out << stream << " = " << pattern << "\n";
    if (!out) throw IoError("short write: " + path.string());
}

Clip load_clip(const fs::path& manifest_path, std::vector<std::string>* warnings) {
    const fs::path dir = manifest_path.parent_path();
    Clip clip;
    clip.manifest = read_manifest(manifest_path, warnings);
    const ClipManifest& m = clip.manifest;

    clip.rgb.resize(m.frame_count);
    load_stream(dir, m, "rgb", [&](const fs::path& p, int i) {
        RgbImage img = pnm::read_rgb8(p);
        check_frame_shape(img.width, img.height, m, "rgb", i);
        clip.rgb[i] = std::move(img);
    });

    const auto load_mask = [&](const std::string& stream, std::vector<BinaryMask>& out) {
        out.resize(m.frame_count);
        load_stream(dir, m, stream, [&](const fs::path& p, int i) {
            int w = 0, h = 0;
            const auto gray = pnm::read_gray8(p, w, h);
            check_frame_shape(w, h, m, stream, i);
            BinaryMask mask(w, h);
            for (std::size_t k = 0; k < gray.size(); ++k) mask.bits[k] = gray[k] >= 128 ? 1 : 0;
            out[i] = std::move(mask);
        });
    };
    load_mask("hand_mask", clip.hand_masks);
    load_mask("object_mask", clip.object_masks);

    clip.depth.resize(m.frame_count);
    load_stream(dir, m, "depth", [&](const fs::path& p, int i) {
        int w = 0, h = 0;
        const auto raw = pnm::read_gray16(p, w, h);
        check_frame_shape(w, h, m, "depth", i);
        DepthFrame frame(w, h);
        for (std::size_t k = 0; k < raw.size(); ++k) frame.values[k] = raw[k] / 65535.f;
        clip.depth[i] = std::move(frame);
    });

    return clip;
}

fs::path write_scar_video(const ScarVideo& video, const fs::path& out_dir) {
    if (video.frames.empty()) throw BadManifest("refusing to write a 0-frame scar video");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    ClipManifest m = base_manifest(video.clip_id, static_cast<int>(video.frames.size()),
                                   video.frames[0].width, video.frames[0].height,
                                   video.fps > 0 ? video.fps : 1.0, video.task_description);
    m.stream_patterns["scar"] = "scar_%05d.ppm";
    write_frames_rgb(out_dir, m.stream_patterns["scar"], video.frames);
    const fs::path manifest_path = out_dir / "manifest.txt";
    write_manifest(m, manifest_path);
    return manifest_path;
}

ScarVideo load_scar_video(const fs::path& manifest_path) {
    const fs::path dir = manifest_path.parent_path();
    const ClipManifest m = read_manifest(manifest_path);
    ScarVideo video;
    video.clip_id = m.clip_id;
    video.fps = m.fps;
    video.task_description = m.task_description;
    video.frames.resize(m.frame_count);
    load_stream(dir, m, "scar", [&](const fs::path& p, int i) {
        RgbImage img = pnm::read_rgb8(p);
        check_frame_shape(img.width, img.height, m, "scar", i);
        video.frames[i] = std::move(img);
    });
    return video;
}

fs::path write_clip(const Clip& clip, const fs::path& out_dir) {
    if (clip.frames() == 0) throw BadManifest("refusing to write a 0-frame clip");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    ClipManifest m = clip.manifest;
    m.stream_patterns = {{"rgb", "rgb_%05d.ppm"},
                         {"hand_mask", "hand_mask_%05d.pgm"},
                         {"object_mask", "object_mask_%05d.pgm"},
                         {"depth", "depth_%05d.pgm"}};

    write_frames_rgb(out_dir, m.stream_patterns["rgb"], clip.rgb);
    const auto write_masks = [&](const std::string& stream, const std::vector<BinaryMask>& masks) {
        for (std::size_t i = 0; i < masks.size(); ++i) {
            std::vector<std::uint8_t> gray(masks[i].bits.size());
            for (std::size_t k = 0; k < gray.size(); ++k) gray[k] = masks[i].bits[k] ? 255 : 0;
            pnm::write_gray8(out_dir / frame_file_name(m.stream_patterns[stream], static_cast<int>(i)),
                             gray, masks[i].width, masks[i].height);
        }
    };
    write_masks("hand_mask", clip.hand_masks);
    write_masks("object_mask", clip.object_masks);
    for (std::size_t i = 0; i < clip.depth.size(); ++i) {
        std::vector<std::uint16_t> raw(clip.depth[i].values.size());
        for (std::size_t k = 0; k < raw.size(); ++k) {
            const float v = std::clamp(clip.depth[i].values[k], 0.f, 1.f);
            raw[k] = static_cast<std::uint16_t>(std::lround(v * 65535.f));
        }
        pnm::write_gray16(out_dir / frame_file_name(m.stream_patterns["depth"], static_cast<int>(i)),
                          raw, clip.depth[i].width, clip.depth[i].height);
    }

    const fs::path manifest_path = out_dir / "manifest.txt";
    write_manifest(m, manifest_path);
    return manifest_path;
}

fs::path write_pair(const Clip& clip, const ScarVideo& video, const fs::path& out_dir) {
    if (clip.frames() == 0 || video.frames.empty())
        throw BadManifest("refusing to write an empty pair");
    if (clip.frames() != static_cast<int>(video.frames.size()))
        throw ShapeMismatch("pair: rgb has " + std::to_string(clip.frames()) + " frames, scar has " +
                            std::to_string(video.frames.size()));
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    ClipManifest m = base_manifest(clip.manifest.clip_id, clip.frames(), clip.manifest.width,
                                   clip.manifest.height, clip.manifest.fps,
                                   clip.manifest.task_description);
    m.stream_patterns = {{"rgb", "rgb_%05d.ppm"}, {"scar", "scar_%05d.ppm"}};
    write_frames_rgb(out_dir, m.stream_patterns["rgb"], clip.rgb);
    write_frames_rgb(out_dir, m.stream_patterns["scar"], video.frames);
    const fs::path manifest_path = out_dir / "manifest.txt";
    write_manifest(m, manifest_path);
    return manifest_path;
}

PairedClip load_pair(const fs::path& manifest_path) {
    const fs::path dir = manifest_path.parent_path();
    PairedClip pair;
    pair.manifest = read_manifest(manifest_path);
    const ClipManifest& m = pair.manifest;
    pair.rgb.resize(m.frame_count);
    pair.scar.resize(m.frame_count);
    load_stream(dir, m, "rgb", [&](const fs::path& p, int i) {
        RgbImage img = pnm::read_rgb8(p);
        check_frame_shape(img.width, img.height, m, "rgb", i);
        pair.rgb[i] = std::move(img);
    });
    load_stream(dir, m, "scar", [&](const fs::path& p, int i) {
        RgbImage img = pnm::read_rgb8(p);
        check_frame_shape(img.width, img.height, m, "scar", i);
        pair.scar[i] = std::move(img);
    });
    return pair;
}

std::vector<std::string> validate_clip(const Clip& clip) {
    std::vector<std::string> warnings;
    const int n = clip.frames();
    if (n == 0) return {"clip has no frames"};

    int empty_hand = 0, empty_object = 0, high_iou = 0;
    for (int i = 0; i < n; ++i) {
        const bool hand_empty = clip.hand_masks[i].none();
        const bool object_empty = clip.object_masks[i].none();
        empty_hand += hand_empty;
        empty_object += object_empty;
        if (!hand_empty && !object_empty) {
            std::size_t inter = 0, uni = 0;
            for (std::size_t k = 0; k < clip.hand_masks[i].bits.size(); ++k) {
                inter += clip.hand_masks[i].bits[k] & clip.object_masks[i].bits[k];
                uni += clip.hand_masks[i].bits[k] | clip.object_masks[i].bits[k];
            }
            if (uni > 0 && static_cast<double>(inter) / static_cast<double>(uni) > 0.9) ++high_iou;
        }
    }

    const auto frac = [n](int k) {
        return std::to_string(k) + "/" + std::to_string(n) + " frames";
    };
    if (empty_hand > 0) warnings.push_back("empty hand mask on " + frac(empty_hand));
    if (empty_object > 0) warnings.push_back("empty object mask on " + frac(empty_object));
    if (high_iou > 0)
        warnings.push_back("high hand/object IoU (> 0.9) on " + frac(high_iou) +
                           ", suspect grounding");

    float lo = std::numeric_limits<float>::max(), hi = std::numeric_limits<float>::lowest();
    for (const auto& d : clip.depth)
        for (float v : d.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!clip.depth.empty() && hi - lo < 1e-6f)
        warnings.push_back("flat depth: dynamic range < 1e-6");
    return warnings;
}

std::vector<fs::path> find_clip_manifests(const fs::path& dataset_dir) {
    std::vector<fs::path> manifests;
    if (!fs::exists(dataset_dir)) return manifests;
    for (const auto& entry : fs::directory_iterator(dataset_dir)) {
        if (!entry.is_directory()) continue;
        const fs::path m = entry.path() / "manifest.txt";
        if (fs::exists(m)) manifests.push_back(m);
    }
    std::sort(manifests.begin(), manifests.end());
    return manifests;
}

}  // namespace scar
