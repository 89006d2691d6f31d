#pragma once

#include <cstdint>
#include <vector>

#include "scar/errors.hpp"

namespace scar {

/// Row-major boolean grid. Also used for contours and contact regions, which
/// are masks with extra invariants attached by the producing operation.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;  // 0/1, size width*height

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h) {
        if (w < 1 || h < 1) throw ValidationError("BinaryMask dimensions must be >= 1");
        bits.assign(static_cast<std::size_t>(w) * h, 0);
    }

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v = true) {
        bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }
    bool same_shape(const BinaryMask& o) const { return width == o.width && height == o.height; }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : bits) n += b;
        return n;
    }
    bool none() const { return count() == 0; }

    bool operator==(const BinaryMask& o) const = default;
};

using Contour = BinaryMask;
using ContactRegion = BinaryMask;

/// Non-negative relative depth, row-major.
struct DepthFrame {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    DepthFrame() = default;
    DepthFrame(int w, int h, float fill = 0.f) : width(w), height(h) {
        if (w < 1 || h < 1) throw ValidationError("DepthFrame dimensions must be >= 1");
        values.assign(static_cast<std::size_t>(w) * h, fill);
    }

    float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    bool same_shape(const DepthFrame& o) const { return width == o.width && height == o.height; }
};

/// Interleaved RGB, channels in [0,1].
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<float> rgb;  // size 3*width*height

    RgbImage() = default;
    RgbImage(int w, int h, float r = 0.f, float g = 0.f, float b = 0.f) : width(w), height(h) {
        if (w < 1 || h < 1) throw ValidationError("RgbImage dimensions must be >= 1");
        rgb.resize(static_cast<std::size_t>(w) * h * 3);
        for (std::size_t i = 0; i < rgb.size(); i += 3) {
            rgb[i] = r;
            rgb[i + 1] = g;
            rgb[i + 2] = b;
        }
    }

    float at(int x, int y, int c) const {
        return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    float& at(int x, int y, int c) {
        return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    void set(int x, int y, float r, float g, float b) {
        auto* p = &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }
    bool same_shape(const RgbImage& o) const { return width == o.width && height == o.height; }
};

using ScarFrame = RgbImage;

}  // namespace scar
