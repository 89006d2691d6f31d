#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "scar/image.hpp"

namespace scar::pnm {

// Binary PNM codecs used by the dataset format: P5 grayscale at 8 or 16 bit
// and P6 RGB at 8 bit. 16-bit samples are big-endian per the PNM spec.

void write_gray8(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels,
                 int width, int height);
void write_gray16(const std::filesystem::path& path, const std::vector<std::uint16_t>& pixels,
                  int width, int height);
void write_rgb8(const std::filesystem::path& path, const RgbImage& image);

std::vector<std::uint8_t> read_gray8(const std::filesystem::path& path, int& width, int& height);
std::vector<std::uint16_t> read_gray16(const std::filesystem::path& path, int& width, int& height);
RgbImage read_rgb8(const std::filesystem::path& path);

}  // namespace scar::pnm
