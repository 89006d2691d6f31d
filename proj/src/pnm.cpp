#include "scar/pnm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "scar/errors.hpp"

namespace scar::pnm {

namespace {

void write_header(std::ofstream& out, const char* magic, int width, int height, int maxval) {
    out << magic << "\n" << width << " " << height << "\n" << maxval << "\n";
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    return in;
}

// Reads one whitespace/comment-separated token from a PNM header.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

struct Header {
    std::string magic;
    int width = 0, height = 0, maxval = 0;
};

Header read_header(std::istream& in, const std::filesystem::path& path) {
    Header h;
    h.magic = next_token(in);
    try {
        h.width = std::stoi(next_token(in));
        h.height = std::stoi(next_token(in));
        h.maxval = std::stoi(next_token(in));
    } catch (const std::exception&) {
        throw DecodeError("malformed PNM header: " + path.string());
    }
    if (h.width < 1 || h.height < 1)
        throw DecodeError("bad PNM dimensions: " + path.string());
    return h;
}

}  // namespace

void write_gray8(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels,
                 int width, int height) {
    auto out = open_out(path);
    write_header(out, "P5", width, height, 255);
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (!out) throw IoError("short write: " + path.string());
}

void write_gray16(const std::filesystem::path& path, const std::vector<std::uint16_t>& pixels,
                  int width, int height) {
    auto out = open_out(path);
    write_header(out, "P5", width, height, 65535);
    std::vector<std::uint8_t> buf(pixels.size() * 2);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        buf[2 * i] = static_cast<std::uint8_t>(pixels[i] >> 8);
        buf[2 * i + 1] = static_cast<std::uint8_t>(pixels[i] & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("short write: " + path.string());
}

void write_rgb8(const std::filesystem::path& path, const RgbImage& image) {
    auto out = open_out(path);
    write_header(out, "P6", image.width, image.height, 255);
    std::vector<std::uint8_t> buf(image.rgb.size());
    for (std::size_t i = 0; i < image.rgb.size(); ++i) {
        const float v = std::clamp(image.rgb[i], 0.f, 1.f);
        buf[i] = static_cast<std::uint8_t>(std::lround(v * 255.f));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("short write: " + path.string());
}

std::vector<std::uint8_t> read_gray8(const std::filesystem::path& path, int& width, int& height) {
    auto in = open_in(path);
    const Header h = read_header(in, path);
    if (h.magic != "P5" || h.maxval != 255)
        throw DecodeError("expected 8-bit P5: " + path.string());
    width = h.width;
    height = h.height;
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(pixels.size()))
        throw DecodeError("truncated pixel data: " + path.string());
    return pixels;
}

std::vector<std::uint16_t> read_gray16(const std::filesystem::path& path, int& width, int& height) {
    auto in = open_in(path);
    const Header h = read_header(in, path);
    if (h.magic != "P5" || h.maxval != 65535)
        throw DecodeError("expected 16-bit P5: " + path.string());
    width = h.width;
    height = h.height;
    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<std::uint8_t> buf(n * 2);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size()))
        throw DecodeError("truncated pixel data: " + path.string());
    std::vector<std::uint16_t> pixels(n);
    for (std::size_t i = 0; i < n; ++i)
        pixels[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
    return pixels;
}

RgbImage read_rgb8(const std::filesystem::path& path) {
    auto in = open_in(path);
    const Header h = read_header(in, path);
    if (h.magic != "P6" || h.maxval != 255)
        throw DecodeError("expected 8-bit P6: " + path.string());
    RgbImage image(h.width, h.height);
    std::vector<std::uint8_t> buf(image.rgb.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size()))
        throw DecodeError("truncated pixel data: " + path.string());
    for (std::size_t i = 0; i < buf.size(); ++i) image.rgb[i] = buf[i] / 255.f;
    return image;
}

}  // namespace scar::pnm
