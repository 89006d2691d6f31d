#include "scar/plot.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "scar/pnm.hpp"

namespace scar {

namespace {

struct Color {
    float r, g, b;
};

const Color kSeriesColors[] = {
    {0.10f, 0.10f, 0.10f},  // total
    {0.85f, 0.25f, 0.20f},  // rgb
    {0.15f, 0.45f, 0.85f},  // hoi
    {0.15f, 0.65f, 0.30f},  // align
    {0.65f, 0.30f, 0.75f},
    {0.90f, 0.60f, 0.10f},
};

// 5x7 bitmap glyphs for axis labels and the legend.
const std::map<char, std::array<std::uint8_t, 7>>& font() {
    static const std::map<char, std::array<std::uint8_t, 7>> f = {
        {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
        {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
        {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
        {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
        {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
        {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
        {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
        {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
        {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
        {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
        {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
        {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
        {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
        {'e', {0x00, 0x00, 0x0E, 0x11, 0x1F, 0x10, 0x0E}},
        {'a', {0x00, 0x00, 0x0E, 0x01, 0x0F, 0x11, 0x0F}},
        {'b', {0x10, 0x10, 0x1E, 0x11, 0x11, 0x11, 0x1E}},
        {'g', {0x00, 0x00, 0x0F, 0x11, 0x0F, 0x01, 0x0E}},
        {'h', {0x10, 0x10, 0x1E, 0x11, 0x11, 0x11, 0x11}},
        {'i', {0x04, 0x00, 0x0C, 0x04, 0x04, 0x04, 0x0E}},
        {'l', {0x0C, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
        {'n', {0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11}},
        {'o', {0x00, 0x00, 0x0E, 0x11, 0x11, 0x11, 0x0E}},
        {'p', {0x00, 0x00, 0x1E, 0x11, 0x1E, 0x10, 0x10}},
        {'r', {0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10}},
        {'s', {0x00, 0x00, 0x0F, 0x10, 0x0E, 0x01, 0x1E}},
        {'t', {0x08, 0x08, 0x1C, 0x08, 0x08, 0x09, 0x06}},
        {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    };
    return f;
}

void draw_text(RgbImage& img, int x, int y, const std::string& text, const Color& c) {
    for (char ch : text) {
        const auto it = font().find(ch);
        if (it != font().end()) {
            for (int row = 0; row < 7; ++row)
                for (int col = 0; col < 5; ++col)
                    if (it->second[row] & (0x10 >> col)) {
                        const int px = x + col, py = y + row;
                        if (px >= 0 && py >= 0 && px < img.width && py < img.height)
                            img.set(px, py, c.r, c.g, c.b);
                    }
        }
        x += 6;
    }
}

void draw_line(RgbImage& img, int x0, int y0, int x1, int y1, const Color& c) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        if (x0 >= 0 && y0 >= 0 && x0 < img.width && y0 < img.height)
            img.set(x0, y0, c.r, c.g, c.b);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

std::string exp_label(int decade) { return "1e" + std::to_string(decade); }

}  // namespace

void render_loss_plot(const std::vector<PlotSeries>& series, const std::filesystem::path& path,
                      int width, int height) {
    RgbImage img(width, height, 1.f, 1.f, 1.f);
    const int left = 52, right = width - 16, top = 16, bottom = height - 34;

    double lo = std::numeric_limits<double>::max(), hi = std::numeric_limits<double>::lowest();
    std::size_t max_len = 0;
    for (const auto& s : series) {
        max_len = std::max(max_len, s.values.size());
        for (double v : s.values) {
            const double clamped = std::max(v, 1e-8);
            lo = std::min(lo, clamped);
            hi = std::max(hi, clamped);
        }
    }
    if (max_len == 0) {
        pnm::write_rgb8(path, img);
        return;
    }
    const double log_lo = std::floor(std::log10(lo));
    const double log_hi = std::ceil(std::log10(hi) + 1e-12);
    const double span = std::max(log_hi - log_lo, 1.0);

    const auto map_y = [&](double v) {
        const double t = (std::log10(std::max(v, 1e-8)) - log_lo) / span;
        return bottom - static_cast<int>(std::lround(t * (bottom - top)));
    };
    const auto map_x = [&](std::size_t i) {
        const double t = max_len > 1 ? static_cast<double>(i) / (max_len - 1) : 0.0;
        return left + static_cast<int>(std::lround(t * (right - left)));
    };

    const Color grid{0.85f, 0.85f, 0.85f}, axis{0.2f, 0.2f, 0.2f};
    for (int d = static_cast<int>(log_lo); d <= static_cast<int>(log_hi); ++d) {
        const int y = map_y(std::pow(10.0, d));
        draw_line(img, left, y, right, y, grid);
        draw_text(img, 8, y - 3, exp_label(d), axis);
    }
    draw_line(img, left, top, left, bottom, axis);
    draw_line(img, left, bottom, right, bottom, axis);
    draw_text(img, right - 5 * 6 - 30, bottom + 10, "step " + std::to_string(max_len), axis);

    for (std::size_t s = 0; s < series.size(); ++s) {
        const Color c = kSeriesColors[s % std::size(kSeriesColors)];
        const auto& vals = series[s].values;
        for (std::size_t i = 1; i < vals.size(); ++i)
            draw_line(img, map_x(i - 1), map_y(vals[i - 1]), map_x(i), map_y(vals[i]), c);
        const int lx = left + 12 + static_cast<int>(s) * 110;
        draw_line(img, lx, bottom + 14, lx + 16, bottom + 14, c);
        draw_text(img, lx + 22, bottom + 10, series[s].label, axis);
    }
    pnm::write_rgb8(path, img);
}

RgbImage montage_row(const std::vector<const RgbImage*>& frames, int separator) {
    int width = separator * (static_cast<int>(frames.size()) - 1), height = 0;
    for (const auto* f : frames) {
        width += f->width;
        height = std::max(height, f->height);
    }
    RgbImage out(width, height, 1.f, 1.f, 1.f);
    int x0 = 0;
    for (const auto* f : frames) {
        for (int y = 0; y < f->height; ++y)
            for (int x = 0; x < f->width; ++x)
                out.set(x0 + x, y, f->at(x, y, 0), f->at(x, y, 1), f->at(x, y, 2));
        x0 += f->width + separator;
    }
    return out;
}

}  // namespace scar
