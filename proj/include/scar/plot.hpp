#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scar/image.hpp"

namespace scar {

struct PlotSeries {
    std::string label;
    std::vector<double> values;  // one point per step
};

/// Renders loss curves on a log-y canvas with decade gridlines and a legend,
/// written as an 8-bit PPM.
void render_loss_plot(const std::vector<PlotSeries>& series, const std::filesystem::path& path,
                      int width = 900, int height = 540);

/// Side-by-side frame montage (RGB | SCAR | optional ground truth).
RgbImage montage_row(const std::vector<const RgbImage*>& frames, int separator = 2);

}  // namespace scar
