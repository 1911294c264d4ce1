#include "batfill/grid.hpp"

#include <algorithm>

namespace batfill {

RgbGrid::RgbGrid(std::size_t h, std::size_t w, Rgb fill) : height(h), width(w), pixels(h * w, fill) {}

TokenGrid::TokenGrid(std::size_t h, std::size_t w, int fill) : height(h), width(w), tokens(h * w, fill) {}

MaskGrid::MaskGrid(std::size_t h, std::size_t w) : height(h), width(w), missing(h * w, 0) {}

MaskGrid MaskGrid::all_masked(std::size_t h, std::size_t w) {
    MaskGrid mask(h, w);
    std::fill(mask.missing.begin(), mask.missing.end(), std::uint8_t{1});
    return mask;
}

std::size_t MaskGrid::count_missing() const {
    return static_cast<std::size_t>(std::count_if(missing.begin(), missing.end(), [](std::uint8_t m) { return m != 0; }));
}

std::vector<std::size_t> MaskGrid::missing_positions() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < missing.size(); ++i) {
        if (missing[i] != 0) {
            out.push_back(i);
        }
    }
    return out;
}

}  // namespace batfill
