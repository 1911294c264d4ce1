#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "batfill/grid.hpp"

namespace batfill {

using Color = std::array<double, 3>;

// Discrete color vocabulary: token i <-> centroids[i].
struct Palette {
    std::vector<Color> centroids;

    std::size_t k() const { return centroids.size(); }
    bool operator==(const Palette&) const = default;
};

double squared_distance(const Color& a, const Color& b);
Color to_color(const Rgb& rgb);
Rgb to_rgb(const Color& color);  // rounds and clamps each channel

// Index of the nearest centroid by squared L2; ties go to the lowest index.
int nearest_centroid(const Palette& palette, const Color& color);

// Lloyd's k-means with k-means++ seeding over the distinct colors of
// `pixels` (weighted by multiplicity). Stops when no assignment changes or
// after max_iters Lloyd iterations. Empty or duplicate centroids are
// reseeded to the color farthest from its current centroid.
Palette fit_palette(std::span<const Rgb> pixels, std::size_t k, std::uint64_t seed, std::size_t max_iters = 100);

TokenGrid encode(const RgbGrid& image, const Palette& palette);
RgbGrid decode(const TokenGrid& tokens, const Palette& palette);

}  // namespace batfill
