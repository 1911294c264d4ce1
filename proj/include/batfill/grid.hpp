#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace batfill {

using Rgb = std::array<std::uint8_t, 3>;

// Row-major H x W image with 8-bit channels.
struct RgbGrid {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<Rgb> pixels;

    RgbGrid() = default;
    RgbGrid(std::size_t h, std::size_t w, Rgb fill = {0, 0, 0});

    std::size_t size() const { return pixels.size(); }
    Rgb& at(std::size_t row, std::size_t col) { return pixels[row * width + col]; }
    const Rgb& at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }

    bool operator==(const RgbGrid&) const = default;
};

// Row-major H x W grid of palette token ids.
struct TokenGrid {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<int> tokens;

    TokenGrid() = default;
    TokenGrid(std::size_t h, std::size_t w, int fill = 0);

    std::size_t size() const { return tokens.size(); }
    int& at(std::size_t row, std::size_t col) { return tokens[row * width + col]; }
    int at(std::size_t row, std::size_t col) const { return tokens[row * width + col]; }

    bool operator==(const TokenGrid&) const = default;
};

// Row-major H x W hole mask; true marks a missing cell.
struct MaskGrid {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> missing;

    MaskGrid() = default;
    // All cells valid.
    MaskGrid(std::size_t h, std::size_t w);

    // The only way to obtain a grid with no valid cell.
    static MaskGrid all_masked(std::size_t h, std::size_t w);

    std::size_t size() const { return missing.size(); }
    bool is_missing(std::size_t index) const { return missing[index] != 0; }
    void set(std::size_t index, bool value) { missing[index] = value ? 1 : 0; }
    std::size_t count_missing() const;

    // Raster indices of missing cells, ascending.
    std::vector<std::size_t> missing_positions() const;

    bool operator==(const MaskGrid&) const = default;
};

}  // namespace batfill
