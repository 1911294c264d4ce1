#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "batfill/grid.hpp"
#include "batfill/palette.hpp"

namespace batfill {

// Binary PPM (P6, maxval 255).
void write_ppm(const std::filesystem::path& path, const RgbGrid& image);
RgbGrid read_ppm(const std::filesystem::path& path);

// Binary PGM (P5, maxval 255); 255 = missing, 0 = valid. Any nonzero byte
// reads as missing.
void write_pgm(const std::filesystem::path& path, const MaskGrid& mask);
MaskGrid read_pgm(const std::filesystem::path& path);

// "BATPAL 1", k, then k lines "r g b". Centroids are rounded on write.
std::string format_palette(const Palette& palette);
Palette parse_palette(const std::string& text);
void write_palette(const std::filesystem::path& path, const Palette& palette);
Palette read_palette(const std::filesystem::path& path);

// "BATTOK 1 <h> <w> <k>", then h lines of w ids.
std::string format_tokens(const TokenGrid& tokens, std::size_t k);
TokenGrid parse_tokens(const std::string& text, std::size_t* k = nullptr);
void write_tokens(const std::filesystem::path& path, const TokenGrid& tokens, std::size_t k);
TokenGrid read_tokens(const std::filesystem::path& path, std::size_t* k = nullptr);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

// Sorted list of regular files in `dir` with the given extension (".ppm").
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, const std::string& extension);

// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

}  // namespace batfill
