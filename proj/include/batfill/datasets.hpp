#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "batfill/grid.hpp"

namespace batfill {

// Synthetic corpora for desk-scale experiments.
//
//   stripes      rows alternate between two fixed colors; the phase is random
//   gradients    per-row label; every row starts at the same gray and ramps
//                toward red or blue, reaching the label color at the right
//                edge
//   two-pattern  shared background with a central checkerboard whose phase is
//                pattern A or B with equal probability
enum class DatasetKind { kStripes, kGradients, kTwoPattern };

std::string to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(const std::string& text);

std::vector<RgbGrid> make_dataset(DatasetKind kind, std::size_t count, std::size_t height, std::size_t width,
                                  std::uint64_t seed);

// Every image the generator can emit at this size (2^height for gradients).
std::vector<RgbGrid> canonical_images(DatasetKind kind, std::size_t height, std::size_t width);

// Cells that differ between the two-pattern variants (the checkerboard).
MaskGrid pattern_region(std::size_t height, std::size_t width);

}  // namespace batfill
