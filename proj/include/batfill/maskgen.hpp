#pragma once

#include <cstddef>
#include <cstdint>

#include "batfill/grid.hpp"

namespace batfill {

// Inclusive range of acceptable missing fractions.
struct MaskBucket {
    double lo = 0.0;
    double hi = 1.0;
};

inline constexpr MaskBucket kBucket20to40{0.2, 0.4};
inline constexpr MaskBucket kBucket40to60{0.4, 0.6};
inline constexpr MaskBucket kBucketRandom{0.2, 0.6};

// Free-form hole made of random brush strokes whose missing fraction lies in
// [ratio_lo, ratio_hi]. Redraws until the bound holds. Never returns an
// all-missing grid.
MaskGrid random_irregular_mask(std::size_t height, std::size_t width, double ratio_lo, double ratio_hi,
                               std::uint64_t seed);

inline MaskGrid random_irregular_mask(std::size_t height, std::size_t width, MaskBucket bucket, std::uint64_t seed) {
    return random_irregular_mask(height, width, bucket.lo, bucket.hi, seed);
}

double mask_ratio(const MaskGrid& mask);

}  // namespace batfill
