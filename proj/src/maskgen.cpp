#include "batfill/maskgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "batfill/error.hpp"
#include "batfill/rng.hpp"

namespace batfill {

namespace {

constexpr std::size_t kMaxAttempts = 100000;

// One attempt: stamp strokes until the missing count reaches target_count.
// Returns the mask; the caller checks the bucket.
MaskGrid draw_strokes(std::size_t height, std::size_t width, std::size_t target_count, int max_thickness, Rng& rng) {
    MaskGrid mask(height, width);
    std::size_t count = 0;
    const std::size_t area = height * width;
    const std::size_t max_len = std::max<std::size_t>(2, area / 8);

    while (count < target_count) {
        double y = rng.uniform() * double(height);
        double x = rng.uniform() * double(width);
        double angle = rng.uniform() * 2.0 * M_PI;
        const int thickness = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_thickness)));
        const std::size_t length = 1 + rng.below(max_len);

        for (std::size_t step = 0; step < length && count < target_count; ++step) {
            const int cy = static_cast<int>(std::floor(y));
            const int cx = static_cast<int>(std::floor(x));
            const int r0 = cy - (thickness - 1) / 2;
            const int c0 = cx - (thickness - 1) / 2;
            for (int r = r0; r < r0 + thickness; ++r) {
                for (int c = c0; c < c0 + thickness; ++c) {
                    if (r < 0 || c < 0 || r >= int(height) || c >= int(width)) {
                        continue;
                    }
                    const std::size_t idx = std::size_t(r) * width + std::size_t(c);
                    if (!mask.is_missing(idx)) {
                        mask.set(idx, true);
                        ++count;
                    }
                }
            }
            angle += rng.uniform(-0.6, 0.6);
            y += std::sin(angle);
            x += std::cos(angle);
            // Reflect at the borders so strokes stay on the canvas.
            if (y < 0.0 || y >= double(height)) {
                angle = -angle;
                y = std::clamp(y, 0.0, std::nextafter(double(height), 0.0));
            }
            if (x < 0.0 || x >= double(width)) {
                angle = M_PI - angle;
                x = std::clamp(x, 0.0, std::nextafter(double(width), 0.0));
            }
        }
    }
    return mask;
}

}  // namespace

MaskGrid random_irregular_mask(std::size_t height, std::size_t width, double ratio_lo, double ratio_hi,
                               std::uint64_t seed) {
    require(height > 0 && width > 0, "random_irregular_mask: dimensions must be positive");
    if (!(ratio_lo >= 0.0 && ratio_lo < ratio_hi && ratio_hi <= 1.0)) {
        fail("random_irregular_mask: need 0 <= ratio_lo < ratio_hi <= 1, got [" + std::to_string(ratio_lo) + ", " +
             std::to_string(ratio_hi) + "]");
    }
    const std::size_t area = height * width;
    bool feasible = false;
    for (std::size_t c = 1; c < area && !feasible; ++c) {
        const double r = double(c) / double(area);
        feasible = r >= ratio_lo && r <= ratio_hi;
    }
    require(feasible, "random_irregular_mask: no missing count in [" + std::to_string(ratio_lo) + ", " +
                          std::to_string(ratio_hi) + "] for a " + std::to_string(height) + "x" +
                          std::to_string(width) + " grid");

    Rng rng(seed);
    const int full_thickness = std::max(1, int(std::min(height, width) / 4));
    for (std::size_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const double target = rng.uniform(ratio_lo, ratio_hi);
        const auto target_count =
            std::clamp<std::size_t>(std::size_t(std::ceil(target * double(area))), 1, area - 1);
        // Thick brushes can overshoot narrow buckets; taper them on retries.
        const int max_thickness = attempt < 8 ? full_thickness : 1;
        MaskGrid mask = draw_strokes(height, width, target_count, max_thickness, rng);
        const std::size_t count = mask.count_missing();
        const double ratio = double(count) / double(area);
        if (ratio >= ratio_lo && ratio <= ratio_hi && count < area) {
            return mask;
        }
    }
    fail("random_irregular_mask: no mask in bucket after " + std::to_string(kMaxAttempts) + " attempts");
}

double mask_ratio(const MaskGrid& mask) {
    if (mask.size() == 0) {
        return 0.0;
    }
    return double(mask.count_missing()) / double(mask.size());
}

}  // namespace batfill
