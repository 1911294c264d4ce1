#include "batfill/datasets.hpp"

#include <algorithm>
#include <cmath>

#include "batfill/error.hpp"
#include "batfill/rng.hpp"

namespace batfill {

namespace {

constexpr Rgb kStripeA{230, 200, 40};
constexpr Rgb kStripeB{40, 60, 160};
constexpr Rgb kGray{128, 128, 128};
constexpr Rgb kRed{255, 0, 0};
constexpr Rgb kBlue{0, 0, 255};
constexpr Rgb kBackground{90, 160, 90};
constexpr Rgb kLight{240, 240, 240};
constexpr Rgb kDark{20, 20, 20};

void check_dims(DatasetKind kind, std::size_t h, std::size_t w) {
    require(h >= 2 && w >= 2, "make-data: " + to_string(kind) + " needs height and width of at least 2, got " +
                                  std::to_string(h) + "x" + std::to_string(w));
    require(h * w <= 4096, "make-data: grid too large (" + std::to_string(h * w) + " cells, max 4096)");
}

RgbGrid stripes(std::size_t h, std::size_t w, int phase) {
    RgbGrid g(h, w);
    for (std::size_t r = 0; r < h; ++r) {
        const Rgb c = (int(r % 2) == phase) ? kStripeA : kStripeB;
        for (std::size_t col = 0; col < w; ++col) {
            g.at(r, col) = c;
        }
    }
    return g;
}

Rgb lerp(Rgb a, Rgb b, double t) {
    Rgb out;
    for (int c = 0; c < 3; ++c) {
        out[c] = static_cast<std::uint8_t>(std::lround(a[c] + (double(b[c]) - a[c]) * t));
    }
    return out;
}

RgbGrid gradients(std::size_t h, std::size_t w, std::uint64_t labels) {
    RgbGrid g(h, w, kGray);
    for (std::size_t r = 0; r < h; ++r) {
        const Rgb target = ((labels >> r) & 1) ? kBlue : kRed;
        for (std::size_t col = 1; col < w; ++col) {
            g.at(r, col) = lerp(kGray, target, double(col) / double(w - 1));
        }
    }
    return g;
}

RgbGrid two_pattern(std::size_t h, std::size_t w, int phase) {
    RgbGrid g(h, w, kBackground);
    const MaskGrid region = pattern_region(h, w);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            if (region.is_missing(r * w + c)) {
                g.at(r, c) = int((r + c) % 2) == phase ? kLight : kDark;
            }
        }
    }
    return g;
}

}  // namespace

std::string to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::kStripes:
            return "stripes";
        case DatasetKind::kGradients:
            return "gradients";
        case DatasetKind::kTwoPattern:
            return "two-pattern";
    }
    return "?";
}

DatasetKind parse_dataset_kind(const std::string& text) {
    if (text == "stripes") {
        return DatasetKind::kStripes;
    }
    if (text == "gradients") {
        return DatasetKind::kGradients;
    }
    if (text == "two-pattern") {
        return DatasetKind::kTwoPattern;
    }
    fail("unknown dataset kind '" + text + "' (expected stripes, gradients or two-pattern)");
}

MaskGrid pattern_region(std::size_t h, std::size_t w) {
    MaskGrid region(h, w);
    const std::size_t r0 = h / 4;
    const std::size_t c0 = w / 4;
    const std::size_t r1 = std::max(r0 + 1, h - h / 4);
    const std::size_t c1 = std::max(c0 + 1, w - w / 4);
    for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t c = c0; c < c1; ++c) {
            region.set(r * w + c, true);
        }
    }
    return region;
}

std::vector<RgbGrid> make_dataset(DatasetKind kind, std::size_t count, std::size_t h, std::size_t w,
                                  std::uint64_t seed) {
    check_dims(kind, h, w);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(kind)));
    std::vector<RgbGrid> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        switch (kind) {
            case DatasetKind::kStripes:
                out.push_back(stripes(h, w, int(rng.below(2))));
                break;
            case DatasetKind::kGradients:
                out.push_back(gradients(h, w, rng.next()));
                break;
            case DatasetKind::kTwoPattern:
                out.push_back(two_pattern(h, w, int(rng.below(2))));
                break;
        }
    }
    return out;
}

std::vector<RgbGrid> canonical_images(DatasetKind kind, std::size_t h, std::size_t w) {
    check_dims(kind, h, w);
    std::vector<RgbGrid> out;
    switch (kind) {
        case DatasetKind::kStripes:
            out = {stripes(h, w, 0), stripes(h, w, 1)};
            break;
        case DatasetKind::kGradients:
            require(h <= 16, "canonical_images: gradients enumeration limited to 16 rows");
            for (std::uint64_t labels = 0; labels < (std::uint64_t{1} << h); ++labels) {
                out.push_back(gradients(h, w, labels));
            }
            break;
        case DatasetKind::kTwoPattern:
            out = {two_pattern(h, w, 0), two_pattern(h, w, 1)};
            break;
    }
    return out;
}

}  // namespace batfill
