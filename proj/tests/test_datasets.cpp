#include <doctest.h>

#include <set>

#include "batfill/datasets.hpp"
#include "batfill/error.hpp"

using namespace batfill;

TEST_CASE("stripes alternate two colors by row") {
    for (const auto& img : make_dataset(DatasetKind::kStripes, 10, 6, 5, 80)) {
        for (std::size_t r = 0; r < 6; ++r) {
            for (std::size_t c = 0; c < 5; ++c) {
                CHECK(img.at(r, c) == img.at(r, 0));
            }
            if (r > 0) {
                CHECK(img.at(r, 0) != img.at(r - 1, 0));
            }
            if (r > 1) {
                CHECK(img.at(r, 0) == img.at(r - 2, 0));
            }
        }
    }
    CHECK(canonical_images(DatasetKind::kStripes, 6, 5).size() == 2);
}

TEST_CASE("gradients share the first column and end at the label color") {
    const auto images = make_dataset(DatasetKind::kGradients, 20, 8, 8, 81);
    std::set<Rgb> ends;
    for (const auto& img : images) {
        for (std::size_t r = 0; r < 8; ++r) {
            CHECK(img.at(r, 0) == images[0].at(0, 0));
            ends.insert(img.at(r, 7));
        }
    }
    CHECK(ends.size() == 2);
    CHECK(canonical_images(DatasetKind::kGradients, 4, 8).size() == 16);
    std::set<Rgb> palette;
    for (const auto& img : canonical_images(DatasetKind::kGradients, 2, 8)) {
        palette.insert(img.pixels.begin(), img.pixels.end());
    }
    CHECK(palette.size() == 15);
}

TEST_CASE("two-pattern draws each phase about half the time") {
    const auto canon = canonical_images(DatasetKind::kTwoPattern, 8, 8);
    REQUIRE(canon.size() == 2);
    const MaskGrid region = pattern_region(8, 8);
    for (std::size_t i = 0; i < 64; ++i) {
        CHECK((canon[0].pixels[i] != canon[1].pixels[i]) == region.is_missing(i));
    }
    int first = 0;
    for (const auto& img : make_dataset(DatasetKind::kTwoPattern, 100, 8, 8, 82)) {
        REQUIRE((img == canon[0] || img == canon[1]));
        first += img == canon[0] ? 1 : 0;
    }
    CHECK(first >= 35);
    CHECK(first <= 65);
}

TEST_CASE("datasets are deterministic and validate sizes") {
    CHECK(make_dataset(DatasetKind::kGradients, 5, 4, 4, 1) == make_dataset(DatasetKind::kGradients, 5, 4, 4, 1));
    CHECK(parse_dataset_kind(to_string(DatasetKind::kTwoPattern)) == DatasetKind::kTwoPattern);
    CHECK_THROWS_AS(parse_dataset_kind("noise"), Error);
    CHECK_THROWS_AS(make_dataset(DatasetKind::kStripes, 1, 1, 4, 0), Error);
    CHECK_THROWS_AS(make_dataset(DatasetKind::kStripes, 1, 100, 100, 0), Error);
}
