#include <doctest.h>

#include <algorithm>

#include "batfill/error.hpp"
#include "batfill/rng.hpp"
#include "batfill/sequence.hpp"

using namespace batfill;

namespace {

constexpr int kM = 20;

TokenGrid row_grid(std::vector<int> ids) {
    TokenGrid t(1, ids.size());
    t.tokens = std::move(ids);
    return t;
}

MaskGrid row_mask(std::size_t n, std::vector<std::size_t> holes) {
    MaskGrid m(1, n);
    for (std::size_t h : holes) {
        m.set(h, true);
    }
    return m;
}

struct Reference {
    std::vector<int> contents;
    std::vector<std::size_t> positions;
    std::vector<int> targets;
};

// Layout rule applied cell by cell, independent of permute().
Reference reference_layout(const TokenGrid& t, const MaskGrid& m) {
    Reference r;
    std::vector<std::size_t> holes;
    for (std::size_t p = 0; p < t.size(); ++p) {
        if (m.is_missing(p)) {
            holes.push_back(p);
        } else {
            r.contents.push_back(t.tokens[p]);
            r.positions.push_back(p);
        }
    }
    for (std::size_t h : holes) {
        r.contents.push_back(kM);
        r.positions.push_back(h);
    }
    for (std::size_t i = 0; i < holes.size(); ++i) {
        r.contents.push_back(i == 0 ? kM : t.tokens[holes[i - 1]]);
        r.positions.push_back(holes[i]);
        r.targets.push_back(t.tokens[holes[i]]);
    }
    return r;
}

bool rule(std::size_t L, std::size_t q, std::size_t c) { return (q < L && c < L) || (q >= L && (c < L || c <= q)); }

void random_case(Rng& rng, TokenGrid& t, MaskGrid& m) {
    const std::size_t h = 1 + rng.below(6);
    const std::size_t w = 1 + rng.below(6);
    t = TokenGrid(h, w);
    m = MaskGrid(h, w);
    for (auto& v : t.tokens) {
        v = int(rng.below(kM));
    }
    const double rate = rng.uniform();
    for (std::size_t i = 0; i < m.size(); ++i) {
        m.set(i, rng.uniform() < rate);
    }
    if (m.count_missing() == 0) {
        m.set(rng.below(m.size()), true);
    }
}

}  // namespace

TEST_CASE("permute reproduces the 1x5 figure example") {
    const TokenGrid t = row_grid({10, 11, 12, 13, 14});
    const BatSequence s = permute(t, row_mask(5, {1, 2, 4}), kM);
    CHECK(s.predicted_offset == 5);
    CHECK(s.content_ids == std::vector<int>{10, 13, kM, kM, kM, kM, 11, 12});
    CHECK(s.position_ids == std::vector<std::size_t>{0, 3, 1, 2, 4, 1, 2, 4});
    CHECK(s.target_ids == std::vector<int>{11, 12, 14});
    CHECK(s.masked_positions == std::vector<std::size_t>{1, 2, 4});
    CHECK(s.target_slots == std::vector<std::size_t>{5, 6, 7});

    const std::string golden =
        "slot content position target\n"
        "0 10 0\n"
        "1 13 3\n"
        "2 [M] 1\n"
        "3 [M] 2\n"
        "4 [M] 4\n"
        "5 [M] 1 11\n"
        "6 11 2 12\n"
        "7 12 4 14\n"
        "attention\n"
        "#####...\n"
        "#####...\n"
        "#####...\n"
        "#####...\n"
        "#####...\n"
        "######..\n"
        "#######.\n"
        "########\n";
    CHECK(render(s) == golden);
}

TEST_CASE("content-position variant labels predicted slots by their contents") {
    const TokenGrid t = row_grid({10, 11, 12, 13, 14});
    const BatSequence s = permute(t, row_mask(5, {1, 2, 4}), kM, PredictedPositions::kContent);
    CHECK(s.position_ids == std::vector<std::size_t>{0, 3, 1, 2, 4, 1, 1, 2});
    CHECK(s.content_ids == std::vector<int>{10, 13, kM, kM, kM, kM, 11, 12});
}

TEST_CASE("fully masked and single-hole layouts") {
    const TokenGrid t = row_grid({10, 11, 12, 13, 14});
    const BatSequence all = permute(t, MaskGrid::all_masked(1, 5), kM);
    CHECK(all.content_ids == std::vector<int>{kM, kM, kM, kM, kM, kM, 10, 11, 12, 13});
    CHECK(all.position_ids == std::vector<std::size_t>{0, 1, 2, 3, 4, 0, 1, 2, 3, 4});
    CHECK(all.target_ids == std::vector<int>{10, 11, 12, 13, 14});

    TokenGrid g(2, 2);
    g.tokens = {1, 2, 3, 4};
    MaskGrid m(2, 2);
    m.set(3, true);
    const BatSequence one = permute(g, m, kM);
    CHECK(one.length() == 5);
    CHECK(one.content_ids[4] == kM);
    CHECK(one.position_ids[4] == 3);
    CHECK(one.target_ids == std::vector<int>{4});
    const Reference ref = reference_layout(g, m);
    CHECK(one.content_ids == ref.contents);
    CHECK(one.position_ids == ref.positions);
}

TEST_CASE("attention mask examples") {
    const AttentionMask m53 = build_attention_mask(5, 3);
    REQUIRE(m53.size() == 8);
    for (std::size_t q = 0; q < 8; ++q) {
        for (std::size_t c = 0; c < 8; ++c) {
            const bool expect = q < 5 ? c < 5 : c <= q;
            CHECK(m53.allowed(q, c) == expect);
        }
    }
    CHECK(build_attention_mask(4, 0) == AttentionMask(4, true));
    const AttentionMask m11 = build_attention_mask(1, 1);
    CHECK(m11.allowed(0, 0));
    CHECK_FALSE(m11.allowed(0, 1));
    CHECK(m11.allowed(1, 0));
    CHECK(m11.allowed(1, 1));
    CHECK_THROWS_AS(build_attention_mask(2, 3), Error);
}

TEST_CASE("property: permute agrees with the reference layout and the mask rule") {
    Rng rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        TokenGrid t;
        MaskGrid m;
        random_case(rng, t, m);
        const BatSequence s = permute(t, m, kM);
        const Reference ref = reference_layout(t, m);
        const std::size_t L = t.size();
        const std::size_t K = m.count_missing();
        CHECK(s.content_ids == ref.contents);
        CHECK(s.position_ids == ref.positions);
        CHECK(s.target_ids == ref.targets);
        CHECK(s.length() == L + K);
        for (std::size_t q = 0; q < L + K; ++q) {
            for (std::size_t c = 0; c < L + K; ++c) {
                REQUIRE(s.attention.allowed(q, c) == rule(L, q, c));
            }
        }
        // Positions over the non-predicted block partition [0, L).
        std::vector<std::size_t> pos(s.position_ids.begin(), s.position_ids.begin() + std::ptrdiff_t(L));
        std::sort(pos.begin(), pos.end());
        for (std::size_t i = 0; i < L; ++i) {
            CHECK(pos[i] == i);
        }
        CHECK(std::vector<std::size_t>(s.position_ids.begin() + std::ptrdiff_t(L - K),
                                       s.position_ids.begin() + std::ptrdiff_t(L)) == s.masked_positions);
        CHECK(scatter(s, s.target_ids) == t);
    }
}

TEST_CASE("nothing to predict and shape errors") {
    const TokenGrid t = row_grid({1, 2, 3});
    const MaskGrid none(1, 3);
    CHECK_THROWS_WITH_AS(permute(t, none, kM), doctest::Contains("nothing to predict"), Error);
    CHECK_THROWS_WITH_AS(build_ar_sequence(t, none, kM), doctest::Contains("nothing to predict"), Error);
    CHECK_THROWS_WITH_AS(build_mlm_sequence(t, none, kM), doctest::Contains("nothing to predict"), Error);
    CHECK_THROWS_AS(permute(t, MaskGrid(3, 1), kM), Error);
    CHECK_THROWS_AS(permute(row_grid({1, kM, 3}), row_mask(3, {0}), kM), Error);
    const BatSequence s = permute(t, row_mask(3, {0, 2}), kM);
    CHECK_THROWS_AS(scatter(s, std::vector<int>{1}), Error);
}

TEST_CASE("autoregressive layout") {
    const TokenGrid t = row_grid({10, 11, 12});
    const BatSequence s = build_ar_sequence(t, row_mask(3, {2}), kM);
    CHECK(s.attention == build_causal_mask(3));
    for (std::size_t q = 0; q < 3; ++q) {
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(s.attention.allowed(q, c) == (c <= q));
        }
    }
    CHECK(s.content_ids == std::vector<int>{kM, 10, 11});
    CHECK(s.position_ids == std::vector<std::size_t>{0, 1, 2});
    CHECK(s.target_slots == std::vector<std::size_t>{2});
    CHECK(s.target_ids == std::vector<int>{12});

    const BatSequence first = build_ar_sequence(t, row_mask(3, {0}), kM);
    CHECK(first.target_slots == std::vector<std::size_t>{0});
    CHECK(first.content_ids[0] == kM);

    const BatSequence full = build_ar_sequence(t, MaskGrid::all_masked(1, 3), kM);
    CHECK(full.target_ids == std::vector<int>{10, 11, 12});
    CHECK(full.target_slots == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("masked layout") {
    const TokenGrid t = row_grid({10, 11, 12});
    const MaskGrid m = row_mask(3, {1});
    const BatSequence s = build_mlm_sequence(t, m, kM);
    CHECK(s.content_ids == std::vector<int>{10, kM, 12});
    CHECK(s.attention == AttentionMask(3, true));
    CHECK(s.target_slots == std::vector<std::size_t>{1});
    CHECK(s.length() == 3);
    CHECK(permute(t, m, kM).length() == 4);
}

TEST_CASE("set_hole_content writes where each layout reads it") {
    const TokenGrid t = row_grid({10, 11, 12, 13, 14});
    const MaskGrid m = row_mask(5, {1, 2, 4});
    BatSequence bat = permute(t, m, kM);
    set_hole_content(bat, 0, 7);
    CHECK(bat.content_ids[6] == 7);
    set_hole_content(bat, 2, 9);  // last hole feeds no later slot
    CHECK(bat.content_ids == std::vector<int>{10, 13, kM, kM, kM, kM, 7, 12});

    BatSequence ar = build_ar_sequence(t, m, kM);
    set_hole_content(ar, 1, 8);
    CHECK(ar.content_ids[3] == 8);

    BatSequence mlm = build_mlm_sequence(t, m, kM);
    set_hole_content(mlm, 2, 6);
    CHECK(mlm.content_ids[4] == 6);
}
