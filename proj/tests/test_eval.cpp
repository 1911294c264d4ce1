#include <doctest.h>

#include <cmath>

#include "batfill/error.hpp"
#include "batfill/eval.hpp"

using namespace batfill;

namespace {

TokenGrid grid_of(std::size_t h, std::size_t w, std::vector<int> ids) {
    TokenGrid t(h, w);
    t.tokens = std::move(ids);
    return t;
}

}  // namespace

TEST_CASE("token accuracy counts masked cells only") {
    const TokenGrid truth = grid_of(2, 2, {0, 1, 2, 3});
    const TokenGrid pred = grid_of(2, 2, {9, 1, 2, 0});
    MaskGrid mask(2, 2);
    mask.set(1, true);
    mask.set(3, true);
    CHECK(token_accuracy(pred, truth, mask) == 0.5);
    CHECK(token_accuracy(truth, truth, mask) == 1.0);
    CHECK_THROWS_WITH_AS(token_accuracy(pred, truth, MaskGrid(2, 2)), doctest::Contains("K = 0"), Error);
    CHECK_THROWS_AS(token_accuracy(pred, grid_of(1, 4, {0, 1, 2, 3}), mask), Error);
}

TEST_CASE("pixel metrics on known images") {
    RgbGrid a(2, 2, {10, 20, 30});
    RgbGrid b = a;
    CHECK(pixel_l1(a, b) == 0.0);
    CHECK(psnr(a, b) == kInfinitePsnr);
    // One channel off by 12 of 12 channels: MSE 12, L1 1.
    b.at(1, 0)[2] = 42;
    CHECK(pixel_l1(a, b) == doctest::Approx(1.0));
    CHECK(mean_squared_error(a, b) == doctest::Approx(12.0));
    // MSE 1 gives 20 log10(255).
    CHECK(psnr_from_mse(1.0) == doctest::Approx(48.1308).epsilon(1e-5));
    CHECK(psnr(RgbGrid(3, 3, {0, 0, 0}), RgbGrid(3, 3, {255, 255, 255})) == doctest::Approx(0.0));
    CHECK(pixel_l1(RgbGrid(1, 1, {0, 0, 0}), RgbGrid(1, 1, {255, 255, 255})) == 255.0);
    CHECK_THROWS_AS(psnr(RgbGrid(1, 2), RgbGrid(2, 1)), Error);
}

TEST_CASE("diversity is the mean pairwise disagreement on holes") {
    MaskGrid mask(1, 3);
    mask.set(0, true);
    mask.set(2, true);
    const std::vector<TokenGrid> same(3, grid_of(1, 3, {1, 5, 1}));
    CHECK(diversity(same, mask) == 0.0);
    // Pairs: (a,b) differ on 1 of 2, (a,c) on 2 of 2, (b,c) on 1 of 2.
    const std::vector<TokenGrid> mixed{grid_of(1, 3, {0, 7, 0}), grid_of(1, 3, {0, 8, 1}),
                                       grid_of(1, 3, {1, 9, 1})};
    CHECK(diversity(mixed, mask) == doctest::Approx(2.0 / 3.0));
    const std::vector<TokenGrid> all_diff{grid_of(1, 3, {0, 0, 0}), grid_of(1, 3, {1, 0, 1})};
    CHECK(diversity(all_diff, mask) == 1.0);
    CHECK_THROWS_AS(diversity(std::span(mixed).first(1), mask), Error);
}

TEST_CASE("coherence is the fraction of samples matching a reference") {
    const std::vector<TokenGrid> refs{grid_of(1, 2, {0, 1}), grid_of(1, 2, {1, 0})};
    const std::vector<TokenGrid> samples{grid_of(1, 2, {0, 1}), grid_of(1, 2, {1, 1}), grid_of(1, 2, {1, 0}),
                                         grid_of(1, 2, {0, 1})};
    CHECK(coherence(samples, refs) == 0.75);
}

TEST_CASE("report rows print fixed precision and inf") {
    EvalReport r;
    r.accuracy = 1.0;
    r.psnr = kInfinitePsnr;
    r.diversity = 0.25;
    CHECK(format_report_row("bat", r) == "bat,1.000000,0.000000,inf,0.250000,0.000000\n");
    const std::vector<AblationRow> rows{{Mode::kAr, r, 0.1}};
    CHECK(format_report_csv(rows) == std::string(kReportHeader) + "\nar,1.000000,0.000000,inf,0.250000,0.000000\n");
}

TEST_CASE("evaluation masks are shared and deterministic") {
    const std::vector<TokenGrid> heldout(4, TokenGrid(6, 6));
    const auto a = eval_masks(heldout, kBucket40to60, 5);
    CHECK(a == eval_masks(heldout, kBucket40to60, 5));
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a[i] == random_irregular_mask(6, 6, kBucket40to60, derive_seed(5, i)));
    }
}

TEST_CASE("ablate refuses configs with different budgets") {
    const std::vector<TokenGrid> data(2, TokenGrid(3, 3));
    Palette pal;
    pal.centroids = {{0, 0, 0}, {255, 255, 255}};
    TrainConfig ar, bat;
    ar.mode = Mode::kAr;
    ar.steps = 2;
    bat.steps = 3;
    const std::vector<TrainConfig> configs{ar, bat};
    CHECK_THROWS_WITH_AS(ablate(data, data, pal, configs, {}), doctest::Contains("budget mismatch"), Error);
}

TEST_CASE("evaluate with a perfect copy model reaches full accuracy") {
    // Grids with one hole each; a model trained to emit token 1 everywhere
    // is exact when every truth cell is 1.
    ModelParams params = init_params(model_preset("tiny", 2, 4), 1);
    params.final_gain.fill(0.0);
    params.final_bias.fill(0.0);
    params.final_bias[0] = 1.0;
    params.w_out.fill(0.0);
    params.w_out.at(0, 1) = 10.0;
    const std::vector<TokenGrid> heldout(3, TokenGrid(2, 2, 1));
    std::vector<MaskGrid> masks(3, MaskGrid(2, 2));
    for (std::size_t i = 0; i < 3; ++i) {
        masks[i].set(i, true);
    }
    Palette pal;
    pal.centroids = {{0, 0, 0}, {255, 255, 255}};
    AblationOptions opts;
    opts.sample.top_k = 1;
    opts.sample.n_samples = 2;
    for (Mode mode : {Mode::kAr, Mode::kMlm, Mode::kBat}) {
        const EvalReport r = evaluate(params, mode, heldout, masks, pal, opts);
        CHECK(r.accuracy == 1.0);
        CHECK(r.l1 == 0.0);
        CHECK(r.psnr == kInfinitePsnr);
        CHECK(r.diversity == 0.0);
        CHECK(r.coherence == 1.0);
    }
}

TEST_CASE("metric properties over random inputs") {
    Rng rng(90);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t h = 1 + rng.below(6), w = 1 + rng.below(6);
        RgbGrid a(h, w), b(h, w);
        double abs_sum = 0.0, sq_sum = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            for (int c = 0; c < 3; ++c) {
                a.pixels[i][c] = std::uint8_t(rng.below(256));
                b.pixels[i][c] = std::uint8_t(rng.below(256));
                const double d = double(a.pixels[i][c]) - double(b.pixels[i][c]);
                abs_sum += std::abs(d);
                sq_sum += d * d;
            }
        }
        const double n = double(3 * a.size());
        CHECK(std::abs(pixel_l1(a, b) - abs_sum / n) < 1e-9);
        if (sq_sum > 0) {
            CHECK(std::abs(psnr(a, b) - 10.0 * std::log10(255.0 * 255.0 * n / sq_sum)) < 1e-9);
        }

        MaskGrid mask(h, w);
        mask.set(rng.below(mask.size()), true);
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (rng.uniform() < 0.5) {
                mask.set(i, true);
            }
        }
        std::vector<TokenGrid> samples(2 + rng.below(4), TokenGrid(h, w));
        for (auto& s : samples) {
            for (int& t : s.tokens) {
                t = int(rng.below(3));
            }
        }
        std::vector<TokenGrid> reversed(samples.rbegin(), samples.rend());
        CHECK(diversity(samples, mask) == doctest::Approx(diversity(reversed, mask)).epsilon(1e-12));

        // Valid cells never enter accuracy.
        TokenGrid other = samples[1];
        for (std::size_t i = 0; i < other.size(); ++i) {
            if (!mask.is_missing(i)) {
                other.tokens[i] = 7;
            }
        }
        CHECK(token_accuracy(samples[0], samples[1], mask) == token_accuracy(samples[0], other, mask));
    }
}

TEST_CASE("an untrained model scores near chance") {
    const std::size_t V = 4;
    Rng rng(91);
    std::vector<TokenGrid> heldout(40, TokenGrid(6, 6));
    for (auto& g : heldout) {
        for (int& t : g.tokens) {
            t = int(rng.below(V));
        }
    }
    const auto masks = eval_masks(heldout, kBucket40to60, 91);
    Palette pal;
    for (std::size_t i = 0; i < V; ++i) {
        pal.centroids.push_back({60.0 * double(i), 0, 0});
    }
    const ModelParams params = init_params(model_preset("tiny", V, 36), 91);
    AblationOptions opts;
    opts.sample.top_k = V;
    for (Mode mode : {Mode::kAr, Mode::kMlm, Mode::kBat}) {
        CAPTURE(to_string(mode));
        const double acc = evaluate(params, mode, heldout, masks, pal, opts).accuracy;
        CHECK(acc == doctest::Approx(1.0 / V).epsilon(0.3));
    }
}
