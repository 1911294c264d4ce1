#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "batfill/error.hpp"
#include "batfill/sampler.hpp"
#include "support.hpp"

using namespace batfill;
using namespace batfill::testing;

TEST_CASE("top-k sampling follows the truncated softmax") {
    const std::vector<double> logits{0.5, 2.0, -1.0, 1.2, 1.9, 0.0};
    for (std::size_t k : {2u, 3u, 6u}) {
        for (double temp : {0.5, 1.0, 2.0}) {
            CAPTURE(k);
            CAPTURE(temp);
            // Independent oracle: sort, keep k, softmax at temperature.
            std::vector<std::size_t> order{1, 4, 3, 0, 5, 2};
            std::vector<double> expect(6, 0.0);
            double z = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                z += std::exp(logits[order[i]] / temp);
            }
            for (std::size_t i = 0; i < k; ++i) {
                expect[order[i]] = std::exp(logits[order[i]] / temp) / z;
            }
            const auto dist = top_k_distribution(logits, k, temp);
            for (std::size_t i = 0; i < 6; ++i) {
                CHECK(dist[i] == doctest::Approx(expect[i]).epsilon(1e-12));
            }
            Rng rng(50 + k);
            std::vector<double> counts(6, 0.0);
            const int n = 100000;
            for (int s = 0; s < n; ++s) {
                counts[std::size_t(top_k_sample(logits, k, temp, rng))] += 1.0;
            }
            double tv = 0.0;
            for (std::size_t i = 0; i < 6; ++i) {
                tv += std::abs(counts[i] / n - expect[i]);
            }
            CHECK(0.5 * tv < 0.01);
        }
    }
}

TEST_CASE("k = 1 is the argmax with ties to the lower index") {
    Rng rng(51);
    const std::vector<double> logits{0.1, 3.0, 3.0, -2.0};
    const Rng before = rng;
    for (int i = 0; i < 10; ++i) {
        CHECK(top_k_sample(logits, 1, 1.0, rng) == 1);
    }
    Rng copy = before;
    CHECK(copy.next() == rng.next());
    CHECK_THROWS_AS(top_k_sample(logits, 0, 1.0, rng), Error);
    CHECK_THROWS_AS(top_k_sample(logits, 5, 1.0, rng), Error);
}

TEST_CASE("completion keeps valid cells and fills holes with vocabulary tokens") {
    Rng rng(52);
    for (int trial = 0; trial < 20; ++trial) {
        const Instance inst = random_instance(rng, 5, 7);
        SampleConfig cfg;
        cfg.top_k = inst.params.config.vocab_size;
        for (Mode mode : {Mode::kAr, Mode::kMlm, Mode::kBat}) {
            Rng srng(trial);
            const TokenGrid out = complete(mode, inst.params, inst.tokens, inst.mask, cfg, srng);
            REQUIRE(out.size() == inst.tokens.size());
            for (std::size_t p = 0; p < out.size(); ++p) {
                if (inst.mask.is_missing(p)) {
                    CHECK(out.tokens[p] >= 0);
                    CHECK(out.tokens[p] < int(inst.params.config.vocab_size));
                } else {
                    CHECK(out.tokens[p] == inst.tokens.tokens[p]);
                }
            }
        }
    }
}

TEST_CASE("hole contents of the input are ignored") {
    Rng rng(53);
    const Instance inst = random_instance(rng, 4, 5);
    TokenGrid other = inst.tokens;
    for (std::size_t p : inst.mask.missing_positions()) {
        other.tokens[p] = 999;
    }
    SampleConfig cfg;
    cfg.top_k = 1;
    Rng a(1), b(1);
    CHECK(complete_bat(inst.params, inst.tokens, inst.mask, cfg, a) ==
          complete_bat(inst.params, other, inst.mask, cfg, b));
}

TEST_CASE("cached and uncached decoding agree") {
    Rng rng(54);
    for (int trial = 0; trial < 15; ++trial) {
        const Instance inst = random_instance(rng, 5, 6);
        SampleConfig cached;
        cached.top_k = 1;
        SampleConfig plain = cached;
        plain.use_cache = false;
        for (Mode mode : {Mode::kAr, Mode::kBat}) {
            Rng a(trial), b(trial);
            CHECK(complete(mode, inst.params, inst.tokens, inst.mask, cached, a) ==
                  complete(mode, inst.params, inst.tokens, inst.mask, plain, b));
        }
    }
}

TEST_CASE("a single hole is drawn from the first predicted slot") {
    const ModelParams params = init_params(model_preset("tiny", 4, 6), 55);
    TokenGrid tokens(2, 3);
    tokens.tokens = {0, 1, 2, 3, 0, 1};
    MaskGrid mask(2, 3);
    mask.set(4, true);
    const BatSequence seq = permute(tokens, mask, params.config.mask_token());
    const auto expect = top_k_distribution(forward(params, seq).row(0), 4, 1.0);
    SampleConfig cfg;
    cfg.top_k = 4;
    Rng rng(55);
    std::vector<double> counts(4, 0.0);
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        counts[std::size_t(complete_bat(params, tokens, mask, cfg, rng).tokens[4])] += 1.0;
    }
    double tv = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        tv += std::abs(counts[i] / n - expect[i]);
    }
    CHECK(0.5 * tv < 0.015);
}

TEST_CASE("two-hole joint matches the chain rule") {
    ModelParams params = init_params(model_preset("tiny", 3, 4), 56);
    for (double& v : params.w_out.values()) {
        v *= 40.0;
    }
    TokenGrid tokens(2, 2);
    tokens.tokens = {1, 0, 2, 0};
    MaskGrid mask(2, 2);
    mask.set(1, true);
    mask.set(3, true);
    const BatSequence seq = permute(tokens, mask, params.config.mask_token());
    std::map<std::pair<int, int>, double> exact;
    for (int a = 0; a < 3; ++a) {
        BatSequence s = seq;
        const std::size_t slot0[1] = {4};
        const double pa = top_k_distribution(forward_slots(params, s, slot0).row(0), 3, 1.0)[std::size_t(a)];
        set_hole_content(s, 0, a);
        const std::size_t slot1[1] = {5};
        const auto pb = top_k_distribution(forward_slots(params, s, slot1).row(0), 3, 1.0);
        for (int b = 0; b < 3; ++b) {
            exact[{a, b}] = pa * pb[std::size_t(b)];
        }
    }
    SampleConfig cfg;
    cfg.top_k = 3;
    Rng rng(56);
    std::map<std::pair<int, int>, double> counts;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        const TokenGrid out = complete_bat(params, tokens, mask, cfg, rng);
        counts[{out.tokens[1], out.tokens[3]}] += 1.0;
    }
    double tv = 0.0;
    for (const auto& [key, p] : exact) {
        tv += std::abs(p - counts[key] / n);
    }
    CHECK(0.5 * tv < 0.02);
}

TEST_CASE("Gibbs re-predicts each hole with the hole itself hidden") {
    // With one hole, every sweep draws from the same MLM distribution, so
    // greedy Gibbs returns the MLM argmax whatever the sweep count.
    Rng rng(57);
    for (int trial = 0; trial < 10; ++trial) {
        Instance inst = random_instance(rng, 4, 6);
        const auto holes = inst.mask.missing_positions();
        inst.mask = MaskGrid(inst.tokens.height, inst.tokens.width);
        inst.mask.set(holes[0], true);
        const BatSequence seq = build_mlm_sequence(inst.tokens, inst.mask, inst.params.config.mask_token());
        const Tensor logits = forward(inst.params, seq);
        Rng unused(0);
        const int argmax = top_k_sample(logits.row(0), 1, 1.0, unused);
        for (std::size_t sweeps : {1u, 2u, 5u}) {
            SampleConfig cfg;
            cfg.top_k = 1;
            cfg.gibbs_sweeps = sweeps;
            Rng r(0);
            CHECK(complete_mlm_gibbs(inst.params, inst.tokens, inst.mask, cfg, r).tokens[holes[0]] == argmax);
        }
    }
}

TEST_CASE("greedy completion is deterministic") {
    Rng rng(58);
    const Instance inst = random_instance(rng, 5, 6);
    SampleConfig cfg;
    cfg.top_k = 1;
    Rng a(1), b(999);
    CHECK(complete_bat(inst.params, inst.tokens, inst.mask, cfg, a) ==
          complete_bat(inst.params, inst.tokens, inst.mask, cfg, b));
}

TEST_CASE("sample_diverse uses one derived stream per sample") {
    Rng rng(59);
    const Instance inst = random_instance(rng, 5, 6);
    SampleConfig cfg;
    cfg.top_k = inst.params.config.vocab_size;
    cfg.seed = 77;
    cfg.n_samples = 6;
    const auto many = sample_diverse(inst.params, inst.tokens, inst.mask, cfg);
    REQUIRE(many.size() == 6);
    CHECK(many == sample_diverse(inst.params, inst.tokens, inst.mask, cfg));
    for (std::size_t i = 0; i < 6; ++i) {
        Rng r(derive_seed(77, i));
        CHECK(many[i] == complete_bat(inst.params, inst.tokens, inst.mask, cfg, r));
    }
    cfg.n_samples = 1;
    Rng first(derive_seed(77, 0));
    CHECK(sample_diverse(inst.params, inst.tokens, inst.mask, cfg)[0] ==
          complete_bat(inst.params, inst.tokens, inst.mask, cfg, first));
}

TEST_CASE("an ambiguous hole yields both completions") {
    // A model whose output ignores its input and puts equal mass on two tokens.
    ModelParams params = init_params(model_preset("tiny", 3, 4), 60);
    // Zero final-norm gain makes the normalized state the bias e_0, so the
    // logits are row 0 of w_out: (0, 0, -50).
    params.final_gain.fill(0.0);
    params.final_bias.fill(0.0);
    params.final_bias[0] = 1.0;
    params.w_out.fill(0.0);
    params.w_out.at(0, 2) = -50.0;
    TokenGrid tokens(2, 2);
    MaskGrid mask(2, 2);
    mask.set(3, true);
    SampleConfig cfg;
    cfg.top_k = 3;
    cfg.n_samples = 64;
    cfg.seed = 60;
    std::set<int> seen;
    for (const auto& g : sample_diverse(params, tokens, mask, cfg)) {
        seen.insert(g.tokens[3]);
    }
    CHECK(seen == std::set<int>{0, 1});
}

TEST_CASE("sampler input errors") {
    Rng rng(61);
    const Instance inst = random_instance(rng, 3, 4);
    SampleConfig cfg;
    cfg.top_k = 1;
    const MaskGrid none(inst.tokens.height, inst.tokens.width);
    CHECK_THROWS_WITH_AS(complete_bat(inst.params, inst.tokens, none, cfg, rng), "nothing to predict", Error);
    cfg.top_k = inst.params.config.vocab_size + 1;
    CHECK_THROWS_AS(complete_bat(inst.params, inst.tokens, inst.mask, cfg, rng), Error);
    cfg.top_k = 1;
    cfg.temperature = 0.0;
    CHECK_THROWS_AS(complete_bat(inst.params, inst.tokens, inst.mask, cfg, rng), Error);
    cfg.temperature = 1.0;
    CHECK_THROWS_AS(complete_bat(inst.params, TokenGrid(9, 9), MaskGrid::all_masked(9, 9), cfg, rng), Error);
    cfg.gibbs_sweeps = 0;
    CHECK_THROWS_AS(complete_mlm_gibbs(inst.params, inst.tokens, inst.mask, cfg, rng), Error);
}
