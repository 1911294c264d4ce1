#include "batfill/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "batfill/error.hpp"
#include "batfill/parallel.hpp"

namespace batfill {

void SampleConfig::validate(std::size_t vocab_size) const {
    BATFILL_CHECK(top_k >= 1 && top_k <= vocab_size, "sample config: top_k must lie in [1, " + std::to_string(vocab_size) +
                                                   "], got " + std::to_string(top_k));
    BATFILL_CHECK(temperature > 0.0 && std::isfinite(temperature), "sample config: temperature must be positive");
    BATFILL_CHECK(n_samples >= 1, "sample config: n_samples must be at least 1");
}

namespace {

std::vector<std::size_t> top_indices(std::span<const double> logits, std::size_t k) {
    std::vector<std::size_t> order(logits.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + std::ptrdiff_t(k), order.end(), [&](std::size_t a, std::size_t b) {
        return logits[a] > logits[b] || (logits[a] == logits[b] && a < b);
    });
    order.resize(k);
    return order;
}

}  // namespace

std::vector<double> top_k_distribution(std::span<const double> logits, std::size_t k, double temperature) {
    BATFILL_CHECK(k >= 1 && k <= logits.size(), "top_k: k must lie in [1, V]");
    BATFILL_CHECK(temperature > 0.0, "top_k: temperature must be positive");
    const auto keep = top_indices(logits, k);
    std::vector<double> probs(logits.size(), 0.0);
    const double mx = logits[keep[0]] / temperature;
    double total = 0.0;
    for (std::size_t i : keep) {
        probs[i] = std::exp(logits[i] / temperature - mx);
        total += probs[i];
    }
    for (std::size_t i : keep) {
        probs[i] /= total;
    }
    return probs;
}

int top_k_sample(std::span<const double> logits, std::size_t k, double temperature, Rng& rng) {
    BATFILL_CHECK(k >= 1 && k <= logits.size(), "top_k_sample: k must lie in [1, V]");
    const auto keep = top_indices(logits, k);
    if (k == 1) {
        return static_cast<int>(keep[0]);
    }
    const auto probs = top_k_distribution(logits, k, temperature);
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i : keep) {
        acc += probs[i];
        if (u < acc) {
            return static_cast<int>(i);
        }
    }
    // Rounding left u just above the accumulated mass.
    return static_cast<int>(keep.back());
}

namespace {

// Copy of `tokens` with holes zeroed so sequence builders accept it.
TokenGrid conditioning_grid(const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask,
                            const SampleConfig& cfg) {
    cfg.validate(params.config.vocab_size);
    BATFILL_CHECK(tokens.height == mask.height && tokens.width == mask.width,
            "sampler: token grid and mask dimensions differ");
    BATFILL_CHECK(tokens.size() <= params.config.max_positions,
            "sampler: grid has " + std::to_string(tokens.size()) + " cells but the model has " +
                std::to_string(params.config.max_positions) + " positions");
    BATFILL_CHECK(mask.count_missing() > 0, "nothing to predict");
    TokenGrid grid = tokens;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (mask.is_missing(i)) {
            grid.tokens[i] = 0;
        } else {
            BATFILL_CHECK(grid.tokens[i] >= 0 && std::size_t(grid.tokens[i]) < params.config.vocab_size,
                    "sampler: valid cell " + std::to_string(i) + " holds token " + std::to_string(grid.tokens[i]) +
                        " outside the model vocabulary");
        }
    }
    return grid;
}

}  // namespace

TokenGrid complete_bat(const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask,
                       const SampleConfig& cfg, Rng& rng) {
    const TokenGrid grid = conditioning_grid(params, tokens, mask, cfg);
    const int M = params.config.mask_token();
    BatSequence seq = permute(grid, mask, M);
    const std::size_t L = seq.grid_size();
    const std::size_t K = seq.masked_positions.size();
    for (std::size_t i = 1; i < K; ++i) {
        seq.content_ids[L + i] = M;
    }

    std::vector<int> sampled(K);
    if (cfg.use_cache) {
        IncrementalDecoder decoder(params);
        decoder.append(std::span(seq.content_ids).first(L), std::span(seq.position_ids).first(L), AttentionMask(L, true),
                       {});
        for (std::size_t i = 0; i < K; ++i) {
            const int content = i == 0 ? M : sampled[i - 1];
            const Tensor logits = decoder.append_one(content, seq.position_ids[L + i]);
            sampled[i] = top_k_sample(logits.row(0), cfg.top_k, cfg.temperature, rng);
        }
    } else {
        for (std::size_t i = 0; i < K; ++i) {
            const std::size_t slot[1] = {L + i};
            const Tensor logits = forward_slots(params, seq, slot);
            sampled[i] = top_k_sample(logits.row(0), cfg.top_k, cfg.temperature, rng);
            set_hole_content(seq, i, sampled[i]);
        }
    }
    return scatter(seq, sampled);
}

TokenGrid complete_ar(const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask,
                      const SampleConfig& cfg, Rng& rng) {
    const TokenGrid grid = conditioning_grid(params, tokens, mask, cfg);
    const int M = params.config.mask_token();
    BatSequence seq = build_ar_sequence(grid, mask, M);
    const std::size_t L = seq.grid_size();
    for (std::size_t p : seq.masked_positions) {
        if (p + 1 < L) {
            seq.content_ids[p + 1] = M;
        }
    }

    const std::size_t K = seq.masked_positions.size();
    std::vector<int> sampled(K);
    if (cfg.use_cache) {
        IncrementalDecoder decoder(params);
        std::size_t next = 0;  // first slot not yet in the cache
        for (std::size_t i = 0; i < K; ++i) {
            const std::size_t hole = seq.masked_positions[i];
            const std::size_t n = hole + 1 - next;
            const std::size_t last[1] = {n - 1};
            const Tensor logits = decoder.append(std::span(seq.content_ids).subspan(next, n),
                                                 std::span(seq.position_ids).subspan(next, n), build_causal_mask(n),
                                                 last);
            sampled[i] = top_k_sample(logits.row(0), cfg.top_k, cfg.temperature, rng);
            set_hole_content(seq, i, sampled[i]);
            next = hole + 1;
        }
    } else {
        for (std::size_t i = 0; i < K; ++i) {
            const std::size_t slot[1] = {seq.masked_positions[i]};
            const Tensor logits = forward_slots(params, seq, slot);
            sampled[i] = top_k_sample(logits.row(0), cfg.top_k, cfg.temperature, rng);
            set_hole_content(seq, i, sampled[i]);
        }
    }
    return scatter(seq, sampled);
}

TokenGrid complete_mlm_gibbs(const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask,
                             const SampleConfig& cfg, Rng& rng) {
    const TokenGrid grid = conditioning_grid(params, tokens, mask, cfg);
    BATFILL_CHECK(cfg.gibbs_sweeps >= 1, "sample config: gibbs_sweeps must be at least 1");
    const int M = params.config.mask_token();
    BatSequence seq = build_mlm_sequence(grid, mask, M);
    const std::size_t K = seq.masked_positions.size();
    std::vector<int> sampled(K, 0);
    for (std::size_t sweep = 0; sweep < cfg.gibbs_sweeps; ++sweep) {
        for (std::size_t i = 0; i < K; ++i) {
            const std::size_t pos = seq.masked_positions[i];
            // The visited cell is hidden again so the model predicts it
            // from everything else rather than copying its current value.
            seq.content_ids[pos] = M;
            const std::size_t slot[1] = {pos};
            const Tensor logits = forward_slots(params, seq, slot);
            sampled[i] = top_k_sample(logits.row(0), cfg.top_k, cfg.temperature, rng);
            set_hole_content(seq, i, sampled[i]);
        }
    }
    return scatter(seq, sampled);
}

TokenGrid complete(Mode mode, const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask,
                   const SampleConfig& cfg, Rng& rng) {
    switch (mode) {
        case Mode::kAr:
            return complete_ar(params, tokens, mask, cfg, rng);
        case Mode::kMlm:
            return complete_mlm_gibbs(params, tokens, mask, cfg, rng);
        case Mode::kBat:
            return complete_bat(params, tokens, mask, cfg, rng);
    }
    fail("complete: bad mode");
}

std::vector<TokenGrid> sample_diverse(const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask,
                                      const SampleConfig& cfg, Mode mode) {
    cfg.validate(params.config.vocab_size);
    std::vector<TokenGrid> out(cfg.n_samples);
    parallel_for(cfg.n_samples, thread_budget(), [&](std::size_t i) {
        Rng rng(derive_seed(cfg.seed, i));
        out[i] = complete(mode, params, tokens, mask, cfg, rng);
    });
    return out;
}

}  // namespace batfill
