#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "batfill/grid.hpp"
#include "batfill/model.hpp"
#include "batfill/objectives.hpp"
#include "batfill/rng.hpp"

namespace batfill {

struct SampleConfig {
    std::size_t top_k = 50;
    double temperature = 1.0;
    std::size_t n_samples = 1;
    std::uint64_t seed = 0;
    std::size_t gibbs_sweeps = 2;
    // Decode with the key/value cache instead of one full forward per hole.
    bool use_cache = true;

    void validate(std::size_t vocab_size) const;
};

// Keeps the k largest logits (ties to the lower index), divides by the
// temperature and draws from their softmax. k = 1 returns the argmax
// without consuming randomness.
int top_k_sample(std::span<const double> logits, std::size_t k, double temperature, Rng& rng);

// Probabilities top_k_sample draws from, indexed by token id.
std::vector<double> top_k_distribution(std::span<const double> logits, std::size_t k, double temperature);

// Raster-order bidirectional-autoregressive completion. Valid cells are
// copied from `tokens`; hole contents in `tokens` are ignored.
TokenGrid complete_bat(const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask,
                       const SampleConfig& cfg, Rng& rng);

// Left-to-right autoregressive completion (conditioning on the raster prefix only).
TokenGrid complete_ar(const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask,
                      const SampleConfig& cfg, Rng& rng);

// Gibbs sampling with an MLM-trained model: holes start as [M]; each sweep
// visits them in raster order and resamples each from a full forward.
TokenGrid complete_mlm_gibbs(const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask,
                             const SampleConfig& cfg, Rng& rng);

TokenGrid complete(Mode mode, const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask,
                   const SampleConfig& cfg, Rng& rng);

// n_samples completions from per-sample streams derive_seed(cfg.seed, i).
std::vector<TokenGrid> sample_diverse(const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask,
                                      const SampleConfig& cfg, Mode mode = Mode::kBat);

}  // namespace batfill
