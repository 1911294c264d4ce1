#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "batfill/grid.hpp"
#include "batfill/objectives.hpp"
#include "batfill/palette.hpp"
#include "batfill/sampler.hpp"

namespace batfill {

// PSNR of identical images.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

// Desk-scale proxies: diversity stands in for LPIPS between sample pairs,
// coherence for global consistency of a completion.
struct EvalReport {
    double accuracy = 0.0;
    double l1 = 0.0;
    double psnr = 0.0;
    double diversity = 0.0;
    double coherence = 0.0;
};

// Fraction of masked cells where pred matches truth.
double token_accuracy(const TokenGrid& pred, const TokenGrid& truth, const MaskGrid& mask);

// Mean absolute channel error on the 0-255 scale.
double pixel_l1(const RgbGrid& a, const RgbGrid& b);

// Mean squared channel error.
double mean_squared_error(const RgbGrid& a, const RgbGrid& b);

// 10 log10(255^2 / MSE); kInfinitePsnr when the images are equal.
double psnr(const RgbGrid& a, const RgbGrid& b);
double psnr_from_mse(double mse);

// Mean over unordered sample pairs of the fraction of masked cells on which
// the pair disagrees.
double diversity(std::span<const TokenGrid> samples, const MaskGrid& mask);

// Fraction of samples equal to one of the reference grids.
double coherence(std::span<const TokenGrid> samples, std::span<const TokenGrid> references);

struct AblationOptions {
    SampleConfig sample;       // gibbs_sweeps applies to the MLM row
    MaskBucket eval_bucket = kBucket40to60;
    std::uint64_t eval_seed = 0;
    // When non-empty, coherence counts samples equal to any of these grids;
    // otherwise a sample is coherent when it equals its ground truth.
    std::vector<TokenGrid> patterns;
    // Explicit evaluation masks, one per held-out grid. Empty means
    // eval_masks(heldout, eval_bucket, eval_seed).
    std::vector<MaskGrid> masks;
};

struct AblationRow {
    Mode mode;
    EvalReport report;
    double final_loss = 0.0;
};

// Masks shared by every mode: one per held-out grid.
std::vector<MaskGrid> eval_masks(std::span<const TokenGrid> heldout, MaskBucket bucket, std::uint64_t seed);

// Mean report of `mode` completions over held-out grids and masks.
EvalReport evaluate(const ModelParams& params, Mode mode, std::span<const TokenGrid> heldout,
                    std::span<const MaskGrid> masks, const Palette& palette, const AblationOptions& options);

// Trains one model per config (AR, MLM, BAT in that order is conventional)
// and evaluates each on the same held-out grids and masks. Every config must
// share the same budget; only the mode may differ.
std::vector<AblationRow> ablate(std::span<const TokenGrid> train_set, std::span<const TokenGrid> heldout,
                                const Palette& palette, std::span<const TrainConfig> configs,
                                const AblationOptions& options);

inline constexpr const char* kReportHeader = "mode,accuracy,l1,psnr,diversity,coherence";

// One CSV line (with newline); PSNR prints as "inf" for identical images.
std::string format_report_row(const std::string& label, const EvalReport& report);

// kReportHeader, then one row per mode.
std::string format_report_csv(std::span<const AblationRow> rows);

}  // namespace batfill
