#include "batfill/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "batfill/error.hpp"
#include "batfill/maskgen.hpp"

namespace batfill {

namespace {

void require_same_shape(std::size_t h1, std::size_t w1, std::size_t h2, std::size_t w2, const char* what) {
    require(h1 == h2 && w1 == w2, std::string(what) + ": shapes differ (" + std::to_string(h1) + "x" +
                                      std::to_string(w1) + " vs " + std::to_string(h2) + "x" + std::to_string(w2) +
                                      ")");
}

double squared_error_sum(const RgbGrid& a, const RgbGrid& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            const double d = double(a.pixels[i][c]) - double(b.pixels[i][c]);
            sum += d * d;
        }
    }
    return sum;
}

}  // namespace

double psnr_from_mse(double mse) {
    if (mse == 0.0) {
        return kInfinitePsnr;
    }
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double mean_squared_error(const RgbGrid& a, const RgbGrid& b) {
    require_same_shape(a.height, a.width, b.height, b.width, "mean_squared_error");
    require(a.size() > 0, "mean_squared_error: empty image");
    return squared_error_sum(a, b) / double(3 * a.size());
}

double token_accuracy(const TokenGrid& pred, const TokenGrid& truth, const MaskGrid& mask) {
    require_same_shape(pred.height, pred.width, truth.height, truth.width, "token_accuracy");
    require_same_shape(pred.height, pred.width, mask.height, mask.width, "token_accuracy");
    std::size_t masked = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask.is_missing(i)) {
            ++masked;
            correct += pred.tokens[i] == truth.tokens[i] ? 1 : 0;
        }
    }
    require(masked > 0, "token_accuracy: mask has no missing cells (K = 0)");
    return double(correct) / double(masked);
}

double pixel_l1(const RgbGrid& a, const RgbGrid& b) {
    require_same_shape(a.height, a.width, b.height, b.width, "pixel_l1");
    require(a.size() > 0, "pixel_l1: empty image");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            sum += std::abs(double(a.pixels[i][c]) - double(b.pixels[i][c]));
        }
    }
    return sum / double(3 * a.size());
}

double psnr(const RgbGrid& a, const RgbGrid& b) {
    return psnr_from_mse(mean_squared_error(a, b));
}

double diversity(std::span<const TokenGrid> samples, const MaskGrid& mask) {
    require(samples.size() >= 2, "diversity: need at least 2 samples, got " + std::to_string(samples.size()));
    const auto holes = mask.missing_positions();
    require(!holes.empty(), "diversity: mask has no missing cells (K = 0)");
    for (const auto& s : samples) {
        require_same_shape(s.height, s.width, mask.height, mask.width, "diversity");
    }
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < samples.size(); ++a) {
        for (std::size_t b = a + 1; b < samples.size(); ++b) {
            std::size_t differ = 0;
            for (std::size_t p : holes) {
                differ += samples[a].tokens[p] != samples[b].tokens[p] ? 1 : 0;
            }
            total += double(differ) / double(holes.size());
            ++pairs;
        }
    }
    return total / double(pairs);
}

double coherence(std::span<const TokenGrid> samples, std::span<const TokenGrid> references) {
    require(!samples.empty(), "coherence: no samples");
    std::size_t hits = 0;
    for (const auto& s : samples) {
        hits += std::find(references.begin(), references.end(), s) != references.end() ? 1 : 0;
    }
    return double(hits) / double(samples.size());
}

std::vector<MaskGrid> eval_masks(std::span<const TokenGrid> heldout, MaskBucket bucket, std::uint64_t seed) {
    std::vector<MaskGrid> masks;
    masks.reserve(heldout.size());
    for (std::size_t i = 0; i < heldout.size(); ++i) {
        masks.push_back(random_irregular_mask(heldout[i].height, heldout[i].width, bucket, derive_seed(seed, i)));
    }
    return masks;
}

EvalReport evaluate(const ModelParams& params, Mode mode, std::span<const TokenGrid> heldout,
                    std::span<const MaskGrid> masks, const Palette& palette, const AblationOptions& options) {
    require(!heldout.empty(), "evaluate: no held-out grids");
    require(heldout.size() == masks.size(), "evaluate: need one mask per held-out grid");
    const SampleConfig& sc = options.sample;

    double accuracy = 0.0;
    double l1 = 0.0;
    double squared = 0.0;
    double channels = 0.0;
    double div = 0.0;
    double coherent = 0.0;
    double count = 0.0;
    for (std::size_t i = 0; i < heldout.size(); ++i) {
        SampleConfig cfg = sc;
        cfg.seed = derive_seed(sc.seed, i);
        const auto samples = sample_diverse(params, heldout[i], masks[i], cfg, mode);
        const RgbGrid truth_rgb = decode(heldout[i], palette);
        for (const auto& s : samples) {
            const RgbGrid rgb = decode(s, palette);
            accuracy += token_accuracy(s, heldout[i], masks[i]);
            l1 += pixel_l1(rgb, truth_rgb);
            squared += squared_error_sum(rgb, truth_rgb);
            channels += double(3 * rgb.size());
            count += 1.0;
        }
        if (samples.size() >= 2) {
            div += diversity(samples, masks[i]);
        }
        if (options.patterns.empty()) {
            const TokenGrid truth[1] = {heldout[i]};
            coherent += coherence(samples, truth) * double(samples.size());
        } else {
            coherent += coherence(samples, options.patterns) * double(samples.size());
        }
    }
    EvalReport r;
    r.accuracy = accuracy / count;
    r.l1 = l1 / count;
    r.psnr = psnr_from_mse(squared / channels);
    r.diversity = div / double(heldout.size());
    r.coherence = coherent / count;
    return r;
}

std::vector<AblationRow> ablate(std::span<const TokenGrid> train_set, std::span<const TokenGrid> heldout,
                                const Palette& palette, std::span<const TrainConfig> configs,
                                const AblationOptions& options) {
    require(!configs.empty(), "ablate: no modes to compare");
    for (std::size_t i = 1; i < configs.size(); ++i) {
        require(configs[i].same_budget(configs[0]), "ablate: budget mismatch between " + to_string(configs[0].mode) +
                                                        " and " + to_string(configs[i].mode) +
                                                        " (every setting except the mode must agree)");
    }
    const auto masks =
        options.masks.empty() ? eval_masks(heldout, options.eval_bucket, options.eval_seed) : options.masks;
    std::vector<AblationRow> rows;
    for (const auto& config : configs) {
        const TrainResult trained = train(train_set, palette, config);
        rows.push_back({config.mode, evaluate(trained.params, config.mode, heldout, masks, palette, options),
                        trained.final_loss});
    }
    return rows;
}

std::string format_report_row(const std::string& label, const EvalReport& r) {
    char psnr_text[32] = "inf";
    if (!std::isinf(r.psnr)) {
        std::snprintf(psnr_text, sizeof psnr_text, "%.6f", r.psnr);
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%s,%.6f,%.6f\n", label.c_str(), r.accuracy, r.l1, psnr_text,
                  r.diversity, r.coherence);
    return buf;
}

std::string format_report_csv(std::span<const AblationRow> rows) {
    std::string out = std::string(kReportHeader) + "\n";
    for (const auto& row : rows) {
        out += format_report_row(to_string(row.mode), row.report);
    }
    return out;
}

}  // namespace batfill
