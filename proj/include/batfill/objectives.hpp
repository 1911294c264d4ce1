#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "batfill/grid.hpp"
#include "batfill/maskgen.hpp"
#include "batfill/model.hpp"
#include "batfill/palette.hpp"

namespace batfill {

enum class Mode { kAr, kMlm, kBat };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct TrainConfig {
    Mode mode = Mode::kBat;
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double adam_eps = 1e-8;
    double weight_decay = 0.01;
    std::size_t batch_size = 16;
    std::size_t steps = 1000;
    // Linear warmup over warmup_frac of the steps, then cosine decay to
    // min_lr_frac * lr.
    double warmup_frac = 0.02;
    double min_lr_frac = 0.1;
    std::uint64_t seed = 0;
    MaskBucket mask_bucket = kBucket40to60;
    std::string preset = "tiny";
    // Non-zero values override the preset.
    std::size_t d_model = 0;
    std::size_t n_heads = 0;
    std::size_t n_layers = 0;
    std::size_t mlp_ratio = 0;
    std::size_t log_every = 50;

    void validate() const;
    ModelConfig model_config(std::size_t vocab_size, std::size_t max_positions) const;
    // Two configs train with the same budget when everything but the mode matches.
    bool same_budget(const TrainConfig& other) const;
};

// "key = value" per line, '#' comments. Unknown keys are errors.
TrainConfig parse_train_config(const std::string& text, TrainConfig base = {});
std::string format_train_config(const TrainConfig& config);

struct OptState {
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    std::size_t step = 0;
};

OptState init_opt_state(const ModelParams& params);

// Mean over rows of -log softmax(logits)[target].
double bat_loss(const Tensor& logits, std::span<const int> targets);

BatSequence build_sequence(Mode mode, const TokenGrid& tokens, const MaskGrid& mask, int mask_token);

// Per-example losses under each objective (value only).
double ar_loss(const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask);
double mlm_loss(const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask);
double bat_example_loss(const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask);
double example_loss(Mode mode, const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask);

// Loss and parameter gradients (named() order) for one example.
double example_gradients(Mode mode, const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask,
                         std::vector<Tensor>& grads);

// Finite-difference check of example_gradients over every parameter tensor.
GradCheckResult model_grad_check(ModelParams& params, Mode mode, const TokenGrid& tokens, const MaskGrid& mask,
                                 const GradCheckOptions& options = {});

// Decoupled-weight-decay Adam with bias correction. Decay applies to weight
// matrices only (not norms, biases or embedding tables).
void adamw_step(ModelParams& params, std::span<const Tensor> grads, OptState& state, const TrainConfig& config,
                double lr);

double learning_rate(const TrainConfig& config, std::size_t step);

struct LossRecord {
    std::size_t step;
    double loss;
    double lr;
};

struct TrainResult {
    ModelParams params;
    std::vector<LossRecord> curve;  // every log_every steps plus the last one
    double final_loss = 0.0;        // mean batch loss over the last min(20, steps) steps
};

using TrainCallback = std::function<void(const LossRecord&)>;

TrainResult train(std::span<const TokenGrid> dataset, const Palette& palette, const TrainConfig& config,
                  const TrainCallback& on_log = {});

std::string format_loss_csv(std::span<const LossRecord> curve);

// Worker count for per-example parallelism: hardware concurrency, capped by
// BATFILL_THREADS when set.
std::size_t thread_budget();

}  // namespace batfill
