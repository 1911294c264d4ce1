#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "batfill/numerics.hpp"
#include "batfill/sequence.hpp"
#include "batfill/tensor.hpp"

namespace batfill {

struct ModelConfig {
    std::size_t vocab_size = 512;  // palette size V; id V is [M]
    std::size_t d_model = 256;
    std::size_t n_heads = 8;
    std::size_t n_layers = 8;
    std::size_t max_positions = 1024;  // grid area L
    std::size_t mlp_ratio = 4;

    std::size_t head_dim() const { return d_model / n_heads; }
    int mask_token() const { return static_cast<int>(vocab_size); }
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

// Named size presets. "tiny" is the desk-scale default used by the tests and
// the synthetic experiments; "full" matches a 32x32 grid with 512 colors.
ModelConfig model_preset(const std::string& name, std::size_t vocab_size, std::size_t max_positions);

enum class ParamKind { kWeight, kBias, kNorm, kEmbedding };

struct LayerParams {
    Tensor ln1_gain, ln1_bias;
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln2_gain, ln2_bias;
    Tensor w_fc, b_fc, w_proj, b_proj;
};

struct ParamRef {
    std::string name;
    Tensor* tensor;
    ParamKind kind;
};

struct ConstParamRef {
    std::string name;
    const Tensor* tensor;
    ParamKind kind;
};

struct ModelParams {
    ModelConfig config;
    Tensor token_embedding;     // (V+1) x d
    Tensor position_embedding;  // L x d
    std::vector<LayerParams> layers;
    Tensor final_gain, final_bias;
    Tensor w_out;  // d x V

    // Every tensor in a fixed order: embeddings, layers, final norm, head.
    std::vector<ParamRef> named();
    std::vector<ConstParamRef> named() const;
    std::size_t parameter_count() const;

    bool operator==(const ModelParams& other) const;
};

// Weights ~ N(0, 0.02), biases and norm offsets 0, norm gains 1.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// Registers every parameter as a tape input, in named() order.
std::vector<Var> bind(Tape& tape, const ModelParams& params, bool requires_grad);

// x + MultiHeadAttention(LayerNorm(x)) with the given attention pattern.
// `layer` holds the 16 per-layer inputs in LayerParams declaration order.
Var attention_block(Tape& tape, Var x, std::span<const Var> layer, const AttentionMask& allowed, std::size_t n_heads);
Var mlp_block(Tape& tape, Var x, std::span<const Var> layer);

// Logits [rows.size() x V] at the given slots.
Var forward(Tape& tape, std::span<const Var> params, const ModelConfig& config, const BatSequence& seq,
            std::span<const std::size_t> rows);

// Value-only forward. The first overload returns the rows of the target slots.
Tensor forward(const ModelParams& params, const BatSequence& seq);
Tensor forward_slots(const ModelParams& params, const BatSequence& seq, std::span<const std::size_t> slots);

// Key/value cache for slot-by-slot decoding. Each appended block attends every
// cached slot plus the block entries allowed by its own mask, which matches
// the full forward for BAT and AR layouts.
class IncrementalDecoder {
public:
    explicit IncrementalDecoder(const ModelParams& params);

    // Appends slots and returns logits [rows.size() x V] for the listed block rows.
    Tensor append(std::span<const int> contents, std::span<const std::size_t> positions, const AttentionMask& block_mask,
                  std::span<const std::size_t> rows);
    // Single slot that sees everything cached plus itself.
    Tensor append_one(int content, std::size_t position);

    std::size_t cached() const { return cached_; }

private:
    const ModelParams& params_;
    std::vector<Tensor> keys_;    // per layer, cached x d
    std::vector<Tensor> values_;  // per layer, cached x d
    std::size_t cached_ = 0;
};

// Binary checkpoint: "BATF", u32 version, config, tensor directory, float32 data.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params);
ModelParams deserialize_checkpoint(std::span<const std::uint8_t> bytes);

}  // namespace batfill
