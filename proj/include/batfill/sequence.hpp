#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "batfill/grid.hpp"

namespace batfill {

// Square boolean matrix, row = query slot, column = key slot.
class AttentionMask {
public:
    AttentionMask() = default;
    AttentionMask(std::size_t n, bool fill);

    std::size_t size() const { return n_; }
    bool allowed(std::size_t query, std::size_t key) const { return bits_[query * n_ + key] != 0; }
    void set(std::size_t query, std::size_t key, bool value) { bits_[query * n_ + key] = value ? 1 : 0; }
    std::span<const std::uint8_t> row(std::size_t query) const { return {bits_.data() + query * n_, n_}; }

    bool operator==(const AttentionMask&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint8_t> bits_;
};

enum class Layout {
    kBat,             // permuted: context block then causal predicted block
    kAutoregressive,  // raster order, causal, inputs shifted by one
    kMasked,          // raster order, fully bidirectional, [M] at holes
};

// Which raster position a BAT predicted slot carries.
enum class PredictedPositions {
    kTarget,   // slot i carries m_{i+1}, the position it predicts
    kContent,  // slot i carries the position of the token it holds (m_i; m_1 for the leading [M])
};

#ifdef BATFILL_PREDICTED_POSITION_FROM_CONTENT
inline constexpr PredictedPositions kDefaultPredictedPositions = PredictedPositions::kContent;
#else
inline constexpr PredictedPositions kDefaultPredictedPositions = PredictedPositions::kTarget;
#endif

// Model input for one grid/mask pair.
//
// For kBat with L cells and K holes the sequence has L+K slots:
//   [0, L-K)     valid tokens in raster order, own positions
//   [L-K, L)     [M] placeholders at m_1..m_K
//   [L, L+K)     predicted block; contents ([M], x_{m_1}, ..., x_{m_{K-1}}),
//                targets (x_{m_1}, ..., x_{m_K})
// For kAutoregressive / kMasked the sequence has L slots and the targets are
// read at the hole positions themselves.
struct BatSequence {
    Layout layout = Layout::kBat;
    std::size_t height = 0;
    std::size_t width = 0;
    int mask_token = 0;

    std::vector<int> content_ids;
    std::vector<std::size_t> position_ids;
    std::size_t predicted_offset = 0;
    std::vector<int> target_ids;
    std::vector<std::size_t> masked_positions;
    // Slot index whose output predicts target_ids[i].
    std::vector<std::size_t> target_slots;
    AttentionMask attention;
    // The conditioning grid, with mask_token at holes.
    std::vector<int> known;

    std::size_t grid_size() const { return height * width; }
    std::size_t num_targets() const { return target_ids.size(); }
    std::size_t length() const { return content_ids.size(); }
};

// allowed(q, c) = (q < L && c < L) || (q >= L && (c < L || c <= q)).
AttentionMask build_attention_mask(std::size_t grid_size, std::size_t num_masked);

AttentionMask build_causal_mask(std::size_t n);

BatSequence permute(const TokenGrid& tokens, const MaskGrid& mask, int mask_token,
                    PredictedPositions scheme = kDefaultPredictedPositions);

BatSequence build_ar_sequence(const TokenGrid& tokens, const MaskGrid& mask, int mask_token);

BatSequence build_mlm_sequence(const TokenGrid& tokens, const MaskGrid& mask, int mask_token);

// Writes sampled[i] at masked_positions[i]; the other cells come from the
// sequence's conditioning grid.
TokenGrid scatter(const BatSequence& seq, std::span<const int> sampled);

// Places `token` as the known value of hole i: the next predicted slot's
// content for kBat, the shifted input for kAutoregressive, the hole itself
// for kMasked. Used by the samplers.
void set_hole_content(BatSequence& seq, std::size_t hole, int token);

// Human-readable dump: contents, positions, targets and '#'/'.' attention.
std::string render(const BatSequence& seq);

}  // namespace batfill
