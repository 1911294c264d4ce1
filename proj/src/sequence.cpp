#include "batfill/sequence.hpp"

#include <sstream>

#include "batfill/error.hpp"

namespace batfill {

AttentionMask::AttentionMask(std::size_t n, bool fill) : n_(n), bits_(n * n, fill ? 1 : 0) {}

AttentionMask build_attention_mask(std::size_t grid_size, std::size_t num_masked) {
    if (num_masked > grid_size) {
        fail("build_attention_mask: K=" + std::to_string(num_masked) + " exceeds L=" + std::to_string(grid_size));
    }
    const std::size_t L = grid_size;
    const std::size_t n = grid_size + num_masked;
    AttentionMask mask(n, false);
    for (std::size_t q = 0; q < n; ++q) {
        for (std::size_t c = 0; c < n; ++c) {
            const bool ok = (q < L && c < L) || (q >= L && (c < L || c <= q));
            mask.set(q, c, ok);
        }
    }
    return mask;
}

AttentionMask build_causal_mask(std::size_t n) {
    AttentionMask mask(n, false);
    for (std::size_t q = 0; q < n; ++q) {
        for (std::size_t c = 0; c <= q; ++c) {
            mask.set(q, c, true);
        }
    }
    return mask;
}

namespace {

void check_inputs(const TokenGrid& tokens, const MaskGrid& mask, int mask_token) {
    BATFILL_CHECK(tokens.height == mask.height && tokens.width == mask.width,
            "sequence: token grid " + std::to_string(tokens.height) + "x" + std::to_string(tokens.width) +
                " does not match mask " + std::to_string(mask.height) + "x" + std::to_string(mask.width));
    BATFILL_CHECK(tokens.size() > 0, "sequence: empty grid");
    for (int t : tokens.tokens) {
        BATFILL_CHECK(t >= 0 && t < mask_token,
                "sequence: token id " + std::to_string(t) + " not below mask token " + std::to_string(mask_token));
    }
    BATFILL_CHECK(mask.count_missing() > 0, "nothing to predict");
}

BatSequence base_sequence(const TokenGrid& tokens, const MaskGrid& mask, int mask_token, Layout layout) {
    check_inputs(tokens, mask, mask_token);
    BatSequence seq;
    seq.layout = layout;
    seq.height = tokens.height;
    seq.width = tokens.width;
    seq.mask_token = mask_token;
    seq.masked_positions = mask.missing_positions();
    seq.known = tokens.tokens;
    for (std::size_t p : seq.masked_positions) {
        seq.target_ids.push_back(tokens.tokens[p]);
        seq.known[p] = mask_token;
    }
    return seq;
}

}  // namespace

BatSequence permute(const TokenGrid& tokens, const MaskGrid& mask, int mask_token, PredictedPositions scheme) {
    BatSequence seq = base_sequence(tokens, mask, mask_token, Layout::kBat);
    const std::size_t L = seq.grid_size();
    const std::size_t K = seq.masked_positions.size();

    seq.content_ids.reserve(L + K);
    seq.position_ids.reserve(L + K);
    for (std::size_t p = 0; p < L; ++p) {
        if (!mask.is_missing(p)) {
            seq.content_ids.push_back(tokens.tokens[p]);
            seq.position_ids.push_back(p);
        }
    }
    for (std::size_t p : seq.masked_positions) {
        seq.content_ids.push_back(mask_token);
        seq.position_ids.push_back(p);
    }
    seq.predicted_offset = L;
    for (std::size_t i = 0; i < K; ++i) {
        seq.content_ids.push_back(i == 0 ? mask_token : tokens.tokens[seq.masked_positions[i - 1]]);
        const std::size_t pos = (scheme == PredictedPositions::kTarget || i == 0) ? seq.masked_positions[i]
                                                                                   : seq.masked_positions[i - 1];
        seq.position_ids.push_back(pos);
        seq.target_slots.push_back(L + i);
    }
    seq.attention = build_attention_mask(L, K);
    return seq;
}

BatSequence build_ar_sequence(const TokenGrid& tokens, const MaskGrid& mask, int mask_token) {
    BatSequence seq = base_sequence(tokens, mask, mask_token, Layout::kAutoregressive);
    const std::size_t L = seq.grid_size();
    // Slot t predicts x_t from x_0..x_{t-1}: its input is x_{t-1}, with [M]
    // standing in for the missing predecessor of slot 0.
    seq.content_ids.resize(L);
    seq.position_ids.resize(L);
    for (std::size_t t = 0; t < L; ++t) {
        seq.content_ids[t] = t == 0 ? mask_token : tokens.tokens[t - 1];
        seq.position_ids[t] = t;
    }
    seq.predicted_offset = 0;
    seq.target_slots = seq.masked_positions;
    seq.attention = build_causal_mask(L);
    return seq;
}

BatSequence build_mlm_sequence(const TokenGrid& tokens, const MaskGrid& mask, int mask_token) {
    BatSequence seq = base_sequence(tokens, mask, mask_token, Layout::kMasked);
    const std::size_t L = seq.grid_size();
    seq.content_ids = seq.known;
    seq.position_ids.resize(L);
    for (std::size_t t = 0; t < L; ++t) {
        seq.position_ids[t] = t;
    }
    seq.predicted_offset = 0;
    seq.target_slots = seq.masked_positions;
    seq.attention = AttentionMask(L, true);
    return seq;
}

TokenGrid scatter(const BatSequence& seq, std::span<const int> sampled) {
    if (sampled.size() != seq.masked_positions.size()) {
        fail("scatter: got " + std::to_string(sampled.size()) + " tokens for " +
             std::to_string(seq.masked_positions.size()) + " holes");
    }
    TokenGrid out(seq.height, seq.width);
    out.tokens = seq.known;
    for (std::size_t i = 0; i < sampled.size(); ++i) {
        BATFILL_CHECK(sampled[i] >= 0 && sampled[i] < seq.mask_token,
                "scatter: sampled id " + std::to_string(sampled[i]) + " out of range");
        out.tokens[seq.masked_positions[i]] = sampled[i];
    }
    return out;
}

void set_hole_content(BatSequence& seq, std::size_t hole, int token) {
    BATFILL_CHECK(hole < seq.masked_positions.size(), "set_hole_content: hole index out of range");
    const std::size_t pos = seq.masked_positions[hole];
    switch (seq.layout) {
        case Layout::kBat:
            if (hole + 1 < seq.masked_positions.size()) {
                seq.content_ids[seq.predicted_offset + hole + 1] = token;
            }
            break;
        case Layout::kAutoregressive:
            if (pos + 1 < seq.grid_size()) {
                seq.content_ids[pos + 1] = token;
            }
            break;
        case Layout::kMasked:
            seq.content_ids[pos] = token;
            break;
    }
}

std::string render(const BatSequence& seq) {
    auto id = [&](int v) { return v == seq.mask_token ? std::string("[M]") : std::to_string(v); };
    std::vector<std::string> targets(seq.length());
    for (std::size_t i = 0; i < seq.target_slots.size(); ++i) {
        targets[seq.target_slots[i]] = id(seq.target_ids[i]);
    }
    std::ostringstream out;
    out << "slot content position target\n";
    for (std::size_t s = 0; s < seq.length(); ++s) {
        out << s << ' ' << id(seq.content_ids[s]) << ' ' << seq.position_ids[s];
        if (!targets[s].empty()) {
            out << ' ' << targets[s];
        }
        out << '\n';
    }
    out << "attention\n";
    for (std::size_t q = 0; q < seq.attention.size(); ++q) {
        for (std::size_t c = 0; c < seq.attention.size(); ++c) {
            out << (seq.attention.allowed(q, c) ? '#' : '.');
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace batfill
