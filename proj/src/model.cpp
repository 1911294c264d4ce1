#include "batfill/model.hpp"

#include <cmath>

#include "batfill/error.hpp"
#include "batfill/rng.hpp"

namespace batfill {

void ModelConfig::validate() const {
    BATFILL_CHECK(vocab_size >= 2, "model config: vocab_size must be at least 2");
    BATFILL_CHECK(d_model >= 1 && n_heads >= 1, "model config: d_model and n_heads must be positive");
    BATFILL_CHECK(d_model % n_heads == 0, "model config: d_model " + std::to_string(d_model) +
                                        " not divisible by n_heads " + std::to_string(n_heads));
    BATFILL_CHECK(n_layers >= 1, "model config: n_layers must be positive");
    BATFILL_CHECK(max_positions >= 1, "model config: max_positions must be positive");
    BATFILL_CHECK(mlp_ratio >= 1, "model config: mlp_ratio must be positive");
}

ModelConfig model_preset(const std::string& name, std::size_t vocab_size, std::size_t max_positions) {
    ModelConfig c;
    c.vocab_size = vocab_size;
    c.max_positions = max_positions;
    if (name == "tiny") {
        c.d_model = 32;
        c.n_heads = 4;
        c.n_layers = 2;
    } else if (name == "small") {
        c.d_model = 64;
        c.n_heads = 4;
        c.n_layers = 4;
    } else if (name == "full") {
        c.d_model = 256;
        c.n_heads = 8;
        c.n_layers = 8;
    } else if (name == "gradcheck") {
        c.d_model = 8;
        c.n_heads = 2;
        c.n_layers = 1;
    } else {
        fail("unknown model preset '" + name + "' (expected tiny, small, full or gradcheck)");
    }
    c.mlp_ratio = 4;
    c.validate();
    return c;
}

namespace {

constexpr std::size_t kTensorsPerLayer = 16;

template <typename Params, typename Ref>
std::vector<Ref> named_impl(Params& p) {
    std::vector<Ref> out;
    out.push_back({"token_embedding", &p.token_embedding, ParamKind::kEmbedding});
    out.push_back({"position_embedding", &p.position_embedding, ParamKind::kEmbedding});
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        auto& l = p.layers[i];
        const std::string pre = "layers." + std::to_string(i) + ".";
        out.push_back({pre + "ln1.gain", &l.ln1_gain, ParamKind::kNorm});
        out.push_back({pre + "ln1.bias", &l.ln1_bias, ParamKind::kNorm});
        out.push_back({pre + "attn.wq", &l.wq, ParamKind::kWeight});
        out.push_back({pre + "attn.bq", &l.bq, ParamKind::kBias});
        out.push_back({pre + "attn.wk", &l.wk, ParamKind::kWeight});
        out.push_back({pre + "attn.bk", &l.bk, ParamKind::kBias});
        out.push_back({pre + "attn.wv", &l.wv, ParamKind::kWeight});
        out.push_back({pre + "attn.bv", &l.bv, ParamKind::kBias});
        out.push_back({pre + "attn.wo", &l.wo, ParamKind::kWeight});
        out.push_back({pre + "attn.bo", &l.bo, ParamKind::kBias});
        out.push_back({pre + "ln2.gain", &l.ln2_gain, ParamKind::kNorm});
        out.push_back({pre + "ln2.bias", &l.ln2_bias, ParamKind::kNorm});
        out.push_back({pre + "mlp.w_fc", &l.w_fc, ParamKind::kWeight});
        out.push_back({pre + "mlp.b_fc", &l.b_fc, ParamKind::kBias});
        out.push_back({pre + "mlp.w_proj", &l.w_proj, ParamKind::kWeight});
        out.push_back({pre + "mlp.b_proj", &l.b_proj, ParamKind::kBias});
    }
    out.push_back({"final.gain", &p.final_gain, ParamKind::kNorm});
    out.push_back({"final.bias", &p.final_bias, ParamKind::kNorm});
    out.push_back({"head.w_out", &p.w_out, ParamKind::kWeight});
    return out;
}

// Indices into the flat parameter list.
struct ParamSlots {
    static constexpr std::size_t kToken = 0;
    static constexpr std::size_t kPosition = 1;
    static std::size_t layer(std::size_t i) { return 2 + i * kTensorsPerLayer; }
    static std::size_t final_gain(std::size_t n_layers) { return 2 + n_layers * kTensorsPerLayer; }
    static std::size_t total(std::size_t n_layers) { return final_gain(n_layers) + 3; }
};

// Offsets within one layer, matching LayerParams declaration order.
enum LayerSlot : std::size_t {
    kLn1Gain, kLn1Bias, kWq, kBq, kWk, kBk, kWv, kBv, kWo, kBo, kLn2Gain, kLn2Bias, kWfc, kBfc, kWproj, kBproj
};

}  // namespace

std::vector<ParamRef> ModelParams::named() { return named_impl<ModelParams, ParamRef>(*this); }

std::vector<ConstParamRef> ModelParams::named() const { return named_impl<const ModelParams, ConstParamRef>(*this); }

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& ref : named()) {
        n += ref.tensor->size();
    }
    return n;
}

bool ModelParams::operator==(const ModelParams& other) const {
    if (!(config == other.config)) {
        return false;
    }
    const auto a = named();
    const auto b = other.named();
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(*a[i].tensor == *b[i].tensor)) {
            return false;
        }
    }
    return true;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t d = config.d_model;
    const std::size_t V = config.vocab_size;
    const std::size_t hidden = config.mlp_ratio * d;

    ModelParams p;
    p.config = config;
    p.token_embedding = Tensor::matrix(V + 1, d);
    p.position_embedding = Tensor::matrix(config.max_positions, d);
    p.layers.resize(config.n_layers);
    for (auto& l : p.layers) {
        l.ln1_gain = Tensor::vector(d, 1.0);
        l.ln1_bias = Tensor::vector(d);
        l.wq = Tensor::matrix(d, d);
        l.bq = Tensor::vector(d);
        l.wk = Tensor::matrix(d, d);
        l.bk = Tensor::vector(d);
        l.wv = Tensor::matrix(d, d);
        l.bv = Tensor::vector(d);
        l.wo = Tensor::matrix(d, d);
        l.bo = Tensor::vector(d);
        l.ln2_gain = Tensor::vector(d, 1.0);
        l.ln2_bias = Tensor::vector(d);
        l.w_fc = Tensor::matrix(d, hidden);
        l.b_fc = Tensor::vector(hidden);
        l.w_proj = Tensor::matrix(hidden, d);
        l.b_proj = Tensor::vector(d);
    }
    p.final_gain = Tensor::vector(d, 1.0);
    p.final_bias = Tensor::vector(d);
    p.w_out = Tensor::matrix(d, V);

    Rng rng(seed);
    for (auto& ref : p.named()) {
        if (ref.kind == ParamKind::kWeight || ref.kind == ParamKind::kEmbedding) {
            for (double& v : ref.tensor->values()) {
                v = 0.02 * rng.normal();
            }
        }
    }
    return p;
}

std::vector<Var> bind(Tape& tape, const ModelParams& params, bool requires_grad) {
    std::vector<Var> vars;
    for (const auto& ref : params.named()) {
        vars.push_back(tape.input(*ref.tensor, requires_grad));
    }
    return vars;
}

Var attention_block(Tape& tape, Var x, std::span<const Var> layer, const AttentionMask& allowed, std::size_t n_heads) {
    const std::size_t d = tape.value(x).cols();
    BATFILL_CHECK(n_heads >= 1 && d % n_heads == 0, "attention_block: d_model not divisible by n_heads");
    const std::size_t hd = d / n_heads;
    const double inv_sqrt = 1.0 / std::sqrt(double(hd));

    const Var h = layer_norm(tape, x, layer[kLn1Gain], layer[kLn1Bias]);
    const Var q = add_row(tape, matmul(tape, h, layer[kWq]), layer[kBq]);
    const Var k = add_row(tape, matmul(tape, h, layer[kWk]), layer[kBk]);
    const Var v = add_row(tape, matmul(tape, h, layer[kWv]), layer[kBv]);

    std::vector<Var> heads;
    heads.reserve(n_heads);
    for (std::size_t head = 0; head < n_heads; ++head) {
        const Var qh = columns(tape, q, head * hd, hd);
        const Var kh = columns(tape, k, head * hd, hd);
        const Var vh = columns(tape, v, head * hd, hd);
        const Var scores = scale(tape, matmul_nt(tape, qh, kh), inv_sqrt);
        const Var probs = masked_softmax(tape, scores, allowed);
        heads.push_back(matmul(tape, probs, vh));
    }
    const Var merged = n_heads == 1 ? heads[0] : concat_columns(tape, heads);
    const Var out = add_row(tape, matmul(tape, merged, layer[kWo]), layer[kBo]);
    return add(tape, x, out);
}

Var mlp_block(Tape& tape, Var x, std::span<const Var> layer) {
    const Var h = layer_norm(tape, x, layer[kLn2Gain], layer[kLn2Bias]);
    const Var fc = gelu(tape, add_row(tape, matmul(tape, h, layer[kWfc]), layer[kBfc]));
    const Var out = add_row(tape, matmul(tape, fc, layer[kWproj]), layer[kBproj]);
    return add(tape, x, out);
}

namespace {

void check_sequence(const ModelConfig& config, const BatSequence& seq) {
    BATFILL_CHECK(seq.content_ids.size() == seq.position_ids.size(), "forward: content/position length mismatch");
    BATFILL_CHECK(seq.attention.size() == seq.length(), "forward: attention mask size does not match sequence length");
    for (std::size_t i = 0; i < seq.length(); ++i) {
        BATFILL_CHECK(seq.content_ids[i] >= 0 && std::size_t(seq.content_ids[i]) <= config.vocab_size,
                "forward: content id " + std::to_string(seq.content_ids[i]) + " exceeds [M] id " +
                    std::to_string(config.vocab_size));
        BATFILL_CHECK(seq.position_ids[i] < config.max_positions, "forward: position id " +
                                                                std::to_string(seq.position_ids[i]) +
                                                                " >= max_positions " +
                                                                std::to_string(config.max_positions));
    }
}

}  // namespace

Var forward(Tape& tape, std::span<const Var> params, const ModelConfig& config, const BatSequence& seq,
            std::span<const std::size_t> rows) {
    BATFILL_CHECK(params.size() == ParamSlots::total(config.n_layers), "forward: parameter count does not match config");
    check_sequence(config, seq);

    Var x = add(tape, embedding(tape, params[ParamSlots::kToken], std::span<const int>(seq.content_ids)),
                embedding(tape, params[ParamSlots::kPosition], std::span<const std::size_t>(seq.position_ids)));
    for (std::size_t l = 0; l < config.n_layers; ++l) {
        const auto layer = params.subspan(ParamSlots::layer(l), kTensorsPerLayer);
        x = attention_block(tape, x, layer, seq.attention, config.n_heads);
        x = mlp_block(tape, x, layer);
    }
    // Only the requested rows need the final norm and projection; both are
    // row-wise so selecting first gives identical values.
    const Var picked = select_rows(tape, x, rows);
    const std::size_t fg = ParamSlots::final_gain(config.n_layers);
    const Var normed = layer_norm(tape, picked, params[fg], params[fg + 1]);
    return matmul(tape, normed, params[fg + 2]);
}

Tensor forward(const ModelParams& params, const BatSequence& seq) {
    return forward_slots(params, seq, seq.target_slots);
}

Tensor forward_slots(const ModelParams& params, const BatSequence& seq, std::span<const std::size_t> slots) {
    Tape tape(false);
    const auto vars = bind(tape, params, false);
    return tape.value(forward(tape, vars, params.config, seq, slots));
}

// ---- incremental decoding ----

IncrementalDecoder::IncrementalDecoder(const ModelParams& params) : params_(params) {
    const std::size_t d = params.config.d_model;
    keys_.assign(params.config.n_layers, Tensor::matrix(0, d));
    values_.assign(params.config.n_layers, Tensor::matrix(0, d));
}

namespace {

Tensor add_bias(Tensor x, const Tensor& bias) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = x.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] += bias[c];
        }
    }
    return x;
}

Tensor append_rows(const Tensor& top, const Tensor& bottom) {
    std::vector<double> data(top.values().begin(), top.values().end());
    data.insert(data.end(), bottom.values().begin(), bottom.values().end());
    return Tensor({top.rows() + bottom.rows(), bottom.cols()}, std::move(data));
}

}  // namespace

Tensor IncrementalDecoder::append(std::span<const int> contents, std::span<const std::size_t> positions,
                                  const AttentionMask& block_mask, std::span<const std::size_t> rows) {
    const ModelConfig& cfg = params_.config;
    const std::size_t n = contents.size();
    BATFILL_CHECK(n == positions.size() && block_mask.size() == n, "IncrementalDecoder: block size mismatch");
    const std::size_t d = cfg.d_model;
    const std::size_t hd = cfg.head_dim();
    const double inv_sqrt = 1.0 / std::sqrt(double(hd));

    Tensor x = Tensor::matrix(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        BATFILL_CHECK(contents[i] >= 0 && std::size_t(contents[i]) <= cfg.vocab_size, "IncrementalDecoder: bad content id");
        BATFILL_CHECK(positions[i] < cfg.max_positions, "IncrementalDecoder: bad position id");
        const auto te = params_.token_embedding.row(std::size_t(contents[i]));
        const auto pe = params_.position_embedding.row(positions[i]);
        auto xr = x.row(i);
        for (std::size_t c = 0; c < d; ++c) {
            xr[c] = te[c] + pe[c];
        }
    }

    const std::size_t old = cached_;
    const std::size_t total = old + n;
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const LayerParams& lp = params_.layers[l];
        const Tensor h = layer_norm(x, lp.ln1_gain, lp.ln1_bias);
        const Tensor q = add_bias(matmul(h, lp.wq), lp.bq);
        keys_[l] = append_rows(keys_[l], add_bias(matmul(h, lp.wk), lp.bk));
        values_[l] = append_rows(values_[l], add_bias(matmul(h, lp.wv), lp.bv));
        const Tensor& K = keys_[l];
        const Tensor& V = values_[l];

        Tensor merged = Tensor::matrix(n, d);
        std::vector<double> p(total);
        for (std::size_t head = 0; head < cfg.n_heads; ++head) {
            const std::size_t off = head * hd;
            for (std::size_t i = 0; i < n; ++i) {
                const double* qi = q.row(i).data() + off;
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < total; ++j) {
                    const bool ok = j < old || block_mask.allowed(i, j - old);
                    if (!ok) {
                        p[j] = 0.0;
                        continue;
                    }
                    const double* kj = K.row(j).data() + off;
                    double s = 0.0;
                    for (std::size_t c = 0; c < hd; ++c) {
                        s += qi[c] * kj[c];
                    }
                    p[j] = s * inv_sqrt;
                    mx = std::max(mx, p[j]);
                }
                double z = 0.0;
                for (std::size_t j = 0; j < total; ++j) {
                    if (j < old || block_mask.allowed(i, j - old)) {
                        p[j] = std::exp(p[j] - mx);
                        z += p[j];
                    }
                }
                double* out = merged.row(i).data() + off;
                for (std::size_t j = 0; j < total; ++j) {
                    if (p[j] == 0.0) {
                        continue;
                    }
                    const double w = p[j] / z;
                    const double* vj = V.row(j).data() + off;
                    for (std::size_t c = 0; c < hd; ++c) {
                        out[c] += w * vj[c];
                    }
                }
            }
        }
        const Tensor attn = add_bias(matmul(merged, lp.wo), lp.bo);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += attn[i];
        }
        const Tensor h2 = layer_norm(x, lp.ln2_gain, lp.ln2_bias);
        Tensor fc = add_bias(matmul(h2, lp.w_fc), lp.b_fc);
        for (double& v : fc.values()) {
            v = gelu(v);
        }
        const Tensor proj = add_bias(matmul(fc, lp.w_proj), lp.b_proj);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += proj[i];
        }
    }
    cached_ = total;

    Tensor picked = Tensor::matrix(rows.size(), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        BATFILL_CHECK(rows[i] < n, "IncrementalDecoder: requested row outside block");
        std::copy_n(x.row(rows[i]).data(), d, picked.row(i).data());
    }
    return matmul(layer_norm(picked, params_.final_gain, params_.final_bias), params_.w_out);
}

Tensor IncrementalDecoder::append_one(int content, std::size_t position) {
    const int c[1] = {content};
    const std::size_t p[1] = {position};
    const std::size_t r[1] = {0};
    return append(c, p, AttentionMask(1, true), r);
}

}  // namespace batfill
