#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "batfill/error.hpp"
#include "batfill/model.hpp"

namespace batfill {

namespace {

constexpr char kMagic[4] = {'B', 'A', 'T', 'F'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
    require(v <= UINT32_MAX, std::string("checkpoint: ") + what + " does not fit in u32");
    return static_cast<std::uint32_t>(v);
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= std::uint32_t(bytes_[pos_ + std::size_t(i)]) << (8 * i);
        }
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string text(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const { require(pos_ + n <= bytes_.size(), "checkpoint: truncated file"); }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

// Allocates every tensor with the right shape; values are overwritten on load.
ModelParams shaped_params(const ModelConfig& config) { return init_params(config, 0); }

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, kVersion);
    const ModelConfig& c = params.config;
    for (std::size_t v : {c.vocab_size, c.d_model, c.n_heads, c.n_layers, c.max_positions, c.mlp_ratio}) {
        put_u32(out, checked_u32(v, "config field"));
    }
    const auto tensors = params.named();
    put_u32(out, checked_u32(tensors.size(), "tensor count"));
    for (const auto& ref : tensors) {
        put_u32(out, checked_u32(ref.name.size(), "name length"));
        out.insert(out.end(), ref.name.begin(), ref.name.end());
        put_u32(out, checked_u32(ref.tensor->rank(), "rank"));
        for (std::size_t e : ref.tensor->shape()) {
            put_u32(out, checked_u32(e, "extent"));
        }
    }
    for (const auto& ref : tensors) {
        for (double v : ref.tensor->values()) {
            put_f32(out, v);
        }
    }
    return out;
}

ModelParams deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
    Reader in(bytes);
    require(in.text(4) == std::string(kMagic, 4), "checkpoint: bad magic (expected BATF)");
    const std::uint32_t version = in.u32();
    require(version == kVersion, "checkpoint: unsupported version " + std::to_string(version));
    ModelConfig c;
    c.vocab_size = in.u32();
    c.d_model = in.u32();
    c.n_heads = in.u32();
    c.n_layers = in.u32();
    c.max_positions = in.u32();
    c.mlp_ratio = in.u32();
    c.validate();

    ModelParams params = shaped_params(c);
    auto tensors = params.named();
    const std::uint32_t count = in.u32();
    require(count == tensors.size(), "checkpoint: expected " + std::to_string(tensors.size()) + " tensors, found " +
                                         std::to_string(count));
    for (const auto& ref : tensors) {
        const std::string name = in.text(in.u32());
        require(name == ref.name, "checkpoint: expected tensor '" + ref.name + "', found '" + name + "'");
        std::vector<std::size_t> shape(in.u32());
        for (auto& e : shape) {
            e = in.u32();
        }
        require(shape == ref.tensor->shape(), "checkpoint: tensor '" + name + "' has shape inconsistent with config");
    }
    for (const auto& ref : tensors) {
        for (double& v : ref.tensor->values()) {
            v = static_cast<double>(in.f32());
        }
    }
    require(in.done(), "checkpoint: trailing bytes");
    return params;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
    const auto bytes = serialize_checkpoint(params);
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), "failed writing " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace batfill
