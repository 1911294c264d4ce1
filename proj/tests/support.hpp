#pragma once

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "batfill/grid.hpp"
#include "batfill/model.hpp"
#include "batfill/rng.hpp"

namespace batfill::testing {

struct Instance {
    ModelParams params;
    TokenGrid tokens;
    MaskGrid mask;
};

// Random small model, grid and mask with at least one hole. Side lengths
// are in [1, max_side] with at least two cells; V in [2, max_vocab].
inline Instance random_instance(Rng& rng, std::size_t max_side, std::size_t max_vocab) {
    std::size_t h = 0;
    std::size_t w = 0;
    do {
        h = 1 + rng.below(max_side);
        w = 1 + rng.below(max_side);
    } while (h * w < 2);
    ModelConfig mc;
    mc.vocab_size = 2 + rng.below(max_vocab - 1);
    mc.n_heads = 1 + rng.below(2);
    mc.d_model = 8 * mc.n_heads;
    mc.n_layers = 1 + rng.below(2);
    mc.max_positions = h * w;
    mc.mlp_ratio = 2;
    Instance inst{init_params(mc, rng.next()), TokenGrid(h, w), MaskGrid(h, w)};
    for (auto& t : inst.tokens.tokens) {
        t = int(rng.below(mc.vocab_size));
    }
    const double rate = rng.uniform(0.1, 0.9);
    for (std::size_t i = 0; i < inst.mask.size(); ++i) {
        inst.mask.set(i, rng.uniform() < rate);
    }
    if (inst.mask.count_missing() == 0) {
        inst.mask.set(rng.below(inst.mask.size()), true);
    }
    return inst;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("batfill_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::size_t env_size(const char* name, std::size_t fallback) {
    if (const char* v = std::getenv(name)) {
        return std::size_t(std::strtoull(v, nullptr, 10));
    }
    return fallback;
}

}  // namespace batfill::testing
