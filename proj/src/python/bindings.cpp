#include <cstring>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "batfill/datasets.hpp"
#include "batfill/error.hpp"
#include "batfill/eval.hpp"
#include "batfill/io.hpp"
#include "batfill/maskgen.hpp"
#include "batfill/model.hpp"
#include "batfill/objectives.hpp"
#include "batfill/palette.hpp"
#include "batfill/sampler.hpp"
#include "batfill/sequence.hpp"

namespace py = pybind11;
using namespace batfill;

namespace {

using ImageArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using TokenArray = py::array_t<int, py::array::c_style | py::array::forcecast>;
using MaskArray = py::array_t<bool, py::array::c_style | py::array::forcecast>;

RgbGrid to_image(const ImageArray& a) {
    require(a.ndim() == 3 && a.shape(2) == 3, "image array must have shape (H, W, 3)");
    RgbGrid g(std::size_t(a.shape(0)), std::size_t(a.shape(1)));
    std::memcpy(g.pixels.data(), a.data(), g.size() * 3);
    return g;
}

ImageArray from_image(const RgbGrid& g) {
    ImageArray a({g.height, g.width, std::size_t(3)});
    std::memcpy(a.mutable_data(), g.pixels.data(), g.size() * 3);
    return a;
}

TokenGrid to_tokens(const TokenArray& a) {
    require(a.ndim() == 2, "token array must have shape (H, W)");
    TokenGrid g(std::size_t(a.shape(0)), std::size_t(a.shape(1)));
    std::copy(a.data(), a.data() + g.size(), g.tokens.begin());
    return g;
}

TokenArray from_tokens(const TokenGrid& g) {
    TokenArray a({g.height, g.width});
    std::copy(g.tokens.begin(), g.tokens.end(), a.mutable_data());
    return a;
}

MaskGrid to_mask(const MaskArray& a) {
    require(a.ndim() == 2, "mask array must have shape (H, W)");
    MaskGrid m(std::size_t(a.shape(0)), std::size_t(a.shape(1)));
    for (std::size_t i = 0; i < m.size(); ++i) {
        m.set(i, a.data()[i]);
    }
    return m;
}

MaskArray from_mask(const MaskGrid& m) {
    MaskArray a({m.height, m.width});
    for (std::size_t i = 0; i < m.size(); ++i) {
        a.mutable_data()[i] = m.is_missing(i);
    }
    return a;
}

py::array_t<double> from_tensor(const Tensor& t) {
    py::array_t<double> a({t.rows(), t.cols()});
    std::copy(t.values().begin(), t.values().end(), a.mutable_data());
    return a;
}

SampleConfig sample_config(std::size_t top_k, double temperature, std::size_t n, std::uint64_t seed,
                           std::size_t sweeps) {
    SampleConfig c;
    c.top_k = top_k;
    c.temperature = temperature;
    c.n_samples = n;
    c.seed = seed;
    c.gibbs_sweeps = sweeps;
    return c;
}

}  // namespace

PYBIND11_MODULE(_batfill, m) {
    m.doc() = "Bidirectional autoregressive image completion on palette tokens";

    py::register_exception<Error>(m, "BatfillError", PyExc_RuntimeError);

    py::class_<Palette>(m, "Palette")
        .def(py::init([](const std::vector<std::array<double, 3>>& centroids) { return Palette{centroids}; }))
        .def_property_readonly("k", &Palette::k)
        .def_readonly("centroids", &Palette::centroids)
        .def("__eq__", [](const Palette& a, const Palette& b) { return a == b; });

    m.def(
        "fit_palette",
        [](const std::vector<ImageArray>& images, std::size_t k, std::uint64_t seed) {
            std::vector<Rgb> pixels;
            for (const auto& img : images) {
                const RgbGrid g = to_image(img);
                pixels.insert(pixels.end(), g.pixels.begin(), g.pixels.end());
            }
            return fit_palette(pixels, k, seed);
        },
        py::arg("images"), py::arg("k"), py::arg("seed") = 0);
    m.def("encode", [](const ImageArray& img, const Palette& p) { return from_tokens(encode(to_image(img), p)); });
    m.def("decode", [](const TokenArray& t, const Palette& p) { return from_image(decode(to_tokens(t), p)); });
    m.def("read_palette", [](const std::string& path) { return read_palette(path); });
    m.def("write_palette", [](const std::string& path, const Palette& p) { write_palette(path, p); });

    m.def(
        "random_mask",
        [](std::size_t h, std::size_t w, double lo, double hi, std::uint64_t seed) {
            return from_mask(random_irregular_mask(h, w, lo, hi, seed));
        },
        py::arg("height"), py::arg("width"), py::arg("lo") = 0.4, py::arg("hi") = 0.6, py::arg("seed") = 0);

    m.def(
        "make_dataset",
        [](const std::string& kind, std::size_t count, std::size_t h, std::size_t w, std::uint64_t seed) {
            std::vector<ImageArray> out;
            for (const auto& g : make_dataset(parse_dataset_kind(kind), count, h, w, seed)) {
                out.push_back(from_image(g));
            }
            return out;
        },
        py::arg("kind"), py::arg("count"), py::arg("height") = 8, py::arg("width") = 8, py::arg("seed") = 0);

    m.def(
        "permute",
        [](const TokenArray& tokens, const MaskArray& mask, int mask_token) {
            const BatSequence s = permute(to_tokens(tokens), to_mask(mask), mask_token);
            MaskArray attn({s.length(), s.length()});
            for (std::size_t q = 0; q < s.length(); ++q) {
                for (std::size_t c = 0; c < s.length(); ++c) {
                    attn.mutable_at(q, c) = s.attention.allowed(q, c);
                }
            }
            py::dict d;
            d["content_ids"] = s.content_ids;
            d["position_ids"] = s.position_ids;
            d["target_ids"] = s.target_ids;
            d["masked_positions"] = s.masked_positions;
            d["target_slots"] = s.target_slots;
            d["attention"] = attn;
            return d;
        },
        py::arg("tokens"), py::arg("mask"), py::arg("mask_token"));

    py::class_<ModelParams>(m, "Model")
        .def_property_readonly("vocab_size", [](const ModelParams& p) { return p.config.vocab_size; })
        .def_property_readonly("max_positions", [](const ModelParams& p) { return p.config.max_positions; })
        .def_property_readonly("parameter_count", &ModelParams::parameter_count)
        .def("save", [](const ModelParams& p, const std::string& path) { save_checkpoint(path, p); })
        .def("__eq__", [](const ModelParams& a, const ModelParams& b) { return a == b; });

    m.def(
        "init_model",
        [](const std::string& preset, std::size_t vocab, std::size_t positions, std::uint64_t seed) {
            return init_params(model_preset(preset, vocab, positions), seed);
        },
        py::arg("preset"), py::arg("vocab_size"), py::arg("max_positions"), py::arg("seed") = 0);
    m.def("load_model", [](const std::string& path) { return load_checkpoint(path); });

    m.def(
        "logits",
        [](const ModelParams& p, const TokenArray& tokens, const MaskArray& mask, const std::string& mode) {
            const BatSequence s = build_sequence(parse_mode(mode), to_tokens(tokens), to_mask(mask),
                                                 p.config.mask_token());
            return from_tensor(forward(p, s));
        },
        py::arg("model"), py::arg("tokens"), py::arg("mask"), py::arg("mode") = "bat");

    m.def(
        "train",
        [](const std::vector<TokenArray>& data, const Palette& palette, const std::string& config_text) {
            std::vector<TokenGrid> grids;
            for (const auto& a : data) {
                grids.push_back(to_tokens(a));
            }
            const TrainConfig cfg = parse_train_config(config_text);
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = train(grids, palette, cfg);
            }
            std::vector<std::pair<std::size_t, double>> curve;
            for (const auto& rec : r.curve) {
                curve.emplace_back(rec.step, rec.loss);
            }
            return py::make_tuple(std::move(r.params), curve);
        },
        py::arg("data"), py::arg("palette"), py::arg("config") = "",
        "Trains on token grids; config uses the 'key = value' format of the CLI.");

    m.def(
        "complete",
        [](const ModelParams& p, const TokenArray& tokens, const MaskArray& mask, const std::string& mode,
           std::size_t top_k, double temperature, std::size_t n, std::uint64_t seed, std::size_t sweeps) {
            const SampleConfig cfg = sample_config(top_k, temperature, n, seed, sweeps);
            std::vector<TokenGrid> out;
            {
                py::gil_scoped_release release;
                out = sample_diverse(p, to_tokens(tokens), to_mask(mask), cfg, parse_mode(mode));
            }
            std::vector<TokenArray> arrays;
            for (const auto& g : out) {
                arrays.push_back(from_tokens(g));
            }
            return arrays;
        },
        py::arg("model"), py::arg("tokens"), py::arg("mask"), py::arg("mode") = "bat", py::arg("top_k") = 1,
        py::arg("temperature") = 1.0, py::arg("n") = 1, py::arg("seed") = 0, py::arg("sweeps") = 2);

    m.def("token_accuracy", [](const TokenArray& pred, const TokenArray& truth, const MaskArray& mask) {
        return token_accuracy(to_tokens(pred), to_tokens(truth), to_mask(mask));
    });
    m.def("psnr", [](const ImageArray& a, const ImageArray& b) { return psnr(to_image(a), to_image(b)); });
    m.def("pixel_l1", [](const ImageArray& a, const ImageArray& b) { return pixel_l1(to_image(a), to_image(b)); });
    m.def("diversity", [](const std::vector<TokenArray>& samples, const MaskArray& mask) {
        std::vector<TokenGrid> grids;
        for (const auto& s : samples) {
            grids.push_back(to_tokens(s));
        }
        return diversity(grids, to_mask(mask));
    });
}
