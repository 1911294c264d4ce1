#include "batfill/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "batfill/error.hpp"
#include "batfill/parallel.hpp"
#include "batfill/rng.hpp"

namespace batfill {

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::kAr:
            return "ar";
        case Mode::kMlm:
            return "mlm";
        case Mode::kBat:
            return "bat";
    }
    return "?";
}

Mode parse_mode(const std::string& text) {
    std::string s = text;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    if (s == "ar") {
        return Mode::kAr;
    }
    if (s == "mlm") {
        return Mode::kMlm;
    }
    if (s == "bat") {
        return Mode::kBat;
    }
    fail("unknown mode '" + text + "' (expected ar, mlm or bat)");
}

void TrainConfig::validate() const {
    BATFILL_CHECK(lr > 0.0 && std::isfinite(lr), "train config: lr must be positive");
    BATFILL_CHECK(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "train config: betas must lie in [0, 1)");
    BATFILL_CHECK(adam_eps > 0.0, "train config: adam_eps must be positive");
    BATFILL_CHECK(weight_decay >= 0.0, "train config: weight_decay must be non-negative");
    BATFILL_CHECK(batch_size >= 1, "train config: batch must be positive");
    BATFILL_CHECK(warmup_frac >= 0.0 && warmup_frac < 1.0, "train config: warmup_frac must lie in [0, 1)");
    BATFILL_CHECK(min_lr_frac >= 0.0 && min_lr_frac <= 1.0, "train config: min_lr_frac must lie in [0, 1]");
    BATFILL_CHECK(mask_bucket.lo >= 0.0 && mask_bucket.lo < mask_bucket.hi && mask_bucket.hi <= 1.0,
            "train config: need 0 <= mask_lo < mask_hi <= 1");
    BATFILL_CHECK(log_every >= 1, "train config: log_every must be positive");
}

ModelConfig TrainConfig::model_config(std::size_t vocab_size, std::size_t max_positions) const {
    ModelConfig c = model_preset(preset, vocab_size, max_positions);
    if (d_model != 0) {
        c.d_model = d_model;
    }
    if (n_heads != 0) {
        c.n_heads = n_heads;
    }
    if (n_layers != 0) {
        c.n_layers = n_layers;
    }
    if (mlp_ratio != 0) {
        c.mlp_ratio = mlp_ratio;
    }
    c.validate();
    return c;
}

bool TrainConfig::same_budget(const TrainConfig& o) const {
    return lr == o.lr && beta1 == o.beta1 && beta2 == o.beta2 && adam_eps == o.adam_eps &&
           weight_decay == o.weight_decay && batch_size == o.batch_size && steps == o.steps &&
           warmup_frac == o.warmup_frac && min_lr_frac == o.min_lr_frac && seed == o.seed &&
           mask_bucket.lo == o.mask_bucket.lo && mask_bucket.hi == o.mask_bucket.hi && preset == o.preset &&
           d_model == o.d_model && n_heads == o.n_heads && n_layers == o.n_layers && mlp_ratio == o.mlp_ratio;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    BATFILL_CHECK(used == v.size() && !v.empty(), "config key '" + key + "': expected a number, got '" + v + "'");
    return out;
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
    BATFILL_CHECK(!v.empty() && std::all_of(v.begin(), v.end(), [](char c) { return std::isdigit(c); }),
            "config key '" + key + "': expected a non-negative integer, got '" + v + "'");
    return std::stoull(v);
}

}  // namespace

TrainConfig parse_train_config(const std::string& text, TrainConfig c) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        BATFILL_CHECK(eq != std::string::npos, "config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string v = trim(line.substr(eq + 1));
        if (key == "mode") {
            c.mode = parse_mode(v);
        } else if (key == "lr") {
            c.lr = to_double(key, v);
        } else if (key == "beta1") {
            c.beta1 = to_double(key, v);
        } else if (key == "beta2") {
            c.beta2 = to_double(key, v);
        } else if (key == "adam_eps") {
            c.adam_eps = to_double(key, v);
        } else if (key == "weight_decay") {
            c.weight_decay = to_double(key, v);
        } else if (key == "batch") {
            c.batch_size = to_count(key, v);
        } else if (key == "steps") {
            c.steps = to_count(key, v);
        } else if (key == "warmup_frac") {
            c.warmup_frac = to_double(key, v);
        } else if (key == "min_lr_frac") {
            c.min_lr_frac = to_double(key, v);
        } else if (key == "seed") {
            c.seed = to_count(key, v);
        } else if (key == "mask_lo") {
            c.mask_bucket.lo = to_double(key, v);
        } else if (key == "mask_hi") {
            c.mask_bucket.hi = to_double(key, v);
        } else if (key == "preset") {
            c.preset = v;
        } else if (key == "d_model") {
            c.d_model = to_count(key, v);
        } else if (key == "n_heads") {
            c.n_heads = to_count(key, v);
        } else if (key == "n_layers") {
            c.n_layers = to_count(key, v);
        } else if (key == "mlp_ratio") {
            c.mlp_ratio = to_count(key, v);
        } else if (key == "log_every") {
            c.log_every = to_count(key, v);
        } else {
            fail("unknown config key '" + key + "' (line " + std::to_string(lineno) + ")");
        }
    }
    return c;
}

std::string format_train_config(const TrainConfig& c) {
    std::ostringstream out;
    out.precision(17);
    out << "mode = " << to_string(c.mode) << "\n"
        << "lr = " << c.lr << "\n"
        << "beta1 = " << c.beta1 << "\n"
        << "beta2 = " << c.beta2 << "\n"
        << "adam_eps = " << c.adam_eps << "\n"
        << "weight_decay = " << c.weight_decay << "\n"
        << "batch = " << c.batch_size << "\n"
        << "steps = " << c.steps << "\n"
        << "warmup_frac = " << c.warmup_frac << "\n"
        << "min_lr_frac = " << c.min_lr_frac << "\n"
        << "seed = " << c.seed << "\n"
        << "mask_lo = " << c.mask_bucket.lo << "\n"
        << "mask_hi = " << c.mask_bucket.hi << "\n"
        << "preset = " << c.preset << "\n"
        << "d_model = " << c.d_model << "\n"
        << "n_heads = " << c.n_heads << "\n"
        << "n_layers = " << c.n_layers << "\n"
        << "mlp_ratio = " << c.mlp_ratio << "\n"
        << "log_every = " << c.log_every << "\n";
    return out.str();
}

OptState init_opt_state(const ModelParams& params) {
    OptState s;
    for (const auto& ref : params.named()) {
        s.first_moment.emplace_back(ref.tensor->shape(), 0.0);
        s.second_moment.emplace_back(ref.tensor->shape(), 0.0);
    }
    return s;
}

double bat_loss(const Tensor& logits, std::span<const int> targets) { return mean_nll(logits, targets); }

BatSequence build_sequence(Mode mode, const TokenGrid& tokens, const MaskGrid& mask, int mask_token) {
    switch (mode) {
        case Mode::kAr:
            return build_ar_sequence(tokens, mask, mask_token);
        case Mode::kMlm:
            return build_mlm_sequence(tokens, mask, mask_token);
        case Mode::kBat:
            return permute(tokens, mask, mask_token);
    }
    fail("build_sequence: bad mode");
}

double example_loss(Mode mode, const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask) {
    const BatSequence seq = build_sequence(mode, tokens, mask, params.config.mask_token());
    return mean_nll(forward(params, seq), seq.target_ids);
}

double ar_loss(const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask) {
    return example_loss(Mode::kAr, params, tokens, mask);
}

double mlm_loss(const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask) {
    return example_loss(Mode::kMlm, params, tokens, mask);
}

double bat_example_loss(const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask) {
    return example_loss(Mode::kBat, params, tokens, mask);
}

double example_gradients(Mode mode, const ModelParams& params, const TokenGrid& tokens, const MaskGrid& mask,
                         std::vector<Tensor>& grads) {
    const BatSequence seq = build_sequence(mode, tokens, mask, params.config.mask_token());
    Tape tape(true);
    const auto vars = bind(tape, params, true);
    const Var logits = forward(tape, vars, params.config, seq, seq.target_slots);
    const Var loss = cross_entropy(tape, logits, seq.target_ids);
    tape.backward(loss);
    grads.clear();
    grads.reserve(vars.size());
    for (Var v : vars) {
        grads.push_back(tape.grad(v));
    }
    return tape.value(loss)[0];
}

GradCheckResult model_grad_check(ModelParams& params, Mode mode, const TokenGrid& tokens, const MaskGrid& mask,
                                 const GradCheckOptions& options) {
    const BatSequence seq = build_sequence(mode, tokens, mask, params.config.mask_token());
    std::vector<Tensor*> tensors;
    for (auto& ref : params.named()) {
        tensors.push_back(ref.tensor);
    }
    const ModelConfig config = params.config;
    const LossBuilder loss = [&](Tape& tape, std::span<const Var> vars) {
        return cross_entropy(tape, forward(tape, vars, config, seq, seq.target_slots), seq.target_ids);
    };
    return grad_check(loss, tensors, options);
}

void adamw_step(ModelParams& params, std::span<const Tensor> grads, OptState& state, const TrainConfig& config,
                double lr) {
    auto refs = params.named();
    BATFILL_CHECK(grads.size() == refs.size() && state.first_moment.size() == refs.size(),
            "adamw_step: gradient/state count does not match parameters");
    for (std::size_t i = 0; i < refs.size(); ++i) {
        BATFILL_CHECK(grads[i].same_shape(*refs[i].tensor), "adamw_step: gradient shape mismatch for " + refs[i].name);
        if (!grads[i].all_finite()) {
            fail("adamw_step: non-finite gradient in '" + refs[i].name + "' at optimizer step " +
                 std::to_string(state.step + 1));
        }
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(config.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, double(state.step));
    for (std::size_t i = 0; i < refs.size(); ++i) {
        Tensor& p = *refs[i].tensor;
        Tensor& m = state.first_moment[i];
        Tensor& v = state.second_moment[i];
        const Tensor& g = grads[i];
        const double decay = refs[i].kind == ParamKind::kWeight ? lr * config.weight_decay : 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
            v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= decay * p[j];
            p[j] -= lr * mhat / (std::sqrt(vhat) + config.adam_eps);
        }
    }
}

double learning_rate(const TrainConfig& c, std::size_t step) {
    if (c.steps == 0) {
        return c.lr;
    }
    const double total = double(c.steps);
    const double warmup = std::floor(c.warmup_frac * total);
    const double s = double(step);
    if (s < warmup) {
        return c.lr * (s + 1.0) / warmup;
    }
    const double span = std::max(1.0, total - warmup);
    const double progress = std::min(1.0, (s - warmup) / span);
    const double floor_lr = c.lr * c.min_lr_frac;
    return floor_lr + (c.lr - floor_lr) * 0.5 * (1.0 + std::cos(M_PI * progress));
}

std::size_t thread_budget() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("BATFILL_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) {
            n = std::min(n, std::size_t(cap));
        }
    }
    return n;
}

TrainResult train(std::span<const TokenGrid> dataset, const Palette& palette, const TrainConfig& config,
                  const TrainCallback& on_log) {
    config.validate();
    BATFILL_CHECK(!dataset.empty(), "train: empty dataset");
    const std::size_t h = dataset[0].height;
    const std::size_t w = dataset[0].width;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const TokenGrid& g = dataset[i];
        BATFILL_CHECK(g.height == h && g.width == w, "train: item " + std::to_string(i) + " is " +
                                                   std::to_string(g.height) + "x" + std::to_string(g.width) +
                                                   ", expected " + std::to_string(h) + "x" + std::to_string(w));
        for (int t : g.tokens) {
            BATFILL_CHECK(t >= 0 && std::size_t(t) < palette.k(), "train: item " + std::to_string(i) + " has token " +
                                                                 std::to_string(t) + " outside palette of size " +
                                                                 std::to_string(palette.k()));
        }
    }

    const ModelConfig mc = config.model_config(palette.k(), h * w);
    TrainResult result{init_params(mc, config.seed), {}, 0.0};
    OptState state = init_opt_state(result.params);
    const std::size_t workers = thread_budget();
    const std::size_t tail = std::min<std::size_t>(20, config.steps);
    double tail_sum = 0.0;

    Rng picker(derive_seed(config.seed, 1));
    std::vector<std::vector<Tensor>> example_grads(config.batch_size);
    std::vector<double> example_losses(config.batch_size);
    for (std::size_t step = 0; step < config.steps; ++step) {
        const double lr = learning_rate(config, step);
        std::vector<std::size_t> items(config.batch_size);
        std::vector<MaskGrid> masks(config.batch_size);
        for (std::size_t b = 0; b < config.batch_size; ++b) {
            items[b] = picker.below(dataset.size());
            const std::uint64_t mask_seed = derive_seed(derive_seed(config.seed, 2), step * config.batch_size + b);
            masks[b] = random_irregular_mask(h, w, config.mask_bucket, mask_seed);
        }
        parallel_for(config.batch_size, workers, [&](std::size_t b) {
            example_losses[b] =
                example_gradients(config.mode, result.params, dataset[items[b]], masks[b], example_grads[b]);
        });

        // Fixed-order reduction keeps results independent of the worker count.
        std::vector<Tensor> grads = std::move(example_grads[0]);
        double loss = example_losses[0];
        for (std::size_t b = 1; b < config.batch_size; ++b) {
            loss += example_losses[b];
            for (std::size_t i = 0; i < grads.size(); ++i) {
                Tensor& dst = grads[i];
                const Tensor& src = example_grads[b][i];
                for (std::size_t j = 0; j < dst.size(); ++j) {
                    dst[j] += src[j];
                }
            }
        }
        const double inv = 1.0 / double(config.batch_size);
        loss *= inv;
        for (Tensor& g : grads) {
            for (double& v : g.values()) {
                v *= inv;
            }
        }
        adamw_step(result.params, grads, state, config, lr);

        if (step + tail >= config.steps) {
            tail_sum += loss;
        }
        if (step % config.log_every == 0 || step + 1 == config.steps) {
            const LossRecord rec{step, loss, lr};
            result.curve.push_back(rec);
            if (on_log) {
                on_log(rec);
            }
        }
    }
    result.final_loss = tail == 0 ? 0.0 : tail_sum / double(tail);
    return result;
}

std::string format_loss_csv(std::span<const LossRecord> curve) {
    std::ostringstream out;
    out.precision(10);
    out << "step,loss,lr\n";
    for (const auto& r : curve) {
        out << r.step << ',' << r.loss << ',' << r.lr << "\n";
    }
    return out.str();
}

}  // namespace batfill
