// batfill: command-line front end for the structure generator.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "batfill/datasets.hpp"
#include "batfill/error.hpp"
#include "batfill/eval.hpp"
#include "batfill/io.hpp"
#include "batfill/maskgen.hpp"
#include "batfill/model.hpp"
#include "batfill/objectives.hpp"
#include "batfill/palette.hpp"
#include "batfill/sampler.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace batfill;

namespace {

constexpr const char* kManifestName = "manifest.json";

std::string index_name(const std::string& stem, std::size_t i, const std::string& ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%04zu", i);
    return stem + buf + ext;
}

struct Manifest {
    json doc;

    Manifest(const std::string& subcommand, const std::vector<std::string>& args) {
        doc["tool"] = "batfill";
        doc["version"] = 1;
        doc["subcommand"] = subcommand;
        doc["args"] = args;
        doc["cwd"] = fs::current_path().string();
    }

    void input(const fs::path& path) { doc["inputs"][fs::absolute(path).string()] = file_hash(path); }

    // Records every file in `dir` and writes dir/manifest.json.
    void finish_dir(const fs::path& dir) {
        json outputs = json::object();
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().filename() != kManifestName) {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            outputs[f.filename().string()] = file_hash(f);
        }
        doc["outputs"] = outputs;
        write_text(dir / kManifestName, doc.dump(2) + "\n");
    }

    // Single-file outputs get "<file>.manifest.json" next to them.
    void finish_file(const fs::path& file) {
        doc["outputs"][file.filename().string()] = file_hash(file);
        write_text(fs::path(file.string() + ".manifest.json"), doc.dump(2) + "\n");
    }
};

fs::path manifest_of(const json& doc, const fs::path& out) {
    return doc["subcommand"] == "fit-palette" ? fs::path(out.string() + ".manifest.json") : out / kManifestName;
}

std::vector<TokenGrid> load_tokens(const fs::path& dir, const Palette& palette, Manifest& manifest) {
    const auto files = list_files(dir, ".ppm");
    require(!files.empty(), "no .ppm files in " + dir.string());
    std::vector<TokenGrid> out;
    for (const auto& f : files) {
        out.push_back(encode(read_ppm(f), palette));
        manifest.input(f);
    }
    return out;
}

// Options shared by train and ablate that override config-file values.
struct TrainFlags {
    std::string config;
    std::string mode;
    std::optional<std::size_t> steps, batch;
    std::optional<double> lr, mask_lo, mask_hi;
    std::optional<std::uint64_t> seed;
    std::string preset;

    void add(CLI::App* app, bool with_mode) {
        app->add_option("--config", config, "Training config file (key = value lines)");
        if (with_mode) {
            app->add_option("--mode", mode, "Objective: ar, mlm or bat");
        }
        app->add_option("--steps", steps, "Optimizer steps");
        app->add_option("--batch", batch, "Examples per step");
        app->add_option("--lr", lr, "Peak learning rate");
        app->add_option("--seed", seed, "Seed for init, batches and masks");
        app->add_option("--mask-lo", mask_lo, "Lowest training mask ratio");
        app->add_option("--mask-hi", mask_hi, "Highest training mask ratio");
        app->add_option("--preset", preset, "Model preset: tiny, small, full, gradcheck");
    }

    TrainConfig resolve() const {
        TrainConfig c;
        if (!config.empty()) {
            try {
                c = parse_train_config(read_text(config));
            } catch (const Error& e) {
                fail(config + ": " + e.what());
            }
        }
        if (!mode.empty()) {
            c.mode = parse_mode(mode);
        }
        if (steps) {
            c.steps = *steps;
        }
        if (batch) {
            c.batch_size = *batch;
        }
        if (lr) {
            c.lr = *lr;
        }
        if (seed) {
            c.seed = *seed;
        }
        if (mask_lo) {
            c.mask_bucket.lo = *mask_lo;
        }
        if (mask_hi) {
            c.mask_bucket.hi = *mask_hi;
        }
        if (!preset.empty()) {
            c.preset = preset;
        }
        c.validate();
        return c;
    }
};

struct Cli {
    CLI::App app{"Bidirectional-autoregressive structure completion on palette-token grids", "batfill"};

    // fit-palette
    std::string images, out;
    std::size_t k = 512;
    std::uint64_t seed = 0;
    // make-data / make-masks
    std::string kind;
    std::size_t count = 0, height = 8, width = 8;
    double lo = 0.4, hi = 0.6;
    // train / ablate
    TrainFlags train;
    std::string data, heldout, palette, config_ar, config_mlm, config_bat, masks_dir, patterns_dir;
    double eval_lo = 0.4, eval_hi = 0.6;
    std::uint64_t eval_seed = 0;
    // sample / eval
    std::string checkpoint, image, mask, mode = "bat", truth, label = "eval";
    std::vector<std::string> preds;
    SampleConfig sample{.top_k = 0};  // 0: min(50, V) once the palette is known
    // gradcheck
    std::string preset = "gradcheck";
    std::size_t vocab = 5, max_per_tensor = 0, gc_height = 3, gc_width = 3;
    double tolerance = 1e-4;
    // replay
    std::string manifest;

    CLI::App *fit_palette, *make_data, *make_masks, *train_cmd, *sample_cmd, *eval_cmd, *ablate_cmd, *gradcheck,
        *replay;

    Cli() {
        app.require_subcommand(1);

        fit_palette = app.add_subcommand("fit-palette", "Fit a k-color palette to a directory of PPM images");
        fit_palette->add_option("--images", images, "Directory of .ppm files")->required();
        fit_palette->add_option("--k", k, "Palette size");
        fit_palette->add_option("--seed", seed, "k-means++ seed");
        fit_palette->add_option("--out", out, "Output palette file")->required();

        make_data = app.add_subcommand("make-data", "Write a synthetic image corpus");
        make_data->add_option("--kind", kind, "stripes, gradients or two-pattern")->required();
        make_data->add_option("--count", count, "Number of images")->required();
        make_data->add_option("--height", height, "Grid height");
        make_data->add_option("--width", width, "Grid width");
        make_data->add_option("--seed", seed, "Corpus seed");
        make_data->add_option("--out", out, "Output directory")->required();

        make_masks = app.add_subcommand("make-masks", "Write random irregular hole masks as PGM");
        make_masks->add_option("--count", count, "Number of masks")->required();
        make_masks->add_option("--height", height, "Grid height");
        make_masks->add_option("--width", width, "Grid width");
        make_masks->add_option("--lo", lo, "Lowest missing fraction");
        make_masks->add_option("--hi", hi, "Highest missing fraction");
        make_masks->add_option("--seed", seed, "Mask seed");
        make_masks->add_option("--out", out, "Output directory")->required();

        train_cmd = app.add_subcommand("train", "Train a model under the ar, mlm or bat objective");
        train.add(train_cmd, true);
        train_cmd->add_option("--data", data, "Directory of training .ppm files")->required();
        train_cmd->add_option("--palette", palette, "Palette file")->required();
        train_cmd->add_option("--out", out, "Output directory")->required();

        sample_cmd = app.add_subcommand("sample", "Complete the holes of an image n times");
        sample_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
        sample_cmd->add_option("--image", image, "Input .ppm")->required();
        sample_cmd->add_option("--mask", mask, "Hole mask .pgm (255 = missing)")->required();
        sample_cmd->add_option("--palette", palette, "Palette file")->required();
        sample_cmd->add_option("--n", sample.n_samples, "Number of samples");
        sample_cmd->add_option("--topk", sample.top_k, "Top-k truncation (default min(50, V))");
        sample_cmd->add_option("--temperature", sample.temperature, "Softmax temperature");
        sample_cmd->add_option("--seed", sample.seed, "Sampling seed");
        sample_cmd->add_option("--mode", mode, "Sampler: bat, ar or mlm (Gibbs)");
        sample_cmd->add_option("--sweeps", sample.gibbs_sweeps, "Gibbs sweeps for mlm");
        sample_cmd->add_option("--out", out, "Output directory")->required();

        eval_cmd = app.add_subcommand("eval", "Score predicted images against ground truth");
        eval_cmd->add_option("--pred", preds, "Predicted .ppm (repeatable)")->required();
        eval_cmd->add_option("--truth", truth, "Ground-truth .ppm")->required();
        eval_cmd->add_option("--mask", mask, "Hole mask .pgm")->required();
        eval_cmd->add_option("--palette", palette, "Palette file")->required();
        eval_cmd->add_option("--label", label, "Value of the mode column");
        eval_cmd->add_option("--out", out, "CSV file (default: stdout)");

        ablate_cmd = app.add_subcommand("ablate", "Train ar, mlm and bat on one budget and compare them");
        train.add(ablate_cmd, false);
        ablate_cmd->add_option("--config-ar", config_ar, "Config file for the ar run (default --config)");
        ablate_cmd->add_option("--config-mlm", config_mlm, "Config file for the mlm run (default --config)");
        ablate_cmd->add_option("--config-bat", config_bat, "Config file for the bat run (default --config)");
        ablate_cmd->add_option("--data", data, "Directory of training .ppm files")->required();
        ablate_cmd->add_option("--heldout", heldout, "Directory of held-out .ppm files")->required();
        ablate_cmd->add_option("--palette", palette, "Palette file")->required();
        ablate_cmd->add_option("--masks", masks_dir, "Evaluation masks, one .pgm per held-out image");
        ablate_cmd->add_option("--patterns", patterns_dir, "Reference .ppm images for coherence");
        ablate_cmd->add_option("--eval-lo", eval_lo, "Lowest evaluation mask ratio");
        ablate_cmd->add_option("--eval-hi", eval_hi, "Highest evaluation mask ratio");
        ablate_cmd->add_option("--eval-seed", eval_seed, "Evaluation mask seed");
        ablate_cmd->add_option("--n", sample.n_samples, "Samples per held-out image");
        ablate_cmd->add_option("--topk", sample.top_k, "Top-k truncation (default min(50, V))");
        ablate_cmd->add_option("--temperature", sample.temperature, "Softmax temperature");
        ablate_cmd->add_option("--sample-seed", sample.seed, "Sampling seed");
        ablate_cmd->add_option("--sweeps", sample.gibbs_sweeps, "Gibbs sweeps for the mlm row");
        ablate_cmd->add_option("--out", out, "Output directory")->required();

        gradcheck = app.add_subcommand("gradcheck", "Compare model gradients with central differences");
        gradcheck->add_option("--preset", preset, "Model preset");
        gradcheck->add_option("--vocab", vocab, "Vocabulary size");
        gradcheck->add_option("--height", gc_height, "Grid height");
        gradcheck->add_option("--width", gc_width, "Grid width");
        gradcheck->add_option("--mode", mode, "Objective: ar, mlm or bat");
        gradcheck->add_option("--seed", seed, "Seed for params, grid and mask");
        gradcheck->add_option("--max-per-tensor", max_per_tensor, "Entries checked per tensor (0 = all)");
        gradcheck->add_option("--tolerance", tolerance, "Largest acceptable relative error");

        replay = app.add_subcommand("replay", "Rerun a recorded command and compare its outputs");
        replay->add_option("manifest", manifest, "manifest.json of an earlier run")->required();
        replay->add_option("--out", out, "Write to this path instead of the recorded one");
    }
};

// Value following `flag` in args, if any.
std::string arg_value(const std::vector<std::string>& args, const std::string& flag) {
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
        if (args[i] == flag) {
            return args[i + 1];
        }
    }
    return {};
}

int run(const std::vector<std::string>& args);

int cmd_fit_palette(Cli& c, const std::vector<std::string>& args) {
    Manifest m("fit-palette", args);
    std::vector<Rgb> pixels;
    for (const auto& f : list_files(c.images, ".ppm")) {
        const RgbGrid img = read_ppm(f);
        pixels.insert(pixels.end(), img.pixels.begin(), img.pixels.end());
        m.input(f);
    }
    require(!pixels.empty(), "no .ppm files in " + c.images);
    const Palette pal = fit_palette(pixels, c.k, c.seed);
    write_palette(c.out, pal);
    m.doc["seed"] = c.seed;
    m.doc["config"] = {{"k", c.k}};
    m.finish_file(c.out);
    std::cout << "palette: " << pal.k() << " colors -> " << c.out << "\n";
    return 0;
}

int cmd_make_data(Cli& c, const std::vector<std::string>& args) {
    Manifest m("make-data", args);
    const DatasetKind kind = parse_dataset_kind(c.kind);
    const auto images = make_dataset(kind, c.count, c.height, c.width, c.seed);
    fs::create_directories(c.out);
    for (std::size_t i = 0; i < images.size(); ++i) {
        write_ppm(fs::path(c.out) / index_name("img", i, ".ppm"), images[i]);
    }
    m.doc["seed"] = c.seed;
    m.doc["config"] = {{"kind", to_string(kind)}, {"count", c.count}, {"height", c.height}, {"width", c.width}};
    m.finish_dir(c.out);
    std::cout << "make-data: " << images.size() << " " << to_string(kind) << " images -> " << c.out << "\n";
    return 0;
}

int cmd_make_masks(Cli& c, const std::vector<std::string>& args) {
    Manifest m("make-masks", args);
    fs::create_directories(c.out);
    for (std::size_t i = 0; i < c.count; ++i) {
        const MaskGrid mask = random_irregular_mask(c.height, c.width, c.lo, c.hi, derive_seed(c.seed, i));
        write_pgm(fs::path(c.out) / index_name("mask", i, ".pgm"), mask);
    }
    m.doc["seed"] = c.seed;
    m.doc["config"] = {{"count", c.count}, {"height", c.height}, {"width", c.width}, {"lo", c.lo}, {"hi", c.hi}};
    m.finish_dir(c.out);
    std::cout << "make-masks: " << c.count << " masks -> " << c.out << "\n";
    return 0;
}

int cmd_train(Cli& c, const std::vector<std::string>& args) {
    Manifest m("train", args);
    const TrainConfig config = c.train.resolve();
    if (!c.train.config.empty()) {
        m.input(c.train.config);
    }
    const Palette pal = read_palette(c.palette);
    m.input(c.palette);
    const auto dataset = load_tokens(c.data, pal, m);

    const TrainResult result = train(dataset, pal, config, [](const LossRecord& r) {
        std::printf("step %zu loss %.6f lr %.3e\n", r.step, r.loss, r.lr);
        std::fflush(stdout);
    });
    fs::create_directories(c.out);
    const fs::path out(c.out);
    save_checkpoint(out / "model.ckpt", result.params);
    write_text(out / "loss.csv", format_loss_csv(result.curve));
    write_text(out / "config.txt", format_train_config(config));
    m.doc["seed"] = config.seed;
    m.doc["config"] = format_train_config(config);
    m.doc["final_loss"] = result.final_loss;
    m.finish_dir(out);
    std::printf("train: %s, %zu steps, final loss %.6f -> %s\n", to_string(config.mode).c_str(), config.steps,
                result.final_loss, c.out.c_str());
    return 0;
}

void resolve_top_k(SampleConfig& sample, const Palette& pal) {
    if (sample.top_k == 0) {
        sample.top_k = std::min<std::size_t>(50, pal.k());
    }
}

int cmd_sample(Cli& c, const std::vector<std::string>& args) {
    Manifest m("sample", args);
    const ModelParams params = load_checkpoint(c.checkpoint);
    const Palette pal = read_palette(c.palette);
    const RgbGrid img = read_ppm(c.image);
    const MaskGrid mask = read_pgm(c.mask);
    for (const auto& p : {c.checkpoint, c.palette, c.image, c.mask}) {
        m.input(p);
    }
    require(pal.k() == params.config.vocab_size, "palette has " + std::to_string(pal.k()) +
                                                     " colors but the model vocabulary is " +
                                                     std::to_string(params.config.vocab_size));
    require(img.height == mask.height && img.width == mask.width,
            "image is " + std::to_string(img.height) + "x" + std::to_string(img.width) + " but mask is " +
                std::to_string(mask.height) + "x" + std::to_string(mask.width));
    const TokenGrid tokens = encode(img, pal);
    resolve_top_k(c.sample, pal);
    const auto samples = sample_diverse(params, tokens, mask, c.sample, parse_mode(c.mode));

    fs::create_directories(c.out);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::string stem = "sample_s" + std::to_string(i);
        write_ppm(fs::path(c.out) / (stem + ".ppm"), decode(samples[i], pal));
        write_tokens(fs::path(c.out) / (stem + ".tok"), samples[i], pal.k());
    }
    m.doc["seed"] = c.sample.seed;
    m.doc["config"] = {{"mode", c.mode},
                       {"n", c.sample.n_samples},
                       {"topk", c.sample.top_k},
                       {"temperature", c.sample.temperature},
                       {"sweeps", c.sample.gibbs_sweeps}};
    m.finish_dir(c.out);
    std::cout << "sample: " << samples.size() << " completions -> " << c.out << "\n";
    return 0;
}

int cmd_eval(Cli& c, const std::vector<std::string>&) {
    const Palette pal = read_palette(c.palette);
    const RgbGrid truth_rgb = read_ppm(c.truth);
    const MaskGrid mask = read_pgm(c.mask);
    const TokenGrid truth = encode(truth_rgb, pal);
    std::vector<TokenGrid> preds;
    EvalReport r;
    double squared = 0.0;
    for (const auto& p : c.preds) {
        const RgbGrid rgb = read_ppm(p);
        preds.push_back(encode(rgb, pal));
        r.accuracy += token_accuracy(preds.back(), truth, mask);
        r.l1 += pixel_l1(rgb, truth_rgb);
        squared += mean_squared_error(rgb, truth_rgb);
    }
    const double n = double(preds.size());
    r.accuracy /= n;
    r.l1 /= n;
    r.psnr = psnr_from_mse(squared / n);
    r.diversity = preds.size() >= 2 ? diversity(preds, mask) : 0.0;
    const TokenGrid ref[1] = {truth};
    r.coherence = coherence(preds, ref);

    const std::string csv = std::string(kReportHeader) + "\n" + format_report_row(c.label, r);
    if (c.out.empty()) {
        std::cout << csv;
    } else {
        write_text(c.out, csv);
    }
    return 0;
}

std::vector<TokenGrid> load_patterns(const std::string& dir, const Palette& pal, Manifest& m) {
    std::vector<TokenGrid> out;
    if (!dir.empty()) {
        out = load_tokens(dir, pal, m);
    }
    return out;
}

int cmd_ablate(Cli& c, const std::vector<std::string>& args) {
    Manifest m("ablate", args);
    const TrainConfig base = c.train.resolve();
    std::vector<TrainConfig> configs;
    const std::pair<Mode, std::string> modes[] = {
        {Mode::kAr, c.config_ar}, {Mode::kMlm, c.config_mlm}, {Mode::kBat, c.config_bat}};
    for (const auto& [mode, path] : modes) {
        TrainConfig cfg = base;
        if (!path.empty()) {
            TrainFlags flags = c.train;
            flags.config = path;
            cfg = flags.resolve();
            m.input(path);
        }
        cfg.mode = mode;
        configs.push_back(cfg);
    }
    const Palette pal = read_palette(c.palette);
    m.input(c.palette);
    const auto train_set = load_tokens(c.data, pal, m);
    const auto held = load_tokens(c.heldout, pal, m);

    AblationOptions opts;
    resolve_top_k(c.sample, pal);
    opts.sample = c.sample;
    opts.eval_bucket = {c.eval_lo, c.eval_hi};
    opts.eval_seed = c.eval_seed;
    opts.patterns = load_patterns(c.patterns_dir, pal, m);
    if (!c.masks_dir.empty()) {
        for (const auto& f : list_files(c.masks_dir, ".pgm")) {
            opts.masks.push_back(read_pgm(f));
            m.input(f);
        }
        require(opts.masks.size() == held.size(), "ablate: " + std::to_string(opts.masks.size()) + " masks for " +
                                                      std::to_string(held.size()) + " held-out images");
    }

    const auto rows = ablate(train_set, held, pal, configs, opts);
    fs::create_directories(c.out);
    const std::string csv = format_report_csv(rows);
    write_text(fs::path(c.out) / "report.csv", csv);
    m.doc["seed"] = base.seed;
    m.doc["config"] = format_train_config(base);
    m.finish_dir(c.out);
    std::cout << csv;
    return 0;
}

int cmd_gradcheck(Cli& c) {
    const std::size_t cells = c.gc_height * c.gc_width;
    ModelConfig mc = model_preset(c.preset, c.vocab, cells);
    ModelParams params = init_params(mc, c.seed);
    Rng rng(derive_seed(c.seed, 1));
    TokenGrid tokens(c.gc_height, c.gc_width);
    for (auto& t : tokens.tokens) {
        t = int(rng.below(c.vocab));
    }
    const MaskGrid mask = random_irregular_mask(c.gc_height, c.gc_width, kBucket40to60, derive_seed(c.seed, 2));
    GradCheckOptions opts;
    opts.max_per_tensor = c.max_per_tensor;
    opts.seed = c.seed;
    const GradCheckResult r = model_grad_check(params, parse_mode(c.mode), tokens, mask, opts);
    std::printf("gradcheck: %s preset %s, %zu entries, max relative error %.3e, max absolute error %.3e\n",
                c.mode.c_str(), c.preset.c_str(), r.checked, r.max_relative_error, r.max_absolute_error);
    require(r.max_relative_error < c.tolerance, "gradient check failed: relative error " +
                                                    std::to_string(r.max_relative_error) + " >= tolerance " +
                                                    std::to_string(c.tolerance));
    return 0;
}

int cmd_replay(Cli& c) {
    const json old = json::parse(read_text(c.manifest));
    std::vector<std::string> args = old.at("args").get<std::vector<std::string>>();
    std::optional<fs::path> new_out;
    if (!c.out.empty()) {
        new_out = fs::absolute(c.out);
    }
    fs::current_path(old.at("cwd").get<std::string>());
    if (new_out) {
        for (std::size_t i = 0; i + 1 < args.size(); ++i) {
            if (args[i] == "--out") {
                args[i + 1] = new_out->string();
            }
        }
    }
    std::vector<std::string> full{old.at("subcommand").get<std::string>()};
    full.insert(full.end(), args.begin(), args.end());
    const int rc = run(full);
    if (rc != 0) {
        return rc;
    }
    const fs::path out = arg_value(args, "--out");
    const json fresh = json::parse(read_text(manifest_of(old, out)));
    std::size_t same = 0;
    for (const auto& [name, hash] : old.at("outputs").items()) {
        require(fresh["outputs"].contains(name), "replay: output " + name + " was not produced");
        require(fresh["outputs"][name] == hash, "replay: output " + name + " differs from the recorded run");
        ++same;
    }
    std::cout << "replay: " << same << " outputs identical\n";
    return 0;
}

int run(const std::vector<std::string>& args) {
    Cli c;
    std::vector<const char*> argv{"batfill"};
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        c.app.parse(int(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return c.app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return c.app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "batfill: error: " << e.what() << "\n";
        return 2;
    }
    const std::vector<std::string> rest(args.begin() + 1, args.end());
    if (c.fit_palette->parsed()) {
        return cmd_fit_palette(c, rest);
    }
    if (c.make_data->parsed()) {
        return cmd_make_data(c, rest);
    }
    if (c.make_masks->parsed()) {
        return cmd_make_masks(c, rest);
    }
    if (c.train_cmd->parsed()) {
        return cmd_train(c, rest);
    }
    if (c.sample_cmd->parsed()) {
        return cmd_sample(c, rest);
    }
    if (c.eval_cmd->parsed()) {
        return cmd_eval(c, rest);
    }
    if (c.ablate_cmd->parsed()) {
        return cmd_ablate(c, rest);
    }
    if (c.gradcheck->parsed()) {
        return cmd_gradcheck(c);
    }
    return cmd_replay(c);
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return run(args);
    } catch (const std::exception& e) {
        std::cerr << "batfill: error: " << e.what() << "\n";
        return 1;
    }
}
