#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>

#include "batfill/io.hpp"
#include "batfill/model.hpp"
#include "batfill/objectives.hpp"
#include "support.hpp"

using namespace batfill;
using namespace batfill::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
    int status = -1;
    std::string output;  // stdout and stderr together
};

Run cli(const std::string& args) {
    const std::string cmd = std::string(BATFILL_CLI) + " " + args + " 2>&1";
    Run r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf;
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
        r.output.append(buf.data(), n);
    }
    const int raw = ::pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

// Small stripes corpus, palette and one mask under `dir`.
void prepare(const fs::path& dir) {
    const std::string d = dir.string();
    REQUIRE(cli("make-data --kind stripes --count 4 --height 4 --width 4 --seed 1 --out " + d + "/data").status == 0);
    REQUIRE(cli("fit-palette --images " + d + "/data --k 2 --seed 1 --out " + d + "/pal.txt").status == 0);
    REQUIRE(cli("make-masks --count 1 --height 4 --width 4 --seed 2 --out " + d + "/masks").status == 0);
}

}  // namespace

TEST_CASE("usage errors carry the error prefix") {
    const Run r = cli("train --steps");
    CHECK(r.status == 2);
    CHECK(r.output.find("batfill: error:") != std::string::npos);
    CHECK(cli("no-such-command").status == 2);
    CHECK(cli("--help").status == 0);
}

TEST_CASE("a fully valid mask has nothing to predict") {
    const auto dir = scratch_dir("cli_nothing");
    prepare(dir);
    const std::string d = dir.string();
    write_pgm(dir / "none.pgm", MaskGrid(4, 4));
    REQUIRE(cli("train --data " + d + "/data --palette " + d + "/pal.txt --steps 1 --batch 1 --out " + d + "/m")
                .status == 0);
    const Run r = cli("sample --checkpoint " + d + "/m/model.ckpt --image " + d + "/data/img_0000.ppm --mask " + d +
                      "/none.pgm --palette " + d + "/pal.txt --out " + d + "/s");
    CHECK(r.status == 1);
    CHECK(r.output.find("batfill: error: nothing to predict") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("train with zero steps writes the initialization") {
    const auto dir = scratch_dir("cli_zero");
    prepare(dir);
    const std::string d = dir.string();
    const Run r = cli("train --data " + d + "/data --palette " + d + "/pal.txt --steps 0 --seed 5 --out " + d + "/m");
    REQUIRE(r.status == 0);
    TrainConfig c;
    c.seed = 5;
    const ModelParams init = init_params(c.model_config(2, 16), 5);
    CHECK(load_checkpoint(dir / "m" / "model.ckpt") == deserialize_checkpoint(serialize_checkpoint(init)));
    CHECK(fs::exists(dir / "m" / "manifest.json"));
    CHECK(fs::exists(dir / "m" / "loss.csv"));
    fs::remove_all(dir);
}

TEST_CASE("a config with an unknown key names the key and the file") {
    const auto dir = scratch_dir("cli_config");
    prepare(dir);
    const std::string d = dir.string();
    write_text(dir / "bad.cfg", "steps = 2\nlearnig_rate = 0.1\n");
    const Run r = cli("train --config " + d + "/bad.cfg --data " + d + "/data --palette " + d + "/pal.txt --out " + d +
                      "/m");
    CHECK(r.status == 1);
    CHECK(r.output.find("learnig_rate") != std::string::npos);
    CHECK(r.output.find("bad.cfg") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("eval of an image against itself is perfect") {
    const auto dir = scratch_dir("cli_eval");
    prepare(dir);
    const std::string d = dir.string();
    const std::string img = d + "/data/img_0001.ppm";
    const Run r = cli("eval --pred " + img + " --pred " + img + " --truth " + img + " --mask " + d +
                      "/masks/mask_0000.pgm --palette " + d + "/pal.txt --label same");
    REQUIRE(r.status == 0);
    CHECK(r.output == "mode,accuracy,l1,psnr,diversity,coherence\nsame,1.000000,0.000000,inf,0.000000,1.000000\n");
    fs::remove_all(dir);
}

TEST_CASE("ablate refuses mismatched budgets") {
    const auto dir = scratch_dir("cli_ablate");
    prepare(dir);
    const std::string d = dir.string();
    write_text(dir / "ar.cfg", "steps = 2\n");
    write_text(dir / "bat.cfg", "steps = 3\n");
    const Run r = cli("ablate --config-ar " + d + "/ar.cfg --config-mlm " + d + "/ar.cfg --config-bat " + d +
                      "/bat.cfg --data " + d + "/data --heldout " + d + "/data --palette " + d + "/pal.txt --out " +
                      d + "/ab");
    CHECK(r.status == 1);
    CHECK(r.output.find("budget mismatch") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("gradcheck exit status follows the tolerance") {
    const Run ok = cli("gradcheck --vocab 3 --height 2 --width 2 --max-per-tensor 4");
    CHECK(ok.status == 0);
    const Run strict = cli("gradcheck --vocab 3 --height 2 --width 2 --max-per-tensor 4 --tolerance 0");
    CHECK(strict.status == 1);
    CHECK(strict.output.find("batfill: error:") != std::string::npos);
}
