#include <doctest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dvx/app/config.hpp"
#include "dvx/core/error.hpp"

using namespace dvx;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "dvx_test_app";

struct Run {
    int code;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Run dvx_run(const std::string& args) {
    fs::create_directories(kRoot);
    const fs::path o = kRoot / "stdout.txt", e = kRoot / "stderr.txt";
    const std::string cmd = "cd '" + kRoot.string() + "' && '" DVX_BIN "' " + args + " > '" + o.string() + "' 2> '" +
                            e.string() + "'";
    const int st = std::system(cmd.c_str());
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, slurp(o), slurp(e)};
}

std::size_t lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("config: defaults round trip and carry the published constants") {
    const app::RunConfig d;
    const auto j = app::to_json(d);
    CHECK(j["dma"]["tau_l"] == 0.2);
    CHECK(j["dma"]["tau_h"] == 0.8);
    CHECK(j["dma"]["probs"] == nlohmann::json::array({0.8, 0.1, 0.1}));
    CHECK(j["train"]["lambda_kd"] == 1.0);
    CHECK(j["eval"]["iou"] == nlohmann::json::array({0.5, 0.7}));
    CHECK(app::to_json(app::from_json(j)) == j);
    CHECK(app::to_json(app::from_json(nlohmann::json::object())) == j);
}

TEST_CASE("config: unknown keys, wrong types, invalid values") {
    CHECK_THROWS_AS(app::from_json(nlohmann::json::parse(R"({"trian": {}})")), Error);
    CHECK_THROWS_AS(app::from_json(nlohmann::json::parse(R"({"train": {"epoch": 3}})")), Error);
    CHECK_THROWS_AS(app::from_json(nlohmann::json::parse(R"({"train": {"epochs": "3"}})")), Error);
    CHECK_THROWS_AS(app::from_json(nlohmann::json::parse(R"({"train": {"epochs": 2.5}})")), Error);
    CHECK_THROWS_AS(app::from_json(nlohmann::json::parse(R"({"dma": {"tau_l": 0.9}})")), Error);
    CHECK_THROWS_AS(app::from_json(nlohmann::json::parse(R"({"train": {"mask_mode": "fuzzy"}})")), Error);
    try {
        app::from_json(nlohmann::json::parse(R"({"model": {"chanels": 8}})"));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Usage);
        CHECK(std::string(e.what()).find("model.chanels") != std::string::npos);
    }
    const auto c = app::from_json(nlohmann::json::parse(R"({"train": {"lr": 1}, "seed": 7})"));
    CHECK(c.train.lr == 1.0);
    CHECK(c.train.seed == 7);
}

TEST_CASE("config: overrides") {
    auto doc = app::to_json(app::RunConfig{});
    app::apply_override(doc, "train.epochs=3");
    app::apply_override(doc, "train.mask_mode=footprint");
    app::apply_override(doc, "eval.iou=[0.3]");
    const auto c = app::from_json(doc);
    CHECK(c.train.epochs == 3);
    CHECK(c.train.mask_mode == distill::MaskMode::Footprint);
    CHECK(c.eval.iou_thresholds == std::vector<double>{0.3});
    CHECK_THROWS_AS(app::apply_override(doc, "no_equals_sign"), Error);
    app::apply_override(doc, "train.nope=1");
    CHECK_THROWS_AS(app::from_json(doc), Error);
}

TEST_CASE("cli: help and usage errors leave no files") {
    fs::remove_all(kRoot);
    CHECK(dvx_run("--help").code == 0);
    for (const char* cmd : {"simgen", "train", "eval", "ablate", "generalize", "benchmark"}) {
        const Run r = dvx_run(std::string(cmd) + " --help");
        CHECK(r.code == 0);
        CHECK(r.out.find("--threads") != std::string::npos);
    }
    CHECK(dvx_run("").code == 1);
    CHECK(dvx_run("frobnicate").code == 1);
    CHECK(dvx_run("simgen --out bad1 --num-scenes 3 --bogus").code == 1);
    CHECK(!fs::exists(kRoot / "bad1"));
    CHECK(dvx_run("simgen --out bad2 --num-scenes -1").code == 1);
    CHECK(!fs::exists(kRoot / "bad2"));
    CHECK(dvx_run("simgen --out bad3 --num-scenes 3 --set train.nope=1").code == 1);
    CHECK(!fs::exists(kRoot / "bad3"));
    std::ofstream(kRoot / "bad.json") << R"({"sensors": {"vehicle": {"beams": 16, "extra": 1}}})";
    const Run r = dvx_run("simgen --out bad4 --num-scenes 3 --config bad.json");
    CHECK(r.code == 1);
    CHECK(r.err.find("sensors.vehicle.extra") != std::string::npos);
    CHECK(!fs::exists(kRoot / "bad4"));
    CHECK(dvx_run("train --role wizard --data d --out m.dvck").code == 1);
}

TEST_CASE("cli: simgen counts and determinism") {
    fs::remove_all(kRoot);
    REQUIRE(dvx_run("simgen --out empty --num-scenes 0").code == 0);
    const auto idx = nlohmann::json::parse(slurp(kRoot / "empty" / "index.json"));
    CHECK(idx["scenes"].empty());

    REQUIRE(dvx_run("simgen --out a --num-scenes 4 --seed 9").code == 0);
    REQUIRE(dvx_run("simgen --out b --num-scenes 4 --seed 9 --threads 3").code == 0);
    std::size_t files = 0;
    for (const auto& f : fs::directory_iterator(kRoot / "a")) {
        ++files;
        if (f.path().filename() == "effective_config.json") continue;  // records --threads
        CHECK(slurp(f.path()) == slurp(kRoot / "b" / f.path().filename()));
    }
    CHECK(files == 4 * 3 + 2);

    const Run big = dvx_run("simgen --out big --num-scenes 250 --seed 42");
    REQUIRE(big.code == 0);
    const auto bi = nlohmann::json::parse(slurp(kRoot / "big" / "index.json"));
    CHECK(bi["num_train"] == 200);
    CHECK(bi["num_val"] == 50);
}

TEST_CASE("cli: train, eval, error codes") {
    fs::remove_all(kRoot);
    REQUIRE(dvx_run("simgen --out data --num-scenes 7").code == 0);  // 6 train, 1 val

    CHECK(dvx_run("train --role teacher --data missing --out m/t.dvck").code == 2);
    CHECK(!fs::exists(kRoot / "m"));
    CHECK(dvx_run("train --role student --data data --out m/s.dvck").code == 1);
    CHECK(!fs::exists(kRoot / "m"));

    const auto t0 = std::chrono::steady_clock::now();
    const Run t = dvx_run("train --role teacher --data data --out m/t.dvck --teacher-ckpt whatever.dvck "
                          "--set train.epochs=2 -q");
    REQUIRE(t.code == 0);
    CHECK(t.err.find("ignored") != std::string::npos);
    CHECK(lines(slurp(kRoot / "m" / "t_log.csv")) == 1 + 2 * 6);
    CHECK(fs::exists(kRoot / "m" / "t.json"));
    CHECK(fs::exists(kRoot / "m" / "effective_config.json"));

    REQUIRE(dvx_run("train --role student --data data --out m/s.dvck --teacher-ckpt m/t.dvck --set train.epochs=2 -q")
                .code == 0);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 120.0);

    const Run bad_mode = dvx_run("eval --data data --out rep0 --student m/s.dvck --modes warp_fusion");
    CHECK(bad_mode.code == 1);
    CHECK(bad_mode.err.find("div2x_student") != std::string::npos);
    CHECK(!fs::exists(kRoot / "rep0"));
    CHECK(dvx_run("eval --data data --out rep1 --modes no_fusion").code == 1);
    CHECK(dvx_run("eval --data data --out rep2 --student m/missing.dvck").code == 2);

    REQUIRE(dvx_run("eval --data data --out rep --single m/t.dvck --modes no_fusion").code == 0);
    CHECK(lines(slurp(kRoot / "rep" / "results.csv")) == 1 + 2);
    REQUIRE(dvx_run("eval --data data --out rep3 --student m/s.dvck --teacher m/t.dvck --iou 0.3,0.5,0.7").code == 0);
    CHECK(lines(slurp(kRoot / "rep3" / "results.csv")) == 1 + 2 * 3);
    CHECK(fs::exists(kRoot / "rep3" / "report.json"));
    CHECK(fs::exists(kRoot / "rep3" / "pr_div2x_student_iou0.70.csv"));

    const Run diverge = dvx_run("train --role teacher --data data --out m/x.dvck --set train.epochs=1 "
                                "--set train.lr=1e8 --set train.grad_clip=0 -q");
    CHECK(diverge.code == 3);
    CHECK(!fs::exists(kRoot / "m" / "x.dvck"));
    fs::remove_all(kRoot);
}
