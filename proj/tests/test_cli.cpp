// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "dacq/cli.hpp"
#include "dacq/error.hpp"
#include "dacq/evalx.hpp"
#include "dacq/quantizer.hpp"
#include "dacq/synth.hpp"
#include "dacq/tensor_io.hpp"
#include "test_support.hpp"

using namespace dacq;
using dacq::test::TempDir;
namespace fs = std::filesystem;
using nlohmann::json;

static json read_json(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    return json::parse(in);
}

static std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// one small tensor per reference family
static void write_family_corpus(const fs::path& dir) {
    fs::create_directories(dir);
    size_t i = 0;
    for (Family f : kAllFamilies) {
        const auto t = synth_family_tensor(std::string("w_") + family_name(f), 200, 200,
                                           f, 0.0, 0.02, 300 + i++);
        save_tensor(t, dir / (t.name + ".dacqt"));
    }
}

TEST_CASE("cmd_fit tallies one winner per family") {
    TempDir td("cli");
    write_family_corpus(td / "in");

    RunConfig cfg;
    cfg.in_dir = td / "in";
    cfg.out_dir = td / "out";
    cfg.sample_n = 40000;
    cfg.probe_m = 500;
    CHECK(cmd_fit(cfg) == kExitOk);

    const json summary = read_json(td / "out" / "summary.json");
    CHECK(summary["counts"]["normal"] == 1);
    CHECK(summary["counts"]["laplace"] == 1);
    CHECK(summary["counts"]["logistic"] == 1);
    CHECK(summary["errors"].empty());
    // model-level mean +- std across the fitted tensors
    CHECK(summary["model_level"]["logistic"]["rmse"]["mean"].is_number());
    CHECK(summary["model_level"]["normal"]["mae"]["std"].is_number());

    // per-tensor outputs exist
    CHECK(fs::exists(td / "out" / "w_normal.fit.json"));
    CHECK(fs::exists(td / "out" / "w_normal.qq.csv"));

    std::ifstream qq(td / "out" / "w_logistic.qq.csv");
    std::string header;
    std::getline(qq, header);
    CHECK(header ==
          "p,q_theoretical_normal,q_theoretical_laplace,q_theoretical_logistic,"
          "q_empirical");
}

TEST_CASE("cmd_fit: empty directory succeeds with an empty summary") {
    TempDir td("cli");
    fs::create_directories(td / "in");
    RunConfig cfg;
    cfg.in_dir = td / "in";
    cfg.out_dir = td / "out";
    CHECK(cmd_fit(cfg) == kExitOk);
    const json summary = read_json(td / "out" / "summary.json");
    CHECK(summary["tensors"].empty());
    CHECK(summary["counts"]["logistic"] == 0);
}

TEST_CASE("cmd_fit: corrupt file is recorded, run continues") {
    TempDir td("cli");
    write_family_corpus(td / "in");
    std::ofstream bad(td / "in" / "corrupt.dacqt", std::ios::binary);
    bad << "not a tensor";
    bad.close();

    RunConfig cfg;
    cfg.in_dir = td / "in";
    cfg.out_dir = td / "out";
    cfg.sample_n = 40000;
    cfg.probe_m = 200;
    CHECK(cmd_fit(cfg) == kExitData);

    const json summary = read_json(td / "out" / "summary.json");
    CHECK(summary["errors"].size() == 1);
    CHECK(summary["tensors"].size() == 3);  // the healthy ones still ran
}

TEST_CASE("quantize -> eval pipeline with artifacts") {
    TempDir td("cli");
    const fs::path in = td / "in";
    fs::create_directories(in);
    for (int i = 0; i < 2; ++i) {
        const auto t = synth_logistic_mixture("layer" + std::to_string(i), 16, 128, 64,
                                              0.01, 0.05, 500 + i);
        save_tensor(t, in / (t.name + ".dacqt"));
    }

    RunConfig gen;
    gen.in_dir = in;
    gen.out_dir = td / "calib";
    gen.tokens = 16;
    gen.seed = 7;
    CHECK(cmd_gen_calib(gen) == kExitOk);
    CHECK(fs::exists(td / "calib" / "layer0.dacqt"));
    const CalibrationSet cal = load_calibration(td / "calib" / "layer0.dacqt");
    CHECK(cal.tokens == 16);
    CHECK(cal.cols == 128);

    RunConfig q;
    q.in_dir = in;
    q.calib_dir = td / "calib";
    q.out_dir = td / "artifacts";
    q.mode = "hybrid";
    q.group_size = 64;
    q.alpha_search = true;
    CHECK(cmd_quantize(q) == kExitOk);

    const json manifest = read_json(td / "artifacts" / "manifest.json");
    REQUIRE(manifest["tensors"].size() == 2);
    CHECK(manifest["config"]["mode"] == "hybrid");
    CHECK(manifest["tensors"][0]["alpha_star"].is_number());
    CHECK(manifest["tensors"][0]["salience"]["activation_argmax_col"].is_number());

    // artifacts load and validate
    const QuantizedTensor qt = load_quantized(td / "artifacts" / "layer0.dacqq");
    CHECK(qt.rows == 16);
    CHECK(qt.cols == 128);
    CHECK(qt.group_params[0].kind == GridKind::hybrid);

    // rerun is byte-identical
    RunConfig q2 = q;
    q2.out_dir = td / "artifacts2";
    CHECK(cmd_quantize(q2) == kExitOk);
    CHECK(slurp(td / "artifacts" / "layer0.dacqq") ==
          slurp(td / "artifacts2" / "layer0.dacqq"));
    CHECK(slurp(td / "artifacts" / "layer1.dacqq") ==
          slurp(td / "artifacts2" / "layer1.dacqq"));

    // artifact eval: mse matches the quantize-time log exactly
    RunConfig ev;
    ev.in_dir = in;
    ev.calib_dir = td / "calib";
    ev.out_dir = td / "eval";
    ev.artifact_dirs = {td / "artifacts"};
    ev.eval_modes = {"dacq-hybrid"};
    ev.format = "json";
    CHECK(cmd_eval(ev) == kExitOk);

    const json report = read_json(td / "eval" / "report.json");
    REQUIRE(report.size() == 2);
    for (const auto& row : report) {
        const std::string name = row["tensor"];
        for (const auto& entry : manifest["tensors"]) {
            if (entry["name"] != name) continue;
            CHECK(std::fabs(row["mse"].get<double>() - entry["mse"].get<double>()) <=
                  1e-9);
            CHECK(row["activation_error"].get<double>() ==
                  entry["activation_error"].get<double>());
        }
    }

    // requesting a mode with no artifacts is reported and exits nonzero
    RunConfig missing = ev;
    missing.out_dir = td / "eval2";
    missing.eval_modes = {"dacq-hybrid", "awq-uniform"};
    CHECK(cmd_eval(missing) == kExitData);
    const json rep2 = read_json(td / "eval2" / "report.json");
    int missing_rows = 0;
    for (const auto& row : rep2) {
        if (row["protocol"] == "missing") missing_rows++;
    }
    CHECK(missing_rows == 2);
}

TEST_CASE("eval --profile emits rows for every tensor, mode and protocol") {
    TempDir td("cli");
    const fs::path in = td / "in";
    fs::create_directories(in);
    const auto t = synth_logistic_mixture("layer0", 8, 64, 32, 0.01, 0.05, 600);
    save_tensor(t, in / "layer0.dacqt");

    RunConfig gen;
    gen.in_dir = in;
    gen.out_dir = td / "calib";
    gen.tokens = 12;
    CHECK(cmd_gen_calib(gen) == kExitOk);

    RunConfig ev;
    ev.in_dir = in;
    ev.calib_dir = td / "calib";
    ev.out_dir = td / "eval";
    ev.profile = true;
    ev.alpha_search = true;
    ev.group_size = 32;
    ev.format = "csv";
    CHECK(cmd_eval(ev) == kExitOk);

    std::ifstream csv(td / "eval" / "report.csv");
    std::string line;
    int rows = 0;
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) rows++;
    CHECK(rows == 6);  // 3 modes x {searched, fixed}
}

TEST_CASE("gen-calib plants salient channels") {
    TempDir td("cli");
    const fs::path in = td / "in";
    fs::create_directories(in);
    save_tensor(synth_family_tensor("t", 4, 32, Family::normal, 0.0, 0.02, 1),
                in / "t.dacqt");

    RunConfig gen;
    gen.in_dir = in;
    gen.out_dir = td / "calib";
    gen.tokens = 64;
    gen.salient_cols = {5};
    gen.salient_scale = 100.0;
    CHECK(cmd_gen_calib(gen) == kExitOk);

    const CalibrationSet cal = load_calibration(td / "calib" / "t.dacqt");
    double best = 0.0;
    size_t best_col = 0;
    for (size_t c = 0; c < cal.cols; ++c) {
        double s = 0.0;
        for (size_t tok = 0; tok < cal.tokens; ++tok) s += std::fabs(cal.at(tok, c));
        if (s > best) {
            best = s;
            best_col = c;
        }
    }
    CHECK(best_col == 5);

    RunConfig bad = gen;
    bad.salient_cols = {999};
    bad.out_dir = td / "calib2";
    CHECK_THROWS_AS(cmd_gen_calib(bad), Error);
}

TEST_CASE("quantize validates configuration before touching data") {
    TempDir td("cli");
    fs::create_directories(td / "in");
    RunConfig cfg;
    cfg.in_dir = td / "in";
    cfg.out_dir = td / "out";

    RunConfig bad_bits = cfg;
    bad_bits.bits = 5;
    CHECK_THROWS_AS(cmd_quantize(bad_bits), ConfigError);

    RunConfig bad_mode = cfg;
    bad_mode.mode = "fancy";
    CHECK_THROWS_AS(cmd_quantize(bad_mode), ConfigError);

    RunConfig bad_alpha = cfg;
    bad_alpha.alpha_search = true;  // no --calib
    CHECK_THROWS_AS(cmd_quantize(bad_alpha), ConfigError);

    RunConfig no_dir = cfg;
    no_dir.in_dir = td / "nope";
    CHECK_THROWS_AS(cmd_quantize(no_dir), Error);
}

TEST_CASE("quantize handles group_size larger than cols") {
    TempDir td("cli");
    const fs::path in = td / "in";
    fs::create_directories(in);
    save_tensor(synth_family_tensor("t", 4, 20, Family::normal, 0.0, 0.02, 2),
                in / "t.dacqt");

    RunConfig cfg;
    cfg.in_dir = in;
    cfg.out_dir = td / "out";
    cfg.group_size = 128;
    cfg.mode = "uniform";
    CHECK(cmd_quantize(cfg) == kExitOk);
    const QuantizedTensor qt = load_quantized(td / "out" / "t.dacqq");
    CHECK(qt.groups_per_row() == 1);
}

TEST_CASE("safetensors checkpoints feed the whole pipeline") {
    TempDir td("cli");
    const fs::path in = td / "in";
    fs::create_directories(in);

    // build a small checkpoint with two F32 matrices
    const auto t0 = synth_family_tensor("model.block.0.w", 8, 32, Family::logistic,
                                        0.0, 0.02, 700);
    const auto t1 = synth_family_tensor("model.block.1.w", 8, 32, Family::normal,
                                        0.0, 0.02, 701);
    std::string header =
        R"({"model.block.0.w":{"dtype":"F32","shape":[8,32],"data_offsets":[0,1024]},)"
        R"("model.block.1.w":{"dtype":"F32","shape":[8,32],"data_offsets":[1024,2048]}})";
    std::vector<uint8_t> bytes(8, 0);
    bytes[0] = static_cast<uint8_t>(header.size() & 0xFF);
    bytes[1] = static_cast<uint8_t>((header.size() >> 8) & 0xFF);
    bytes.insert(bytes.end(), header.begin(), header.end());
    const auto append = [&](const WeightTensor& t) {
        const auto* p = reinterpret_cast<const uint8_t*>(t.data.data());
        bytes.insert(bytes.end(), p, p + t.data.size() * 4);
    };
    append(t0);
    append(t1);
    std::ofstream(in / "ckpt.safetensors", std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));

    RunConfig q;
    q.in_dir = in;
    q.out_dir = td / "out";
    q.mode = "logistic";
    q.group_size = 32;
    CHECK(cmd_quantize(q) == kExitOk);
    CHECK(fs::exists(td / "out" / "model.block.0.w.dacqq"));
    CHECK(fs::exists(td / "out" / "model.block.1.w.dacqq"));

    RunConfig f;
    f.in_dir = in;
    f.out_dir = td / "fit";
    f.sample_n = 256;
    f.probe_m = 50;
    CHECK(cmd_fit(f) == kExitOk);
    const json summary = read_json(td / "fit" / "summary.json");
    CHECK(summary["tensors"].size() == 2);
}

TEST_CASE("qq-export writes the CSV with the documented columns") {
    TempDir td("cli");
    write_family_corpus(td / "in");
    RunConfig cfg;
    cfg.in_dir = td / "in";
    cfg.out_dir = td / "qq";
    cfg.sample_n = 5000;
    cfg.probe_m = 100;
    CHECK(cmd_qq_export(cfg) == kExitOk);
    std::ifstream csv(td / "qq" / "w_laplace.qq.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header.rfind("p,q_theoretical_normal", 0) == 0);
    int rows = 0;
    std::string line;
    while (std::getline(csv, line)) rows++;
    CHECK(rows == 100);
}

#ifdef DACQ_BIN
TEST_CASE("binary smoke test: help, config errors, data errors") {
    TempDir td("cli");
    const std::string bin = DACQ_BIN;
    CHECK(std::system((bin + " --help > /dev/null").c_str()) == 0);

    // unknown flag -> config error (exit 2)
    int rc = std::system((bin + " fit --bogus 2>/dev/null").c_str());
    CHECK(WEXITSTATUS(rc) == kExitConfig);

    // missing input directory -> data error (exit 3)
    rc = std::system((bin + " fit --in " + (td / "nope").string() + " --out " +
                      (td / "out").string() + " 2>/dev/null")
                         .c_str());
    CHECK(WEXITSTATUS(rc) == kExitData);
}

TEST_CASE("config file supplies flags, command line wins") {
    TempDir td("cli");
    write_family_corpus(td / "in");
    {
        std::ofstream ini(td / "dacq.ini");
        ini << "[fit]\n";
        ini << "in=" << (td / "in").string() << "\n";
        ini << "out=" << (td / "cfg_out").string() << "\n";
        ini << "sample-n=5000\nprobe-m=100\n";
    }
    const std::string bin = DACQ_BIN;
    int rc = std::system(
        (bin + " fit --config " + (td / "dacq.ini").string() + " > /dev/null").c_str());
    CHECK(WEXITSTATUS(rc) == kExitOk);
    CHECK(fs::exists(td / "cfg_out" / "summary.json"));

    // command line overrides the config file's --out
    rc = std::system((bin + " fit --config " + (td / "dacq.ini").string() + " --out " +
                      (td / "cli_out").string() + " > /dev/null")
                         .c_str());
    CHECK(WEXITSTATUS(rc) == kExitOk);
    CHECK(fs::exists(td / "cli_out" / "summary.json"));
}
#endif

#ifdef DACQ_SYNTH_BIN
TEST_CASE("dacq-synth writes loadable tensors") {
    TempDir td("cli");
    const std::string bin = DACQ_SYNTH_BIN;
    const int rc = std::system((bin + " --out " + (td / "w").string() +
                                " --kind logistic-mixture --rows 8 --cols 32 "
                                "--count 2 --seed 3 > /dev/null")
                                   .c_str());
    CHECK(WEXITSTATUS(rc) == 0);
    const WeightTensor t = load_tensor(td / "w" / "layer0.dacqt");
    CHECK(t.rows == 8);
    CHECK(t.cols == 32);
    CHECK(fs::exists(td / "w" / "layer1.dacqt"));
}
#endif
