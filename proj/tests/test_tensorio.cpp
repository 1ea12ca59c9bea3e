// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <fstream>
#include <limits>

#include "dacq/error.hpp"
#include "dacq/rng.hpp"
#include "dacq/tensor_io.hpp"
#include "test_support.hpp"

using namespace dacq;
using dacq::test::TempDir;

static std::vector<uint8_t> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

static void spit(const std::filesystem::path& p, const std::vector<uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

TEST_CASE("tensor save/load round-trips bit-exactly") {
    TempDir td("tio");
    WeightTensor t("t", 3, 4);
    for (size_t i = 0; i < t.data.size(); ++i) t.data[i] = 0.1f * static_cast<float>(i) - 0.5f;

    const auto p1 = td / "t.dacqt";
    save_tensor(t, p1);
    const WeightTensor back = load_tensor(p1);
    CHECK(back.name == "t");
    CHECK(back.rows == 3);
    CHECK(back.cols == 4);
    CHECK(back.data == t.data);

    // save -> load -> save produces byte-identical files
    const auto p2 = td / "t2.dacqt";
    save_tensor(back, p2);
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("loader rejects shape/length mismatch") {
    TempDir td("tio");
    WeightTensor t("t", 2, 3);
    const auto p = td / "t.dacqt";
    save_tensor(t, p);

    auto bytes = slurp(p);
    bytes[8] = 5;  // rows u64 starts at offset 8: claim 5 rows, payload has 2
    spit(p, bytes);
    CHECK_THROWS_AS(load_tensor(p), FormatError);
}

TEST_CASE("loader rejects non-finite values") {
    TempDir td("tio");
    WeightTensor t("t", 2, 2);
    t.data[2] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(save_tensor(t, td / "bad.dacqt"), ValueError);

    // craft the file directly so the loader is the one rejecting
    t.data[2] = 0.0f;
    const auto p = td / "nan.dacqt";
    save_tensor(t, p);
    auto bytes = slurp(p);
    const uint32_t nan_bits = 0x7fc00000u;
    std::memcpy(bytes.data() + bytes.size() - 4, &nan_bits, 4);
    spit(p, bytes);
    CHECK_THROWS_AS(load_tensor(p), ValueError);
}

TEST_CASE("loader rejects bad magic and truncation") {
    TempDir td("tio");
    WeightTensor t("t", 2, 2);
    const auto p = td / "t.dacqt";
    save_tensor(t, p);

    auto bytes = slurp(p);
    auto corrupted = bytes;
    corrupted[0] = 'X';
    spit(p, corrupted);
    CHECK_THROWS_AS(load_tensor(p), FormatError);

    spit(p, {bytes.begin(), bytes.begin() + 10});
    CHECK_THROWS_AS(load_tensor(p), FormatError);
}

TEST_CASE("nibble packing examples") {
    CHECK(pack_nibbles(std::vector<uint8_t>{1, 2}) == std::vector<uint8_t>{0x21});
    CHECK(pack_nibbles(std::vector<uint8_t>{}) == std::vector<uint8_t>{});
    CHECK(pack_nibbles(std::vector<uint8_t>{15, 0, 7}) == std::vector<uint8_t>{0x0F, 0x07});
    CHECK_THROWS_AS(pack_nibbles(std::vector<uint8_t>{16}), ValueError);

    // 5 indices -> 3 bytes, high nibble of the last byte zero
    const auto packed = pack_nibbles(std::vector<uint8_t>{9, 9, 9, 9, 9});
    CHECK(packed.size() == 3);
    CHECK((packed[2] & 0xF0) == 0);
}

TEST_CASE("pack/unpack is the identity (property)") {
    Rng rng(101);
    for (int trial = 0; trial < 10000; ++trial) {
        const size_t n = rng.uniform_index(33);
        std::vector<uint8_t> v(n);
        for (auto& x : v) x = static_cast<uint8_t>(rng.uniform_index(16));
        CHECK(unpack_nibbles(pack_nibbles(v), n) == v);
    }
}

static QuantizedTensor small_qt() {
    QuantizedTensor qt;
    qt.name = "q";
    qt.rows = 1;
    qt.cols = 6;
    qt.group_size = 3;
    qt.bits = 4;
    qt.group_params = {{0.1f, 0.5f, -1.0f, 1.0f, 0.25f, GridKind::hybrid},
                       {-0.2f, 0.0f, 0.3f, 0.3f, 0.0f, GridKind::logistic}};
    qt.channel_scales = {1.0f, 2.0f, 1.5f, 1.0f, 1.0f, 0.5f};
    qt.packed = pack_nibbles(std::vector<uint8_t>{0, 15, 7, 8, 1, 2});
    return qt;
}

TEST_CASE("quantized artifact round-trips field by field") {
    TempDir td("tio");
    const QuantizedTensor qt = small_qt();
    const auto p = td / "q.dacqq";
    save_quantized(qt, p);
    const QuantizedTensor back = load_quantized(p);

    CHECK(back.name == "q");
    CHECK(back.rows == qt.rows);
    CHECK(back.cols == qt.cols);
    CHECK(back.group_size == qt.group_size);
    CHECK(back.bits == qt.bits);
    CHECK(back.packed == qt.packed);
    CHECK(back.channel_scales == qt.channel_scales);
    REQUIRE(back.group_params.size() == qt.group_params.size());
    for (size_t i = 0; i < qt.group_params.size(); ++i) {
        CHECK(back.group_params[i].mu == qt.group_params[i].mu);
        CHECK(back.group_params[i].sigma == qt.group_params[i].sigma);
        CHECK(back.group_params[i].w_min == qt.group_params[i].w_min);
        CHECK(back.group_params[i].w_max == qt.group_params[i].w_max);
        CHECK(back.group_params[i].gamma == qt.group_params[i].gamma);
        CHECK(back.group_params[i].kind == qt.group_params[i].kind);
    }

    const auto p2 = td / "q2.dacqq";
    save_quantized(back, p2);
    CHECK(slurp(p) == slurp(p2));
}

TEST_CASE("artifact loader enforces type invariants") {
    TempDir td("tio");
    const auto p = td / "q.dacqq";
    save_quantized(small_qt(), p);
    const auto good = slurp(p);

    // gamma of group 0 lives right after mu/sigma/w_min/w_max (4 f32) in the
    // first group record; header is 5+1+1+1+8+8+8 = 32 bytes.
    auto bad = good;
    const float gamma = 1.5f;
    std::memcpy(bad.data() + 32 + 16, &gamma, 4);
    spit(p, bad);
    CHECK_THROWS_AS(load_quantized(p), FormatError);

    bad = good;
    const float sigma = -0.5f;
    std::memcpy(bad.data() + 32 + 4, &sigma, 4);
    spit(p, bad);
    CHECK_THROWS_AS(load_quantized(p), FormatError);

    bad = good;
    bad.resize(bad.size() - 1);  // truncated payload
    spit(p, bad);
    CHECK_THROWS_AS(load_quantized(p), FormatError);
}

TEST_CASE("fuzzed header corruption never loads an invalid artifact") {
    TempDir td("tio");
    const auto p = td / "q.dacqq";
    save_quantized(small_qt(), p);
    const auto good = slurp(p);

    Rng rng(77);
    int loaded = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        auto bytes = good;
        const int flips = 1 + static_cast<int>(rng.uniform_index(4));
        for (int f = 0; f < flips; ++f) {
            const size_t pos = rng.uniform_index(bytes.size());
            bytes[pos] = static_cast<uint8_t>(rng.next_u64());
        }
        spit(p, bytes);
        try {
            const QuantizedTensor qt = load_quantized(p);
            qt.validate();  // anything that loads must satisfy all invariants
            loaded++;
        } catch (const Error&) {
            // rejected, as intended
        }
    }
    // a few corruptions only touch benign payload bytes and still load
    CHECK(loaded < 10000);
}

TEST_CASE("safetensors ingestion reads F32 2-D entries and skips the rest") {
    TempDir td("tio");
    // two tensors: one F32 2x2, one F16 (skipped)
    const std::string header =
        R"({"a.weight":{"dtype":"F32","shape":[2,2],"data_offsets":[0,16]},)"
        R"("b.weight":{"dtype":"F16","shape":[2,2],"data_offsets":[16,24]},)"
        R"("__metadata__":{"format":"pt"}})";
    std::vector<uint8_t> bytes(8, 0);
    bytes[0] = static_cast<uint8_t>(header.size());
    bytes.insert(bytes.end(), header.begin(), header.end());
    const float payload[4] = {1.0f, -2.0f, 3.5f, 0.25f};
    const uint8_t zeros[8] = {};
    bytes.insert(bytes.end(), reinterpret_cast<const uint8_t*>(payload),
                 reinterpret_cast<const uint8_t*>(payload) + 16);
    bytes.insert(bytes.end(), zeros, zeros + 8);

    const auto p = td / "model.safetensors";
    spit(p, bytes);

    std::vector<std::string> skipped;
    const auto tensors = load_safetensors(p, &skipped);
    REQUIRE(tensors.size() == 1);
    CHECK(tensors[0].name == "a.weight");
    CHECK(tensors[0].rows == 2);
    CHECK(tensors[0].cols == 2);
    CHECK(tensors[0].data == std::vector<float>{1.0f, -2.0f, 3.5f, 0.25f});
    REQUIRE(skipped.size() == 1);
    CHECK(skipped[0].find("b.weight") != std::string::npos);

    CHECK(is_native_tensor_file(p) == false);
}

TEST_CASE("calibration files reuse the tensor container") {
    TempDir td("tio");
    CalibrationSet cal("layer0", 3, 5);
    for (size_t i = 0; i < cal.data.size(); ++i) cal.data[i] = static_cast<float>(i);
    const auto p = td / "layer0.dacqt";
    save_calibration(cal, p);
    const CalibrationSet back = load_calibration(p);
    CHECK(back.tokens == 3);
    CHECK(back.cols == 5);
    CHECK(back.data == cal.data);
    CHECK(is_native_tensor_file(p));
}
