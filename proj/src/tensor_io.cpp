// SPDX-License-Identifier: Apache-2.0

#include "dacq/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "dacq/error.hpp"

namespace dacq {

namespace {

constexpr char kTensorMagic[5] = {'D', 'A', 'C', 'Q', 'T'};
constexpr char kQuantMagic[5] = {'D', 'A', 'C', 'Q', 'Q'};
constexpr uint8_t kFormatVersion = 1;
constexpr uint8_t kDtypeF32 = 1;

// Little-endian byte-level serialization, independent of host layout.
struct Writer {
    std::vector<uint8_t> bytes;

    void put_raw(const void* p, size_t n) {
        const auto* b = static_cast<const uint8_t*>(p);
        bytes.insert(bytes.end(), b, b + n);
    }
    void put_u8(uint8_t v) { bytes.push_back(v); }
    void put_u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void put_f32(float v) {
        uint32_t u;
        std::memcpy(&u, &v, 4);
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<uint8_t>(u >> (8 * i)));
    }
};

struct Reader {
    const std::vector<uint8_t>& bytes;
    size_t pos = 0;
    std::string context;

    void need(size_t n) const {
        if (pos + n > bytes.size()) {
            throw FormatError(context + ": truncated file (need " + std::to_string(n) +
                              " bytes at offset " + std::to_string(pos) + ")");
        }
    }
    uint8_t get_u8() {
        need(1);
        return bytes[pos++];
    }
    uint64_t get_u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    float get_f32() {
        need(4);
        uint32_t u = 0;
        for (int i = 0; i < 4; ++i) u |= static_cast<uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        float f;
        std::memcpy(&f, &u, 4);
        return f;
    }
    void get_raw(void* p, size_t n) {
        need(n);
        std::memcpy(p, bytes.data() + pos, n);
        pos += n;
    }
    void expect_magic(const char (&magic)[5]) {
        need(5);
        if (std::memcmp(bytes.data() + pos, magic, 5) != 0) {
            throw FormatError(context + ": bad magic");
        }
        pos += 5;
    }
    void expect_end() const {
        if (pos != bytes.size()) {
            throw FormatError(context + ": " + std::to_string(bytes.size() - pos) +
                              " trailing bytes");
        }
    }
};

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = static_cast<size_t>(in.tellg());
    in.seekg(0);
    std::vector<uint8_t> bytes(size);
    if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (!in) throw IoError("failed reading " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

// f32 payloads are stored little-endian; on little-endian hosts this is a
// straight memcpy of the buffer.
void put_f32_payload(Writer& w, const std::vector<float>& v) {
    static_assert(sizeof(float) == 4);
    if constexpr (std::endian::native == std::endian::little) {
        w.put_raw(v.data(), v.size() * 4);
    } else {
        for (float f : v) w.put_f32(f);
    }
}

void get_f32_payload(Reader& r, std::vector<float>& v, size_t count) {
    v.resize(count);
    if constexpr (std::endian::native == std::endian::little) {
        r.get_raw(v.data(), count * 4);
    } else {
        for (size_t i = 0; i < count; ++i) v[i] = r.get_f32();
    }
}

std::vector<uint8_t> serialize_matrix(const std::string& name, size_t rows, size_t cols,
                                      const std::vector<float>& data) {
    if (data.size() != rows * cols) {
        throw ShapeError("'" + name + "': data length != rows*cols");
    }
    Writer w;
    w.put_raw(kTensorMagic, 5);
    w.put_u8(kFormatVersion);
    w.put_u8(kDtypeF32);
    w.put_u8(2);  // ndim
    w.put_u64(rows);
    w.put_u64(cols);
    put_f32_payload(w, data);
    return std::move(w.bytes);
}

void load_matrix(const std::filesystem::path& path, size_t& rows, size_t& cols,
                 std::vector<float>& data) {
    const auto bytes = read_file(path);
    Reader r{bytes, 0, path.string()};
    r.expect_magic(kTensorMagic);
    const uint8_t version = r.get_u8();
    if (version != kFormatVersion) {
        throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
    }
    const uint8_t dtype = r.get_u8();
    if (dtype != kDtypeF32) {
        throw FormatError(path.string() + ": unsupported dtype " + std::to_string(dtype));
    }
    const uint8_t ndim = r.get_u8();
    if (ndim != 2) {
        throw FormatError(path.string() + ": expected 2-D tensor, got ndim=" +
                          std::to_string(ndim));
    }
    rows = r.get_u64();
    cols = r.get_u64();
    const auto count = static_cast<__uint128_t>(rows) * cols;
    if (count * 4 > bytes.size()) {
        throw FormatError(path.string() + ": declared shape exceeds payload");
    }
    get_f32_payload(r, data, rows * cols);
    r.expect_end();
}

}  // namespace

const char* grid_kind_name(GridKind k) {
    switch (k) {
        case GridKind::uniform: return "uniform";
        case GridKind::logistic: return "logistic";
        case GridKind::hybrid: return "hybrid";
    }
    return "?";
}

std::vector<uint8_t> serialize_tensor(const WeightTensor& t) {
    t.validate();
    return serialize_matrix(t.name, t.rows, t.cols, t.data);
}

void save_tensor(const WeightTensor& t, const std::filesystem::path& path) {
    write_file(path, serialize_tensor(t));
}

WeightTensor load_tensor(const std::filesystem::path& path) {
    WeightTensor t;
    t.name = path.stem().string();
    load_matrix(path, t.rows, t.cols, t.data);
    t.validate();
    return t;
}

void save_calibration(const CalibrationSet& c, const std::filesystem::path& path) {
    c.validate();
    write_file(path, serialize_matrix(c.layer_name, c.tokens, c.cols, c.data));
}

CalibrationSet load_calibration(const std::filesystem::path& path) {
    CalibrationSet c;
    c.layer_name = path.stem().string();
    load_matrix(path, c.tokens, c.cols, c.data);
    c.validate();
    return c;
}

bool is_native_tensor_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    char magic[5] = {};
    in.read(magic, 5);
    return in && std::memcmp(magic, kTensorMagic, 5) == 0;
}

std::vector<WeightTensor> load_safetensors(const std::filesystem::path& path,
                                           std::vector<std::string>* skipped) {
    const auto bytes = read_file(path);
    if (bytes.size() < 8) throw FormatError(path.string() + ": truncated safetensors header");
    uint64_t header_size = 0;
    for (int i = 0; i < 8; ++i) header_size |= static_cast<uint64_t>(bytes[i]) << (8 * i);
    if (header_size > bytes.size() - 8) {
        throw FormatError(path.string() + ": safetensors header overruns file");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + header_size);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": bad safetensors header: " + e.what());
    }
    const size_t data_base = 8 + header_size;
    const size_t data_size = bytes.size() - data_base;

    std::vector<WeightTensor> out;
    for (const auto& [key, info] : header.items()) {
        if (key == "__metadata__") continue;
        const std::string dtype = info.value("dtype", "");
        const auto shape = info.value("shape", std::vector<uint64_t>{});
        if (dtype != "F32" || shape.size() != 2) {
            if (skipped) skipped->push_back(key + " (" + dtype + ")");
            continue;
        }
        const auto offsets = info.value("data_offsets", std::vector<uint64_t>{});
        if (offsets.size() != 2 || offsets[1] < offsets[0] || offsets[1] > data_size) {
            throw FormatError(path.string() + ": bad data_offsets for '" + key + "'");
        }
        const size_t count = shape[0] * shape[1];
        if (offsets[1] - offsets[0] != count * 4) {
            throw FormatError(path.string() + ": payload size mismatch for '" + key + "'");
        }
        WeightTensor t;
        t.name = key;
        t.rows = shape[0];
        t.cols = shape[1];
        t.data.resize(count);
        std::memcpy(t.data.data(), bytes.data() + data_base + offsets[0], count * 4);
        t.validate();
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<uint8_t> pack_nibbles(std::span<const uint8_t> indices) {
    std::vector<uint8_t> out((indices.size() + 1) / 2, 0);
    for (size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] > 0x0F) {
            throw ValueError("nibble index " + std::to_string(indices[i]) +
                             " out of range at position " + std::to_string(i));
        }
        out[i / 2] |= static_cast<uint8_t>(indices[i] << (4 * (i % 2)));
    }
    return out;
}

std::vector<uint8_t> unpack_nibbles(std::span<const uint8_t> packed, size_t count) {
    if (packed.size() < (count + 1) / 2) {
        throw ShapeError("packed buffer too short for " + std::to_string(count) + " nibbles");
    }
    std::vector<uint8_t> out(count);
    for (size_t i = 0; i < count; ++i) {
        out[i] = (packed[i / 2] >> (4 * (i % 2))) & 0x0F;
    }
    return out;
}

void QuantizedTensor::validate() const {
    if (bits != 2 && bits != 3 && bits != 4 && bits != 8) {
        throw FormatError("'" + name + "': unsupported bit width " + std::to_string(bits));
    }
    if (group_size < 1) throw FormatError("'" + name + "': group_size must be >= 1");
    if (packed.size() != packed_size()) {
        throw FormatError("'" + name + "': packed length " + std::to_string(packed.size()) +
                          " != expected " + std::to_string(packed_size()));
    }
    if (group_params.size() != num_groups()) {
        throw FormatError("'" + name + "': group table length " +
                          std::to_string(group_params.size()) + " != expected " +
                          std::to_string(num_groups()));
    }
    if (channel_scales.size() != cols) {
        throw FormatError("'" + name + "': channel scale length != cols");
    }
    for (size_t g = 0; g < group_params.size(); ++g) {
        const auto& p = group_params[g];
        const bool finite = std::isfinite(p.mu) && std::isfinite(p.sigma) &&
                            std::isfinite(p.w_min) && std::isfinite(p.w_max) &&
                            std::isfinite(p.gamma);
        if (!finite || p.sigma < 0.0f || p.w_min > p.w_max || p.gamma < 0.0f ||
            p.gamma > 1.0f || static_cast<uint8_t>(p.kind) > 2) {
            throw FormatError("'" + name + "': invalid group params at group " +
                              std::to_string(g));
        }
    }
    for (size_t c = 0; c < channel_scales.size(); ++c) {
        if (!(std::isfinite(channel_scales[c]) && channel_scales[c] > 0.0f)) {
            throw FormatError("'" + name + "': non-positive channel scale at column " +
                              std::to_string(c));
        }
    }
    // Stored indices must address a valid level; for bits <= 4 the pad nibble
    // of an odd-length payload must be zero so artifacts stay byte-exact.
    const size_t n = rows * cols;
    if (bits < 4) {
        const uint8_t max_idx = static_cast<uint8_t>((1u << bits) - 1);
        for (size_t i = 0; i < n; ++i) {
            const uint8_t v = (packed[i / 2] >> (4 * (i % 2))) & 0x0F;
            if (v > max_idx) {
                throw FormatError("'" + name + "': index " + std::to_string(v) +
                                  " exceeds " + std::to_string(bits) + "-bit range");
            }
        }
    }
    if (bits <= 4 && n % 2 == 1 && (packed.back() & 0xF0) != 0) {
        throw FormatError("'" + name + "': nonzero pad nibble in final byte");
    }
}

std::vector<uint8_t> serialize_quantized(const QuantizedTensor& qt) {
    qt.validate();
    Writer w;
    w.put_raw(kQuantMagic, 5);
    w.put_u8(kFormatVersion);
    w.put_u8(static_cast<uint8_t>(qt.bits));
    w.put_u8(0);  // reserved
    w.put_u64(qt.rows);
    w.put_u64(qt.cols);
    w.put_u64(qt.group_size);
    for (const auto& p : qt.group_params) {
        w.put_f32(p.mu);
        w.put_f32(p.sigma);
        w.put_f32(p.w_min);
        w.put_f32(p.w_max);
        w.put_f32(p.gamma);
        w.put_u8(static_cast<uint8_t>(p.kind));
    }
    put_f32_payload(w, qt.channel_scales);
    w.put_raw(qt.packed.data(), qt.packed.size());
    return std::move(w.bytes);
}

void save_quantized(const QuantizedTensor& qt, const std::filesystem::path& path) {
    write_file(path, serialize_quantized(qt));
}

QuantizedTensor load_quantized(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    Reader r{bytes, 0, path.string()};
    r.expect_magic(kQuantMagic);
    const uint8_t version = r.get_u8();
    if (version != kFormatVersion) {
        throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
    }
    QuantizedTensor qt;
    qt.name = path.stem().string();
    qt.bits = r.get_u8();
    r.get_u8();  // reserved
    qt.rows = r.get_u64();
    qt.cols = r.get_u64();
    qt.group_size = r.get_u64();
    if (qt.bits < 1 || qt.bits > 8 || qt.group_size < 1) {
        throw FormatError(path.string() + ": bad header fields");
    }
    // Guard size arithmetic before allocating: even half-byte elements cannot
    // outnumber twice the remaining payload.
    const auto count = static_cast<__uint128_t>(qt.rows) * qt.cols;
    if (count > static_cast<__uint128_t>(bytes.size()) * 2) {
        throw FormatError(path.string() + ": declared shape exceeds payload");
    }
    qt.group_params.resize(qt.num_groups());
    for (auto& p : qt.group_params) {
        p.mu = r.get_f32();
        p.sigma = r.get_f32();
        p.w_min = r.get_f32();
        p.w_max = r.get_f32();
        p.gamma = r.get_f32();
        p.kind = static_cast<GridKind>(r.get_u8());
    }
    get_f32_payload(r, qt.channel_scales, qt.cols);
    qt.packed.resize(qt.packed_size());
    r.get_raw(qt.packed.data(), qt.packed.size());
    r.expect_end();
    qt.validate();
    return qt;
}

}  // namespace dacq
