// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dacq/quantized.hpp"
#include "dacq/tensor.hpp"

namespace dacq {

// Native tensor container ("DACQT"): magic + version u8 + dtype u8 + ndim u8 +
// dims (u64 each) + raw f32 little-endian payload. Quantized artifact
// ("DACQQ"): magic + version + bits + shape + group_size + per-group parameter
// table + channel-scale vector + packed index payload. Byte-level layout is
// documented in docs/FORMATS.md; both formats round-trip bit-exactly.

void save_tensor(const WeightTensor& t, const std::filesystem::path& path);
WeightTensor load_tensor(const std::filesystem::path& path);

// Calibration sets reuse the DACQT container (tokens x cols).
void save_calibration(const CalibrationSet& c, const std::filesystem::path& path);
CalibrationSet load_calibration(const std::filesystem::path& path);

// Read-only safetensors ingestion: returns every F32 2-D tensor in the file,
// named by its header key. Entries with other dtypes or ranks are skipped and
// reported in *skipped when non-null.
std::vector<WeightTensor> load_safetensors(const std::filesystem::path& path,
                                           std::vector<std::string>* skipped = nullptr);

// Dispatch on file magic: DACQT files load natively, anything starting with a
// safetensors-style header is rejected here (multi-tensor; use load_safetensors).
bool is_native_tensor_file(const std::filesystem::path& path);

void save_quantized(const QuantizedTensor& qt, const std::filesystem::path& path);
QuantizedTensor load_quantized(const std::filesystem::path& path);

// Exact bytes save_tensor / save_quantized would write.
std::vector<uint8_t> serialize_tensor(const WeightTensor& t);
std::vector<uint8_t> serialize_quantized(const QuantizedTensor& qt);

// 4-bit packing, low nibble first: [1, 2] -> 0x21. Odd counts leave the high
// nibble of the final byte zero.
std::vector<uint8_t> pack_nibbles(std::span<const uint8_t> indices);
std::vector<uint8_t> unpack_nibbles(std::span<const uint8_t> packed, size_t count);

}  // namespace dacq
