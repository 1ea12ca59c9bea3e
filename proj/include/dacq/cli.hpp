// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dacq {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;  // bad flags / flag combinations
inline constexpr int kExitData = 3;    // unreadable, malformed or mismatched data

// Options shared by the subcommands; each command reads the fields it needs.
// Defaults follow the 4-bit, group-size-128 setting.
struct RunConfig {
    int bits = 4;
    size_t group_size = 128;
    std::string mode = "hybrid";  // uniform | logistic | hybrid
    bool alpha_search = false;
    uint64_t seed = 0;
    size_t sample_n = 1000000;
    size_t probe_m = 1000;
    std::filesystem::path in_dir;
    std::filesystem::path calib_dir;  // empty = no calibration
    std::filesystem::path out_dir;
    std::string format = "csv";  // csv | json

    // eval
    std::vector<std::string> eval_modes = {"awq-uniform", "dacq-logistic",
                                           "dacq-hybrid"};
    std::vector<std::filesystem::path> artifact_dirs;
    bool profile = false;

    // gen-calib
    size_t tokens = 128;
    std::vector<size_t> salient_cols;
    double salient_scale = 100.0;
};

// Per-tensor distribution fits, Q-Q exports and a best-fit tally. Unreadable
// files are recorded and skipped; the run continues.
int cmd_fit(const RunConfig& cfg);

// Quantizes every input tensor, writes .dacqq artifacts plus a manifest with
// per-tensor alpha/gamma evidence and reconstruction metrics.
int cmd_quantize(const RunConfig& cfg);

// Either scores stored artifacts against their originals (default) or, with
// profile=true, runs the full in-memory mode comparison.
int cmd_eval(const RunConfig& cfg);

// Q-Q CSV export only (the fit command's CSV half).
int cmd_qq_export(const RunConfig& cfg);

// Synthetic Gaussian calibration activations, name-matched to the input
// tensors, with optional planted salient channels.
int cmd_gen_calib(const RunConfig& cfg);

// Filesystem-safe tensor name (safetensors keys may contain path separators).
std::string sanitize_name(const std::string& name);

}  // namespace dacq
