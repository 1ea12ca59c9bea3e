// SPDX-License-Identifier: Apache-2.0

#include "dacq/cli.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>

#include <json.hpp>

#include "dacq/awq.hpp"
#include "dacq/distfit.hpp"
#include "dacq/error.hpp"
#include "dacq/evalx.hpp"
#include "dacq/quantizer.hpp"
#include "dacq/synth.hpp"
#include "dacq/tensor_io.hpp"

namespace dacq {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sanitize_name(const std::string& name) {
    std::string out = name;
    for (char& c : out) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
        if (!ok) c = '_';
    }
    return out.empty() ? "_" : out;
}

namespace {

// FNV-1a; std::hash is not portable across standard libraries.
uint64_t name_hash(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

void check_dir_exists(const fs::path& p, const char* what) {
    if (p.empty()) throw ConfigError(std::string("missing required --") + what);
    if (!fs::is_directory(p)) {
        throw Error(std::string(what) + " directory does not exist: " + p.string());
    }
}

void ensure_out_dir(const fs::path& p) {
    if (p.empty()) throw ConfigError("missing required --out");
    fs::create_directories(p);
}

void check_bits(int bits) {
    if (bits != 2 && bits != 3 && bits != 4 && bits != 8) {
        throw ConfigError("--bits must be one of 2, 3, 4, 8");
    }
}

GridKind parse_mode(const std::string& mode) {
    if (mode == "uniform") return GridKind::uniform;
    if (mode == "logistic") return GridKind::logistic;
    if (mode == "hybrid") return GridKind::hybrid;
    throw ConfigError("--mode must be uniform, logistic or hybrid");
}

void check_format(const std::string& f) {
    if (f != "csv" && f != "json") throw ConfigError("--format must be csv or json");
}

// Every loadable weight tensor in the directory: native .dacqt files plus the
// F32 2-D entries of any .safetensors file, in deterministic filename order.
// Per-file failures are recorded; the scan continues.
std::vector<WeightTensor> scan_tensors(const fs::path& dir,
                                       std::vector<std::pair<std::string, std::string>>* errors) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto ext = e.path().extension().string();
        if (ext == ".dacqt" || ext == ".safetensors") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<WeightTensor> tensors;
    for (const auto& f : files) {
        try {
            if (f.extension() == ".safetensors") {
                std::vector<std::string> skipped;
                auto loaded = load_safetensors(f, &skipped);
                for (const auto& name : skipped) {
                    std::cerr << "warning: " << f.filename().string()
                              << ": skipped non-F32/non-2D entry " << name << "\n";
                }
                for (auto& t : loaded) tensors.push_back(std::move(t));
            } else {
                tensors.push_back(load_tensor(f));
            }
        } catch (const std::exception& ex) {
            if (errors == nullptr) throw;
            errors->emplace_back(f.filename().string(), ex.what());
            std::cerr << "error: " << f.string() << ": " << ex.what() << "\n";
        }
    }
    return tensors;
}

std::optional<CalibrationSet> find_calibration(const fs::path& calib_dir,
                                               const std::string& tensor_name) {
    if (calib_dir.empty()) return std::nullopt;
    const fs::path p = calib_dir / (sanitize_name(tensor_name) + ".dacqt");
    if (!fs::exists(p)) return std::nullopt;
    return load_calibration(p);
}

void write_qq_csv(const FitReport& report, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "p,q_theoretical_normal,q_theoretical_laplace,q_theoretical_logistic,"
           "q_empirical\n";
    out.precision(17);
    for (const auto& row : report.qq) {
        out << row.p << ',' << row.q_normal << ',' << row.q_laplace << ','
            << row.q_logistic << ',' << row.q_empirical << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

json fit_report_json(const FitReport& r) {
    json metrics;
    for (const auto& f : r.fits) {
        metrics[family_name(f.family)] = {{"rmse", f.rmse}, {"mae", f.mae}};
    }
    return {{"tensor", r.tensor_name},
            {"n_samples", r.n_samples},
            {"metrics", metrics},
            {"best_family", family_name(r.best_family)}};
}

void write_json_file(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

int cmd_fit(const RunConfig& cfg) {
    check_dir_exists(cfg.in_dir, "in");
    ensure_out_dir(cfg.out_dir);
    if (cfg.sample_n < 2) throw ConfigError("--sample-n must be >= 2");
    if (cfg.probe_m < 2) throw ConfigError("--probe-m must be >= 2");

    std::vector<std::pair<std::string, std::string>> errors;
    const auto tensors = scan_tensors(cfg.in_dir, &errors);

    std::map<std::string, int> tally{{"normal", 0}, {"laplace", 0}, {"logistic", 0}};
    json per_tensor = json::array();
    std::array<std::vector<double>, 3> rmse_by_family, mae_by_family;
    for (const auto& t : tensors) {
        try {
            const auto t0 = std::chrono::steady_clock::now();
            const FitReport r = best_fit(t, cfg.sample_n, cfg.probe_m, cfg.seed);
            const auto ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
            const std::string base = sanitize_name(t.name);
            write_json_file(fit_report_json(r), cfg.out_dir / (base + ".fit.json"));
            write_qq_csv(r, cfg.out_dir / (base + ".qq.csv"));
            tally[family_name(r.best_family)]++;
            for (size_t i = 0; i < 3; ++i) {
                rmse_by_family[i].push_back(r.fits[i].rmse);
                mae_by_family[i].push_back(r.fits[i].mae);
            }
            json entry = fit_report_json(r);
            entry["duration_ms"] = ms;
            per_tensor.push_back(entry);
        } catch (const std::exception& ex) {
            errors.emplace_back(t.name, ex.what());
            std::cerr << "error: fit of '" << t.name << "' failed: " << ex.what() << "\n";
        }
    }

    // model-level view: mean +- std (population) of each family's metrics
    // across all fitted tensors
    const auto mean_std = [](const std::vector<double>& v) {
        json out = {{"mean", nullptr}, {"std", nullptr}};
        if (v.empty()) return out;
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        out["mean"] = mean;
        out["std"] = std::sqrt(var / static_cast<double>(v.size()));
        return out;
    };
    json model_level;
    for (size_t i = 0; i < 3; ++i) {
        model_level[family_name(static_cast<Family>(i))] = {
            {"rmse", mean_std(rmse_by_family[i])}, {"mae", mean_std(mae_by_family[i])}};
    }

    json err_json = json::array();
    for (const auto& [file, msg] : errors) err_json.push_back({{"input", file}, {"error", msg}});
    write_json_file(json{{"counts", tally},
                         {"model_level", model_level},
                         {"tensors", per_tensor},
                         {"errors", err_json}},
                    cfg.out_dir / "summary.json");

    std::cout << "fit: logistic " << tally["logistic"] << ", normal " << tally["normal"]
              << ", laplace " << tally["laplace"] << " (" << per_tensor.size()
              << " tensors, " << errors.size() << " errors)\n";
    return errors.empty() ? kExitOk : kExitData;
}

int cmd_qq_export(const RunConfig& cfg) {
    check_dir_exists(cfg.in_dir, "in");
    ensure_out_dir(cfg.out_dir);
    std::vector<std::pair<std::string, std::string>> errors;
    const auto tensors = scan_tensors(cfg.in_dir, &errors);
    for (const auto& t : tensors) {
        try {
            const FitReport r = best_fit(t, cfg.sample_n, cfg.probe_m, cfg.seed);
            write_qq_csv(r, cfg.out_dir / (sanitize_name(t.name) + ".qq.csv"));
        } catch (const std::exception& ex) {
            errors.emplace_back(t.name, ex.what());
            std::cerr << "error: qq-export of '" << t.name << "' failed: " << ex.what()
                      << "\n";
        }
    }
    return errors.empty() ? kExitOk : kExitData;
}

int cmd_quantize(const RunConfig& cfg) {
    check_bits(cfg.bits);
    const GridKind mode = parse_mode(cfg.mode);
    if (cfg.group_size < 1) throw ConfigError("--group-size must be >= 1");
    check_dir_exists(cfg.in_dir, "in");
    if (cfg.alpha_search && cfg.calib_dir.empty()) {
        throw ConfigError("--alpha-search requires --calib");
    }
    ensure_out_dir(cfg.out_dir);

    const auto tensors = scan_tensors(cfg.in_dir, nullptr);
    const QuantizeConfig qcfg{cfg.bits, cfg.group_size, mode};

    json manifest;
    manifest["config"] = {{"bits", cfg.bits},
                          {"group_size", cfg.group_size},
                          {"mode", cfg.mode},
                          {"alpha_search", cfg.alpha_search},
                          {"seed", cfg.seed}};
    json entries = json::array();

    for (const auto& t : tensors) {
        const auto t0 = std::chrono::steady_clock::now();
        if (cfg.group_size > t.cols) {
            std::cerr << "warning: group size " << cfg.group_size << " exceeds cols of '"
                      << t.name << "'; using a single group per row\n";
        }
        auto cal = find_calibration(cfg.calib_dir, t.name);
        if (cfg.alpha_search && !cal.has_value()) {
            throw Error("alpha search requested but no calibration found for '" +
                        t.name + "'");
        }
        if (cal.has_value() && cal->cols != t.cols) {
            throw ShapeError("calibration for '" + t.name + "' has " +
                             std::to_string(cal->cols) + " cols, tensor has " +
                             std::to_string(t.cols));
        }
        if (mode == GridKind::hybrid && !cal.has_value()) {
            std::cerr << "warning: no calibration for '" << t.name
                      << "'; gamma search uses the weight-space objective\n";
        }

        QuantizedTensor qt;
        QuantizeStats stats;
        json alpha = nullptr;
        json salience = nullptr;
        if (cfg.alpha_search) {
            const ChannelStats cs = channel_stats(*cal);
            AlphaSearchResult ar = alpha_search(t, *cal, cs, qcfg, &qt);
            stats = std::move(ar.stats_star);
            alpha = ar.alpha_star;
            const SalienceReport sal = salience_report(t, cs);
            salience = {{"weight_argmax_col", sal.weight_argmax_col},
                        {"activation_argmax_col", sal.activation_argmax_col}};
        } else {
            qt = quantize_tensor(t, cal.has_value() ? &*cal : nullptr, qcfg, &stats);
        }

        const std::string base = sanitize_name(t.name);
        const fs::path artifact = cfg.out_dir / (base + ".dacqq");
        save_quantized(qt, artifact);

        const WeightTensor recon = dequantize(qt);
        const auto [mse, mae] = reconstruction_metrics(t, recon);
        const auto ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        entries.push_back({{"name", t.name},
                           {"artifact", artifact.filename().string()},
                           {"rows", t.rows},
                           {"cols", t.cols},
                           {"alpha_star", alpha},
                           {"salience", salience},
                           {"gamma_hist", stats.gamma_hist},
                           {"mse", mse},
                           {"mae", mae},
                           {"activation_error", stats.total_activation_error},
                           {"weight_mse_fallback", stats.weight_mse_fallback},
                           {"degenerate_groups", stats.degenerate_groups},
                           {"duration_ms", ms}});
        std::cout << "quantized '" << t.name << "' (" << t.rows << "x" << t.cols
                  << ") mse=" << mse << (alpha.is_null() ? "" : " alpha=" + alpha.dump())
                  << "\n";
    }

    manifest["tensors"] = entries;
    write_json_file(manifest, cfg.out_dir / "manifest.json");
    return kExitOk;
}

int cmd_eval(const RunConfig& cfg) {
    check_bits(cfg.bits);
    check_format(cfg.format);
    check_dir_exists(cfg.in_dir, "in");
    ensure_out_dir(cfg.out_dir);
    for (const auto& m : cfg.eval_modes) mode_kind_from_label(m);  // validate early

    const auto tensors = scan_tensors(cfg.in_dir, nullptr);

    std::map<std::string, CalibrationSet> calibs;
    for (const auto& t : tensors) {
        auto cal = find_calibration(cfg.calib_dir, t.name);
        if (cal.has_value()) calibs.emplace(t.name, std::move(*cal));
    }
    const auto lookup = [&](const std::string& name) -> const CalibrationSet* {
        auto it = calibs.find(name);
        return it == calibs.end() ? nullptr : &it->second;
    };

    std::vector<EvalRecord> records;
    int exit_code = kExitOk;

    if (cfg.profile) {
        ProfileOptions opts;
        opts.bits = cfg.bits;
        opts.group_size = cfg.group_size;
        opts.modes = cfg.eval_modes;
        opts.alpha_search = cfg.alpha_search;
        records = layer_error_profile(tensors, lookup, opts);
    } else {
        if (cfg.artifact_dirs.empty()) {
            throw ConfigError("eval needs --artifacts (or --profile)");
        }
        // artifacts indexed by (tensor name, mode label)
        std::map<std::pair<std::string, std::string>, QuantizedTensor> artifacts;
        for (const auto& dir : cfg.artifact_dirs) {
            check_dir_exists(dir, "artifacts");
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(dir)) {
                if (e.is_regular_file() && e.path().extension() == ".dacqq") {
                    files.push_back(e.path());
                }
            }
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                QuantizedTensor qt = load_quantized(f);
                const std::string mode = qt.group_params.empty()
                                             ? "awq-uniform"
                                             : mode_label(qt.group_params[0].kind);
                artifacts.insert_or_assign({qt.name, mode}, std::move(qt));
            }
        }
        for (const auto& t : tensors) {
            for (const auto& mode : cfg.eval_modes) {
                const auto it = artifacts.find({sanitize_name(t.name), mode});
                if (it == artifacts.end()) {
                    std::cerr << "error: no " << mode << " artifact for '" << t.name
                              << "'\n";
                    EvalRecord missing;
                    missing.tensor_name = t.name;
                    missing.mode = mode;
                    missing.protocol = "missing";
                    missing.alpha_star = std::numeric_limits<double>::quiet_NaN();
                    missing.mse = missing.mae = missing.activation_error =
                        std::numeric_limits<double>::quiet_NaN();
                    records.push_back(std::move(missing));
                    exit_code = kExitData;
                    continue;
                }
                records.push_back(evaluate_artifact(t, it->second, lookup(t.name)));
            }
        }
    }

    const fs::path report =
        cfg.out_dir / (cfg.format == "csv" ? "report.csv" : "report.json");
    if (cfg.format == "csv") {
        write_eval_csv(records, report);
    } else {
        write_eval_json(records, report);
    }
    std::cout << "eval: " << records.size() << " rows -> " << report.string() << "\n";
    return exit_code;
}

int cmd_gen_calib(const RunConfig& cfg) {
    check_dir_exists(cfg.in_dir, "in");
    ensure_out_dir(cfg.out_dir);
    if (cfg.tokens < 1) throw ConfigError("--tokens must be >= 1");

    const auto tensors = scan_tensors(cfg.in_dir, nullptr);
    for (const auto& t : tensors) {
        for (size_t c : cfg.salient_cols) {
            if (c >= t.cols) {
                throw Error("salient column " + std::to_string(c) +
                            " out of range for '" + t.name + "' (cols=" +
                            std::to_string(t.cols) + ")");
            }
        }
        const uint64_t seed = cfg.seed ^ name_hash(t.name);
        const CalibrationSet cal = synth_calibration(
            t.name, cfg.tokens, t.cols, seed, cfg.salient_cols, cfg.salient_scale);
        save_calibration(cal, cfg.out_dir / (sanitize_name(t.name) + ".dacqt"));
    }
    std::cout << "gen-calib: wrote " << tensors.size() << " calibration sets ("
              << cfg.tokens << " tokens each)\n";
    return kExitOk;
}

}  // namespace dacq
