// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dacq/cli.hpp"
#include "dacq/error.hpp"

int main(int argc, char** argv) {
    CLI::App app{"dacq - distribution-aware companding quantization toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "INI file with one [subcommand] section per command (flags win)");
    app.fallthrough();

    dacq::RunConfig cfg;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->configurable();
        cmd->add_option("--in", cfg.in_dir, "Input tensor directory")->required();
        cmd->add_option("--out", cfg.out_dir, "Output directory")->required();
        cmd->add_option("--seed", cfg.seed, "Random seed");
    };

    auto* fit = app.add_subcommand("fit", "Distribution goodness-of-fit per tensor");
    add_common(fit);
    fit->add_option("--sample-n", cfg.sample_n, "Weights sampled per tensor");
    fit->add_option("--probe-m", cfg.probe_m, "Probe quantiles per comparison");

    auto* quantize = app.add_subcommand("quantize", "Quantize tensors to packed artifacts");
    add_common(quantize);
    quantize->add_option("--calib", cfg.calib_dir, "Calibration activation directory");
    quantize->add_option("--bits", cfg.bits, "Bit width (2, 3, 4 or 8)");
    quantize->add_option("--group-size", cfg.group_size, "Columns per group");
    quantize->add_option("--mode", cfg.mode, "uniform | logistic | hybrid");
    quantize->add_flag("--alpha-search", cfg.alpha_search,
                       "Search activation-aware channel scales");

    auto* eval = app.add_subcommand("eval", "Score artifacts or run a mode comparison");
    add_common(eval);
    eval->add_option("--calib", cfg.calib_dir, "Calibration activation directory");
    eval->add_option("--artifacts", cfg.artifact_dirs,
                     "Artifact directories (repeatable)");
    eval->add_flag("--profile", cfg.profile,
                   "Quantize in memory across modes instead of reading artifacts");
    eval->add_option("--modes", cfg.eval_modes,
                     "Modes to compare (awq-uniform dacq-logistic dacq-hybrid)");
    eval->add_option("--bits", cfg.bits, "Bit width (2, 3, 4 or 8)");
    eval->add_option("--group-size", cfg.group_size, "Columns per group");
    eval->add_flag("--alpha-search", cfg.alpha_search,
                   "Search alpha per mode in profile runs");
    eval->add_option("--format", cfg.format, "csv | json");

    auto* qq = app.add_subcommand("qq-export", "Q-Q CSV export per tensor");
    add_common(qq);
    qq->add_option("--sample-n", cfg.sample_n, "Weights sampled per tensor");
    qq->add_option("--probe-m", cfg.probe_m, "Probe quantiles per comparison");

    auto* gen = app.add_subcommand("gen-calib", "Synthetic calibration activations");
    add_common(gen);
    gen->add_option("--tokens", cfg.tokens, "Calibration tokens per layer");
    gen->add_option("--salient", cfg.salient_cols,
                    "Columns to amplify (repeatable)");
    gen->add_option("--salient-scale", cfg.salient_scale,
                    "Amplification factor for salient columns");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : dacq::kExitConfig;
    }

    try {
        if (fit->parsed()) return dacq::cmd_fit(cfg);
        if (quantize->parsed()) return dacq::cmd_quantize(cfg);
        if (eval->parsed()) return dacq::cmd_eval(cfg);
        if (qq->parsed()) return dacq::cmd_qq_export(cfg);
        if (gen->parsed()) return dacq::cmd_gen_calib(cfg);
    } catch (const dacq::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return dacq::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return dacq::kExitData;
    }
    return dacq::kExitConfig;
}
