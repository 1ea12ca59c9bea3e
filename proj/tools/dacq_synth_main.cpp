// SPDX-License-Identifier: Apache-2.0

// Desk-scale data generator: writes synthetic weight tensors in the native
// container so the main CLI can be exercised without a real checkpoint.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dacq/cli.hpp"
#include "dacq/error.hpp"
#include "dacq/synth.hpp"
#include "dacq/tensor_io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"dacq-synth - synthetic weight tensors for desk-scale runs"};

    std::string out_dir;
    std::string kind = "logistic-mixture";  // normal | laplace | logistic | logistic-mixture
    std::string name = "layer";
    size_t rows = 512, cols = 512, count = 1, group_size = 128;
    double sigma = 0.02;
    uint64_t seed = 0;

    app.add_option("--out", out_dir, "Output directory")->required();
    app.add_option("--kind", kind,
                   "normal | laplace | logistic | logistic-mixture");
    app.add_option("--name", name, "Tensor name prefix");
    app.add_option("--rows", rows, "Rows (out features)");
    app.add_option("--cols", cols, "Cols (in features)");
    app.add_option("--count", count, "Number of tensors");
    app.add_option("--group-size", group_size, "Mixture component width");
    app.add_option("--sigma", sigma, "Scale of the generated weights");
    app.add_option("--seed", seed, "Random seed");

    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out_dir);
        for (size_t i = 0; i < count; ++i) {
            const std::string tname = name + std::to_string(i);
            dacq::WeightTensor t;
            if (kind == "logistic-mixture") {
                t = dacq::synth_logistic_mixture(tname, rows, cols, group_size,
                                                 sigma * 0.5, sigma * 2.0, seed + i);
            } else {
                t = dacq::synth_family_tensor(tname, rows, cols,
                                              dacq::family_from_name(kind), 0.0, sigma,
                                              seed + i);
            }
            const auto path =
                std::filesystem::path(out_dir) / (dacq::sanitize_name(tname) + ".dacqt");
            dacq::save_tensor(t, path);
            std::cout << "wrote " << path.string() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return dacq::kExitData;
    }
    return 0;
}
