#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "relugd.h"

int main(int argc, char** argv) {
    CLI::App app{"relu_gd_lab — population gradient descent laboratory for a single ReLU neuron"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool have_seed = false;
    int jobs = 0;

    app.add_option("--config", config_path, "experiment configuration file")->required();
    app.add_option("--out", out_dir, "output directory (overrides output.dir)");
    app.add_option("--seed", seed, "master seed override")
        ->each([&](const std::string&) { have_seed = true; });
    app.add_option("--jobs", jobs, "worker threads (env RELU_GD_LAB_JOBS as fallback)");

    using CommandFn = int (*)(const char*, const char*, int, uint64_t, int);
    CommandFn command = nullptr;
    const auto subcommand = [&](const char* name, const char* desc, CommandFn fn) {
        auto* sc = app.add_subcommand(name, desc);
        sc->fallthrough();  // global --config/--out/--seed/--jobs after the subcommand name
        sc->callback([&command, fn] { command = fn; });
    };
    subcommand("run", "run a single GD experiment", rgd_run);
    subcommand("sweep", "cross-product sweep over (d, OPT, b_v, family)", rgd_sweep);
    subcommand("verify-lemmas", "numerical lemma verification sweeps", rgd_verify_lemmas);
    subcommand("estimate-regularity", "marginal regularity constant reports",
               rgd_estimate_regularity);
    subcommand("init-study", "initialization success-rate study", rgd_init_study);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }

    const int code = command(config_path.c_str(), out_dir.empty() ? nullptr : out_dir.c_str(),
                             have_seed ? 1 : 0, seed, jobs);
    if (code != 0) {
        const char* msg = rgd_last_error();
        if (msg && *msg) std::fprintf(stderr, "relu_gd_lab: %s\n", msg);
    }
    return code;
}
