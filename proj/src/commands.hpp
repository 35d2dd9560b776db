#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace relugd {

struct CommandOptions {
    std::string config_path;
    std::string out_dir;               // overrides output.dir when nonempty
    std::optional<std::uint64_t> seed; // overrides run.master_seed
    std::optional<int> jobs;           // overrides run.jobs / RELU_GD_LAB_JOBS
};

// Exit codes: 0 success, 1 lemma violation, 2 config error, 3 oracle
// incompatibility. Partial outputs are removed on failure.
int cmd_run(const CommandOptions& options);
int cmd_sweep(const CommandOptions& options);
int cmd_verify_lemmas(const CommandOptions& options);
int cmd_estimate_regularity(const CommandOptions& options);
int cmd_init_study(const CommandOptions& options);

} // namespace relugd
