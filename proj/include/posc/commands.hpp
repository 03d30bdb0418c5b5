#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "posc/config.hpp"
#include "posc/dpp.hpp"

namespace posc {

/// Flag overrides shared by the CLI subcommands.
struct CliOptions {
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::optional<std::string> out;
    std::int64_t dump_paths = 0;
    std::optional<std::string> policy_path;
    std::optional<double> const_action;
};

// Exit codes: 0 success, 1 validation/consistency failure, 2 usage/config
// error.  Commands print a human summary to `os` and write CSV artifacts
// under the configured output directory.
int cmd_check(RunConfig config, const CliOptions& options, std::ostream& os);
int cmd_solve(RunConfig config, const CliOptions& options, std::ostream& os);
int cmd_simulate(RunConfig config, const CliOptions& options, std::ostream& os);
int cmd_lq_ref(RunConfig config, const CliOptions& options, std::ostream& os);
int cmd_converge(RunConfig config, const CliOptions& options, std::ostream& os);

void write_value_table(const std::string& path, const ValueTable& table,
                       const PolicyTable& policy, const RunConfig& config, double dx, double h);
void write_policy_table(const std::string& path, const PolicyTable& policy);
PolicyTable load_policy_table(const std::string& path);

}  // namespace posc
