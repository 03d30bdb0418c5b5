#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "posc/commands.hpp"
#include "posc/errors.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    posc::CliOptions options;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "run configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", args.options.seed, "override the config rng seed");
    sub->add_option("--threads", args.options.threads, "worker threads (1 = bit-exact serial)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", args.options.out, "override the output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"posc: partially observed stochastic control on a trinomial lattice"};
    app.require_subcommand(1);

    CommonArgs check_args, solve_args, sim_args, ref_args, conv_args;

    CLI::App* check = app.add_subcommand("check", "local-consistency and bound checks");
    add_common(check, check_args);

    CLI::App* solve = app.add_subcommand("solve", "backward induction on the belief grid");
    add_common(solve, solve_args);

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo policy evaluation");
    add_common(simulate, sim_args);
    simulate->add_option("--policy", sim_args.options.policy_path, "serialized policy table");
    simulate->add_option("--const-action", sim_args.options.const_action,
                         "use a constant action instead of a policy table");
    simulate->add_option("--dump-paths", sim_args.options.dump_paths,
                         "write the first N simulated paths as CSV")
        ->expected(0, 1)
        ->default_str("1000");

    CLI::App* lq_ref = app.add_subcommand("lq-ref", "Monte Carlo LQ reference value");
    add_common(lq_ref, ref_args);

    CLI::App* converge = app.add_subcommand("converge", "dx ladder sweep with log-log slope");
    add_common(converge, conv_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage errors are exit 2
    }

    try {
        if (check->parsed()) {
            return posc::cmd_check(posc::parse_config(check_args.config_path),
                                   check_args.options, std::cout);
        }
        if (solve->parsed()) {
            return posc::cmd_solve(posc::parse_config(solve_args.config_path),
                                   solve_args.options, std::cout);
        }
        if (simulate->parsed()) {
            if (simulate->count("--dump-paths") > 0 && sim_args.options.dump_paths == 0) {
                sim_args.options.dump_paths = 1000;
            }
            return posc::cmd_simulate(posc::parse_config(sim_args.config_path), sim_args.options,
                                      std::cout);
        }
        if (lq_ref->parsed()) {
            return posc::cmd_lq_ref(posc::parse_config(ref_args.config_path), ref_args.options,
                                    std::cout);
        }
        if (converge->parsed()) {
            return posc::cmd_converge(posc::parse_config(conv_args.config_path),
                                      conv_args.options, std::cout);
        }
    } catch (const posc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
