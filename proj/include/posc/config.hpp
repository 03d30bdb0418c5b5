#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "posc/lattice.hpp"
#include "posc/problem.hpp"

namespace posc {

/// Parsed run configuration; see README for the file schema.
struct RunConfig {
    std::string problem = "lq";  // lq | zero
    double T = 0.0;
    double x0 = 0.0;
    std::vector<double> dx_list;  // nonempty, strictly descending
    double h_ratio = 0.1;         // h = h_ratio * dx^2, then rounded to divide T
    std::optional<double> x_min;  // explicit box; otherwise node_radius is used
    std::optional<double> x_max;
    int node_radius = 3;
    int resolution = 8;  // measure grid M
    double action_bound = 3.0;
    int action_count = 7;
    std::int64_t mc_paths = 1'000'000;
    std::int64_t sim_paths = 100'000;
    std::uint64_t mc_seed = 0;
    int ode_steps = 10'000;
    std::string reference = "mc";  // mc | self
    std::string out = "out";
};

// Parses the flat key = value file, applies defaults, validates the schema
// and the Courant condition for every dx in the list.  Schema problems
// raise ConfigError naming the key and line; a ratio above the Courant
// bound raises CourantViolationError.
RunConfig parse_config(const std::string& path);

// Same validation applied to an in-memory config (used by the CLI after
// flag overrides and by tests).
void validate_config(const RunConfig& config);

/// One solvable instance of the configured problem at a given dx.  The
/// kernel points into *spec; shared_ptrs keep the addresses stable.
struct Instance {
    std::shared_ptr<const ProblemSpec> spec;
    LatticeParams lattice;
    ObservationLaw law;
    std::shared_ptr<const TrinomialKernel> kernel;
};

Instance make_instance(const RunConfig& config, double dx);

}  // namespace posc
