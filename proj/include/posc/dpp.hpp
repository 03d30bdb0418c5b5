#pragma once

#include <cstdint>
#include <vector>

#include "posc/filter.hpp"
#include "posc/measure_grid.hpp"

namespace posc {

/// Backward-induction output: engine-convention (maximized) values per
/// (time, vertex) and the argmax action index per (time, vertex), ties
/// broken toward the smallest action index.
struct ValueTable {
    int n_steps = 0;
    std::int64_t vertex_count = 0;
    std::vector<std::vector<double>> values;  // [0..n][vertex]
    std::vector<std::vector<int>> policy;     // [0..n-1][vertex]
};

struct PolicyTable {
    int n_steps = 0;
    std::int64_t vertex_count = 0;
    int node_count = 0;
    int resolution = 0;
    std::vector<double> action_grid;
    std::vector<std::vector<int>> actions;  // [0..n-1][vertex]
};

struct DppOptions {
    int threads = 1;
};

// Fills the value table backward from values[n][v] = v(G).  Each step
// evaluates the filter update at eta = +-sqrt(h), projects the posterior
// onto the grid, reads the next layer through the barycentric weights,
// averages the two branches with weight 1/2 scaled by (1 + mu(p) eta), adds
// mu(K) h and maximizes over the action grid.  Rademacher law only.
ValueTable backward_induction(const ProblemSpec& spec, const TrinomialKernel& kernel,
                              const ObservationLaw& law, const MeasureGrid& grid,
                              const DppOptions& options = {});

PolicyTable extract_policy(const ValueTable& table, const ProblemSpec& spec,
                           const MeasureGrid& grid);

// Engine-convention V_h = values[0][delta_{x0}]; x0 is a grid node so the
// initial Dirac is a simplex vertex and needs no projection.
double initial_value(const ValueTable& table, const MeasureGrid& grid,
                     const LatticeParams& lat, double x0);

// DPP over the exactly reachable belief tree (2^l observation histories at
// level l), no grid projection; the reference for measuring interpolation
// error.  n_steps <= 4.
double exact_tree_value(const ProblemSpec& spec, const TrinomialKernel& kernel,
                        const ObservationLaw& law, int n_steps);

// Exhaustive maximization of the exact discrete reward over every
// observation-adapted strategy (a map from observation histories to
// actions); each J is an exact finite sum over all joint path atoms.
double brute_force_value(const ProblemSpec& spec, const TrinomialKernel& kernel,
                         const ObservationLaw& law, int n_steps,
                         std::uint64_t strategy_cap = 1u << 20,
                         std::uint64_t atom_cap = 1u << 22);

}  // namespace posc
