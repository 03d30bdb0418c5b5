#pragma once

#include <span>
#include <vector>

#include "posc/lattice.hpp"

namespace posc {

/// Probability weights over the lattice nodes; the filter's belief state.
/// Valid measures have nonnegative weights summing to 1 within 1e-12.
struct DiscreteMeasure {
    std::vector<double> weights;

    static DiscreteMeasure dirac(int node, int node_count);
    double total() const;
};

bool is_probability_measure(const DiscreteMeasure& mu, double tol = 1e-12);

// mu(f) = sum_k w_k f_k for node-indexed values f.
double integrate(const DiscreteMeasure& mu, std::span<const double> f_at_nodes);

// mu(f) with f evaluated at the node positions.
template <class F>
double integrate(const DiscreteMeasure& mu, const LatticeParams& lat, F&& f) {
    double acc = 0.0;
    for (std::size_t k = 0; k < mu.weights.size(); ++k) {
        acc += mu.weights[k] * f(lat.node(static_cast<int>(k)));
    }
    return acc;
}

}  // namespace posc
