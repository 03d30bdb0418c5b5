#include "posc/measure.hpp"

#include <cmath>

#include "posc/errors.hpp"

namespace posc {

DiscreteMeasure DiscreteMeasure::dirac(int node, int node_count) {
    if (node < 0 || node >= node_count) {
        throw InvalidProblemError("dirac: node outside lattice");
    }
    DiscreteMeasure mu;
    mu.weights.assign(static_cast<std::size_t>(node_count), 0.0);
    mu.weights[static_cast<std::size_t>(node)] = 1.0;
    return mu;
}

double DiscreteMeasure::total() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

bool is_probability_measure(const DiscreteMeasure& mu, double tol) {
    if (mu.weights.empty()) return false;
    for (double w : mu.weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) return false;
    }
    return std::abs(mu.total() - 1.0) <= tol;
}

double integrate(const DiscreteMeasure& mu, std::span<const double> f_at_nodes) {
    double acc = 0.0;
    const std::size_t n = mu.weights.size();
    for (std::size_t k = 0; k < n; ++k) acc += mu.weights[k] * f_at_nodes[k];
    return acc;
}

}  // namespace posc
