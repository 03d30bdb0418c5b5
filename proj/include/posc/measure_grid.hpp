#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "posc/measure.hpp"

namespace posc {

/// All beliefs with weights in {0, 1/M, ..., M/M} over K lattice nodes:
/// the compositions of M into K nonnegative parts, C(M+K-1, K-1) of them,
/// enumerated with the first coordinate descending.  index_of is the exact
/// combinatorial rank of a composition in that order.
class MeasureGrid {
public:
    static MeasureGrid build(int node_count, int resolution,
                             std::int64_t vertex_cap = 2'000'000);

    int node_count() const { return node_count_; }
    int resolution() const { return resolution_; }
    std::int64_t size() const { return static_cast<std::int64_t>(vertices_.size()); }

    const DiscreteMeasure& vertex(std::int64_t id) const {
        return vertices_[static_cast<std::size_t>(id)];
    }
    std::span<const int> composition(std::int64_t id) const {
        return {compositions_.data() + static_cast<std::size_t>(id) * node_count_,
                static_cast<std::size_t>(node_count_)};
    }
    std::int64_t index_of(std::span<const int> composition) const;
    // Vertex id of the Dirac mass at a lattice node.
    std::int64_t dirac_vertex(int node) const;

private:
    int node_count_ = 0;
    int resolution_ = 0;
    std::vector<DiscreteMeasure> vertices_;
    std::vector<int> compositions_;                    // flat, size K * count
    std::vector<std::vector<std::uint64_t>> binomial_; // Pascal table
};

MeasureGrid build_measure_grid(int node_count, int resolution,
                               std::int64_t vertex_cap = 2'000'000);

struct BarycentricTerm {
    std::int64_t vertex = 0;
    double alpha = 0.0;
};

/// Convex combination of adjacent grid vertices reproducing a measure:
/// nonnegative weights summing to 1, at most K terms, exact on vertices.
using BarycentricWeights = std::vector<BarycentricTerm>;

// Freudenthal (Kuhn) interpolation on the scaled simplex, computed through
// the cumulative-coordinate transform: take suffix sums of M*mu, split into
// integer parts and fractional parts, sort the fractional parts descending
// and walk the resulting vertex chain; the weights are the consecutive
// differences of the sorted fractional parts.
BarycentricWeights project_measure(const DiscreteMeasure& mu, const MeasureGrid& grid);

namespace detail {

// Allocation-free projection used by the DPP inner loop.
class ProjectionWorkspace {
public:
    explicit ProjectionWorkspace(int node_count);
    // Appends (vertex id, alpha) pairs to `terms` (cleared first).
    void project(std::span<const double> mu, const MeasureGrid& grid,
                 BarycentricWeights& terms);

private:
    std::vector<double> zfrac_;
    std::vector<std::int64_t> zbase_;
    std::vector<int> order_;
    std::vector<int> comp_;
};

}  // namespace detail

}  // namespace posc
