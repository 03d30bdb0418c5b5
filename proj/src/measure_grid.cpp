#include "posc/measure_grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "posc/errors.hpp"

namespace posc {

namespace {

// C(n, k) with saturation at cap_hint to dodge overflow; only exact values
// at or below the vertex cap are ever consumed.
std::vector<std::vector<std::uint64_t>> pascal_table(int n_max, std::uint64_t saturate) {
    std::vector<std::vector<std::uint64_t>> c(static_cast<std::size_t>(n_max) + 1);
    for (int n = 0; n <= n_max; ++n) {
        c[static_cast<std::size_t>(n)].assign(static_cast<std::size_t>(n) + 1, 0);
        c[static_cast<std::size_t>(n)][0] = 1;
        for (int k = 1; k <= n; ++k) {
            const std::uint64_t a = c[static_cast<std::size_t>(n) - 1][static_cast<std::size_t>(k) - 1];
            const std::uint64_t b =
                k <= n - 1 ? c[static_cast<std::size_t>(n) - 1][static_cast<std::size_t>(k)] : 0;
            std::uint64_t v = a > saturate - b ? saturate : a + b;
            c[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] = std::min(v, saturate);
        }
    }
    return c;
}

}  // namespace

MeasureGrid MeasureGrid::build(int node_count, int resolution, std::int64_t vertex_cap) {
    if (node_count < 1 || resolution < 1) {
        throw InvalidProblemError("measure grid: node_count and resolution must be >= 1");
    }
    MeasureGrid g;
    g.node_count_ = node_count;
    g.resolution_ = resolution;
    const std::uint64_t saturate = static_cast<std::uint64_t>(vertex_cap) * 4 + 16;
    g.binomial_ = pascal_table(resolution + node_count, saturate);

    const std::uint64_t count =
        g.binomial_[static_cast<std::size_t>(resolution + node_count - 1)]
                   [static_cast<std::size_t>(node_count - 1)];
    if (count > static_cast<std::uint64_t>(vertex_cap)) {
        std::ostringstream os;
        os << "measure grid with K=" << node_count << ", M=" << resolution << " has " << count
           << " vertices, above the cap of " << vertex_cap;
        throw InstanceTooLargeError(os.str());
    }

    g.vertices_.reserve(static_cast<std::size_t>(count));
    g.compositions_.reserve(static_cast<std::size_t>(count) * node_count);

    std::vector<int> comp(static_cast<std::size_t>(node_count), 0);
    // First coordinate descending, recursively.
    auto emit = [&](auto&& self, int pos, int remaining) -> void {
        if (pos == node_count - 1) {
            comp[static_cast<std::size_t>(pos)] = remaining;
            DiscreteMeasure mu;
            mu.weights.resize(static_cast<std::size_t>(node_count));
            for (int k = 0; k < node_count; ++k) {
                mu.weights[static_cast<std::size_t>(k)] =
                    static_cast<double>(comp[static_cast<std::size_t>(k)]) / resolution;
            }
            g.vertices_.push_back(std::move(mu));
            g.compositions_.insert(g.compositions_.end(), comp.begin(), comp.end());
            return;
        }
        for (int v = remaining; v >= 0; --v) {
            comp[static_cast<std::size_t>(pos)] = v;
            self(self, pos + 1, remaining - v);
        }
    };
    emit(emit, 0, resolution);
    return g;
}

std::int64_t MeasureGrid::index_of(std::span<const int> composition) const {
    if (static_cast<int>(composition.size()) != node_count_) {
        throw InvalidProblemError("index_of: composition length mismatch");
    }
    int remaining = resolution_;
    std::int64_t rank = 0;
    for (int pos = 0; pos < node_count_ - 1; ++pos) {
        const int c = composition[static_cast<std::size_t>(pos)];
        if (c < 0 || c > remaining) {
            throw InvalidProblemError("index_of: not a composition of the resolution");
        }
        // Compositions with a larger value at this position come first:
        // sum_{w>c} C(remaining-w + K-pos-2, K-pos-2) = C(remaining-c + K-pos-2, K-pos-1).
        const int n = remaining - c + node_count_ - pos - 2;
        const int k = node_count_ - pos - 1;
        if (n >= k && k >= 1) {
            rank += static_cast<std::int64_t>(
                binomial_[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)]);
        }
        remaining -= c;
    }
    if (composition[static_cast<std::size_t>(node_count_) - 1] != remaining) {
        throw InvalidProblemError("index_of: composition does not sum to the resolution");
    }
    return rank;
}

std::int64_t MeasureGrid::dirac_vertex(int node) const {
    std::vector<int> comp(static_cast<std::size_t>(node_count_), 0);
    comp.at(static_cast<std::size_t>(node)) = resolution_;
    return index_of(comp);
}

MeasureGrid build_measure_grid(int node_count, int resolution, std::int64_t vertex_cap) {
    return MeasureGrid::build(node_count, resolution, vertex_cap);
}

namespace detail {

ProjectionWorkspace::ProjectionWorkspace(int node_count)
    : zfrac_(static_cast<std::size_t>(node_count)),
      zbase_(static_cast<std::size_t>(node_count)),
      order_(),
      comp_(static_cast<std::size_t>(node_count)) {
    order_.reserve(static_cast<std::size_t>(node_count));
}

void ProjectionWorkspace::project(std::span<const double> mu, const MeasureGrid& grid,
                                  BarycentricWeights& terms) {
    const int K = grid.node_count();
    const int M = grid.resolution();
    terms.clear();
    if (static_cast<int>(mu.size()) != K) {
        throw InvalidProblemError("project_measure: measure size does not match grid");
    }

    double total = 0.0;
    for (double w : mu) total += w;
    if (!(total > 0.0)) {
        throw InvalidProblemError("project_measure: measure has nonpositive mass");
    }
    const double scale = M / total;

    // Cumulative coordinates z_k = sum_{j>=k} M*mu_j for k = 1..K-1 (z_0 = M
    // is pinned).  Suffix sums of nonnegative terms are monotone, so the
    // integer parts form a valid decreasing sequence.
    constexpr double snap = 1e-12;
    double suffix = 0.0;
    for (int k = K - 1; k >= 1; --k) {
        suffix += mu[static_cast<std::size_t>(k)] * scale;
        double z = std::min(suffix, static_cast<double>(M));
        double base = std::floor(z);
        double frac = z - base;
        if (frac < snap) {
            frac = 0.0;
        } else if (frac > 1.0 - snap) {
            base += 1.0;
            frac = 0.0;
        }
        zbase_[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(base);
        zfrac_[static_cast<std::size_t>(k)] = frac;
    }

    // Base vertex in composition form: y_k = z_k - z_{k+1} with z_0 = M.
    std::int64_t prev = M;
    for (int k = 0; k < K - 1; ++k) {
        const std::int64_t zk1 = zbase_[static_cast<std::size_t>(k) + 1];
        comp_[static_cast<std::size_t>(k)] = static_cast<int>(prev - zk1);
        prev = zk1;
    }
    comp_[static_cast<std::size_t>(K) - 1] = static_cast<int>(prev);

    order_.clear();
    for (int k = 1; k < K; ++k) {
        if (zfrac_[static_cast<std::size_t>(k)] > 0.0) order_.push_back(k);
    }
    // Descending fractional part; ties resolved by index to keep the chain
    // inside the order polytope.
    std::sort(order_.begin(), order_.end(), [&](int a, int b) {
        const double fa = zfrac_[static_cast<std::size_t>(a)];
        const double fb = zfrac_[static_cast<std::size_t>(b)];
        if (fa != fb) return fa > fb;
        return a < b;
    });

    const double g_first = order_.empty() ? 0.0 : zfrac_[static_cast<std::size_t>(order_[0])];
    double alpha = 1.0 - g_first;
    if (alpha > 0.0) {
        terms.push_back({grid.index_of(comp_), alpha});
    }
    for (std::size_t j = 0; j < order_.size(); ++j) {
        const int s = order_[j];
        // Raising z_s by one moves a unit of mass from node s-1 to node s.
        if (comp_[static_cast<std::size_t>(s) - 1] == 0) {
            throw InvalidProblemError("project_measure: degenerate chain step");
        }
        comp_[static_cast<std::size_t>(s) - 1] -= 1;
        comp_[static_cast<std::size_t>(s)] += 1;
        const double g_next =
            j + 1 < order_.size() ? zfrac_[static_cast<std::size_t>(order_[j + 1])] : 0.0;
        alpha = zfrac_[static_cast<std::size_t>(s)] - g_next;
        if (alpha > 0.0) {
            terms.push_back({grid.index_of(comp_), alpha});
        }
    }
    if (terms.empty()) {
        terms.push_back({grid.index_of(comp_), 1.0});
    }
}

}  // namespace detail

BarycentricWeights project_measure(const DiscreteMeasure& mu, const MeasureGrid& grid) {
    detail::ProjectionWorkspace ws(grid.node_count());
    BarycentricWeights terms;
    ws.project(mu.weights, grid, terms);
    return terms;
}

}  // namespace posc
