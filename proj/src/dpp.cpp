#include "posc/dpp.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "posc/errors.hpp"

namespace posc {

namespace {

void require_dpp_preconditions(const ProblemSpec& spec, const TrinomialKernel& kernel,
                               const ObservationLaw& law, const MeasureGrid& grid) {
    if (law.kind != ObsKind::rademacher) {
        throw InvalidProblemError("backward induction requires the Rademacher observation law");
    }
    if (grid.node_count() != kernel.params().node_count) {
        throw InvalidProblemError("measure grid node count does not match the lattice");
    }
    if (spec.bound_p > 0.0 && law.sqrt_h() * spec.bound_p >= 1.0) {
        std::ostringstream os;
        os << "sqrt(h) = " << law.sqrt_h() << " must be below 1/bound_p = " << 1.0 / spec.bound_p
           << " for positive likelihood factors";
        throw StepSizeError(os.str());
    }
}

// Per-layer precomputation: p at the nodes, and per action the clamped
// kernel rows and engine running rewards.
struct Layer {
    std::vector<double> p_vals;
    std::vector<std::vector<TrinomialProbs>> rows;   // [action][node]
    std::vector<std::vector<double>> k_vals;         // [action][node]
};

Layer build_layer(const ProblemSpec& spec, const TrinomialKernel& kernel, int l) {
    const LatticeParams& lat = kernel.params();
    const int K = lat.node_count;
    const double t = lat.time(l);
    const std::size_t n_actions = spec.action_grid.size();

    Layer layer;
    layer.p_vals.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        layer.p_vals[static_cast<std::size_t>(k)] = spec.observation_drift(t, lat.node(k));
    }
    layer.rows.resize(n_actions);
    layer.k_vals.resize(n_actions);
    for (std::size_t ai = 0; ai < n_actions; ++ai) {
        const double a = spec.action_grid[ai];
        layer.rows[ai].resize(static_cast<std::size_t>(K));
        layer.k_vals[ai].resize(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            layer.rows[ai][static_cast<std::size_t>(k)] = kernel.probs(l, k, a);
            layer.k_vals[ai][static_cast<std::size_t>(k)] = spec.engine_k(t, lat.node(k), a);
        }
    }
    return layer;
}

void run_chunked(std::int64_t count, int threads, const std::function<void(std::int64_t, std::int64_t, int)>& body) {
    if (threads <= 1 || count < 2) {
        body(0, count, 0);
        return;
    }
    const int n_threads = std::min<std::int64_t>(threads, count);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
    const std::int64_t chunk = (count + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
        const std::int64_t lo = t * chunk;
        const std::int64_t hi = std::min(count, lo + chunk);
        pool.emplace_back([&, lo, hi, t] {
            try {
                body(lo, hi, t);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

ValueTable backward_induction(const ProblemSpec& spec, const TrinomialKernel& kernel,
                              const ObservationLaw& law, const MeasureGrid& grid,
                              const DppOptions& options) {
    require_structurally_valid(spec);
    require_dpp_preconditions(spec, kernel, law, grid);

    const LatticeParams& lat = kernel.params();
    const int n = lat.n_steps;
    const int K = lat.node_count;
    const std::int64_t V = grid.size();
    const double h = lat.h;
    const double sqrt_h = law.sqrt_h();
    const std::size_t n_actions = spec.action_grid.size();

    ValueTable table;
    table.n_steps = n;
    table.vertex_count = V;
    table.values.assign(static_cast<std::size_t>(n) + 1, std::vector<double>());
    table.policy.assign(static_cast<std::size_t>(n), std::vector<int>());

    // Terminal layer: values[n][v] = v(G), exactly.
    std::vector<double> g_vals(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        g_vals[static_cast<std::size_t>(k)] = spec.engine_g(lat.node(k));
    }
    table.values[static_cast<std::size_t>(n)].resize(static_cast<std::size_t>(V));
    for (std::int64_t v = 0; v < V; ++v) {
        table.values[static_cast<std::size_t>(n)][static_cast<std::size_t>(v)] =
            integrate(grid.vertex(v), g_vals);
    }

    const int threads = std::max(1, options.threads);
    for (int l = n - 1; l >= 0; --l) {
        const Layer layer = build_layer(spec, kernel, l);
        std::vector<double>& out = table.values[static_cast<std::size_t>(l)];
        std::vector<int>& pol = table.policy[static_cast<std::size_t>(l)];
        out.resize(static_cast<std::size_t>(V));
        pol.resize(static_cast<std::size_t>(V));
        const std::vector<double>& next = table.values[static_cast<std::size_t>(l) + 1];

        run_chunked(V, threads, [&](std::int64_t lo, std::int64_t hi, int) {
            std::vector<double> posterior(static_cast<std::size_t>(K));
            detail::ProjectionWorkspace ws(K);
            BarycentricWeights terms;
            for (std::int64_t v = lo; v < hi; ++v) {
                const DiscreteMeasure& mu = grid.vertex(v);
                double best = -std::numeric_limits<double>::infinity();
                int best_action = 0;
                for (std::size_t ai = 0; ai < n_actions; ++ai) {
                    double acc = h * integrate(mu, layer.k_vals[ai]);
                    for (int branch = 0; branch < 2; ++branch) {
                        const double eta = branch == 0 ? sqrt_h : -sqrt_h;
                        const double normalizer = detail::filter_update_core(
                            posterior, mu.weights, eta, layer.p_vals, layer.rows[ai].data());
                        ws.project(posterior, grid, terms);
                        double v_next = 0.0;
                        for (const BarycentricTerm& term : terms) {
                            v_next += term.alpha * next[static_cast<std::size_t>(term.vertex)];
                        }
                        acc += 0.5 * normalizer * v_next;
                    }
                    if (acc > best) {
                        best = acc;
                        best_action = static_cast<int>(ai);
                    }
                }
                out[static_cast<std::size_t>(v)] = best;
                pol[static_cast<std::size_t>(v)] = best_action;
            }
        });
    }
    return table;
}

PolicyTable extract_policy(const ValueTable& table, const ProblemSpec& spec,
                           const MeasureGrid& grid) {
    PolicyTable p;
    p.n_steps = table.n_steps;
    p.vertex_count = table.vertex_count;
    p.node_count = grid.node_count();
    p.resolution = grid.resolution();
    p.action_grid = spec.action_grid;
    p.actions = table.policy;
    return p;
}

double initial_value(const ValueTable& table, const MeasureGrid& grid, const LatticeParams& lat,
                     double x0) {
    const std::int64_t v0 = grid.dirac_vertex(lat.node_index(x0));
    return table.values.at(0).at(static_cast<std::size_t>(v0));
}

double exact_tree_value(const ProblemSpec& spec, const TrinomialKernel& kernel,
                        const ObservationLaw& law, int n_steps) {
    if (law.kind != ObsKind::rademacher) {
        throw InvalidProblemError("exact_tree_value requires the Rademacher observation law");
    }
    if (n_steps < 0 || n_steps > 4) {
        std::ostringstream os;
        os << "exact_tree_value: n_steps=" << n_steps << " exceeds the cap of 4";
        throw InstanceTooLargeError(os.str());
    }
    const LatticeParams& lat = kernel.params();
    if (n_steps > lat.n_steps) {
        throw InvalidProblemError("exact_tree_value: n_steps exceeds the lattice horizon");
    }
    const double h = lat.h;
    const double sqrt_h = law.sqrt_h();

    auto value = [&](auto&& self, int l, const DiscreteMeasure& mu) -> double {
        if (l == n_steps) {
            return integrate(mu, lat, [&](double x) { return spec.engine_g(x); });
        }
        const double t = lat.time(l);
        double best = -std::numeric_limits<double>::infinity();
        for (double a : spec.action_grid) {
            const double mu_k = integrate(mu, lat, [&](double x) { return spec.engine_k(t, x, a); });
            const double mu_p =
                integrate(mu, lat, [&](double x) { return spec.observation_drift(t, x); });
            double acc = h * mu_k;
            for (int branch = 0; branch < 2; ++branch) {
                const double eta = branch == 0 ? sqrt_h : -sqrt_h;
                const DiscreteMeasure post = filter_update(l, a, mu, eta, kernel, spec);
                acc += 0.5 * (1.0 + mu_p * eta) * self(self, l + 1, post);
            }
            if (acc > best) best = acc;
        }
        return best;
    };

    const DiscreteMeasure mu0 =
        DiscreteMeasure::dirac(lat.node_index(spec.initial_state), lat.node_count);
    return value(value, 0, mu0);
}

double brute_force_value(const ProblemSpec& spec, const TrinomialKernel& kernel,
                         const ObservationLaw& law, int n_steps, std::uint64_t strategy_cap,
                         std::uint64_t atom_cap) {
    if (law.kind != ObsKind::rademacher) {
        throw InvalidProblemError("brute_force_value requires the Rademacher observation law");
    }
    if (n_steps < 1 || n_steps > 4) {
        throw InstanceTooLargeError("brute_force_value: n_steps must be in [1,4]");
    }
    const LatticeParams& lat = kernel.params();
    if (n_steps > lat.n_steps) {
        throw InvalidProblemError("brute_force_value: n_steps exceeds the lattice horizon");
    }
    const std::size_t n_actions = spec.action_grid.size();
    const std::uint64_t history_nodes = (1ull << n_steps) - 1;  // binary obs tree
    double strategies_d = std::pow(static_cast<double>(n_actions), static_cast<double>(history_nodes));
    if (strategies_d > static_cast<double>(strategy_cap)) {
        std::ostringstream os;
        os << "brute_force_value: " << strategies_d << " strategies exceed the cap of "
           << strategy_cap;
        throw InstanceTooLargeError(os.str());
    }
    const std::uint64_t atoms = [&] {
        std::uint64_t a = 1;
        for (int i = 0; i < n_steps; ++i) a *= 6;
        return a;
    }();
    if (atoms > atom_cap) {
        std::ostringstream os;
        os << "brute_force_value: " << atoms << " path atoms exceed the cap of " << atom_cap;
        throw InstanceTooLargeError(os.str());
    }

    const double h = lat.h;
    const double sqrt_h = law.sqrt_h();
    const int k0 = lat.node_index(spec.initial_state);

    // A strategy assigns an action index to every observation-history node;
    // node id of the history with l observed increments and bitmask m is
    // (2^l - 1) + m.
    const std::uint64_t n_strategies = static_cast<std::uint64_t>(strategies_d + 0.5);
    std::vector<int> strategy(history_nodes, 0);

    double best = -std::numeric_limits<double>::infinity();
    for (std::uint64_t s = 0; s < n_strategies; ++s) {
        std::uint64_t code = s;
        for (std::uint64_t i = 0; i < history_nodes; ++i) {
            strategy[i] = static_cast<int>(code % n_actions);
            code /= n_actions;
        }

        // J(u) = sum over atoms of Q(atom) L_n (sum K h + G): depth-first over
        // (obs increment, signal step) pairs.
        double value = 0.0;
        auto walk = [&](auto&& self, int l, unsigned obs_mask, int k, double prob, double like,
                        double run_reward) -> void {
            if (l == n_steps) {
                value += prob * like * (run_reward + spec.engine_g(lat.node(k)));
                return;
            }
            const std::uint64_t node_id = ((1ull << l) - 1) + obs_mask;
            const double a = spec.action_grid[static_cast<std::size_t>(strategy[node_id])];
            const double t = lat.time(l);
            const double x = lat.node(k);
            const double reward = run_reward + spec.engine_k(t, x, a) * h;
            const double p_here = spec.observation_drift(t, x);
            const TrinomialProbs tp = kernel.probs(l, k, a);
            for (int bit = 0; bit < 2; ++bit) {
                const double eta = bit == 1 ? sqrt_h : -sqrt_h;
                const double factor = 1.0 + p_here * eta;
                const double q_obs = 0.5 * prob;
                const unsigned next_mask = obs_mask | (static_cast<unsigned>(bit) << l);
                if (tp.p_plus > 0.0) {
                    self(self, l + 1, next_mask, k + 1, q_obs * tp.p_plus, like * factor, reward);
                }
                if (tp.p_minus > 0.0) {
                    self(self, l + 1, next_mask, k - 1, q_obs * tp.p_minus, like * factor, reward);
                }
                if (tp.p_zero > 0.0) {
                    self(self, l + 1, next_mask, k, q_obs * tp.p_zero, like * factor, reward);
                }
            }
        };
        walk(walk, 0, 0u, k0, 1.0, 1.0, 0.0);
        if (value > best) best = value;
    }
    return best;
}

}  // namespace posc
