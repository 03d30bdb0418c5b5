#include "posc/filter.hpp"

#include <cmath>
#include <sstream>

#include "posc/errors.hpp"

namespace posc {

LambdaState lambda_update(const LambdaState& lam, const DiscreteMeasure& mu,
                          const LatticeParams& lat, double t, double eta,
                          const ProblemSpec& spec) {
    const double mu_p = integrate(mu, lat, [&](double x) { return spec.observation_drift(t, x); });
    const double factor = 1.0 + mu_p * eta;
    if (!(factor > 0.0)) {
        std::ostringstream os;
        os << "lambda factor 1 + mu(p) eta = " << factor
           << " is nonpositive; h too large relative to bound_p";
        throw StepSizeError(os.str());
    }
    return LambdaState{lam.value * factor};
}

namespace detail {

double filter_update_core(std::span<double> out, std::span<const double> mu, double eta,
                          std::span<const double> p_vals, const TrinomialProbs* rows) {
    const std::size_t n = mu.size();
    double mu_p = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu_p += mu[j] * p_vals[j];
    const double normalizer = 1.0 + mu_p * eta;
    if (!(normalizer > 0.0)) {
        std::ostringstream os;
        os << "filter normalizer 1 + mu(p) eta = " << normalizer << " is nonpositive";
        throw StepSizeError(os.str());
    }

    for (std::size_t k = 0; k < n; ++k) out[k] = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double factor = 1.0 + p_vals[j] * eta;
        if (factor < 0.0 && mu[j] != 0.0) {
            std::ostringstream os;
            os << "likelihood factor 1 + p eta = " << factor << " is negative at node " << j;
            throw StepSizeError(os.str());
        }
        const double lw = mu[j] * factor;
        const TrinomialProbs& row = rows[j];
        out[j] += lw * row.p_zero;
        if (j + 1 < n) out[j + 1] += lw * row.p_plus;
        if (j > 0) out[j - 1] += lw * row.p_minus;
    }

    for (std::size_t k = 0; k < n; ++k) out[k] /= normalizer;
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += out[k];
    for (std::size_t k = 0; k < n; ++k) out[k] /= sum;
    return normalizer;
}

}  // namespace detail

DiscreteMeasure filter_update(int l, double a, const DiscreteMeasure& mu, double eta,
                              const TrinomialKernel& kernel, const ProblemSpec& spec) {
    const LatticeParams& lat = kernel.params();
    const std::size_t n = mu.weights.size();
    if (static_cast<int>(n) != lat.node_count) {
        throw InvalidProblemError("filter_update: measure size does not match lattice");
    }
    const double t = lat.time(l);

    std::vector<double> p_vals(n);
    std::vector<TrinomialProbs> rows(n);
    for (std::size_t j = 0; j < n; ++j) {
        p_vals[j] = spec.observation_drift(t, lat.node(static_cast<int>(j)));
        rows[j] = kernel.probs(l, static_cast<int>(j), a);
    }

    DiscreteMeasure out;
    out.weights.assign(n, 0.0);
    detail::filter_update_core(out.weights, mu.weights, eta, p_vals, rows.data());
    return out;
}

FilterOracleResult brute_force_filter(const ProblemSpec& spec, const TrinomialKernel& kernel,
                                      const ObservationLaw& law, const ObsPolicy& policy,
                                      int n_steps) {
    if (law.kind != ObsKind::rademacher) {
        throw InvalidProblemError("brute_force_filter: requires the Rademacher observation law");
    }
    if (n_steps < 0 || n_steps > 4) {
        std::ostringstream os;
        os << "brute_force_filter: n_steps=" << n_steps << " exceeds the cap of 4";
        throw InstanceTooLargeError(os.str());
    }
    const LatticeParams& lat = kernel.params();
    if (n_steps > lat.n_steps) {
        throw InvalidProblemError("brute_force_filter: n_steps exceeds the lattice horizon");
    }
    const int node_count = lat.node_count;
    const int k0 = lat.node_index(spec.initial_state);
    const double sqrt_h = law.sqrt_h();

    FilterOracleResult result;
    result.levels.resize(static_cast<std::size_t>(n_steps) + 1);

    std::vector<double> etas(static_cast<std::size_t>(n_steps));
    std::vector<double> actions(static_cast<std::size_t>(n_steps));

    for (int l = 0; l <= n_steps; ++l) {
        const unsigned histories = 1u << l;
        result.levels[static_cast<std::size_t>(l)].resize(histories);
        for (unsigned mask = 0; mask < histories; ++mask) {
            for (int j = 0; j < l; ++j) {
                etas[static_cast<std::size_t>(j)] = (mask >> j) & 1u ? sqrt_h : -sqrt_h;
            }
            // u_i is adapted: it sees the first i observation increments.
            for (int i = 0; i < l; ++i) {
                actions[static_cast<std::size_t>(i)] =
                    policy(i, std::span<const double>(etas.data(), static_cast<std::size_t>(i)));
            }

            std::vector<double> unnorm(static_cast<std::size_t>(node_count), 0.0);
            // Depth-first over signal paths: atom weight = product of kernel
            // probabilities, likelihood = product of (1 + p(t_i, X_i) eta_{i+1}).
            auto walk = [&](auto&& self, int i, int k, double prob, double like) -> void {
                if (i == l) {
                    unnorm[static_cast<std::size_t>(k)] += prob * like;
                    return;
                }
                const double t = lat.time(i);
                const double x = lat.node(k);
                const double factor = 1.0 + spec.observation_drift(t, x) * etas[static_cast<std::size_t>(i)];
                const TrinomialProbs p = kernel.probs(i, k, actions[static_cast<std::size_t>(i)]);
                if (p.p_plus > 0.0) self(self, i + 1, k + 1, prob * p.p_plus, like * factor);
                if (p.p_minus > 0.0) self(self, i + 1, k - 1, prob * p.p_minus, like * factor);
                if (p.p_zero > 0.0) self(self, i + 1, k, prob * p.p_zero, like * factor);
            };
            walk(walk, 0, k0, 1.0, 1.0);

            FilterOracleNode node;
            node.unnormalized = unnorm;
            double lambda = 0.0;
            for (double u : unnorm) lambda += u;
            node.lambda = lambda;
            node.conditional_law.weights.assign(unnorm.begin(), unnorm.end());
            for (double& w : node.conditional_law.weights) w /= lambda;
            result.levels[static_cast<std::size_t>(l)][mask] = std::move(node);
        }
    }
    return result;
}

}  // namespace posc
