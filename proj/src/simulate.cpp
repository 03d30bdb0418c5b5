#include "posc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>
#include <sstream>
#include <thread>
#include <tuple>

#include "posc/errors.hpp"
#include "posc/rng.hpp"

namespace posc {

double martingale_residual(const ProblemSpec& spec, const TrinomialKernel& kernel,
                           const SmoothTestFunction& f, int i, int k, double a) {
    const LatticeParams& lat = kernel.params();
    const double t = lat.time(i);
    const double t1 = lat.time(i + 1);
    const double x = lat.node(k);
    const double b = spec.drift(t, x, a);
    const double s = spec.diffusion(t, x, a);

    // Rebuild the unclamped probabilities in extended precision: the x and
    // x^2 identities cancel ~13 digits of the intermediate terms.
    const long double hd = lat.h;
    const long double dxd = lat.dx;
    const long double bd = b;
    const long double sd = s;
    const long double diff_term = (sd * sd + hd * bd * bd) * hd / (dxd * dxd);
    const long double drift_term = bd * hd / dxd;
    const long double pp = 0.5L * (diff_term + drift_term);
    const long double pm = 0.5L * (diff_term - drift_term);

    const long double expect = pp * static_cast<long double>(f.value(t1, x + lat.dx)) +
                               pm * static_cast<long double>(f.value(t1, x - lat.dx)) +
                               (1.0L - pp - pm) * static_cast<long double>(f.value(t1, x));
    const long double generator = static_cast<long double>(f.dt(t, x)) +
                                  bd * static_cast<long double>(f.dx(t, x)) +
                                  0.5L * sd * sd * static_cast<long double>(f.dxx(t, x));
    return static_cast<double>(expect - static_cast<long double>(f.value(t, x)) -
                               generator * hd);
}

BeliefPolicy constant_policy(double action) {
    return [action](int, const DiscreteMeasure&) { return action; };
}

BeliefPolicy policy_from_table(const PolicyTable& table, const MeasureGrid& grid) {
    if (grid.node_count() != table.node_count || grid.resolution() != table.resolution) {
        throw InvalidProblemError("policy_from_table: grid does not match the policy table");
    }
    // Shared state is read-only after construction; safe across threads.
    auto table_ptr = std::make_shared<PolicyTable>(table);
    auto grid_ptr = std::make_shared<MeasureGrid>(grid);
    return [table_ptr, grid_ptr](int l, const DiscreteMeasure& mu) {
        const BarycentricWeights terms = project_measure(mu, *grid_ptr);
        std::int64_t best_vertex = terms.front().vertex;
        double best_alpha = terms.front().alpha;
        for (const BarycentricTerm& term : terms) {
            if (term.alpha > best_alpha ||
                (term.alpha == best_alpha && term.vertex < best_vertex)) {
                best_alpha = term.alpha;
                best_vertex = term.vertex;
            }
        }
        const int ai = table_ptr->actions.at(static_cast<std::size_t>(l))
                           .at(static_cast<std::size_t>(best_vertex));
        return table_ptr->action_grid.at(static_cast<std::size_t>(ai));
    };
}

SimResult simulate_discrete_paths(const ProblemSpec& spec, const TrinomialKernel& kernel,
                                  const ObservationLaw& law, const BeliefPolicy& policy,
                                  std::int64_t path_count, std::uint64_t seed,
                                  const SimOptions& options) {
    require_structurally_valid(spec);
    if (path_count < 1) throw InvalidProblemError("simulate_discrete_paths: need >= 1 path");
    const LatticeParams& lat = kernel.params();
    const int n = lat.n_steps;
    const int K = lat.node_count;
    const int k0 = lat.node_index(spec.initial_state);
    const double h = lat.h;

    const std::int64_t record_cap = std::clamp<std::int64_t>(options.record_cap, 0, path_count);
    SimResult result;
    result.bundle.seed = seed;
    result.bundle.path_count = path_count;
    result.bundle.recorded.resize(static_cast<std::size_t>(record_cap));

    std::vector<double> values(static_cast<std::size_t>(path_count));
    std::vector<double> likelihoods(static_cast<std::size_t>(path_count));

    auto run_path = [&](std::int64_t p) {
        std::mt19937_64 rng = make_stream(seed, static_cast<std::uint64_t>(p));
        const bool record = p < record_cap;
        PathRecord* rec = record ? &result.bundle.recorded[static_cast<std::size_t>(p)] : nullptr;
        if (rec) {
            rec->x.reserve(static_cast<std::size_t>(n) + 1);
            rec->y.reserve(static_cast<std::size_t>(n) + 1);
            rec->l.reserve(static_cast<std::size_t>(n) + 1);
            rec->u.reserve(static_cast<std::size_t>(n));
        }

        int k = k0;
        double y = 0.0;
        double like = 1.0;
        double reward = 0.0;
        DiscreteMeasure mu = DiscreteMeasure::dirac(k0, K);
        if (rec) {
            rec->x.push_back(lat.node(k));
            rec->y.push_back(y);
            rec->l.push_back(like);
        }
        for (int i = 0; i < n; ++i) {
            const double t = lat.time(i);
            const double x = lat.node(k);
            const double a = policy(i, mu);
            reward += spec.engine_k(t, x, a) * h;

            const double eta = sample_obs_increment(law, rng);
            const double factor = 1.0 + spec.observation_drift(t, x) * eta;
            if (!(factor > 0.0)) {
                std::ostringstream os;
                os << "likelihood factor " << factor << " nonpositive on path " << p << " step "
                   << i;
                throw StepSizeError(os.str());
            }
            like *= factor;
            y += eta;

            k += sample_signal_step(kernel, i, k, a, rng);
            mu = filter_update(i, a, mu, eta, kernel, spec);
            if (rec) {
                rec->u.push_back(a);
                rec->x.push_back(lat.node(k));
                rec->y.push_back(y);
                rec->l.push_back(like);
            }
        }
        const double value = like * (reward + spec.engine_g(lat.node(k)));
        if (!std::isfinite(value)) {
            std::ostringstream os;
            os << "non-finite reward on path " << p;
            throw InvalidProblemError(os.str());
        }
        values[static_cast<std::size_t>(p)] = value;
        likelihoods[static_cast<std::size_t>(p)] = like;
    };

    const int n_threads = std::max(1, options.threads);
    if (n_threads == 1 || path_count < 2) {
        for (std::int64_t p = 0; p < path_count; ++p) run_path(p);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
        const std::int64_t chunk = (path_count + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            const std::int64_t lo = t * chunk;
            const std::int64_t hi = std::min<std::int64_t>(path_count, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi, t] {
                try {
                    for (std::int64_t p = lo; p < hi; ++p) run_path(p);
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

    // Path-ordered reduction: identical for any thread count.
    auto mean_stderr = [path_count](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double v : xs) mean += v;
        mean /= static_cast<double>(path_count);
        double ss = 0.0;
        for (double v : xs) ss += (v - mean) * (v - mean);
        const double var = path_count > 1 ? ss / static_cast<double>(path_count - 1) : 0.0;
        return std::pair<double, double>(mean, std::sqrt(var / static_cast<double>(path_count)));
    };
    std::tie(result.estimate, result.std_error) = mean_stderr(values);
    std::tie(result.mean_likelihood, result.likelihood_std_error) = mean_stderr(likelihoods);
    return result;
}

}  // namespace posc
