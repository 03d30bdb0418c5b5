#include <cmath>
#include <random>
#include <thread>
#include <vector>

#include "posc/errors.hpp"
#include "posc/rng.hpp"
#include "posc/simulate.hpp"

namespace posc {

LQReference lq_reference_value(double T, double x0, std::int64_t path_count, int euler_steps,
                               std::uint64_t seed, int threads) {
    if (!(T > 0.0)) throw InvalidProblemError("lq_reference_value: horizon must be > 0");
    if (path_count < 1) throw InvalidProblemError("lq_reference_value: need at least one path");
    if (euler_steps < 100) {
        throw InvalidProblemError("lq_reference_value: euler_steps must be >= 100");
    }

    LQReference ref;
    ref.path_count = path_count;
    ref.euler_steps = euler_steps;
    // ODE grids aligned with the Euler grid so the feedback gains need no
    // interpolation inside the path loop.
    ref.riccati = solve_riccati(T, euler_steps);
    ref.variance = solve_variance(T, euler_steps);

    const double dt = T / euler_steps;
    const double sqrt_dt = std::sqrt(dt);
    const std::vector<double>& pi = ref.riccati.values;
    const std::vector<double>& pv = ref.variance.values;

    std::vector<double> costs(static_cast<std::size_t>(path_count));
    auto simulate_range = [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t p = lo; p < hi; ++p) {
            std::mt19937_64 rng = make_stream(seed, static_cast<std::uint64_t>(p));
            std::normal_distribution<double> gauss(0.0, 1.0);
            double x = x0;
            double yhat = x0;
            double cost = 0.0;
            for (int m = 0; m < euler_steps; ++m) {
                const double pim = pi[static_cast<std::size_t>(m)];
                const double pm = pv[static_cast<std::size_t>(m)];
                const double u = -pim * yhat;
                cost += u * u * dt;
                const double db = sqrt_dt * gauss(rng);
                const double dw = sqrt_dt * gauss(rng);
                const double dy = x * dt + dw;  // observation increment under P
                x += u * dt + db;
                yhat += -(pim + pm) * yhat * dt + pm * dy;
            }
            cost += x * x;
            costs[static_cast<std::size_t>(p)] = cost;
        }
    };

    const int n_threads = std::max(1, threads);
    if (n_threads == 1 || path_count < 2) {
        simulate_range(0, path_count);
    } else {
        std::vector<std::thread> pool;
        const std::int64_t chunk = (path_count + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            const std::int64_t lo = t * chunk;
            const std::int64_t hi = std::min<std::int64_t>(path_count, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi] { simulate_range(lo, hi); });
        }
        for (auto& th : pool) th.join();
    }

    // Reduce in path order: the estimate is thread-count independent.
    double mean = 0.0;
    for (double c : costs) mean += c;
    mean /= static_cast<double>(path_count);
    double ss = 0.0;
    for (double c : costs) ss += (c - mean) * (c - mean);
    const double variance =
        path_count > 1 ? ss / static_cast<double>(path_count - 1) : 0.0;
    ref.value_estimate = mean;
    ref.ci_halfwidth = 3.0 * std::sqrt(variance / static_cast<double>(path_count));
    return ref;
}

}  // namespace posc
