#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "posc/dpp.hpp"
#include "posc/filter.hpp"

namespace posc {

/// Scalar ODE solution sampled on a uniform grid t_j = j * (t_end / steps).
struct OdeCurve {
    double t_end = 0.0;
    std::vector<double> values;  // size steps + 1

    double step() const { return t_end / (static_cast<double>(values.size()) - 1.0); }
    double at_index(std::size_t j) const { return values[j]; }
    // Linear interpolation between grid samples.
    double at(double t) const;
};

// Backward Riccati equation dPi/dt = Pi^2, Pi(T) = 1, solved with RK4.
// Closed form 1/(1 + T - t) is kept in the tests as a cross-check.
OdeCurve solve_riccati(double T, int ode_steps);

// Forward variance equation dP/dt = 1 - P^2, P(0) = 0, solved with RK4.
// Closed form tanh(t) is kept in the tests as a cross-check.
OdeCurve solve_variance(double T, int ode_steps);

struct LQReference {
    OdeCurve riccati;
    OdeCurve variance;
    double value_estimate = 0.0;  // minimal cost, positive
    double ci_halfwidth = 0.0;    // 3 * sample std / sqrt(paths)
    std::int64_t path_count = 0;
    int euler_steps = 0;
};

// Monte-Carlo ground truth for the LQ benchmark: simulates the closed-loop
// optimal control u* = -Pi yhat under the physical measure with
// Euler-Maruyama (X and the filter path driven by the same increments) and
// averages the quadratic cost.  The returned CI is 3-sigma.
LQReference lq_reference_value(double T, double x0, std::int64_t path_count, int euler_steps,
                               std::uint64_t seed, int threads = 1);

/// Smooth test function with the partial derivatives the generator needs.
struct SmoothTestFunction {
    std::function<double(double t, double x)> value;
    std::function<double(double t, double x)> dt;
    std::function<double(double t, double x)> dx;
    std::function<double(double t, double x)> dxx;
};

// One-step Taylor residual of the trinomial kernel against the generator
// Lf = f_t + b f_x + sigma^2 f_xx / 2:
//   E[f(t_{i+1}, x+H)] - f(t_i, x) - Lf(t_i, x) h.
// The finite sum is evaluated in extended precision; the identity sits many
// orders below the individual terms.
double martingale_residual(const ProblemSpec& spec, const TrinomialKernel& kernel,
                           const SmoothTestFunction& f, int i, int k, double a);

struct PathRecord {
    std::vector<double> x;  // X_0..X_n
    std::vector<double> y;  // Y_0..Y_n
    std::vector<double> l;  // L_0..L_n
    std::vector<double> u;  // u_0..u_{n-1}
};

struct PathBundle {
    std::uint64_t seed = 0;
    std::int64_t path_count = 0;
    std::vector<PathRecord> recorded;  // first min(record_cap, path_count) paths
};

struct SimOptions {
    int threads = 1;
    std::int64_t record_cap = 0;
};

struct SimResult {
    double estimate = 0.0;   // engine-convention sample mean of L_n (sum K h + G)
    double std_error = 0.0;
    double mean_likelihood = 0.0;  // sample mean of L_n (a Q-martingale at 1)
    double likelihood_std_error = 0.0;
    PathBundle bundle;
};

// Control as a function of the running filter belief.
using BeliefPolicy = std::function<double(int l, const DiscreteMeasure& mu)>;

// Forward Monte Carlo of the discrete system under the reference measure:
// per-path rng streams derived from (seed, path index), beliefs maintained
// with filter_update along each path.  The estimate is identical for any
// thread count.
SimResult simulate_discrete_paths(const ProblemSpec& spec, const TrinomialKernel& kernel,
                                  const ObservationLaw& law, const BeliefPolicy& policy,
                                  std::int64_t path_count, std::uint64_t seed,
                                  const SimOptions& options = {});

BeliefPolicy constant_policy(double action);

// Greedy lookup into a DPP policy: project the belief, act as the vertex
// carrying the largest barycentric weight (ties toward the lower id).
BeliefPolicy policy_from_table(const PolicyTable& table, const MeasureGrid& grid);

}  // namespace posc
