#pragma once

#include <random>
#include <span>
#include <vector>

#include "posc/problem.hpp"

namespace posc {

/// Uniform signal lattice: nodes x_min + k*dx for k = 0..node_count-1,
/// times i*h for i = 0..n_steps.  h*n_steps == T up to one ulp.
struct LatticeParams {
    double dx = 0.0;
    double h = 0.0;
    int n_steps = 0;
    double x_min = 0.0;
    double x_max = 0.0;
    int node_count = 0;

    double node(int k) const { return x_min + k * dx; }
    double time(int i) const { return i * h; }
    // Nearest node index; throws InvalidProblemError when x is off-grid.
    int node_index(double x) const;
};

// h = safety_ratio * dx^2 / (bound_b^2 + bound_sigma^2), shrunk so that
// T/h is an integer.  Guarantees p+ + p- <= 1 at every node.
double courant_step(const ProblemSpec& spec, double dx, double safety_ratio);

// Lattice over the spec's truncation box, endpoints snapped inward to the
// grid anchored at x0.
LatticeParams make_lattice(const ProblemSpec& spec, double dx, double safety_ratio);

// Lattice with exactly 2*node_radius + 1 nodes centered on x0.
LatticeParams make_lattice_radius(const ProblemSpec& spec, double dx, double safety_ratio,
                                  int node_radius);

struct TrinomialProbs {
    double p_plus = 0.0;
    double p_minus = 0.0;
    double p_zero = 1.0;
};

/// Three-point signal kernel: steps +dx / -dx / 0 with probabilities
///   p+- = ((sigma^2 + h b^2) h/dx^2 +- b h/dx) / 2,   p0 = 1 - p+ - p-.
/// At the grid edges the outgoing step is clamped: its mass folds into p0
/// so boundary rows stay stochastic.
class TrinomialKernel {
public:
    TrinomialKernel(const ProblemSpec& spec, const LatticeParams& params);

    // Clamped probabilities (the ones the filter, DPP and sampler use).
    TrinomialProbs probs(int i, int k, double a) const;
    // Unclamped formula; throws CourantViolationError if p+ or p- leaves [0,1].
    TrinomialProbs raw_probs(int i, int k, double a) const;

    const LatticeParams& params() const { return params_; }
    const ProblemSpec& problem() const { return *spec_; }

private:
    const ProblemSpec* spec_;
    LatticeParams params_;
};

enum class ObsKind { rademacher, gaussian };

/// Law of one observation increment: mean 0, variance h.
struct ObservationLaw {
    ObsKind kind = ObsKind::rademacher;
    double h = 0.0;
    double sqrt_h() const;
};

// Rademacher: +-sqrt(h) with probability 1/2 each.  Gaussian: N(0, h).
double sample_obs_increment(const ObservationLaw& law, std::mt19937_64& rng);

// Node delta in {-1, 0, +1} drawn from the clamped kernel row; boundary
// nodes never step outside the grid.
int sample_signal_step(const TrinomialKernel& kernel, int i, int k, double a,
                       std::mt19937_64& rng);

struct NodeSample {
    int time_index = 0;
    int node_index = 0;
    int action_index = 0;
};

struct ConsistencyRow {
    NodeSample where;
    double mean_error = 0.0;       // |dx (p+ - p-) - b h|
    double variance_error = 0.0;   // |dx^2 (p+ + p-) - (b h)^2 - sigma^2 h|
    double third_moment_ratio = 0.0;   // E|H|^3 / h^{3/2}
    double exp_moment_ratio_c1 = 0.0;  // (E e^{|H|} - 1) / h
    double exp_moment_ratio_c2 = 0.0;  // (E e^{C2 |H|} - 1) / h
};

struct ConsistencyReport {
    std::vector<ConsistencyRow> rows;
    double max_mean_error = 0.0;
    double max_variance_error = 0.0;
    double max_third_ratio = 0.0;
    double max_exp_ratio_c1 = 0.0;
    double max_exp_ratio_c2 = 0.0;
    // Analytic ratio bounds from the declared sup norms.
    double third_ratio_bound = 0.0;
    double exp_ratio_bound_c1 = 0.0;
    double exp_ratio_bound_c2 = 0.0;
    double identity_tolerance = 1e-12;
    bool pass = false;
};

// Evaluates the moment identities of the (unclamped) kernel at the sampled
// interior nodes.  Mean and variance identities must hold to 1e-12; the
// third-moment and exponential-moment ratios must stay below the analytic
// bounds computed from the declared coefficient bounds.
ConsistencyReport check_local_consistency(const ProblemSpec& spec,
                                          const TrinomialKernel& kernel,
                                          std::span<const NodeSample> samples);

struct ObsMomentReport {
    double mean_error = 0.0;
    double variance_error = 0.0;
    double third_moment = 0.0;      // E|eta|^3
    double third_moment_ratio = 0.0;  // E|eta|^3 / h^{3/2}
    bool pass = false;
};

// Exact two-point (or Gaussian closed-form) moments of one increment.
ObsMomentReport check_observation_moments(const ObservationLaw& law);

}  // namespace posc
