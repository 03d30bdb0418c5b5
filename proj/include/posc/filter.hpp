#pragma once

#include <functional>
#include <span>
#include <vector>

#include "posc/lattice.hpp"
#include "posc/measure.hpp"

namespace posc {

/// Conditional expectation of the likelihood given the observations; the
/// normalization process of the unnormalized filter.  Strictly positive
/// whenever sqrt(h) < 1 / ||p||_inf.
struct LambdaState {
    double value = 1.0;
};

// lambda' = lambda * (1 + mu(p(t,.)) eta).  Nonpositive factor -> StepSizeError.
LambdaState lambda_update(const LambdaState& lam, const DiscreteMeasure& mu,
                          const LatticeParams& lat, double t, double eta,
                          const ProblemSpec& spec);

// One filter step: predict through the trinomial kernel, reweight by the
// likelihood factors (1 + p(t_l, x_j) eta), divide by the normalizer
// 1 + mu(p) eta, then remove residual round-off so the output sums to 1.
DiscreteMeasure filter_update(int l, double a, const DiscreteMeasure& mu, double eta,
                              const TrinomialKernel& kernel, const ProblemSpec& spec);

namespace detail {

// Allocation-free core shared with the DPP inner loop.  rows[j] is the
// clamped kernel row at source node j; p_vals[j] = p(t_l, x_j).  Returns
// the normalizer 1 + mu(p) eta.
double filter_update_core(std::span<double> out, std::span<const double> mu, double eta,
                          std::span<const double> p_vals, const TrinomialProbs* rows);

}  // namespace detail

struct FilterOracleNode {
    DiscreteMeasure conditional_law;
    double lambda = 1.0;
    // E^{Q}[L_l 1{X_l = x_k} | Y-history]; lambda and the law derive from it.
    std::vector<double> unnormalized;
};

/// Exact conditional laws for every observation history, indexed by level
/// and bitmask (bit j set means eta_{j+1} = +sqrt(h)).
struct FilterOracleResult {
    std::vector<std::vector<FilterOracleNode>> levels;  // levels[l] has 2^l entries
};

// Observation-adapted control: action at step i from the first i increments.
using ObsPolicy = std::function<double(int i, std::span<const double> etas)>;

// First-principles filter: enumerates every (signal, observation) path of the
// discrete system with its product probability, weights by the exact
// likelihood, and conditions on each observation history.  Rademacher law
// only; n_steps <= 4.
FilterOracleResult brute_force_filter(const ProblemSpec& spec, const TrinomialKernel& kernel,
                                      const ObservationLaw& law, const ObsPolicy& policy,
                                      int n_steps);

}  // namespace posc
