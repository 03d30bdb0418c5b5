#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace posc {

using Coeff3 = std::function<double(double t, double x, double a)>;
using Coeff2 = std::function<double(double t, double x)>;
using Coeff1 = std::function<double(double x)>;

// The DPP engine always maximizes; problems stated as costs are flagged
// `minimize` and have their rewards negated on the way into the engine.
enum class Objective { maximize, minimize };

struct BoundConstants {
    double c1 = 1.0;  // sup bound / Lipschitz constant for the coefficients
    double c2 = 1.0;  // exponential growth constant for the rewards
};

/// A partially observed control problem on a truncated 1-d state domain.
///
/// Signal dynamics  dX = b(t,X,a) dt + sigma(t,X,a) dB, observation
/// dY = p(t,X) dt + dW, reward  E[ integral K dt + G(X_T) ].  All
/// coefficients are callables; the declared bounds are sup norms over
/// [0,T] x [x_min,x_max] x action_grid and drive the Courant step rule.
struct ProblemSpec {
    std::string name = "custom";

    Coeff3 drift;               // b(t,x,a)
    Coeff3 diffusion;           // sigma(t,x,a) >= 0
    Coeff2 observation_drift;   // p(t,x)
    Coeff3 running_reward;      // K(t,x,a)
    Coeff1 terminal_reward;     // G(x)

    double horizon = 0.0;       // T > 0
    double initial_state = 0.0; // x0
    std::vector<double> action_grid;  // nonempty, strictly ascending

    double bound_b = 0.0;
    double bound_sigma = 0.0;
    double bound_p = 0.0;

    double x_min = 0.0;         // truncation box, x_min <= x0 <= x_max
    double x_max = 0.0;

    BoundConstants growth;
    Objective objective = Objective::maximize;

    // Rewards as seen by the maximizing engine.
    double engine_k(double t, double x, double a) const {
        double v = running_reward(t, x, a);
        return objective == Objective::minimize ? -v : v;
    }
    double engine_g(double x) const {
        double v = terminal_reward(x);
        return objective == Objective::minimize ? -v : v;
    }
    // Engine value converted back to the problem's native convention.
    double reported_value(double engine_value) const {
        return objective == Objective::minimize ? -engine_value : engine_value;
    }
};

struct ValidationReport {
    int sample_count = 0;
    double max_abs_b = 0.0;
    double max_abs_sigma = 0.0;
    double max_abs_p = 0.0;
    bool b_within_bound = false;
    bool sigma_within_bound = false;
    bool p_within_bound = false;
    bool pass = false;
    std::string detail;
};

// Throws InvalidProblemError when the spec is structurally incomplete.
void require_structurally_valid(const ProblemSpec& spec);

// Samples (t, x, a) over [0,T] x [x_min,x_max] x [a_min,a_max], records the
// maximum observed |b|, |sigma|, |p| and flags any exceedance of the
// declared bounds.  Non-finite evaluations raise InvalidProblemError naming
// the offending point.
ValidationReport validate_problem(const ProblemSpec& spec, int sample_count,
                                  std::uint64_t rng_seed);

// The linear-quadratic benchmark: b = a, sigma = 1, p = x, K = a^2, G = x^2,
// uniform action grid on [-action_bound, action_bound].  Stated as a cost
// (Objective::minimize); the engine maximizes the negated rewards and the
// reported value is the minimal cost.  Default truncation box [-0.49, 0.49].
ProblemSpec lq_problem(double T, double x0, double action_bound, int action_count);
ProblemSpec lq_problem(double T, double x0, double action_bound, int action_count,
                       double x_min, double x_max);

// All-zero coefficients and rewards; useful for pipeline smoke checks.
ProblemSpec zero_problem(double T, double x0);

}  // namespace posc
