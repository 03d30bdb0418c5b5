#include "posc/problem.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "posc/errors.hpp"

namespace posc {

void require_structurally_valid(const ProblemSpec& spec) {
    if (!spec.drift || !spec.diffusion || !spec.observation_drift ||
        !spec.running_reward || !spec.terminal_reward) {
        throw InvalidProblemError("problem '" + spec.name + "': missing coefficient callable");
    }
    if (!(spec.horizon > 0.0)) {
        throw InvalidProblemError("problem '" + spec.name + "': horizon T must be > 0");
    }
    if (spec.action_grid.empty()) {
        throw InvalidProblemError("problem '" + spec.name + "': empty action grid");
    }
    for (std::size_t j = 1; j < spec.action_grid.size(); ++j) {
        if (!(spec.action_grid[j - 1] < spec.action_grid[j])) {
            throw InvalidProblemError("problem '" + spec.name +
                                      "': action grid not strictly ascending");
        }
    }
    if (!(spec.x_min <= spec.initial_state && spec.initial_state <= spec.x_max)) {
        throw InvalidProblemError("problem '" + spec.name +
                                  "': initial state outside truncation box");
    }
    if (spec.bound_b < 0.0 || spec.bound_sigma < 0.0 || spec.bound_p < 0.0) {
        throw InvalidProblemError("problem '" + spec.name + "': negative coefficient bound");
    }
}

namespace {

[[noreturn]] void throw_nonfinite(const char* which, double t, double x, double a) {
    std::ostringstream os;
    os << "non-finite " << which << " at (t=" << t << ", x=" << x << ", a=" << a << ")";
    throw InvalidProblemError(os.str());
}

}  // namespace

ValidationReport validate_problem(const ProblemSpec& spec, int sample_count,
                                  std::uint64_t rng_seed) {
    require_structurally_valid(spec);
    if (sample_count <= 0) {
        throw InvalidProblemError("validate_problem: sample_count must be positive");
    }

    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> ut(0.0, spec.horizon);
    std::uniform_real_distribution<double> ux(spec.x_min, spec.x_max);
    const double a_lo = spec.action_grid.front();
    const double a_hi = spec.action_grid.back();
    std::uniform_real_distribution<double> ua(a_lo, a_hi);

    ValidationReport rep;
    rep.sample_count = sample_count;
    for (int s = 0; s < sample_count; ++s) {
        const double t = ut(rng);
        const double x = ux(rng);
        const double a = a_lo == a_hi ? a_lo : ua(rng);

        const double b = spec.drift(t, x, a);
        if (!std::isfinite(b)) throw_nonfinite("drift", t, x, a);
        const double sg = spec.diffusion(t, x, a);
        if (!std::isfinite(sg)) throw_nonfinite("diffusion", t, x, a);
        if (sg < 0.0) {
            std::ostringstream os;
            os << "negative diffusion at (t=" << t << ", x=" << x << ", a=" << a << ")";
            throw InvalidProblemError(os.str());
        }
        const double p = spec.observation_drift(t, x);
        if (!std::isfinite(p)) throw_nonfinite("observation drift", t, x, a);

        rep.max_abs_b = std::max(rep.max_abs_b, std::abs(b));
        rep.max_abs_sigma = std::max(rep.max_abs_sigma, std::abs(sg));
        rep.max_abs_p = std::max(rep.max_abs_p, std::abs(p));
    }

    rep.b_within_bound = rep.max_abs_b <= spec.bound_b;
    rep.sigma_within_bound = rep.max_abs_sigma <= spec.bound_sigma;
    rep.p_within_bound = rep.max_abs_p <= spec.bound_p;
    rep.pass = rep.b_within_bound && rep.sigma_within_bound && rep.p_within_bound;

    std::ostringstream os;
    os << "max|b|=" << rep.max_abs_b << " (bound " << spec.bound_b << "), max|sigma|="
       << rep.max_abs_sigma << " (bound " << spec.bound_sigma << "), max|p|=" << rep.max_abs_p
       << " (bound " << spec.bound_p << ")";
    rep.detail = os.str();
    return rep;
}

ProblemSpec lq_problem(double T, double x0, double action_bound, int action_count,
                       double x_min, double x_max) {
    if (!(action_bound > 0.0)) {
        throw InvalidProblemError("lq_problem: action_bound must be > 0");
    }
    if (action_count < 2) {
        throw InvalidProblemError("lq_problem: action_count must be >= 2");
    }
    if (!(x_min < x_max)) {
        throw InvalidProblemError("lq_problem: empty truncation box");
    }

    ProblemSpec spec;
    spec.name = "lq";
    spec.drift = [](double, double, double a) { return a; };
    spec.diffusion = [](double, double, double) { return 1.0; };
    spec.observation_drift = [](double, double x) { return x; };
    spec.running_reward = [](double, double, double a) { return a * a; };
    spec.terminal_reward = [](double x) { return x * x; };
    spec.horizon = T;
    spec.initial_state = x0;

    spec.action_grid.resize(static_cast<std::size_t>(action_count));
    const double step = 2.0 * action_bound / (action_count - 1);
    for (int j = 0; j < action_count; ++j) {
        spec.action_grid[static_cast<std::size_t>(j)] = -action_bound + j * step;
    }

    spec.bound_b = action_bound;
    spec.bound_sigma = 1.0;
    spec.bound_p = std::max(std::abs(x_min), std::abs(x_max));
    spec.x_min = x_min;
    spec.x_max = x_max;
    spec.growth.c1 = std::max({spec.bound_b, spec.bound_sigma, spec.bound_p, 1.0});
    spec.growth.c2 = std::max(1.0, action_bound * action_bound);
    spec.objective = Objective::minimize;

    require_structurally_valid(spec);
    return spec;
}

ProblemSpec lq_problem(double T, double x0, double action_bound, int action_count) {
    return lq_problem(T, x0, action_bound, action_count, -0.49, 0.49);
}

ProblemSpec zero_problem(double T, double x0) {
    ProblemSpec spec;
    spec.name = "zero";
    spec.drift = [](double, double, double) { return 0.0; };
    spec.diffusion = [](double, double, double) { return 0.0; };
    spec.observation_drift = [](double, double) { return 0.0; };
    spec.running_reward = [](double, double, double) { return 0.0; };
    spec.terminal_reward = [](double) { return 0.0; };
    spec.horizon = T;
    spec.initial_state = x0;
    spec.action_grid = {0.0};
    spec.bound_b = 0.0;
    spec.bound_sigma = 1.0;  // declared sup bound; sigma == 0 stays under it
    spec.bound_p = 0.0;
    spec.x_min = x0 - 1.0;
    spec.x_max = x0 + 1.0;
    spec.objective = Objective::maximize;
    require_structurally_valid(spec);
    return spec;
}

}  // namespace posc
