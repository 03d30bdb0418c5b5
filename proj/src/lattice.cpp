#include "posc/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "posc/errors.hpp"

namespace posc {

int LatticeParams::node_index(double x) const {
    const int k = static_cast<int>(std::lround((x - x_min) / dx));
    if (k < 0 || k >= node_count || std::abs(node(k) - x) > 1e-9 * std::max(1.0, std::abs(x))) {
        std::ostringstream os;
        os << "x=" << x << " is not a lattice node";
        throw InvalidProblemError(os.str());
    }
    return k;
}

double courant_step(const ProblemSpec& spec, double dx, double safety_ratio) {
    require_structurally_valid(spec);
    if (!(dx > 0.0)) throw InvalidProblemError("courant_step: dx must be > 0");
    if (!(safety_ratio > 0.0 && safety_ratio <= 1.0)) {
        throw InvalidProblemError("courant_step: safety_ratio must be in (0,1]");
    }
    const double denom = spec.bound_b * spec.bound_b + spec.bound_sigma * spec.bound_sigma;
    if (denom == 0.0) {
        throw DegenerateProblemError("courant_step: bound_b and bound_sigma are both zero");
    }
    const double h_raw = safety_ratio * dx * dx / denom;
    // Shrink h so that T/h is an integer (n = ceil(T/h_raw)).
    const double n_exact = spec.horizon / h_raw;
    int n = static_cast<int>(std::ceil(n_exact - 1e-9));
    if (n < 1) n = 1;
    return spec.horizon / n;
}

namespace {

LatticeParams finish_lattice(const ProblemSpec& spec, double dx, double safety_ratio,
                             double x_min, double x_max, int node_count) {
    LatticeParams lat;
    lat.dx = dx;
    lat.h = courant_step(spec, dx, safety_ratio);
    lat.n_steps = static_cast<int>(std::lround(spec.horizon / lat.h));
    lat.x_min = x_min;
    lat.x_max = x_max;
    lat.node_count = node_count;
    if (node_count < 2) {
        throw InvalidProblemError("lattice: fewer than 2 nodes; widen the box or shrink dx");
    }
    return lat;
}

}  // namespace

LatticeParams make_lattice(const ProblemSpec& spec, double dx, double safety_ratio) {
    if (!(dx > 0.0)) throw InvalidProblemError("make_lattice: dx must be > 0");
    const double x0 = spec.initial_state;
    // Snap endpoints inward to the grid anchored at x0.
    const int below = static_cast<int>(std::floor((x0 - spec.x_min) / dx + 1e-9));
    const int above = static_cast<int>(std::floor((spec.x_max - x0) / dx + 1e-9));
    const double x_min = x0 - below * dx;
    const double x_max = x0 + above * dx;
    return finish_lattice(spec, dx, safety_ratio, x_min, x_max, below + above + 1);
}

LatticeParams make_lattice_radius(const ProblemSpec& spec, double dx, double safety_ratio,
                                  int node_radius) {
    if (!(dx > 0.0)) throw InvalidProblemError("make_lattice_radius: dx must be > 0");
    if (node_radius < 1) throw InvalidProblemError("make_lattice_radius: radius must be >= 1");
    const double x0 = spec.initial_state;
    return finish_lattice(spec, dx, safety_ratio, x0 - node_radius * dx, x0 + node_radius * dx,
                          2 * node_radius + 1);
}

TrinomialKernel::TrinomialKernel(const ProblemSpec& spec, const LatticeParams& params)
    : spec_(&spec), params_(params) {
    require_structurally_valid(spec);
    if (params_.n_steps < 1 || params_.node_count < 2) {
        throw InvalidProblemError("TrinomialKernel: empty lattice");
    }
}

TrinomialProbs TrinomialKernel::raw_probs(int i, int k, double a) const {
    const double t = params_.time(i);
    const double x = params_.node(k);
    const double b = spec_->drift(t, x, a);
    const double s = spec_->diffusion(t, x, a);
    const double h = params_.h;
    const double dx = params_.dx;

    const double diff_term = (s * s + h * b * b) * h / (dx * dx);
    const double drift_term = b * h / dx;
    TrinomialProbs p;
    p.p_plus = 0.5 * (diff_term + drift_term);
    p.p_minus = 0.5 * (diff_term - drift_term);
    p.p_zero = 1.0 - p.p_plus - p.p_minus;
    if (p.p_plus < 0.0 || p.p_plus > 1.0 || p.p_minus < 0.0 || p.p_minus > 1.0 ||
        p.p_zero < 0.0) {
        std::ostringstream os;
        os << "trinomial probability outside [0,1] at (i=" << i << ", k=" << k << ", a=" << a
           << "): p+=" << p.p_plus << " p-=" << p.p_minus << "; h=" << h << " dx=" << dx;
        throw CourantViolationError(os.str());
    }
    return p;
}

TrinomialProbs TrinomialKernel::probs(int i, int k, double a) const {
    TrinomialProbs p = raw_probs(i, k, a);
    if (k == params_.node_count - 1) {
        p.p_zero += p.p_plus;
        p.p_plus = 0.0;
    }
    if (k == 0) {
        p.p_zero += p.p_minus;
        p.p_minus = 0.0;
    }
    return p;
}

double ObservationLaw::sqrt_h() const { return std::sqrt(h); }

double sample_obs_increment(const ObservationLaw& law, std::mt19937_64& rng) {
    if (law.kind == ObsKind::rademacher) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        return u(rng) < 0.5 ? law.sqrt_h() : -law.sqrt_h();
    }
    std::normal_distribution<double> n(0.0, law.sqrt_h());
    return n(rng);
}

int sample_signal_step(const TrinomialKernel& kernel, int i, int k, double a,
                       std::mt19937_64& rng) {
    const TrinomialProbs p = kernel.probs(i, k, a);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    const double u = dist(rng);
    if (u < p.p_plus) return 1;
    if (u < p.p_plus + p.p_minus) return -1;
    return 0;
}

ConsistencyReport check_local_consistency(const ProblemSpec& spec,
                                          const TrinomialKernel& kernel,
                                          std::span<const NodeSample> samples) {
    const LatticeParams& lat = kernel.params();
    const double h = lat.h;
    const double dx = lat.dx;
    const double h32 = std::pow(h, 1.5);
    const double c2 = spec.growth.c2;

    ConsistencyReport rep;
    rep.rows.reserve(samples.size());

    // Sup of sigma^2 + h b^2 over the declared bounds.
    const double moment_sup = spec.bound_sigma * spec.bound_sigma + h * spec.bound_b * spec.bound_b;
    const double slack = 1.0 + 1e-9;
    rep.third_ratio_bound = moment_sup * dx / std::sqrt(h) * slack;
    rep.exp_ratio_bound_c1 = std::expm1(dx) * moment_sup / (dx * dx) * slack;
    rep.exp_ratio_bound_c2 = std::expm1(c2 * dx) * moment_sup / (dx * dx) * slack;

    bool all_ok = true;
    for (const NodeSample& s : samples) {
        const double t = lat.time(s.time_index);
        const double x = lat.node(s.node_index);
        const double a = spec.action_grid.at(static_cast<std::size_t>(s.action_index));
        const double b = spec.drift(t, x, a);
        const double sg = spec.diffusion(t, x, a);
        const TrinomialProbs p = kernel.raw_probs(s.time_index, s.node_index, a);

        const double mean = dx * (p.p_plus - p.p_minus);
        const double second = dx * dx * (p.p_plus + p.p_minus);
        const double variance = second - mean * mean;
        const double third = dx * dx * dx * (p.p_plus + p.p_minus);
        const double exp1 = std::expm1(dx) * (p.p_plus + p.p_minus);
        const double exp2 = std::expm1(c2 * dx) * (p.p_plus + p.p_minus);

        ConsistencyRow row;
        row.where = s;
        row.mean_error = std::abs(mean - b * h);
        row.variance_error = std::abs(variance - sg * sg * h);
        row.third_moment_ratio = third / h32;
        row.exp_moment_ratio_c1 = exp1 / h;
        row.exp_moment_ratio_c2 = exp2 / h;
        rep.rows.push_back(row);

        rep.max_mean_error = std::max(rep.max_mean_error, row.mean_error);
        rep.max_variance_error = std::max(rep.max_variance_error, row.variance_error);
        rep.max_third_ratio = std::max(rep.max_third_ratio, row.third_moment_ratio);
        rep.max_exp_ratio_c1 = std::max(rep.max_exp_ratio_c1, row.exp_moment_ratio_c1);
        rep.max_exp_ratio_c2 = std::max(rep.max_exp_ratio_c2, row.exp_moment_ratio_c2);

        if (row.mean_error > rep.identity_tolerance ||
            row.variance_error > rep.identity_tolerance) {
            all_ok = false;
        }
    }
    if (rep.max_third_ratio > rep.third_ratio_bound ||
        rep.max_exp_ratio_c1 > rep.exp_ratio_bound_c1 ||
        rep.max_exp_ratio_c2 > rep.exp_ratio_bound_c2) {
        all_ok = false;
    }
    rep.pass = all_ok;
    return rep;
}

ObsMomentReport check_observation_moments(const ObservationLaw& law) {
    ObsMomentReport rep;
    const double h = law.h;
    const double h32 = h * std::sqrt(h);
    if (law.kind == ObsKind::rademacher) {
        const double r = law.sqrt_h();
        const double mean = 0.5 * r + 0.5 * (-r);
        const double variance = 0.5 * r * r + 0.5 * r * r - mean * mean;
        rep.mean_error = std::abs(mean);
        rep.variance_error = std::abs(variance - h);
        rep.third_moment = r * r * r;
    } else {
        // N(0,h): E|eta|^3 = 2 sqrt(2/pi) h^{3/2}.
        rep.mean_error = 0.0;
        rep.variance_error = 0.0;
        rep.third_moment = 2.0 * std::sqrt(2.0 / M_PI) * h32;
    }
    rep.third_moment_ratio = rep.third_moment / h32;
    rep.pass = rep.mean_error <= 1e-15 && rep.variance_error <= 1e-15 * std::max(1.0, h) &&
               rep.third_moment_ratio <= 2.0;
    return rep;
}

}  // namespace posc
