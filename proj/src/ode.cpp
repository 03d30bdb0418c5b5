#include <cmath>

#include "posc/errors.hpp"
#include "posc/simulate.hpp"

namespace posc {

double OdeCurve::at(double t) const {
    const double dt = step();
    const double s = t / dt;
    const auto n = static_cast<std::ptrdiff_t>(values.size()) - 1;
    std::ptrdiff_t j = static_cast<std::ptrdiff_t>(std::floor(s));
    if (j < 0) j = 0;
    if (j >= n) return values.back();
    const double w = s - static_cast<double>(j);
    return (1.0 - w) * values[static_cast<std::size_t>(j)] +
           w * values[static_cast<std::size_t>(j) + 1];
}

namespace {

double rk4_step(double y, double t, double dt, double (*f)(double, double)) {
    const double k1 = f(t, y);
    const double k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1);
    const double k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2);
    const double k4 = f(t + dt, y + dt * k3);
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double riccati_rhs(double, double pi) { return pi * pi; }
double variance_rhs(double, double p) { return 1.0 - p * p; }

}  // namespace

OdeCurve solve_riccati(double T, int ode_steps) {
    if (T < 0.0) throw InvalidProblemError("solve_riccati: negative horizon");
    if (ode_steps < 100) throw InvalidProblemError("solve_riccati: ode_steps must be >= 100");
    OdeCurve curve;
    curve.t_end = T;
    curve.values.assign(static_cast<std::size_t>(ode_steps) + 1, 1.0);
    if (T == 0.0) return curve;
    const double dt = T / ode_steps;
    // Terminal condition Pi_T = 1, integrate backward.
    curve.values[static_cast<std::size_t>(ode_steps)] = 1.0;
    for (int j = ode_steps; j > 0; --j) {
        const double t = j * dt;
        curve.values[static_cast<std::size_t>(j) - 1] =
            rk4_step(curve.values[static_cast<std::size_t>(j)], t, -dt, riccati_rhs);
    }
    return curve;
}

OdeCurve solve_variance(double T, int ode_steps) {
    if (T < 0.0) throw InvalidProblemError("solve_variance: negative horizon");
    if (ode_steps < 100) throw InvalidProblemError("solve_variance: ode_steps must be >= 100");
    OdeCurve curve;
    curve.t_end = T;
    curve.values.assign(static_cast<std::size_t>(ode_steps) + 1, 0.0);
    if (T == 0.0) return curve;
    const double dt = T / ode_steps;
    for (int j = 0; j < ode_steps; ++j) {
        const double t = j * dt;
        curve.values[static_cast<std::size_t>(j) + 1] =
            rk4_step(curve.values[static_cast<std::size_t>(j)], t, dt, variance_rhs);
    }
    return curve;
}

}  // namespace posc
