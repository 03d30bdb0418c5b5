#include <doctest.h>

#include <cmath>
#include <vector>

#include "posc/errors.hpp"
#include "posc/lattice.hpp"
#include "posc/rng.hpp"
#include "test_helpers.hpp"

using namespace posc;
using posc::testing::const_coeff_problem;

TEST_CASE("courant step for unit diffusion") {
    const ProblemSpec spec = const_coeff_problem(0.0, 1.0, 0.1, 0.0, 0.5);
    const double h = courant_step(spec, 0.1, 1.0);
    CHECK(h == doctest::Approx(0.01).epsilon(1e-15));  // T/h = 10 already integral
    CHECK(std::abs(spec.horizon / h - std::lround(spec.horizon / h)) < 1e-12);
}

TEST_CASE("courant step reproduces the lq choice h = dx^2 / 10") {
    const ProblemSpec spec = lq_problem(0.1, 0.0, 3.0, 7);
    const double dx = 0.1;
    const double h = courant_step(spec, dx, 1.0);
    CHECK(h == doctest::Approx(dx * dx / 10.0).epsilon(1e-15));
}

TEST_CASE("courant step rounds h down so T/h is an integer") {
    const ProblemSpec spec = const_coeff_problem(0.0, 1.0, 0.1, 0.0, 0.5);
    const double h = courant_step(spec, 0.07, 1.0);  // raw h = 0.0049, T/h = 20.4...
    const double n = spec.horizon / h;
    CHECK(std::abs(n - std::lround(n)) < 1e-9);
    CHECK(h <= 0.0049 * (1 + 1e-12));
}

TEST_CASE("degenerate bounds have no courant step") {
    ProblemSpec spec = const_coeff_problem(0.0, 0.0, 0.1, 0.0, 0.5);
    CHECK_THROWS_AS(courant_step(spec, 0.1, 1.0), DegenerateProblemError);
}

TEST_CASE("trinomial probabilities at the drifted node") {
    // b = 1, sigma = 1, h = 0.001, dx = 0.1 (safety ratio 0.2 against C0 = 1/2).
    const ProblemSpec spec = const_coeff_problem(1.0, 1.0, 0.1, 0.0, 0.5);
    const LatticeParams lat = make_lattice(spec, 0.1, 0.2);
    REQUIRE(lat.h == doctest::Approx(0.001).epsilon(1e-15));
    const TrinomialKernel kernel(spec, lat);
    const TrinomialProbs p = kernel.probs(0, lat.node_index(0.0), 0.0);
    CHECK(p.p_plus == doctest::Approx(0.05505).epsilon(1e-12));
    CHECK(p.p_minus == doctest::Approx(0.04505).epsilon(1e-12));
    CHECK(p.p_zero == doctest::Approx(0.8999).epsilon(1e-12));
    CHECK(p.p_plus + p.p_minus + p.p_zero == 1.0);
}

TEST_CASE("trinomial probabilities mirror under the drift sign") {
    const ProblemSpec spec = const_coeff_problem(-1.0, 1.0, 0.1, 0.0, 0.5);
    const LatticeParams lat = make_lattice(spec, 0.1, 0.2);
    const TrinomialKernel kernel(spec, lat);
    const TrinomialProbs p = kernel.probs(0, lat.node_index(0.0), 0.0);
    CHECK(p.p_plus == doctest::Approx(0.04505).epsilon(1e-12));
    CHECK(p.p_minus == doctest::Approx(0.05505).epsilon(1e-12));
}

TEST_CASE("zero-drift kernel is symmetric") {
    const ProblemSpec spec = const_coeff_problem(0.0, 1.0, 0.1, 0.0, 0.5);
    const LatticeParams lat = make_lattice(spec, 0.1, 0.1);  // h = 0.001
    const TrinomialKernel kernel(spec, lat);
    const TrinomialProbs p = kernel.probs(3, 2, 0.0);
    CHECK(p.p_plus == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(p.p_minus == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(p.p_zero == doctest::Approx(0.90).epsilon(1e-14));
}

TEST_CASE("courant violation raises") {
    const ProblemSpec spec = const_coeff_problem(0.0, 1.0, 0.1, 0.0, 0.5);
    LatticeParams lat = make_lattice(spec, 0.1, 1.0);
    lat.h = 0.02;  // p+ + p- = 2 > 1
    const TrinomialKernel kernel(spec, lat);
    CHECK_THROWS_AS(kernel.raw_probs(0, 2, 0.0), CourantViolationError);
}

TEST_CASE("large drift times dx violates nonnegativity of p-") {
    // |b| dx > sigma^2 + h b^2 makes p- negative even under the Courant rule.
    const ProblemSpec spec = lq_problem(0.1, 0.0, 3.0, 7, -1.6, 1.6);
    const LatticeParams lat = make_lattice(spec, 0.4, 1.0);
    const TrinomialKernel kernel(spec, lat);
    CHECK_THROWS_AS(kernel.raw_probs(0, lat.node_index(0.0), 3.0), CourantViolationError);
}

TEST_CASE("boundary rows clamp the outgoing step into p0") {
    const ProblemSpec spec = const_coeff_problem(1.0, 1.0, 0.1, 0.0, 0.5);
    const LatticeParams lat = make_lattice(spec, 0.1, 0.2);
    const TrinomialKernel kernel(spec, lat);
    const TrinomialProbs top = kernel.probs(0, lat.node_count - 1, 0.0);
    CHECK(top.p_plus == 0.0);
    CHECK(top.p_plus + top.p_minus + top.p_zero == 1.0);
    const TrinomialProbs bottom = kernel.probs(0, 0, 0.0);
    CHECK(bottom.p_minus == 0.0);
    CHECK(bottom.p_plus + bottom.p_minus + bottom.p_zero == 1.0);
}

TEST_CASE("local consistency holds exactly at interior nodes") {
    const ProblemSpec spec = lq_problem(0.1, 0.0, 3.0, 7, -0.42, 0.42);
    const LatticeParams lat = make_lattice(spec, 0.14, 1.0);
    const TrinomialKernel kernel(spec, lat);
    std::vector<NodeSample> samples;
    for (int i : {0, 10, lat.n_steps - 1}) {
        for (int k = 1; k < lat.node_count - 1; ++k) {
            for (int ai = 0; ai < 7; ++ai) samples.push_back({i, k, ai});
        }
    }
    const ConsistencyReport rep = check_local_consistency(spec, kernel, samples);
    CHECK(rep.pass);
    CHECK(rep.max_mean_error <= 1e-12);
    CHECK(rep.max_variance_error <= 1e-12);
    CHECK(rep.max_third_ratio <= rep.third_ratio_bound);
    CHECK(rep.max_exp_ratio_c1 <= rep.exp_ratio_bound_c1);
    CHECK(rep.max_exp_ratio_c2 <= rep.exp_ratio_bound_c2);
}

TEST_CASE("zero kernel has all-zero moments") {
    ProblemSpec spec = const_coeff_problem(0.0, 0.0, 0.1, 0.0, 0.5);
    spec.bound_sigma = 1.0;  // keeps the courant step defined
    const LatticeParams lat = make_lattice(spec, 0.1, 1.0);
    const TrinomialKernel kernel(spec, lat);
    const std::vector<NodeSample> samples{{0, 2, 0}, {5, 3, 0}};
    const ConsistencyReport rep = check_local_consistency(spec, kernel, samples);
    CHECK(rep.pass);
    CHECK(rep.max_third_ratio == 0.0);
    CHECK(rep.max_exp_ratio_c1 == 0.0);
}

TEST_CASE("third moment scales like h^{3/2} under the dx-h coupling") {
    // E|H|^3 = dx (sigma^2 + h b^2) h, so the ratio is (sigma^2 + h b^2) dx / sqrt(h).
    const ProblemSpec spec = const_coeff_problem(1.0, 1.0, 0.1, 0.0, 0.5);
    const LatticeParams lat = make_lattice(spec, 0.1, 0.2);
    const TrinomialKernel kernel(spec, lat);
    const std::vector<NodeSample> samples{{0, 2, 0}};
    const ConsistencyReport rep = check_local_consistency(spec, kernel, samples);
    const double expected =
        (1.0 + lat.h) * lat.dx / std::sqrt(lat.h);
    CHECK(rep.rows[0].third_moment_ratio == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("forced p+ = 1 always steps up") {
    // sigma = 0, b = dx/h makes the up-step certain.
    ProblemSpec spec = const_coeff_problem(1.0, 0.0, 0.1, 0.0, 0.5);
    LatticeParams lat;
    lat.dx = 0.1;
    lat.h = 0.1;
    lat.n_steps = 1;
    lat.x_min = -0.5;
    lat.x_max = 0.5;
    lat.node_count = 11;
    const TrinomialKernel kernel(spec, lat);
    std::mt19937_64 rng = make_stream(1, 0);
    for (int trial = 0; trial < 200; ++trial) {
        CHECK(sample_signal_step(kernel, 0, 5, 0.0, rng) == 1);
    }
}

TEST_CASE("sampled frequencies match the kernel probabilities") {
    const ProblemSpec spec = const_coeff_problem(1.0, 1.0, 0.1, 0.0, 0.5);
    const LatticeParams lat = make_lattice(spec, 0.1, 0.2);
    const TrinomialKernel kernel(spec, lat);
    const int k = lat.node_index(0.0);
    std::mt19937_64 rng = make_stream(20240817, 0);
    const int n = 1'000'000;
    int up = 0, down = 0;
    for (int i = 0; i < n; ++i) {
        const int s = sample_signal_step(kernel, 0, k, 0.0, rng);
        if (s == 1) ++up;
        if (s == -1) ++down;
    }
    auto within4se = [n](double phat, double p) {
        return std::abs(phat - p) <= 4.0 * std::sqrt(p * (1 - p) / n);
    };
    CHECK(within4se(static_cast<double>(up) / n, 0.05505));
    CHECK(within4se(static_cast<double>(down) / n, 0.04505));
}

TEST_CASE("boundary nodes never leave the grid") {
    const ProblemSpec spec = const_coeff_problem(1.0, 1.0, 0.1, 0.0, 0.5);
    const LatticeParams lat = make_lattice(spec, 0.1, 0.2);
    const TrinomialKernel kernel(spec, lat);
    std::mt19937_64 rng = make_stream(5, 1);
    const int top = lat.node_count - 1;
    for (int i = 0; i < 20000; ++i) {
        CHECK(top + sample_signal_step(kernel, 0, top, 0.0, rng) <= top);
        CHECK(0 + sample_signal_step(kernel, 0, 0, 0.0, rng) >= 0);
    }
}

TEST_CASE("rademacher observation increments") {
    const ObservationLaw law{ObsKind::rademacher, 0.01};
    std::mt19937_64 rng = make_stream(7, 7);
    for (int i = 0; i < 1000; ++i) {
        const double eta = sample_obs_increment(law, rng);
        CHECK((eta == 0.1 || eta == -0.1));
    }
    const ObsMomentReport rep = check_observation_moments(law);
    CHECK(rep.pass);
    CHECK(rep.mean_error == 0.0);
    CHECK(rep.variance_error == 0.0);
    CHECK(rep.third_moment == doctest::Approx(std::pow(0.01, 1.5)).epsilon(1e-14));
}

TEST_CASE("gaussian observation increments have the right scale") {
    const ObservationLaw law{ObsKind::gaussian, 0.01};
    std::mt19937_64 rng = make_stream(11, 3);
    const int n = 1'000'000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double eta = sample_obs_increment(law, rng);
        sum += eta;
        sum2 += eta * eta;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean) <= 4.0 * std::sqrt(law.h / n));
    CHECK(sum2 / n == doctest::Approx(law.h).epsilon(0.02));
}

TEST_CASE("identical seeds produce identical increment streams") {
    const ProblemSpec spec = const_coeff_problem(1.0, 1.0, 0.1, 0.0, 0.5);
    const LatticeParams lat = make_lattice(spec, 0.1, 0.2);
    const TrinomialKernel kernel(spec, lat);
    std::mt19937_64 a = make_stream(123, 9);
    std::mt19937_64 b = make_stream(123, 9);
    for (int i = 0; i < 500; ++i) {
        CHECK(sample_signal_step(kernel, 0, 3, 0.0, a) ==
              sample_signal_step(kernel, 0, 3, 0.0, b));
    }
}
