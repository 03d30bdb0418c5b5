#include <doctest.h>

#include <cmath>
#include <random>

#include "posc/errors.hpp"
#include "posc/filter.hpp"
#include "posc/rng.hpp"
#include "test_helpers.hpp"

using namespace posc;
using posc::testing::const_coeff_problem;
using posc::testing::tiny_lq;

namespace {

// 5-node lq instance with n = 3: dx = 0.1, h = 0.004, T = 0.012.
struct FilterFixture {
    ProblemSpec spec = tiny_lq(0.012, 2, 0.1);
    LatticeParams lat = make_lattice(spec, 0.1, 0.8);  // C0 = 1/2, h = 0.8*0.01/2
    TrinomialKernel kernel{spec, lat};
    ObservationLaw law{ObsKind::rademacher, lat.h};
};

}  // namespace

TEST_CASE("integrate: dirac, symmetric and weighted cases") {
    FilterFixture f;
    REQUIRE(f.lat.node_count == 5);
    const DiscreteMeasure dirac = DiscreteMeasure::dirac(f.lat.node_index(0.2), 5);
    CHECK(integrate(dirac, f.lat, [](double x) { return x * x; }) ==
          doctest::Approx(0.04).epsilon(1e-14));

    DiscreteMeasure sym;
    sym.weights = {0.0, 0.5, 0.0, 0.5, 0.0};  // uniform on {-0.1, +0.1}
    CHECK(integrate(sym, f.lat, [](double x) { return x; }) ==
          doctest::Approx(0.0).epsilon(1e-15));

    DiscreteMeasure weighted;
    weighted.weights = {0.0, 0.0, 0.25, 0.75, 0.0};  // (0.25, 0.75) on (0, 0.1)
    CHECK(integrate(weighted, f.lat, [](double x) { return x; }) ==
          doctest::Approx(0.075).epsilon(1e-14));
}

TEST_CASE("lambda update") {
    FilterFixture f;
    DiscreteMeasure sym;
    sym.weights = {0.0, 0.5, 0.0, 0.5, 0.0};
    const LambdaState l1 = lambda_update({1.0}, sym, f.lat, 0.0, 0.1, f.spec);
    CHECK(l1.value == 1.0);  // mu(p) = 0

    const DiscreteMeasure at01 = DiscreteMeasure::dirac(f.lat.node_index(0.1), 5);
    const LambdaState l2 = lambda_update({1.0}, at01, f.lat, 0.0, 0.1, f.spec);
    CHECK(l2.value == doctest::Approx(1.01).epsilon(1e-15));
}

TEST_CASE("lambda update rejects nonpositive factors") {
    // mu(p) = 0.49 and |eta| >= 1/0.49 drive the factor through zero.
    ProblemSpec spec = lq_problem(0.1, 0.0, 3.0, 7);
    const LatticeParams lat = make_lattice(spec, 0.49, 1.0);
    const DiscreteMeasure at049 = DiscreteMeasure::dirac(lat.node_index(0.49), lat.node_count);
    const double eta = -(1.0 / 0.49) * (1.0 + 1e-6);
    CHECK_THROWS_AS(lambda_update({1.0}, at049, lat, 0.0, eta, spec), StepSizeError);
}

TEST_CASE("filter update with p = 0 is the kernel push-forward") {
    const ProblemSpec spec = const_coeff_problem(0.0, 1.0, 0.1, 0.0, 0.2);
    const LatticeParams lat = make_lattice(spec, 0.1, 0.1);  // h = 0.001
    REQUIRE(lat.node_count == 5);
    const TrinomialKernel kernel(spec, lat);
    const DiscreteMeasure mu = DiscreteMeasure::dirac(2, 5);
    const DiscreteMeasure post = filter_update(0, 0.0, mu, 0.0316, kernel, spec);
    CHECK(post.weights[1] == doctest::Approx(0.05).epsilon(1e-13));
    CHECK(post.weights[2] == doctest::Approx(0.90).epsilon(1e-13));
    CHECK(post.weights[3] == doctest::Approx(0.05).epsilon(1e-13));
    CHECK(post.total() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("filter matches the enumeration oracle on every history") {
    FilterFixture f;
    const int n = 3;
    // History-dependent policy: flip on the parity of up-moves seen so far.
    const ObsPolicy policy = [&](int, std::span<const double> etas) {
        int ups = 0;
        for (double e : etas) {
            if (e > 0) ++ups;
        }
        return ups % 2 == 0 ? f.spec.action_grid.back() : f.spec.action_grid.front();
    };
    const FilterOracleResult oracle = brute_force_filter(f.spec, f.kernel, f.law, policy, n);
    REQUIRE(oracle.levels.size() == 4);

    const double sqrt_h = f.law.sqrt_h();
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        DiscreteMeasure mu = DiscreteMeasure::dirac(f.lat.node_index(0.0), f.lat.node_count);
        LambdaState lambda{1.0};
        std::vector<double> etas;
        for (int l = 0; l < n; ++l) {
            const double eta = (mask >> l) & 1u ? sqrt_h : -sqrt_h;
            const double a = policy(l, etas);
            const DiscreteMeasure next = filter_update(l, a, mu, eta, f.kernel, f.spec);
            lambda = lambda_update(lambda, mu, f.lat, f.lat.time(l), eta, f.spec);
            mu = next;
            etas.push_back(eta);

            const FilterOracleNode& node =
                oracle.levels[static_cast<std::size_t>(l) + 1][mask & ((1u << (l + 1)) - 1)];
            for (int k = 0; k < f.lat.node_count; ++k) {
                CHECK(mu.weights[static_cast<std::size_t>(k)] ==
                      doctest::Approx(node.conditional_law.weights[static_cast<std::size_t>(k)])
                          .epsilon(1e-10));
                // Unnormalized identity: lambda * mu_k = E[L 1{X = x_k} | Y].
                CHECK(lambda.value * mu.weights[static_cast<std::size_t>(k)] ==
                      doctest::Approx(node.unnormalized[static_cast<std::size_t>(k)])
                          .epsilon(1e-10));
            }
            CHECK(lambda.value == doctest::Approx(node.lambda).epsilon(1e-10));
        }
    }
}

TEST_CASE("oracle with one step and p = 0 equals the push-forward") {
    const ProblemSpec spec = const_coeff_problem(0.0, 1.0, 0.1, 0.0, 0.2);
    const LatticeParams lat = make_lattice(spec, 0.1, 0.1);
    const TrinomialKernel kernel(spec, lat);
    const ObservationLaw law{ObsKind::rademacher, lat.h};
    const FilterOracleResult oracle =
        brute_force_filter(spec, kernel, law, [](int, std::span<const double>) { return 0.0; }, 1);
    for (unsigned mask = 0; mask < 2; ++mask) {
        const FilterOracleNode& node = oracle.levels[1][mask];
        CHECK(node.lambda == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(node.conditional_law.weights[1] == doctest::Approx(0.05).epsilon(1e-13));
        CHECK(node.conditional_law.weights[2] == doctest::Approx(0.90).epsilon(1e-13));
        CHECK(node.conditional_law.weights[3] == doctest::Approx(0.05).epsilon(1e-13));
    }
}

TEST_CASE("one-step conditionals differ across the observation branches") {
    FilterFixture f;
    const ObsPolicy policy = [](int, std::span<const double>) { return 1.0; };
    const FilterOracleResult oracle = brute_force_filter(f.spec, f.kernel, f.law, policy, 1);
    const DiscreteMeasure& plus = oracle.levels[1][1].conditional_law;
    const DiscreteMeasure& minus = oracle.levels[1][0].conditional_law;
    bool differs = false;
    for (std::size_t k = 0; k < plus.weights.size(); ++k) {
        if (std::abs(plus.weights[k] - minus.weights[k]) > 1e-12) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("filter output stays a probability measure under random inputs") {
    FilterFixture f;
    std::mt19937_64 rng = make_stream(99, 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        DiscreteMeasure mu;
        mu.weights.resize(static_cast<std::size_t>(f.lat.node_count));
        double total = 0.0;
        for (double& w : mu.weights) {
            w = -std::log(u(rng));
            total += w;
        }
        for (double& w : mu.weights) w /= total;

        const int l = static_cast<int>(u(rng) * f.lat.n_steps);
        const double a = u(rng) < 0.5 ? f.spec.action_grid.front() : f.spec.action_grid.back();
        const double eta = u(rng) < 0.5 ? f.law.sqrt_h() : -f.law.sqrt_h();
        const DiscreteMeasure post = filter_update(l, a, mu, eta, f.kernel, f.spec);
        CHECK(is_probability_measure(post, 1e-12));
    }
}

TEST_CASE("filter update depends only on (l, a, mu, eta)") {
    FilterFixture f;
    // Reach the same belief through two different call histories.
    DiscreteMeasure mu1 = DiscreteMeasure::dirac(2, 5);
    mu1 = filter_update(0, 1.0, mu1, f.law.sqrt_h(), f.kernel, f.spec);
    DiscreteMeasure mu2;
    mu2.weights = mu1.weights;  // bitwise-identical belief, fresh object
    filter_update(1, -1.0, mu2, -f.law.sqrt_h(), f.kernel, f.spec);  // unrelated detour

    const DiscreteMeasure out1 = filter_update(1, 1.0, mu1, f.law.sqrt_h(), f.kernel, f.spec);
    const DiscreteMeasure out2 = filter_update(1, 1.0, mu2, f.law.sqrt_h(), f.kernel, f.spec);
    for (std::size_t k = 0; k < out1.weights.size(); ++k) {
        CHECK(out1.weights[k] == out2.weights[k]);
    }
}

TEST_CASE("lambda stays 1 when p = 0") {
    const ProblemSpec spec = const_coeff_problem(0.0, 1.0, 0.1, 0.0, 0.2);
    const LatticeParams lat = make_lattice(spec, 0.1, 0.1);
    const TrinomialKernel kernel(spec, lat);
    DiscreteMeasure mu = DiscreteMeasure::dirac(2, lat.node_count);
    LambdaState lambda{1.0};
    for (int l = 0; l < 4; ++l) {
        const double eta = l % 2 == 0 ? 0.0316 : -0.0316;
        lambda = lambda_update(lambda, mu, lat, lat.time(l), eta, spec);
        mu = filter_update(l, 0.0, mu, eta, kernel, spec);
        CHECK(lambda.value == 1.0);
    }
}

TEST_CASE("oracle rejects oversized trees") {
    FilterFixture f;
    const ObsPolicy policy = [](int, std::span<const double>) { return 1.0; };
    CHECK_THROWS_AS(brute_force_filter(f.spec, f.kernel, f.law, policy, 5),
                    InstanceTooLargeError);
}
