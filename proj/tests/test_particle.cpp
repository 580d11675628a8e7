#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "ksk/errors.hpp"
#include "ksk/particle.hpp"
#include "ksk/rng.hpp"
#include "ksk/snapshot.hpp"

using namespace ksk;

namespace {
constexpr double pi = 3.14159265358979323846;

ParticleEnsemble make_ensemble(std::vector<double> theta, std::vector<double> omega,
                               std::vector<double> nu) {
    ParticleEnsemble e;
    e.theta = std::move(theta);
    e.omega = std::move(omega);
    e.nu = std::move(nu);
    return e;
}
} // namespace

TEST_CASE("order parameter") {
    // coherent state
    ParticleEnsemble coherent = make_ensemble({1.3, 1.3, 1.3}, {0, 0, 0}, {0, 0, 0});
    OrderParameter op = order_parameter(coherent);
    CHECK(op.r == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(op.phi == doctest::Approx(1.3).epsilon(1e-14));

    // equispaced phases cancel
    std::vector<double> eq(8);
    for (int i = 0; i < 8; ++i) eq[i] = 2.0 * pi * i / 8.0;
    op = order_parameter(make_ensemble(eq, std::vector<double>(8, 0.0), std::vector<double>(8, 0.0)));
    CHECK(op.r <= 1e-14);

    // two-particle hand evaluation
    op = order_parameter(make_ensemble({0.0, pi / 2.0}, {0, 0}, {0, 0}));
    CHECK(op.r == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));
    CHECK(op.phi == doctest::Approx(pi / 4.0).epsilon(1e-14));
}

TEST_CASE("coupling field") {
    OrderParameter incoherent{0.0, 0.0};
    CHECK(coupling_field(incoherent, 2.0, 1.234) == 0.0);

    OrderParameter op{0.7, 1.1};
    CHECK(coupling_field(op, 2.0, 1.1) == doctest::Approx(0.0).epsilon(1e-15));

    // two-particle check: reduced form equals the pairwise sum
    ParticleEnsemble two = make_ensemble({0.0, pi / 2.0}, {0, 0}, {0, 0});
    const OrderParameter op2 = order_parameter(two);
    CHECK(coupling_field(op2, 1.0, 0.0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("coupling field equals brute-force pairwise sum") {
    const CounterRng rng(42);
    for (std::size_t n : {std::size_t{3}, std::size_t{50}, std::size_t{500}}) {
        ParticleEnsemble ens;
        ens.theta.resize(n);
        ens.omega.assign(n, 0.0);
        ens.nu.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) ens.theta[i] = 2.0 * pi * rng.uniform(n * 131 + i);
        const OrderParameter op = order_parameter(ens);
        for (double theta : {0.0, 0.9, 3.7}) {
            double brute = 0.0;
            for (std::size_t j = 0; j < n; ++j) brute += std::sin(ens.theta[j] - theta);
            brute *= 1.7 / static_cast<double>(n);
            CHECK(coupling_field(op, 1.7, theta) == doctest::Approx(brute).epsilon(1e-12));
        }
    }
}

TEST_CASE("sample_initial determinism and laws") {
    const ModelParams params{1.0, 1.0, 1.0};
    PhaseLaw zero_phase{"point", 0.0, 1.0, 0.0, false};
    OmegaLaw zero_omega{"point", 0.0, 1.0};
    const FrequencyDistribution g = FrequencyDistribution::dirac(0.0);

    ParticleEnsemble a = sample_initial(4, zero_phase, zero_omega, g, params, 7);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a.theta[i] == 0.0);
        CHECK(a.omega[i] == 0.0);
        CHECK(a.nu[i] == 0.0);
    }

    PhaseLaw uniform{"uniform", 0.0, 1.0, 0.0, false};
    OmegaLaw maxw{"maxwellian", 0.0, 1.0};
    ParticleEnsemble b1 = sample_initial(1000, uniform, maxw, g, params, 99);
    ParticleEnsemble b2 = sample_initial(1000, uniform, maxw, g, params, 99);
    CHECK(b1.theta == b2.theta);
    CHECK(b1.omega == b2.omega);
    CHECK(b1.nu == b2.nu);

    ParticleEnsemble c = sample_initial(100000, uniform, maxw, g, params, 3);
    for (double nu : c.nu) CHECK(nu == 0.0);

    PhaseLaw bogus{"triangular", 0.0, 1.0, 0.0, false};
    CHECK_THROWS_AS(sample_initial(10, bogus, maxw, g, params, 1), config_error);
}

TEST_CASE("step: noiseless relaxation toward nu") {
    // omega(t) = nu + (omega0 - nu) e^{-t/m}; single particle, no coupling
    const ModelParams params{1.0, 0.0, 0.0};
    ParticleEnsemble ens = make_ensemble({0.0}, {0.0}, {2.0});
    const CounterRng rng(0);
    const double dt = 1e-3;
    std::uint64_t s = 0;
    while (ens.t < 1.0 - 1e-12) step(ens, params, dt, rng, s++);
    CHECK(std::abs(ens.omega[0] - 2.0 * (1.0 - std::exp(-1.0))) <= 2.0 * dt);
}

TEST_CASE("step: nu is invariant and guards fire") {
    const ModelParams params{1.0, 2.0, 0.5};
    PhaseLaw uniform{"uniform", 0.0, 1.0, 0.0, false};
    OmegaLaw maxw{"maxwellian", 0.0, 1.0};
    const FrequencyDistribution g = FrequencyDistribution::gaussian(0.0, 1.0, 4);
    ParticleEnsemble ens = sample_initial(200, uniform, maxw, g, params, 5);
    const std::vector<double> nu0 = ens.nu;
    const CounterRng rng(5);
    for (std::uint64_t s = 0; s < 50; ++s) step(ens, params, 0.01, rng, s);
    CHECK(ens.nu == nu0);
    for (double th : ens.theta) {
        CHECK(th >= 0.0);
        CHECK(th < 2.0 * pi);
    }
    CHECK_THROWS_AS(step(ens, params, params.m / 5.0, rng, 1000), numerics_error);
}

TEST_CASE("step is bit-identical across thread counts") {
    const ModelParams params{1.0, 1.5, 0.8};
    PhaseLaw uniform{"uniform", 0.0, 1.0, 0.0, false};
    OmegaLaw maxw{"maxwellian", 0.0, 1.0};
    const FrequencyDistribution g = FrequencyDistribution::dirac(0.0);
    ParticleEnsemble a = sample_initial(501, uniform, maxw, g, params, 11);
    ParticleEnsemble b = a;
    const CounterRng rng(11);
    for (std::uint64_t s = 0; s < 20; ++s) {
        step(a, params, 0.01, rng, s, 1);
        step(b, params, 0.01, rng, s, 4);
    }
    CHECK(a.theta == b.theta);
    CHECK(a.omega == b.omega);
}

TEST_CASE("M1 decays at rate 1/m for identical noiseless oscillators") {
    // the pairwise sin coupling cancels exactly in the mean
    const ModelParams params{1.0, 5.0, 0.0};
    const FrequencyDistribution g = FrequencyDistribution::dirac(0.0);
    PhaseLaw uniform{"uniform", 0.0, 1.0, 0.0, false};
    OmegaLaw point{"point", 1.0, 0.0};

    double prev_err = 0.0;
    for (double dt : {1e-2, 5e-3}) {
        ParticleEnsemble ens = sample_initial(1000, uniform, point, g, params, 21);
        const CounterRng rng(21);
        std::uint64_t s = 0;
        double worst = 0.0;
        while (ens.t < 10.0 - 1e-12) {
            step(ens, params, dt, rng, s++);
            const double expected = std::exp(-ens.t / params.m);
            worst = std::max(worst, std::abs(empirical_moments(ens).m1 - expected));
        }
        CHECK(worst <= 10.0 * dt);
        if (prev_err > 0.0) CHECK(worst <= 0.6 * prev_err); // halves with dt
        prev_err = worst;
    }
}

TEST_CASE("strong coupling synchronizes identical oscillators") {
    const ModelParams params{0.1, 10.0, 0.0};
    const FrequencyDistribution g = FrequencyDistribution::dirac(0.0);
    PhaseLaw uniform{"uniform", 0.0, 1.0, 0.0, false};
    OmegaLaw point{"point", 0.0, 0.0};
    ParticleEnsemble ens = sample_initial(200, uniform, point, g, params, 8);
    const CounterRng rng(8);
    std::uint64_t s = 0;
    while (ens.t < 50.0 - 1e-9) step(ens, params, 0.005, rng, s++);
    CHECK(order_parameter(ens).r >= 0.99);
}

TEST_CASE("empirical moments") {
    ParticleEnsemble a = make_ensemble({0, 1, 2}, {3, 3, 3}, {0, 0, 0});
    CHECK(empirical_moments(a).m1 == doctest::Approx(3.0));
    ParticleEnsemble b = make_ensemble({0, 1}, {-1, 1}, {0, 0});
    CHECK(empirical_moments(b).m1 == doctest::Approx(0.0));
}

TEST_CASE("particle snapshot round-trip") {
    const ModelParams params{1.0, 1.0, 1.0};
    PhaseLaw uniform{"uniform", 0.0, 1.0, 0.0, false};
    OmegaLaw maxw{"maxwellian", 0.0, 1.0};
    ParticleEnsemble ens =
        sample_initial(257, uniform, maxw, FrequencyDistribution::dirac(0.4), params, 31);
    ens.t = 1.75;
    std::filesystem::create_directories("test_out");
    write_particle_snapshot("test_out/ens.kspn", ens);
    const ParticleEnsemble back = read_particle_snapshot("test_out/ens.kspn");
    CHECK(back.t == ens.t);
    CHECK(back.theta == ens.theta);
    CHECK(back.omega == ens.omega);
    CHECK(back.nu == ens.nu);
}

TEST_CASE("phase histogram is a probability mass") {
    const ModelParams params{1.0, 1.0, 1.0};
    PhaseLaw bump{"phase-bump", 0.0, 1.0, 0.4, true};
    OmegaLaw maxw{"maxwellian", 0.0, 1.0};
    const FrequencyDistribution g = FrequencyDistribution::dirac(0.0);
    ParticleEnsemble ens = sample_initial(20000, bump, maxw, g, params, 17);
    const std::vector<double> h = phase_histogram(ens, 32);
    double sum = 0.0;
    for (double v : h) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    // stratified sampling reproduces the bump density closely
    const double dbin = 2.0 * pi / 32.0;
    const double expected_first =
        (dbin + 0.4 * (std::sin(dbin) - std::sin(0.0))) / (2.0 * pi);
    CHECK(h[0] == doctest::Approx(expected_first).epsilon(0.05));
}
