#include <doctest.h>

#include <cmath>
#include <vector>

#include "ksk/errors.hpp"
#include "ksk/grid.hpp"
#include "ksk/kinetic.hpp"
#include "ksk/moments.hpp"
#include "ksk/rng.hpp"

using namespace ksk;

namespace {
constexpr double two_pi = 6.283185307179586476925287;

struct Setup {
    ModelParams params;
    PhaseSpaceGrid grid;
    MaxwellianCache cache;
};

Setup make_setup(ModelParams params, int nt = 32, int nw = 256) {
    PhaseSpaceGrid grid = PhaseSpaceGrid::make(params, FrequencyDistribution::dirac(0.0), nt, nw);
    MaxwellianCache cache = MaxwellianCache::build(params, grid);
    return Setup{params, std::move(grid), std::move(cache)};
}
} // namespace

TEST_CASE("macro fields of the Maxwellian") {
    Setup s = make_setup(ModelParams{1, 1, 1});
    KineticState eq = init_from_profile(s.grid, s.cache, s.params, InitialProfile{});
    const MacroFields m = compute_macro(eq, s.grid);
    for (int i = 0; i < s.grid.n_theta; ++i) {
        CHECK(m.rho[i] == doctest::Approx(1.0 / two_pi).epsilon(1e-10));
        CHECK(std::abs(m.u[i]) <= 1e-12);
        CHECK(m.p[i] == doctest::Approx(m.rho[i] * s.params.sigma / s.params.m).epsilon(1e-10));
        CHECK(std::abs(m.q[i]) <= 1e-12);
        CHECK(m.e[i] == doctest::Approx(m.p[i] / (2.0 * m.rho[i])).epsilon(1e-10));
    }
}

TEST_CASE("macro fields: homogeneity and translation") {
    Setup s = make_setup(ModelParams{1, 1, 1});
    KineticState eq = init_from_profile(s.grid, s.cache, s.params, InitialProfile{});
    const MacroFields base = compute_macro(eq, s.grid);

    KineticState doubled = eq;
    for (double& v : doubled.F) v *= 2.0;
    const MacroFields twice = compute_macro(doubled, s.grid);
    CHECK(twice.rho[0] == doctest::Approx(2.0 * base.rho[0]).epsilon(1e-13));
    CHECK(std::abs(twice.u[0]) <= 1e-12);
    CHECK(twice.p[0] == doctest::Approx(2.0 * base.p[0]).epsilon(1e-13));

    InitialProfile shift;
    shift.name = "omega-shift";
    shift.shift = 0.75;
    KineticState moved = init_from_profile(s.grid, s.cache, s.params, shift);
    const MacroFields m = compute_macro(moved, s.grid);
    CHECK(m.u[0] == doctest::Approx(0.75).epsilon(1e-8));
    CHECK(m.p[0] == doctest::Approx(base.p[0]).epsilon(1e-8)); // centered moment is invariant
}

TEST_CASE("moment identity p + rho u^2 = second raw moment") {
    Setup s = make_setup(ModelParams{1, 1, 1}, 16, 128);
    const CounterRng rng(3);
    KineticState st;
    st.F.resize(s.grid.cells());
    for (std::size_t q = 0; q < st.F.size(); ++q)
        st.F[q] = s.cache.M[q % s.grid.n_omega] * (1.0 + 0.5 * rng.uniform(q));
    const MacroFields m = compute_macro(st, s.grid);
    for (int i = 0; i < s.grid.n_theta; ++i) {
        double raw2 = 0.0;
        for (int j = 0; j < s.grid.n_omega; ++j)
            raw2 += s.grid.omega(0, j) * s.grid.omega(0, j) * st.F[s.grid.idx(0, i, j)];
        raw2 *= s.grid.d_omega;
        CHECK(m.p[i] + m.rho[i] * m.u[i] * m.u[i] == doctest::Approx(raw2).epsilon(1e-12));
    }
}

TEST_CASE("balance residuals vanish on the stationary Maxwellian") {
    Setup s = make_setup(ModelParams{1, 1, 1});
    KineticState eq = init_from_profile(s.grid, s.cache, s.params, InitialProfile{});
    const MacroFields m = compute_macro(eq, s.grid);
    const std::vector<MacroFields> snaps{m, m, m};
    const BalanceResiduals res = balance_residuals(snaps, 0.1, s.grid, s.params);
    // the energy sources cancel analytically: (sigma/m^2) rho = p / m
    CHECK(res.mass <= 1e-12);
    CHECK(res.momentum <= 1e-12);
    CHECK(res.energy <= 1e-12);

    const std::vector<MacroFields> too_few{m, m};
    CHECK_THROWS_AS(balance_residuals(too_few, 0.1, s.grid, s.params), config_error);
}

TEST_CASE("m0_m1_series fits an exact exponential") {
    std::vector<double> times;
    std::vector<MacroFields> snaps;
    for (int n = 0; n <= 40; ++n) {
        const double t = 0.05 * n;
        MacroFields m;
        m.t = t;
        m.rho.assign(16, 1.0 / two_pi);
        m.u.assign(16, 0.7 * std::exp(-2.0 * t)); // M1(t) = 0.7 e^{-2t} with rho = 1/2pi
        m.defined.assign(16, true);
        times.push_back(t);
        snaps.push_back(m);
    }
    const MomentSeries ms = m0_m1_series(times, snaps);
    CHECK(ms.rate_defined);
    CHECK(ms.rate == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(ms.m0[0] == doctest::Approx(1.0).epsilon(1e-12));

    // an identically-zero M1 yields a flagged no-fit result
    for (auto& m : snaps) m.u.assign(16, 0.0);
    const MomentSeries flat = m0_m1_series(times, snaps);
    CHECK_FALSE(flat.rate_defined);
}

TEST_CASE("hydro: uniform state is an exact fixed point") {
    Setup s = make_setup(ModelParams{1, 1, 1}, 32, 64);
    HydroState st = hydro_uniform(s.grid, s.params);
    const HydroState before = st;
    for (int n = 0; n < 10; ++n) step_hydro(st, s.grid, s.params, 1e-3);
    for (int i = 0; i < s.grid.n_theta; ++i) {
        CHECK(st.rho[i] == doctest::Approx(before.rho[i]).epsilon(1e-13));
        CHECK(std::abs(st.momentum[i]) <= 1e-15);
        CHECK(st.energy[i] == doctest::Approx(before.energy[i]).epsilon(1e-13));
    }
}

TEST_CASE("hydro conserves mass and decays M1 at rate 1/m") {
    for (double m_inertia : {0.5, 1.0}) {
        Setup s = make_setup(ModelParams{m_inertia, 0.8, 1.0}, 64, 64);
        HydroState st = hydro_uniform(s.grid, s.params, 0.05, 0.3);
        const double dt = 0.2 * hydro_suggest_dt(st, s.grid, s.params);
        std::vector<double> times;
        std::vector<MacroFields> snaps;
        auto snap = [&]() {
            MacroFields m;
            m.t = st.t;
            m.rho = st.rho;
            m.u.resize(st.rho.size());
            for (std::size_t i = 0; i < st.rho.size(); ++i) m.u[i] = st.momentum[i] / st.rho[i];
            m.defined.assign(st.rho.size(), true);
            times.push_back(st.t);
            snaps.push_back(m);
        };
        snap();
        double mass0 = 0.0;
        for (double v : st.rho) mass0 += v;
        while (st.t < 1.5 * m_inertia) {
            step_hydro(st, s.grid, s.params, dt);
            snap();
        }
        double mass1 = 0.0;
        for (double v : st.rho) mass1 += v;
        CHECK(std::abs(mass1 - mass0) * s.grid.d_theta <= 1e-12);
        const MomentSeries ms = m0_m1_series(times, snaps);
        CHECK(ms.rate_defined);
        CHECK(std::abs(ms.rate * m_inertia - 1.0) <= 0.02);
    }
}

TEST_CASE("hydro aborts on vacuum") {
    Setup s = make_setup(ModelParams{1, 1, 1}, 32, 64);
    HydroState st = hydro_uniform(s.grid, s.params);
    st.rho[5] = 1e-15;
    CHECK_THROWS_AS(step_hydro(st, s.grid, s.params, 1e-4), numerics_error);
}

TEST_CASE("hydro and kinetic M1 series agree near equilibrium") {
    const ModelParams params{1.0, 0.5, 1.0};
    Setup s = make_setup(params, 32, 256);
    InitialProfile prof;
    prof.name = "omega-shift";
    prof.shift = 0.2;
    KineticState kin = init_from_profile(s.grid, s.cache, s.params, prof);
    KineticWorkspace ws;
    HydroState hyd = hydro_uniform(s.grid, params, 0.0, 0.2);

    const double dt_kin = std::min(1e-3, suggest_dt(s.grid, params, 0.45));
    const double dt_hyd = 0.2 * hydro_suggest_dt(hyd, s.grid, params);
    for (double t_probe : {0.25, 0.5, 0.75, 1.0}) {
        while (kin.t < t_probe - 1e-12)
            step_imex(kin, s.grid, params, std::min(dt_kin, t_probe - kin.t), ws);
        while (hyd.t < t_probe - 1e-12)
            step_hydro(hyd, s.grid, params, std::min(dt_hyd, t_probe - hyd.t));
        const double m1_kin = omega_moment(kin, s.grid);
        double m1_hyd = 0.0;
        for (double v : hyd.momentum) m1_hyd += v;
        m1_hyd *= s.grid.d_theta;
        CHECK(std::abs(m1_kin - m1_hyd) <= 0.02 * std::abs(m1_hyd));
    }
}
