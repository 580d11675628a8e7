#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ksk/errors.hpp"
#include "ksk/grid.hpp"
#include "ksk/model.hpp"

using namespace ksk;

namespace {
constexpr double two_pi = 6.283185307179586476925287;

double grid_mass(const MaxwellianCache& cache, const PhaseSpaceGrid& grid) {
    double m = 0.0;
    for (double v : cache.M) m += v;
    return m * grid.d_omega * two_pi;
}
} // namespace

TEST_CASE("maxwellian point values") {
    const ModelParams params{1.0, 1.0, 1.0};
    const FrequencyDistribution g = FrequencyDistribution::dirac(0.0);

    // direct evaluation of the stationary density at its peak
    CHECK(maxwellian(params, g, 0.0, 0.0) == doctest::Approx(0.06349363593424098).epsilon(1e-12));

    // Gaussian tail
    CHECK(maxwellian(params, g, 40.0, 0.0) < 1e-300);
    CHECK(maxwellian(params, g, -40.0, 0.0) < 1e-300);

    ModelParams degenerate{1.0, 1.0, 0.0};
    CHECK_THROWS_AS(maxwellian(degenerate, g, 0.0, 0.0), config_error);
}

TEST_CASE("maxwellian discrete normalization") {
    const ModelParams params{1.0, 1.0, 1.0};
    const FrequencyDistribution g = FrequencyDistribution::dirac(0.0);
    const PhaseSpaceGrid grid = PhaseSpaceGrid::make(params, g, 8, 256);
    const MaxwellianCache cache = MaxwellianCache::build(params, grid);
    CHECK(grid_mass(cache, grid) == doctest::Approx(1.0).epsilon(1e-8));

    // refinement does not grow the defect (midpoint quadrature of an analytic
    // decaying integrand is far below the nominal second-order tolerance)
    const PhaseSpaceGrid fine = PhaseSpaceGrid::make(params, g, 8, 512);
    const MaxwellianCache fine_cache = MaxwellianCache::build(params, fine);
    CHECK(std::abs(grid_mass(fine_cache, fine) - 1.0) <= 1e-10);
    CHECK(std::abs(grid_mass(cache, grid) - 1.0) <= 1e-10);
}

TEST_CASE("chi modes are orthonormal under grid quadrature") {
    for (double m : {0.5, 1.0, 2.0}) {
        for (double sigma : {0.5, 1.0, 4.0}) {
            const ModelParams params{m, 1.0, sigma};
            const FrequencyDistribution g = FrequencyDistribution::dirac(0.3);
            const PhaseSpaceGrid grid = PhaseSpaceGrid::make(params, g, 8, 256);
            const MaxwellianCache cache = MaxwellianCache::build(params, grid);
            CHECK(slice_inner(cache.chi0, cache.chi0, grid) == doctest::Approx(1.0).epsilon(1e-6));
            CHECK(slice_inner(cache.chi1, cache.chi1, grid) == doctest::Approx(1.0).epsilon(1e-6));
            CHECK(std::abs(slice_inner(cache.chi0, cache.chi1, grid)) < 1e-6);
        }
    }
}

TEST_CASE("gaussian_moment analytic values") {
    CHECK(gaussian_moment(ModelParams{1, 1, 1}, 0) ==
          doctest::Approx(1.0 / two_pi).epsilon(1e-14));
    CHECK(gaussian_moment(ModelParams{2, 1, 2}, 1) ==
          doctest::Approx(1.0 / two_pi).epsilon(1e-14));
    CHECK(gaussian_moment(ModelParams{1, 1, 2}, 2) ==
          doctest::Approx(3.0 / two_pi * 4.0).epsilon(1e-14));
    CHECK_THROWS_AS(gaussian_moment(ModelParams{1, 1, 1}, 5), config_error);
}

TEST_CASE("gaussian_moment matches grid quadrature") {
    const ModelParams params{2.0, 0.5, 1.5};
    const FrequencyDistribution g = FrequencyDistribution::dirac(-0.7);
    const PhaseSpaceGrid grid = PhaseSpaceGrid::make(params, g, 8, 256);
    const MaxwellianCache cache = MaxwellianCache::build(params, grid);
    for (int ell = 0; ell <= 3; ++ell) {
        double q = 0.0;
        for (int j = 0; j < grid.n_omega; ++j) {
            const double d = grid.omega(0, j) - g.nodes[0].nu;
            q += std::pow(d, 2 * ell) * cache.M[j];
        }
        q *= grid.d_omega;
        CHECK(q == doctest::Approx(gaussian_moment(params, ell)).epsilon(1e-8));
    }
}

TEST_CASE("chi derivative norms scale as (m/sigma)^j") {
    // || d^j chi ||^2 <= c (m/sigma)^j with one c across the parameter sweep;
    // the scaled ratios are grid-exact because the x-grid is parameter-free.
    std::vector<double> ratios0_j1, ratios0_j2, ratios1_j1, ratios1_j2;
    for (double m : {0.5, 1.0, 2.0, 4.0})
        for (double sigma : {0.5, 1.0, 2.0, 4.0}) {
            const ModelParams params{m, 1.0, sigma};
            const FrequencyDistribution g = FrequencyDistribution::dirac(0.0);
            const PhaseSpaceGrid grid = PhaseSpaceGrid::make(params, g, 8, 256);
            const MaxwellianCache cache = MaxwellianCache::build(params, grid);
            auto deriv_norm_sq = [&](const std::vector<double>& chi, int order) {
                std::vector<double> d1(chi.size(), 0.0);
                for (int j = 1; j + 1 < grid.n_omega; ++j)
                    d1[j] = (chi[j + 1] - chi[j - 1]) / (2.0 * grid.d_omega);
                const std::vector<double>* src = &d1;
                std::vector<double> d2(chi.size(), 0.0);
                if (order == 2) {
                    for (int j = 1; j + 1 < grid.n_omega; ++j)
                        d2[j] = (chi[j + 1] - 2.0 * chi[j] + chi[j - 1]) /
                                (grid.d_omega * grid.d_omega);
                    src = &d2;
                }
                double s = 0.0;
                for (double v : *src) s += v * v;
                return s * grid.d_omega;
            };
            const double r = m / sigma;
            ratios0_j1.push_back(deriv_norm_sq(cache.chi0, 1) / r);
            ratios0_j2.push_back(deriv_norm_sq(cache.chi0, 2) / (r * r));
            ratios1_j1.push_back(deriv_norm_sq(cache.chi1, 1) / r);
            ratios1_j2.push_back(deriv_norm_sq(cache.chi1, 2) / (r * r));
        }
    for (const auto* ratios : {&ratios0_j1, &ratios0_j2, &ratios1_j1, &ratios1_j2}) {
        for (double v : *ratios) CHECK(v <= 3.0);
        const auto [lo, hi] = std::minmax_element(ratios->begin(), ratios->end());
        CHECK(*hi - *lo <= 1e-10 * *hi);
    }
}

TEST_CASE("noise condition margin") {
    {
        const NoiseMarginReport r = noise_condition_margin(
            ModelParams{1.0, 1.0, 10.0}, FrequencyDistribution::dirac(0.0));
        CHECK(r.threshold == doctest::Approx(1.0));
        CHECK(r.ratio == doctest::Approx(10.0));
    }
    {
        const NoiseMarginReport r = noise_condition_margin(
            ModelParams{1.0, 0.0, 1.0}, FrequencyDistribution::dirac(0.0));
        CHECK(r.threshold == doctest::Approx(1.0));
        CHECK(r.ratio == doctest::Approx(1.0));
    }
    {
        const NoiseMarginReport r = noise_condition_margin(
            ModelParams{2.0, 1.0, 8.0}, FrequencyDistribution::dirac(1.0));
        CHECK(r.term_m_g_norm == doctest::Approx(4.0));
        CHECK(r.threshold == doctest::Approx(4.0));
        CHECK(r.ratio == doctest::Approx(2.0));
    }
}

TEST_CASE("frequency distributions") {
    const FrequencyDistribution g = FrequencyDistribution::gaussian(0.5, 2.0, 8);
    double wsum = 0.0;
    for (const auto& n : g.nodes) wsum += n.weight;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
    // Gauss-Hermite is exact for the low moments defining ||g||_nu
    CHECK(g.mean_nu() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g.nu_norm_sq() == doctest::Approx(1.0 + 0.5 * 0.5 + 4.0).epsilon(1e-12));

    const std::vector<FrequencyNode> bad_nodes{FrequencyNode{0.0, 0.5}, FrequencyNode{1.0, 0.6}};
    CHECK_THROWS_AS(FrequencyDistribution::discrete(bad_nodes), config_error);

    const FrequencyDistribution dirac = FrequencyDistribution::dirac(1.5);
    CHECK(dirac.weight_at(1.5) == doctest::Approx(1.0));
    CHECK_THROWS_AS(dirac.weight_at(0.0), config_error);
}

TEST_CASE("model params validation") {
    const ModelParams bad_m{-1.0, 1.0, 1.0};
    const ModelParams bad_kappa{1.0, -0.5, 1.0};
    const ModelParams zero_sigma{1.0, 1.0, 0.0};
    CHECK_THROWS_AS(bad_m.validate(), config_error);
    CHECK_THROWS_AS(bad_kappa.validate(), config_error);
    CHECK_THROWS_AS(zero_sigma.validate(false), config_error);
    CHECK_NOTHROW(zero_sigma.validate(true));
}
