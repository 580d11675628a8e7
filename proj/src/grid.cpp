#include "ksk/grid.hpp"

#include <cmath>

#include "ksk/errors.hpp"

namespace ksk {

namespace {
constexpr double two_pi = 6.283185307179586476925287;
}

PhaseSpaceGrid PhaseSpaceGrid::make(const ModelParams& params, const FrequencyDistribution& g,
                                    int n_theta, int n_omega, double width_factor) {
    params.validate();
    g.validate();
    if (n_theta < 8 || n_theta % 2 != 0) throw config_error("grid.n_theta must be even and >= 8");
    if (n_omega < 32 || n_omega % 2 != 0) throw config_error("grid.n_omega must be even and >= 32");
    if (!(width_factor > 0.0)) throw config_error("grid.width_factor must be > 0");

    PhaseSpaceGrid grid;
    grid.n_theta = n_theta;
    grid.n_omega = n_omega;
    grid.g = g;
    grid.half_width = width_factor * std::sqrt(params.sigma / params.m);
    grid.d_theta = two_pi / n_theta;
    grid.d_omega = 2.0 * grid.half_width / n_omega;
    grid.theta.resize(n_theta);
    for (int i = 0; i < n_theta; ++i) grid.theta[i] = (i + 0.5) * grid.d_theta;
    return grid;
}

MaxwellianCache MaxwellianCache::build(const ModelParams& params, const PhaseSpaceGrid& grid) {
    MaxwellianCache cache;
    cache.params = params;
    cache.n_omega_ = grid.n_omega;
    cache.beta = params.sigma / params.m;
    const std::size_t n = grid.n_nu() * grid.n_omega;
    cache.M.resize(n);
    cache.sqrt_M.resize(n);
    cache.chi0.resize(n);
    cache.chi1.resize(n);
    cache.alpha.resize(n);
    const double chi1_scale = std::sqrt(two_pi * params.m / params.sigma);
    for (std::size_t k = 0; k < grid.n_nu(); ++k) {
        const double nu = grid.g.nodes[k].nu;
        const double w = grid.g.nodes[k].weight;
        for (int j = 0; j < grid.n_omega; ++j) {
            const std::size_t q = cache.idx(k, j);
            const double omega = grid.omega(k, j);
            const double d = omega - nu;
            cache.M[q] = maxwellian_density(params, omega, nu) * w;
            cache.sqrt_M[q] = std::sqrt(cache.M[q]);
            cache.chi0[q] = std::sqrt(two_pi) * cache.sqrt_M[q];
            cache.chi1[q] = chi1_scale * d * cache.sqrt_M[q];
            cache.alpha[q] = 1.0 + (params.m / params.sigma) * d * d;
        }
    }
    return cache;
}

double slice_inner(const std::vector<double>& a, const std::vector<double>& b,
                   const PhaseSpaceGrid& grid) {
    double s = 0.0;
    const std::size_t n = grid.n_nu() * grid.n_omega;
    for (std::size_t q = 0; q < n; ++q) s += a[q] * b[q];
    return s * grid.d_omega;
}

} // namespace ksk
