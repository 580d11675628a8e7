#ifndef KSK_GRID_HPP
#define KSK_GRID_HPP

#include <cstddef>
#include <vector>

#include "ksk/model.hpp"

namespace ksk {

// Cell-centered discretization of T x R per natural-frequency node.
//   theta: n_theta uniform cells on [0, 2pi), periodic.
//   omega: n_omega uniform cells on the per-nu window [nu_k - W, nu_k + W];
//          the window follows nu because the Maxwellian is nu-centered.
// Omega quadrature is the midpoint sum F * d_omega, which is what the
// conservative fluxes telescope against.
struct PhaseSpaceGrid {
    int n_theta = 64;
    int n_omega = 128;
    double half_width = 0.0; // W
    double d_theta = 0.0;
    double d_omega = 0.0;
    FrequencyDistribution g;
    std::vector<double> theta; // cell centers

    // W = width_factor * sqrt(sigma/m); the default 10 puts the truncated
    // Gaussian tail below 1e-22, under any scheme error.
    static PhaseSpaceGrid make(const ModelParams& params, const FrequencyDistribution& g,
                               int n_theta, int n_omega, double width_factor = 10.0);

    std::size_t n_nu() const { return g.size(); }
    std::size_t cells() const { return n_nu() * static_cast<std::size_t>(n_theta) * n_omega; }
    double cell_volume() const { return d_theta * d_omega; }

    double omega(std::size_t k, int j) const {
        return g.nodes[k].nu - half_width + (j + 0.5) * d_omega;
    }

    // flat index of (nu node k, theta cell i, omega cell j)
    std::size_t idx(std::size_t k, int i, int j) const {
        return (k * n_theta + static_cast<std::size_t>(i)) * n_omega + j;
    }
};

// Per-(omega, nu) equilibrium data shared read-only by the kinetic and
// perturbation layers.  chi0 and chi1 are the orthonormal mass and momentum
// modes; alpha and beta are the mu-norm weights.
struct MaxwellianCache {
    ModelParams params;
    std::vector<double> M;      // n_nu * n_omega
    std::vector<double> sqrt_M;
    std::vector<double> chi0;   // sqrt(2pi) sqrt(M)
    std::vector<double> chi1;   // sqrt(2pi m / sigma) (omega - nu) sqrt(M)
    std::vector<double> alpha;  // 1 + (m/sigma)(omega - nu)^2
    double beta = 0.0;          // sigma / m

    static MaxwellianCache build(const ModelParams& params, const PhaseSpaceGrid& grid);

    std::size_t idx(std::size_t k, int j) const { return k * n_omega_ + j; }
    int n_omega() const { return n_omega_; }

private:
    int n_omega_ = 0;
};

// Quadrature of an (omega, nu)-dependent pair over the grid: sum over nu
// nodes (weights are embedded in the fields) and omega cells times d_omega.
double slice_inner(const std::vector<double>& a, const std::vector<double>& b,
                   const PhaseSpaceGrid& grid);

} // namespace ksk

#endif
