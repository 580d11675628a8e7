#ifndef KSK_KINETIC_HPP
#define KSK_KINETIC_HPP

#include <string>
#include <vector>

#include "ksk/grid.hpp"
#include "ksk/model.hpp"

namespace ksk {

// Gridded density F(theta, omega, nu) at time t, flat-indexed via
// PhaseSpaceGrid::idx.  Invariants monitored along runs: F >= -1e-12,
// per-nu slice mass = w_k, total mass = 1.
struct KineticState {
    double t = 0.0;
    std::vector<double> F;
};

struct InitialProfile {
    // maxwellian | phase-bump | omega-shift | chi0-bump | tabulated
    std::string name = "maxwellian";
    double epsilon = 0.0;   // phase-bump: F = M (1 + eps cos(mode theta))
    int mode = 1;           // theta mode of the bump
    double shift = 0.0;     // omega-shift: Maxwellian translated in omega
    double amplitude = 0.0; // chi0-bump: F = M + amp sqrt(M) chi0 cos(mode theta)
    std::string file;       // tabulated: kinetic snapshot to load
};

struct InitReport {
    std::vector<double> normalization; // per-nu rescale factor applied
};

// Builds an initial state satisfying both initial-data constraints: each nu
// slice is rescaled to mass w_k (factors reported).  Throws config_error for
// unknown profiles, non-positive slice masses, or negative densities.
KineticState init_from_profile(const PhaseSpaceGrid& grid, const MaxwellianCache& cache,
                               const ModelParams& params, const InitialProfile& profile,
                               InitReport* report = nullptr);

// First theta-Fourier mode K1 = integral of e^{i theta} X over the grid.
struct FourierMode {
    double re = 0.0;
    double im = 0.0;
};

FourierMode first_fourier_mode(const std::vector<double>& field, const PhaseSpaceGrid& grid,
                               int n_threads = 1);

// Mean-field kernel S(theta_i) = Im(K1 e^{-i theta_i}); equals the direct
// double-sum sin quadrature exactly in exact arithmetic (tested invariant).
std::vector<double> coupling_field_kinetic(const KineticState& state, const PhaseSpaceGrid& grid,
                                           int n_threads = 1);

// Scratch buffers reused across steps; also caches the implicit diffusion
// factorization, which only depends on dt.
struct KineticWorkspace {
    std::vector<double> g_face;    // theta-face fluxes
    std::vector<double> advective; // div of advective fluxes
    std::vector<double> s_theta;
    std::vector<double> inv_pivot; // tridiagonal factorization
    std::vector<double> c_over_pivot;
    double lambda = -1.0;
};

// One IMEX step: explicit conservative MUSCL/minmod transport and drift with
// A[F] frozen at step start, then implicit (backward Euler) omega-diffusion by
// per-(nu,theta)-row tridiagonal solves.  Mass and per-nu marginals are
// preserved to round-off.  Throws numerics_error when dt violates the
// advective CFL bound (message carries a suggested dt).
void step_imex(KineticState& state, const PhaseSpaceGrid& grid, const ModelParams& params,
               double dt, KineticWorkspace& ws, int n_threads = 1);

// Largest dt meeting the combined advective CFL with the given safety factor.
double suggest_dt(const PhaseSpaceGrid& grid, const ModelParams& params, double cfl = 0.9);

struct ResidualNorms {
    double linf = 0.0;
    double l1 = 0.0;
};

// Full discrete right-hand side evaluated on the state (transport + drift +
// diffusion); for theta-homogeneous states this is the stationary-solution
// defect of the collision operator.
ResidualNorms stationarity_residual(const KineticState& state, const PhaseSpaceGrid& grid,
                                    const ModelParams& params,
                                    std::vector<double>* field_out = nullptr);

// Monitored quantities.
double total_mass(const KineticState& state, const PhaseSpaceGrid& grid);
double slice_mass(const KineticState& state, const PhaseSpaceGrid& grid, std::size_t k);
double marginal_error(const KineticState& state, const PhaseSpaceGrid& grid);
double min_value(const KineticState& state);
double omega_moment(const KineticState& state, const PhaseSpaceGrid& grid); // M1

} // namespace ksk

#endif
