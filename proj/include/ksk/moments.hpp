#ifndef KSK_MOMENTS_HPP
#define KSK_MOMENTS_HPP

#include <vector>

#include "ksk/grid.hpp"
#include "ksk/kinetic.hpp"
#include "ksk/model.hpp"

namespace ksk {

// Macroscopic observables per theta cell for the identical-oscillator system:
// rho, bulk velocity u, internal energy e, pressure p (second centered
// moment), heat flux q.  Cells where rho falls below the floor carry
// defined[i] = false instead of a division by near-zero.
struct MacroFields {
    std::vector<double> rho;
    std::vector<double> u;
    std::vector<double> e;
    std::vector<double> p;
    std::vector<double> q;
    std::vector<double> energy; // rho (e + u^2/2), the conserved energy density
    std::vector<bool> defined;
    double t = 0.0;
};

inline constexpr double rho_floor = 1e-14;

// Grid quadrature of the omega moments.  Requires a single-nu (identical
// oscillator) state.
MacroFields compute_macro(const KineticState& state, const PhaseSpaceGrid& grid);

// sin-convolution source integral S_rho(theta) = int sin(theta*-theta) rho(theta*),
// evaluated through rho's first Fourier mode.
std::vector<double> rho_coupling(const std::vector<double>& rho, const PhaseSpaceGrid& grid);

// L-infinity residuals of the three local balance laws (mass, momentum,
// energy), evaluated on >= 3 stored snapshots at uniform cadence with centered
// differences in t and theta.  Throws config_error with fewer snapshots.
struct BalanceResiduals {
    double mass = 0.0;
    double momentum = 0.0;
    double energy = 0.0;
};

BalanceResiduals balance_residuals(const std::vector<MacroFields>& snaps, double dt_diag,
                                   const PhaseSpaceGrid& grid, const ModelParams& params);

// M0(t), M1(t) and a least-squares decay rate of |M1| (samples below 1e-10
// are excluded; if none remain the fit is flagged instead of thrown).
struct MomentSeries {
    std::vector<double> t;
    std::vector<double> m0;
    std::vector<double> m1;
    double rate = 0.0;
    bool rate_defined = false;
};

MomentSeries m0_m1_series(const std::vector<double>& times, const std::vector<MacroFields>& snaps);

// Closed hydrodynamic system (q = 0): conserved variables rho, rho u,
// rho(e + u^2/2) on the periodic theta grid.
struct HydroState {
    std::vector<double> rho;
    std::vector<double> momentum;
    std::vector<double> energy;
    double t = 0.0;
};

HydroState hydro_uniform(const PhaseSpaceGrid& grid, const ModelParams& params,
                         double bump_eps = 0.0, double u0 = 0.0);

// One MUSCL/Rusanov finite-volume step (Heun time stepping) of the closed
// system with the synchronization sources.  Conserves the rho integral to
// round-off.  Throws numerics_error on vacuum (rho < floor) or CFL violation.
void step_hydro(HydroState& state, const PhaseSpaceGrid& grid, const ModelParams& params,
                double dt);

double hydro_suggest_dt(const HydroState& state, const PhaseSpaceGrid& grid,
                        const ModelParams& params, double cfl = 0.45);

} // namespace ksk

#endif
