#ifndef KSK_PERTURBATION_HPP
#define KSK_PERTURBATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ksk/grid.hpp"
#include "ksk/kinetic.hpp"
#include "ksk/model.hpp"

namespace ksk {

// f = (F - M)/sqrt(M); the round trip F = M + sqrt(M) f is exact to round-off.
std::vector<double> to_perturbation(const KineticState& state, const PhaseSpaceGrid& grid,
                                    const MaxwellianCache& cache);
KineticState from_perturbation(const std::vector<double>& f, double t,
                               const PhaseSpaceGrid& grid, const MaxwellianCache& cache);

// Macro coefficients f0 = <chi0, f>, f1 = <chi1, f> per theta cell.
struct MacroCoefficients {
    std::vector<double> f0;
    std::vector<double> f1;
};

MacroCoefficients project_coefficients(const std::vector<double>& f, const PhaseSpaceGrid& grid,
                                       const MaxwellianCache& cache);

// Pf = f0 chi0 + f1 chi1 per theta.
std::vector<double> apply_P(const std::vector<double>& f, const PhaseSpaceGrid& grid,
                            const MaxwellianCache& cache);
std::vector<double> micro_part(const std::vector<double>& f, const PhaseSpaceGrid& grid,
                               const MaxwellianCache& cache); // (I - P) f

// L0 in the multiplication-plus-Laplacian form
//   L0 h = (sigma/m^2) d^2_omega h + (1/2m)(1 - (m/2sigma)(omega-nu)^2) h,
// centered second difference with a zero-flux-consistent closure; the discrete
// operator is exactly symmetric.
std::vector<double> apply_L0(const std::vector<double>& f, const PhaseSpaceGrid& grid,
                             const MaxwellianCache& cache);

// L1 f = (kappa/sigma) (omega-nu) sqrt(M) S[sqrt(M) f]; ranges in span{chi1}.
std::vector<double> apply_L1(const std::vector<double>& f, const PhaseSpaceGrid& grid,
                             const MaxwellianCache& cache);

// N(g, f) = (kappa/2sigma) S[sqrt(M) g] (omega-nu) f - (kappa/m) S[sqrt(M) g] d_omega f.
std::vector<double> apply_N(const std::vector<double>& f, const std::vector<double>& g_field,
                            const PhaseSpaceGrid& grid, const MaxwellianCache& cache);

// Mean-field kernel of the weighted field, S[sqrt(M) f](theta).
std::vector<double> coupling_of_perturbation(const std::vector<double>& f,
                                             const PhaseSpaceGrid& grid,
                                             const MaxwellianCache& cache);

// Norms.  "slice" variants act on an (omega, nu) function without the theta
// integral; full variants integrate d theta as well.
double inner_full(const std::vector<double>& a, const std::vector<double>& b,
                  const PhaseSpaceGrid& grid);
double l2_norm_sq(const std::vector<double>& f, const PhaseSpaceGrid& grid);
double l2_norm_sq_theta(const std::vector<double>& v, const PhaseSpaceGrid& grid);
double mu_norm_sq_slice(const std::vector<double>& h, const PhaseSpaceGrid& grid,
                        const MaxwellianCache& cache);
double mu_norm_sq(const std::vector<double>& f, const PhaseSpaceGrid& grid,
                  const MaxwellianCache& cache);
// H^s with mixed theta/omega centered differences, s in {0, 1, 2}; H^0 = L^2.
double hs_norm_sq(const std::vector<double>& f, const PhaseSpaceGrid& grid, int s);

// Band-limited random test field (theta modes <= 4, omega polynomial degree
// <= 4, sqrt(M) envelope), normalized to unit L^2 norm.
std::vector<double> random_test_field(const PhaseSpaceGrid& grid, const MaxwellianCache& cache,
                                      std::uint64_t seed, std::uint64_t trial);

// Operator-identity verification.
struct IdentityCheck {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct IdentityReport {
    std::vector<IdentityCheck> checks;
    bool all_pass = true;
};

IdentityReport operator_identity_suite(const PhaseSpaceGrid& grid, const MaxwellianCache& cache,
                                       const ModelParams& params, std::uint64_t seed,
                                       int n_trials = 50);

// Rayleigh-quotient lower-bound estimate of the coercivity constant lambda0:
// minimum of m <-L0 h, h> / ||(I - P0) h||_mu^2 over random slice fields and
// targeted low modes.  Throws numerics_error if a non-positive quotient
// appears (the continuous operator forbids it).
struct CoercivityEstimate {
    double lambda0 = 0.0;
    int n_trials = 0;
};

CoercivityEstimate coercivity_rayleigh(const PhaseSpaceGrid& grid, const MaxwellianCache& cache,
                                       const ModelParams& params, std::uint64_t seed,
                                       int n_trials = 32);

// Residual of the macro hyperbolic-parabolic system for (f0, f1), evaluated
// on >= 3 uniformly spaced perturbation snapshots with centered t/theta
// differences and quadrature micro terms.
struct F0F1Residual {
    double eq_f0 = 0.0; // L-infinity
    double eq_f1 = 0.0;
};

F0F1Residual f0f1_system_residual(const std::vector<double>& times,
                                  const std::vector<std::vector<double>>& fields,
                                  const PhaseSpaceGrid& grid, const MaxwellianCache& cache,
                                  const ModelParams& params);

// Log-linear decay fit of a norm series.
struct DecayFitResult {
    double rate = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double t_start = 0.0;
    double t_end = 0.0;
    bool no_decay = false; // flat or noisy series (R^2 < 0.5)
};

DecayFitResult decay_fit(const std::vector<double>& times, const std::vector<double>& values,
                         double transient_fraction = 0.1, double noise_floor = 1e-12);

} // namespace ksk

#endif
