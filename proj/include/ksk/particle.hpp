#ifndef KSK_PARTICLE_HPP
#define KSK_PARTICLE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ksk/model.hpp"
#include "ksk/rng.hpp"

namespace ksk {

// State of the N-oscillator Langevin system.  Phases are kept reduced to
// [0, 2pi); the nu sequence is constant along any trajectory.
struct ParticleEnsemble {
    std::vector<double> theta;
    std::vector<double> omega;
    std::vector<double> nu;
    double t = 0.0;
    std::size_t n() const { return theta.size(); }
};

struct OrderParameter {
    double r = 0.0;   // in [0, 1]
    double phi = 0.0; // in [0, 2pi)
};

struct PhaseLaw {
    // uniform | wrapped-gaussian | point | phase-bump
    std::string kind = "uniform";
    double mu = 0.0;      // wrapped-gaussian center / point value
    double sd = 1.0;      // wrapped-gaussian spread
    double epsilon = 0.0; // phase-bump density (1 + eps cos theta)/2pi, |eps| < 1
    bool stratified = false; // stratified uniforms for low-noise marginals
};

struct OmegaLaw {
    // gaussian | point | maxwellian (gaussian with sd = sqrt(sigma/m) around nu)
    std::string kind = "maxwellian";
    double mean = 0.0;
    double sd = 1.0;
};

// Deterministic given seed: every draw uses a fixed per-particle counter.
ParticleEnsemble sample_initial(std::size_t n, const PhaseLaw& phase, const OmegaLaw& omega_law,
                                const FrequencyDistribution& g, const ModelParams& params,
                                std::uint64_t seed);

// r e^{i phi} = (1/N) sum e^{i theta_j}, reduced by a fixed-order pairwise sum.
OrderParameter order_parameter(const ParticleEnsemble& ens);

// kappa r sin(phi - theta); equals the O(N^2) pairwise sum exactly in exact
// arithmetic, which is a tested invariant.
double coupling_field(const OrderParameter& op, double kappa, double theta);

// One Euler-Maruyama step.  The order parameter is evaluated once from the
// pre-step state; per-particle noise comes from counter-based substreams keyed
// by (step_index, particle), so chunked execution is reproducible.
// Requires 0 < dt <= m/10.  Throws numerics_error naming the first non-finite
// particle if the state diverges.
void step(ParticleEnsemble& ens, const ModelParams& params, double dt,
          const CounterRng& rng, std::uint64_t step_index, int n_threads = 1);

struct EmpiricalMoments {
    double m0 = 1.0; // mass, 1 by convention
    double m1 = 0.0; // mean momentum (1/N) sum omega_i
};

EmpiricalMoments empirical_moments(const ParticleEnsemble& ens);

// theta-marginal histogram over [0, 2pi), normalized as a probability mass
// per bin; used for particle-kinetic cross-validation.
std::vector<double> phase_histogram(const ParticleEnsemble& ens, int bins);

} // namespace ksk

#endif
