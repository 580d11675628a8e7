#ifndef KSK_SNAPSHOT_HPP
#define KSK_SNAPSHOT_HPP

#include <string>

#include "ksk/grid.hpp"
#include "ksk/model.hpp"

namespace ksk {

struct KineticState;
struct ParticleEnsemble;

// Kinetic snapshot, little-endian binary:
//   magic "KSKI", version u32, n_theta u32, n_omega u32, n_nu u32,
//   m f64, kappa f64, sigma f64, t f64,
//   nu nodes (n_nu f64), nu weights (n_nu f64),
//   F row-major (nu, theta, omega) f64.
void write_kinetic_snapshot(const std::string& path, const KineticState& state,
                            const PhaseSpaceGrid& grid, const ModelParams& params);

// Reads a snapshot whose dimensions must match `grid` (throws config_error on
// a mismatch or malformed file).
KineticState read_kinetic_snapshot(const std::string& path, const PhaseSpaceGrid& grid);

// Particle snapshot: magic "KSPN", version u32, n u64, t f64, then theta,
// omega, nu as three contiguous f64 sequences.
void write_particle_snapshot(const std::string& path, const ParticleEnsemble& ens);
ParticleEnsemble read_particle_snapshot(const std::string& path);

} // namespace ksk

#endif
