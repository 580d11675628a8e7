#ifndef KSK_CONFIG_HPP
#define KSK_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ksk/kinetic.hpp"
#include "ksk/model.hpp"
#include "ksk/particle.hpp"

namespace ksk {

// Fully resolved run configuration.  Every key has a documented default;
// unknown keys are a hard error naming the key.  The same key=value text can
// come from a config file ([section] / key = value lines, '#' comments) or
// from --set section.key=value overrides.
struct RunConfig {
    std::string mode; // particles | kinetic | hydro | verify | decay-study

    ModelParams params;

    // [g]
    std::string g_kind = "dirac"; // dirac | discrete | gaussian
    double g_nu0 = 0.0;
    std::string g_values;   // discrete: "nu:w,nu:w,..."
    double g_mean = 0.0;    // gaussian
    double g_stddev = 1.0;
    int g_nodes = 8;

    // [grid]
    int n_theta = 64;
    int n_omega = 128;
    double width_factor = 10.0;

    // [init]
    InitialProfile profile;

    // [run]
    double t_end = 1.0;
    double dt = 0.0; // 0 = automatic CFL choice
    double diag_cadence = 0.1;
    double snapshot_cadence = 0.0; // 0 = off
    std::uint64_t seed = 12345;
    int threads = 1;
    std::string out_dir = "out";

    // [particles]
    std::size_t particles_n = 1000;
    PhaseLaw phase_law;
    OmegaLaw omega_law;

    // [hydro]
    double hydro_bump_eps = 0.0;
    double hydro_u0 = 0.0;

    // [verify]
    int verify_trials = 50;
    int coercivity_trials = 32;

    // [study]
    std::string study_parameter = "sigma";
    std::vector<double> study_values{2.0, 5.0, 10.0, 20.0};

    FrequencyDistribution make_g() const;
    PhaseSpaceGrid make_grid() const; // params + g + grid section

    // The resolved key=value text (fixed key order), echoed into the output
    // directory for provenance.
    std::string resolved_text() const;
};

// Parses `file_text` (may be empty) then applies overrides ("section.key=value").
// Throws config_error naming the offending key on unknown keys, type
// mismatches, or constraint violations.
RunConfig parse_config(const std::string& file_text,
                       const std::vector<std::string>& overrides,
                       const std::string& mode);

RunConfig parse_config_file(const std::string& path,
                            const std::vector<std::string>& overrides,
                            const std::string& mode);

} // namespace ksk

#endif
