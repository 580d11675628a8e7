#include "ksk/snapshot.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "ksk/errors.hpp"
#include "ksk/kinetic.hpp"
#include "ksk/particle.hpp"

namespace ksk {

namespace {

constexpr std::uint32_t kinetic_version = 1;
constexpr std::uint32_t particle_version = 1;

void put_bytes(std::ofstream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void get_bytes(std::ifstream& in, void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in) throw config_error("snapshot file truncated or unreadable");
}

template <typename T>
void put(std::ofstream& out, T v) { put_bytes(out, &v, sizeof v); }

template <typename T>
T get(std::ifstream& in) {
    T v;
    get_bytes(in, &v, sizeof v);
    return v;
}

} // namespace

void write_kinetic_snapshot(const std::string& path, const KineticState& state,
                            const PhaseSpaceGrid& grid, const ModelParams& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("cannot open snapshot file for writing: " + path);
    put_bytes(out, "KSKI", 4);
    put<std::uint32_t>(out, kinetic_version);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.n_theta));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.n_omega));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.n_nu()));
    put<double>(out, params.m);
    put<double>(out, params.kappa);
    put<double>(out, params.sigma);
    put<double>(out, state.t);
    for (const auto& node : grid.g.nodes) put<double>(out, node.nu);
    for (const auto& node : grid.g.nodes) put<double>(out, node.weight);
    put_bytes(out, state.F.data(), state.F.size() * sizeof(double));
    if (!out) throw config_error("failed writing snapshot: " + path);
}

KineticState read_kinetic_snapshot(const std::string& path, const PhaseSpaceGrid& grid) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open snapshot file: " + path);
    char magic[4];
    get_bytes(in, magic, 4);
    if (std::memcmp(magic, "KSKI", 4) != 0)
        throw config_error("not a kinetic snapshot: " + path);
    const auto version = get<std::uint32_t>(in);
    if (version != kinetic_version) throw config_error("unsupported snapshot version");
    const auto nt = get<std::uint32_t>(in);
    const auto nw = get<std::uint32_t>(in);
    const auto nn = get<std::uint32_t>(in);
    if (nt != static_cast<std::uint32_t>(grid.n_theta) ||
        nw != static_cast<std::uint32_t>(grid.n_omega) || nn != grid.n_nu())
        throw config_error("snapshot dimensions do not match the configured grid");
    get<double>(in); // m
    get<double>(in); // kappa
    get<double>(in); // sigma
    KineticState state;
    state.t = get<double>(in);
    for (std::uint32_t k = 0; k < nn; ++k) {
        const double nu = get<double>(in);
        if (std::abs(nu - grid.g.nodes[k].nu) > 1e-12)
            throw config_error("snapshot nu nodes do not match the configured g");
    }
    for (std::uint32_t k = 0; k < nn; ++k) get<double>(in);
    state.F.resize(grid.cells());
    get_bytes(in, state.F.data(), state.F.size() * sizeof(double));
    return state;
}

void write_particle_snapshot(const std::string& path, const ParticleEnsemble& ens) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("cannot open snapshot file for writing: " + path);
    put_bytes(out, "KSPN", 4);
    put<std::uint32_t>(out, particle_version);
    put<std::uint64_t>(out, ens.n());
    put<double>(out, ens.t);
    put_bytes(out, ens.theta.data(), ens.n() * sizeof(double));
    put_bytes(out, ens.omega.data(), ens.n() * sizeof(double));
    put_bytes(out, ens.nu.data(), ens.n() * sizeof(double));
    if (!out) throw config_error("failed writing snapshot: " + path);
}

ParticleEnsemble read_particle_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open snapshot file: " + path);
    char magic[4];
    get_bytes(in, magic, 4);
    if (std::memcmp(magic, "KSPN", 4) != 0)
        throw config_error("not a particle snapshot: " + path);
    const auto version = get<std::uint32_t>(in);
    if (version != particle_version) throw config_error("unsupported snapshot version");
    const auto n = get<std::uint64_t>(in);
    ParticleEnsemble ens;
    ens.t = get<double>(in);
    ens.theta.resize(n);
    ens.omega.resize(n);
    ens.nu.resize(n);
    get_bytes(in, ens.theta.data(), n * sizeof(double));
    get_bytes(in, ens.omega.data(), n * sizeof(double));
    get_bytes(in, ens.nu.data(), n * sizeof(double));
    return ens;
}

} // namespace ksk
