#include "ksk/moments.hpp"

#include <algorithm>
#include <cmath>

#include "ksk/errors.hpp"

namespace ksk {

namespace {
constexpr double two_pi = 6.283185307179586476925287;

inline double minmod(double a, double b) {
    if (a > 0.0 && b > 0.0) return std::min(a, b);
    if (a < 0.0 && b < 0.0) return std::max(a, b);
    return 0.0;
}
} // namespace

MacroFields compute_macro(const KineticState& state, const PhaseSpaceGrid& grid) {
    if (grid.n_nu() != 1)
        throw config_error("compute_macro requires a single-nu (identical oscillator) state");
    const int nt = grid.n_theta;
    const int nw = grid.n_omega;
    MacroFields m;
    m.t = state.t;
    m.rho.assign(nt, 0.0);
    m.u.assign(nt, 0.0);
    m.e.assign(nt, 0.0);
    m.p.assign(nt, 0.0);
    m.q.assign(nt, 0.0);
    m.energy.assign(nt, 0.0);
    m.defined.assign(nt, true);

    for (int i = 0; i < nt; ++i) {
        const double* f = state.F.data() + grid.idx(0, i, 0);
        double rho = 0.0, mom = 0.0, en = 0.0;
        for (int j = 0; j < nw; ++j) {
            const double w = grid.omega(0, j);
            rho += f[j];
            mom += w * f[j];
            en += 0.5 * w * w * f[j];
        }
        rho *= grid.d_omega;
        mom *= grid.d_omega;
        en *= grid.d_omega;
        m.rho[i] = rho;
        m.energy[i] = en;
        if (rho < rho_floor) {
            m.defined[i] = false;
            continue;
        }
        const double u = mom / rho;
        double p = 0.0, q = 0.0;
        for (int j = 0; j < nw; ++j) {
            const double d = grid.omega(0, j) - u;
            p += d * d * f[j];
            q += 0.5 * d * d * d * f[j];
        }
        m.u[i] = u;
        m.p[i] = p * grid.d_omega;
        m.q[i] = q * grid.d_omega;
        m.e[i] = en / rho - 0.5 * u * u;
    }
    return m;
}

std::vector<double> rho_coupling(const std::vector<double>& rho, const PhaseSpaceGrid& grid) {
    double re = 0.0, im = 0.0;
    for (int i = 0; i < grid.n_theta; ++i) {
        re += std::cos(grid.theta[i]) * rho[i];
        im += std::sin(grid.theta[i]) * rho[i];
    }
    re *= grid.d_theta;
    im *= grid.d_theta;
    std::vector<double> s(grid.n_theta);
    for (int i = 0; i < grid.n_theta; ++i)
        s[i] = im * std::cos(grid.theta[i]) - re * std::sin(grid.theta[i]);
    return s;
}

BalanceResiduals balance_residuals(const std::vector<MacroFields>& snaps, double dt_diag,
                                   const PhaseSpaceGrid& grid, const ModelParams& params) {
    if (snaps.size() < 3)
        throw config_error("balance_residuals needs at least 3 snapshots");
    if (!(dt_diag > 0.0)) throw config_error("balance_residuals: dt_diag must be > 0");

    const int nt = grid.n_theta;
    const double inv_2dt = 1.0 / (2.0 * dt_diag);
    const double inv_2dth = 1.0 / (2.0 * grid.d_theta);
    BalanceResiduals res;

    for (std::size_t n = 1; n + 1 < snaps.size(); ++n) {
        const MacroFields& a = snaps[n - 1];
        const MacroFields& b = snaps[n];
        const MacroFields& c = snaps[n + 1];
        const std::vector<double> s_rho = rho_coupling(b.rho, grid);
        for (int i = 0; i < nt; ++i) {
            const int ip = (i + 1) % nt;
            const int im = (i - 1 + nt) % nt;
            if (!b.defined[i] || !b.defined[ip] || !b.defined[im] ||
                !a.defined[i] || !c.defined[i])
                continue;

            auto flux_mass = [&](const MacroFields& s, int idx) { return s.rho[idx] * s.u[idx]; };
            auto flux_mom = [&](const MacroFields& s, int idx) {
                return s.rho[idx] * s.u[idx] * s.u[idx] + s.p[idx];
            };
            auto flux_en = [&](const MacroFields& s, int idx) {
                return s.q[idx] + 1.5 * s.p[idx] * s.u[idx] +
                       0.5 * s.rho[idx] * s.u[idx] * s.u[idx] * s.u[idx];
            };

            const double r1 = (c.rho[i] - a.rho[i]) * inv_2dt +
                              (flux_mass(b, ip) - flux_mass(b, im)) * inv_2dth;
            const double r2 = (c.rho[i] * c.u[i] - a.rho[i] * a.u[i]) * inv_2dt +
                              (flux_mom(b, ip) - flux_mom(b, im)) * inv_2dth -
                              (-b.rho[i] * b.u[i] + params.kappa * b.rho[i] * s_rho[i]) / params.m;
            const double r3 = (c.energy[i] - a.energy[i]) * inv_2dt +
                              (flux_en(b, ip) - flux_en(b, im)) * inv_2dth -
                              params.sigma / (params.m * params.m) * b.rho[i] +
                              (b.p[i] + b.rho[i] * b.u[i] * b.u[i] -
                               params.kappa * b.rho[i] * b.u[i] * s_rho[i]) / params.m;

            res.mass = std::max(res.mass, std::abs(r1));
            res.momentum = std::max(res.momentum, std::abs(r2));
            res.energy = std::max(res.energy, std::abs(r3));
        }
    }
    return res;
}

MomentSeries m0_m1_series(const std::vector<double>& times, const std::vector<MacroFields>& snaps) {
    if (times.size() != snaps.size()) throw config_error("m0_m1_series: size mismatch");
    MomentSeries out;
    out.t = times;
    out.m0.reserve(snaps.size());
    out.m1.reserve(snaps.size());
    const double dth = snaps.empty() || snaps[0].rho.empty()
                           ? 0.0
                           : two_pi / static_cast<double>(snaps[0].rho.size());
    for (const auto& s : snaps) {
        double m0 = 0.0, m1 = 0.0;
        for (std::size_t i = 0; i < s.rho.size(); ++i) {
            m0 += s.rho[i];
            m1 += s.rho[i] * s.u[i];
        }
        out.m0.push_back(m0 * dth);
        out.m1.push_back(m1 * dth);
    }

    // least squares on log|M1| over samples above the noise floor
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < out.m1.size(); ++i) {
        if (std::abs(out.m1[i]) <= 1e-10) continue;
        const double x = out.t[i];
        const double y = std::log(std::abs(out.m1[i]));
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++n;
    }
    if (n >= 2) {
        const double denom = n * sxx - sx * sx;
        if (denom > 0.0) {
            out.rate = -(n * sxy - sx * sy) / denom;
            out.rate_defined = true;
        }
    }
    return out;
}

HydroState hydro_uniform(const PhaseSpaceGrid& grid, const ModelParams& params,
                         double bump_eps, double u0) {
    HydroState s;
    s.rho.resize(grid.n_theta);
    s.momentum.resize(grid.n_theta);
    s.energy.resize(grid.n_theta);
    for (int i = 0; i < grid.n_theta; ++i) {
        const double rho = (1.0 + bump_eps * std::cos(grid.theta[i])) / two_pi;
        const double p = rho * params.sigma / params.m;
        s.rho[i] = rho;
        s.momentum[i] = rho * u0;
        s.energy[i] = 0.5 * p + 0.5 * rho * u0 * u0;
    }
    return s;
}

namespace {

// p = 2 rho e (the 1D kinetic closure); sound speed of the q = 0 system.
inline double hydro_pressure(double rho, double mom, double en) {
    return 2.0 * en - mom * mom / rho;
}

struct HydroRhs {
    std::vector<double> rho, mom, en;
};

void hydro_rhs(const HydroState& s, const PhaseSpaceGrid& grid, const ModelParams& params,
               HydroRhs& rhs) {
    const int nt = grid.n_theta;
    rhs.rho.assign(nt, 0.0);
    rhs.mom.assign(nt, 0.0);
    rhs.en.assign(nt, 0.0);

    std::vector<double> u(nt), p(nt);
    for (int i = 0; i < nt; ++i) {
        if (s.rho[i] < rho_floor)
            throw numerics_error("hydro step: vacuum formation (rho below floor)");
        u[i] = s.momentum[i] / s.rho[i];
        p[i] = hydro_pressure(s.rho[i], s.momentum[i], s.energy[i]);
        if (p[i] < 0.0) throw numerics_error("hydro step: negative pressure");
    }

    auto at = [nt](int i) { return (i % nt + nt) % nt; };
    auto slope = [&](const std::vector<double>& v, int i) {
        return 0.5 * minmod(v[i] - v[at(i - 1)], v[at(i + 1)] - v[i]);
    };

    // Rusanov flux with MUSCL-reconstructed primitives at the face i+1/2.
    std::vector<double> f_rho(nt), f_mom(nt), f_en(nt);
    for (int i = 0; i < nt; ++i) {
        const int ip = at(i + 1);
        const double rho_l = s.rho[i] + slope(s.rho, i);
        const double u_l = u[i] + slope(u, i);
        const double p_l = p[i] + slope(p, i);
        const double rho_r = s.rho[ip] - slope(s.rho, ip);
        const double u_r = u[ip] - slope(u, ip);
        const double p_r = p[ip] - slope(p, ip);
        if (rho_l < rho_floor || rho_r < rho_floor || p_l < 0.0 || p_r < 0.0)
            throw numerics_error("hydro step: reconstruction left the admissible set");

        const double mom_l = rho_l * u_l, mom_r = rho_r * u_r;
        const double en_l = 0.5 * p_l + 0.5 * rho_l * u_l * u_l;
        const double en_r = 0.5 * p_r + 0.5 * rho_r * u_r * u_r;
        const double c_l = std::sqrt(3.0 * p_l / rho_l);
        const double c_r = std::sqrt(3.0 * p_r / rho_r);
        const double speed = std::max(std::abs(u_l) + c_l, std::abs(u_r) + c_r);

        f_rho[i] = 0.5 * (mom_l + mom_r) - 0.5 * speed * (rho_r - rho_l);
        f_mom[i] = 0.5 * (mom_l * u_l + p_l + mom_r * u_r + p_r) - 0.5 * speed * (mom_r - mom_l);
        f_en[i] = 0.5 * (1.5 * p_l * u_l + 0.5 * rho_l * u_l * u_l * u_l +
                         1.5 * p_r * u_r + 0.5 * rho_r * u_r * u_r * u_r) -
                  0.5 * speed * (en_r - en_l);
    }

    const std::vector<double> s_rho = rho_coupling(s.rho, grid);
    for (int i = 0; i < nt; ++i) {
        const int im = at(i - 1);
        rhs.rho[i] = -(f_rho[i] - f_rho[im]) / grid.d_theta;
        rhs.mom[i] = -(f_mom[i] - f_mom[im]) / grid.d_theta +
                     (-s.momentum[i] + params.kappa * s.rho[i] * s_rho[i]) / params.m;
        rhs.en[i] = -(f_en[i] - f_en[im]) / grid.d_theta +
                    params.sigma / (params.m * params.m) * s.rho[i] -
                    (p[i] + s.momentum[i] * u[i] - params.kappa * s.momentum[i] * s_rho[i]) /
                        params.m;
    }
}

} // namespace

double hydro_suggest_dt(const HydroState& state, const PhaseSpaceGrid& grid,
                        const ModelParams& params, double cfl) {
    double speed = 0.0;
    for (int i = 0; i < grid.n_theta; ++i) {
        const double u = state.momentum[i] / state.rho[i];
        const double p = hydro_pressure(state.rho[i], state.momentum[i], state.energy[i]);
        speed = std::max(speed, std::abs(u) + std::sqrt(std::max(0.0, 3.0 * p / state.rho[i])));
    }
    (void)params;
    return speed > 0.0 ? cfl * grid.d_theta / speed : 0.1;
}

void step_hydro(HydroState& state, const PhaseSpaceGrid& grid, const ModelParams& params,
                double dt) {
    params.validate();
    if (!(dt > 0.0)) throw numerics_error("hydro step: dt must be > 0");
    if (dt > hydro_suggest_dt(state, grid, params, 0.9))
        throw numerics_error("hydro step: dt violates the CFL bound");

    const int nt = grid.n_theta;
    HydroRhs k1, k2;
    hydro_rhs(state, grid, params, k1);

    HydroState mid = state;
    for (int i = 0; i < nt; ++i) {
        mid.rho[i] += dt * k1.rho[i];
        mid.momentum[i] += dt * k1.mom[i];
        mid.energy[i] += dt * k1.en[i];
    }
    hydro_rhs(mid, grid, params, k2);

    for (int i = 0; i < nt; ++i) {
        state.rho[i] += 0.5 * dt * (k1.rho[i] + k2.rho[i]);
        state.momentum[i] += 0.5 * dt * (k1.mom[i] + k2.mom[i]);
        state.energy[i] += 0.5 * dt * (k1.en[i] + k2.en[i]);
    }
    state.t += dt;
}

} // namespace ksk
