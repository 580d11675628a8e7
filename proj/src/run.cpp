#include "ksk/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ksk/diagnostics.hpp"
#include "ksk/errors.hpp"
#include "ksk/kinetic.hpp"
#include "ksk/moments.hpp"
#include "ksk/particle.hpp"
#include "ksk/perturbation.hpp"
#include "ksk/snapshot.hpp"

namespace ksk {

namespace {

using nlohmann::json;

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("cannot write " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void write_json(const std::string& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

json fit_to_json(const DecayFitResult& fit) {
    return json{{"rate", fit.rate},
                {"intercept", fit.intercept},
                {"r_squared", fit.r_squared},
                {"window", {fit.t_start, fit.t_end}},
                {"no_decay", fit.no_decay}};
}

json margin_to_json(const NoiseMarginReport& m) {
    return json{{"m_kappa_sq", m.term_m_kappa_sq}, {"kappa", m.term_kappa},
                {"inv_m", m.term_inv_m},           {"m_g_norm_sq", m.term_m_g_norm},
                {"threshold", m.threshold},        {"ratio", m.ratio}};
}

// ---------------------------------------------------------------- kinetic --

struct KineticOutcome {
    int code = 0;
    DiagnosticsSeries diag;
    json summary;
};

KineticOutcome drive_kinetic(const RunConfig& cfg, const std::string& out_dir) {
    KineticOutcome out;
    const FrequencyDistribution g = cfg.make_g();
    const PhaseSpaceGrid grid = cfg.make_grid();
    const MaxwellianCache cache = MaxwellianCache::build(cfg.params, grid);

    InitReport init_report;
    KineticState state = init_from_profile(grid, cache, cfg.params, cfg.profile, &init_report);
    const double dt = cfg.dt > 0.0 ? cfg.dt : suggest_dt(grid, cfg.params, 0.45);

    KineticWorkspace ws;
    std::vector<MacroFields> macro_rows;
    KineticState last_good = state;

    auto record = [&](const KineticState& s) {
        DiagnosticsRow row;
        row.t = s.t;
        row.mass = total_mass(s, grid);
        row.marginal_err = marginal_error(s, grid);
        row.min_F = min_value(s);
        row.m0 = row.mass;
        row.m1 = omega_moment(s, grid);
        const FourierMode k1 = first_fourier_mode(s.F, grid);
        row.r = std::hypot(k1.re, k1.im);
        const std::vector<double> f = to_perturbation(s, grid, cache);
        row.f_l2 = std::sqrt(l2_norm_sq(f, grid));
        row.f_h1 = std::sqrt(hs_norm_sq(f, grid, 1));
        const MacroCoefficients coeffs = project_coefficients(f, grid, cache);
        row.f0_l2 = std::sqrt(l2_norm_sq_theta(coeffs.f0, grid));
        row.f1_l2 = std::sqrt(l2_norm_sq_theta(coeffs.f1, grid));
        row.imp_f_mu = std::sqrt(mu_norm_sq(micro_part(f, grid, cache), grid, cache));
        out.diag.rows.push_back(row);
        if (grid.n_nu() == 1) macro_rows.push_back(compute_macro(s, grid));
        return std::isfinite(*row.mass) && std::isfinite(*row.min_F);
    };

    record(state);
    double next_diag = cfg.diag_cadence;
    double next_snap = cfg.snapshot_cadence > 0.0 ? cfg.snapshot_cadence : -1.0;
    int snap_index = 0;
    if (cfg.snapshot_cadence > 0.0)
        write_kinetic_snapshot(out_dir + "/snapshot_0000.kski", state, grid, cfg.params);

    bool failed = false;
    std::string failure;
    try {
        while (state.t < cfg.t_end - 1e-12) {
            const double step_dt = std::min(dt, cfg.t_end - state.t);
            step_imex(state, grid, cfg.params, step_dt, ws, cfg.threads);

            if (next_snap > 0.0 && state.t >= next_snap - 1e-9) {
                char name[48];
                std::snprintf(name, sizeof name, "/snapshot_%04d.kski", ++snap_index);
                write_kinetic_snapshot(out_dir + name, state, grid, cfg.params);
                next_snap += cfg.snapshot_cadence;
            }
            if (state.t >= next_diag - 1e-9 || state.t >= cfg.t_end - 1e-12) {
                if (!record(state)) {
                    failed = true;
                    failure = "non-finite state detected";
                    break;
                }
                last_good = state;
                next_diag += cfg.diag_cadence;
            }
        }
    } catch (const numerics_error& err) {
        failed = true;
        failure = err.what();
    }

    if (failed) {
        // keep partial outputs; persist the last good state for post-mortem
        write_kinetic_snapshot(out_dir + "/last_good.kski", last_good, grid, cfg.params);
    }

    // balance-law residuals at interior diagnostic rows (identical oscillators)
    if (!failed && grid.n_nu() == 1 && macro_rows.size() >= 3) {
        for (std::size_t n = 1; n + 1 < macro_rows.size(); ++n) {
            const std::vector<MacroFields> window(macro_rows.begin() + (n - 1),
                                                  macro_rows.begin() + (n + 2));
            const BalanceResiduals res =
                balance_residuals(window, cfg.diag_cadence, grid, cfg.params);
            out.diag.rows[n].residual_mass = res.mass;
            out.diag.rows[n].residual_mom = res.momentum;
            out.diag.rows[n].residual_energy = res.energy;
        }
    }

    json summary;
    summary["schema_version"] = 1;
    summary["mode"] = "kinetic";
    summary["status"] = failed ? "failed" : "ok";
    if (failed) summary["failure"] = failure;
    summary["dt"] = dt;
    summary["normalization"] = init_report.normalization;
    summary["noise_margin"] = margin_to_json(noise_condition_margin(cfg.params, g));

    if (!out.diag.rows.empty()) {
        const DiagnosticsRow& last = out.diag.rows.back();
        json fin;
        fin["t"] = last.t;
        if (last.mass) fin["mass"] = *last.mass;
        if (last.marginal_err) fin["marginal_err"] = *last.marginal_err;
        if (last.min_F) fin["min_F"] = *last.min_F;
        if (last.m1) fin["M1"] = *last.m1;
        if (last.r) fin["r"] = *last.r;
        if (last.f_l2) fin["f_L2"] = *last.f_l2;
        if (last.f_h1) fin["f_H1"] = *last.f_h1;
        summary["final"] = fin;

        double mass_drift = 0.0, marg_drift = 0.0, min_f = 0.0;
        std::vector<double> times, f_l2, f_h1;
        for (const auto& row : out.diag.rows) {
            if (row.mass) mass_drift = std::max(mass_drift, std::abs(*row.mass - 1.0));
            if (row.marginal_err) marg_drift = std::max(marg_drift, *row.marginal_err);
            if (row.min_F) min_f = std::min(min_f, *row.min_F);
            times.push_back(row.t);
            if (row.f_l2) f_l2.push_back(*row.f_l2);
            if (row.f_h1) f_h1.push_back(*row.f_h1);
        }
        json inv;
        inv["mass_drift"] = mass_drift;
        inv["mass_conserved"] = mass_drift <= 1e-10;
        inv["marginal_drift"] = marg_drift;
        inv["marginal_conserved"] = marg_drift <= 1e-10;
        inv["min_F"] = min_f;
        inv["positivity_ok"] = min_f >= -1e-12;
        summary["invariants"] = inv;

        json fits;
        if (f_l2.size() == times.size() && times.size() >= 25) {
            try {
                fits["f_L2"] = fit_to_json(decay_fit(times, f_l2));
                fits["f_H1"] = fit_to_json(decay_fit(times, f_h1));
            } catch (const config_error&) {
                // series too short or below the noise floor; no fit reported
            }
        }
        if (grid.n_nu() == 1) {
            const MomentSeries ms = m0_m1_series(times, macro_rows);
            if (ms.rate_defined) fits["M1_rate"] = ms.rate;
        }
        summary["fits"] = fits;
    }
    out.summary = summary;
    out.code = failed ? 1 : 0;
    return out;
}

// --------------------------------------------------------------- particles --

KineticOutcome drive_particles(const RunConfig& cfg, const std::string& out_dir) {
    KineticOutcome out;
    const FrequencyDistribution g = cfg.make_g();
    ParticleEnsemble ens =
        sample_initial(cfg.particles_n, cfg.phase_law, cfg.omega_law, g, cfg.params, cfg.seed);
    const double dt = cfg.dt > 0.0 ? cfg.dt : cfg.params.m / 20.0;
    const CounterRng rng(cfg.seed ^ 0x517cc1b727220a95ULL);

    std::vector<double> times, m1_series;
    auto record = [&](const ParticleEnsemble& e) {
        DiagnosticsRow row;
        row.t = e.t;
        row.mass = 1.0;
        row.m0 = 1.0;
        const EmpiricalMoments mom = empirical_moments(e);
        row.m1 = mom.m1;
        const OrderParameter op = order_parameter(e);
        row.r = op.r;
        out.diag.rows.push_back(row);
        times.push_back(e.t);
        m1_series.push_back(mom.m1);
    };

    record(ens);
    double next_diag = cfg.diag_cadence;
    double next_snap = cfg.snapshot_cadence > 0.0 ? cfg.snapshot_cadence : -1.0;
    int snap_index = 0;
    if (cfg.snapshot_cadence > 0.0) write_particle_snapshot(out_dir + "/particles_0000.kspn", ens);

    bool failed = false;
    std::string failure;
    std::uint64_t step_index = 0;
    try {
        while (ens.t < cfg.t_end - 1e-12) {
            const double step_dt = std::min(dt, cfg.t_end - ens.t);
            step(ens, cfg.params, step_dt, rng, step_index++, cfg.threads);
            if (next_snap > 0.0 && ens.t >= next_snap - 1e-9) {
                char name[48];
                std::snprintf(name, sizeof name, "/particles_%04d.kspn", ++snap_index);
                write_particle_snapshot(out_dir + name, ens);
                next_snap += cfg.snapshot_cadence;
            }
            if (ens.t >= next_diag - 1e-9 || ens.t >= cfg.t_end - 1e-12) {
                record(ens);
                next_diag += cfg.diag_cadence;
            }
        }
    } catch (const numerics_error& err) {
        failed = true;
        failure = err.what();
    }

    json summary;
    summary["schema_version"] = 1;
    summary["mode"] = "particles";
    summary["status"] = failed ? "failed" : "ok";
    if (failed) summary["failure"] = failure;
    summary["dt"] = dt;
    summary["n"] = cfg.particles_n;
    summary["noise_margin"] = margin_to_json(noise_condition_margin(cfg.params, g));
    if (!out.diag.rows.empty()) {
        const DiagnosticsRow& last = out.diag.rows.back();
        summary["final"] = json{{"t", last.t}, {"M1", *last.m1}, {"r", *last.r}};
        // least-squares decay rate of |M1| over the recorded series
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (std::abs(m1_series[i]) <= 1e-10) continue;
            sx += times[i];
            sy += std::log(std::abs(m1_series[i]));
            sxx += times[i] * times[i];
            sxy += times[i] * std::log(std::abs(m1_series[i]));
            ++n;
        }
        if (n >= 2 && n * sxx - sx * sx > 0)
            summary["fits"] = json{{"M1_rate", -(n * sxy - sx * sy) / (n * sxx - sx * sx)}};
    }
    out.summary = summary;
    out.code = failed ? 1 : 0;
    return out;
}

// ------------------------------------------------------------------- hydro --

KineticOutcome drive_hydro(const RunConfig& cfg, const std::string&) {
    KineticOutcome out;
    const PhaseSpaceGrid grid = cfg.make_grid();
    HydroState state = hydro_uniform(grid, cfg.params, cfg.hydro_bump_eps, cfg.hydro_u0);
    const double dt = cfg.dt > 0.0 ? cfg.dt : hydro_suggest_dt(state, grid, cfg.params);

    std::vector<double> times;
    std::vector<MacroFields> macro_rows;
    auto record = [&](const HydroState& s) {
        DiagnosticsRow row;
        row.t = s.t;
        double m0 = 0.0, m1 = 0.0;
        for (int i = 0; i < grid.n_theta; ++i) {
            m0 += s.rho[i];
            m1 += s.momentum[i];
        }
        row.mass = m0 * grid.d_theta;
        row.m0 = row.mass;
        row.m1 = m1 * grid.d_theta;
        double re = 0.0, im = 0.0;
        for (int i = 0; i < grid.n_theta; ++i) {
            re += std::cos(grid.theta[i]) * s.rho[i];
            im += std::sin(grid.theta[i]) * s.rho[i];
        }
        row.r = std::hypot(re, im) * grid.d_theta;
        out.diag.rows.push_back(row);
        times.push_back(s.t);
        MacroFields m;
        m.t = s.t;
        m.rho = s.rho;
        m.u.resize(grid.n_theta);
        for (int i = 0; i < grid.n_theta; ++i) m.u[i] = s.momentum[i] / s.rho[i];
        macro_rows.push_back(m);
    };

    record(state);
    double next_diag = cfg.diag_cadence;
    bool failed = false;
    std::string failure;
    try {
        while (state.t < cfg.t_end - 1e-12) {
            const double step_dt = std::min(dt, cfg.t_end - state.t);
            step_hydro(state, grid, cfg.params, step_dt);
            if (state.t >= next_diag - 1e-9 || state.t >= cfg.t_end - 1e-12) {
                record(state);
                next_diag += cfg.diag_cadence;
            }
        }
    } catch (const numerics_error& err) {
        failed = true;
        failure = err.what();
    }

    json summary;
    summary["schema_version"] = 1;
    summary["mode"] = "hydro";
    summary["status"] = failed ? "failed" : "ok";
    if (failed) summary["failure"] = failure;
    summary["dt"] = dt;
    if (!times.empty()) {
        const MomentSeries ms = m0_m1_series(times, macro_rows);
        double m0_drift = 0.0;
        for (double m0 : ms.m0) m0_drift = std::max(m0_drift, std::abs(m0 - ms.m0.front()));
        summary["invariants"] = json{{"M0_drift", m0_drift}, {"M0_conserved", m0_drift <= 1e-10}};
        if (ms.rate_defined) summary["fits"] = json{{"M1_rate", ms.rate}};
    }
    out.summary = summary;
    out.code = failed ? 1 : 0;
    return out;
}

// ------------------------------------------------------------------ verify --

KineticOutcome drive_verify(const RunConfig& cfg, const std::string&) {
    KineticOutcome out;
    const FrequencyDistribution g = cfg.make_g();
    const PhaseSpaceGrid grid = cfg.make_grid();
    const MaxwellianCache cache = MaxwellianCache::build(cfg.params, grid);

    json identities;
    bool all_pass = true;
    auto add = [&](const std::string& name, double measured, double tol) {
        const bool pass = measured <= tol;
        identities[name] = json{{"measured", measured}, {"tolerance", tol}, {"pass", pass}};
        all_pass = all_pass && pass;
        std::printf("%-28s measured=%.3e tol=%.3e %s\n", name.c_str(), measured, tol,
                    pass ? "PASS" : "FAIL");
    };

    // equilibrium facts: discrete mass, orthonormality, analytic moments
    double mass = 0.0;
    for (double v : cache.M) mass += v;
    mass *= grid.d_omega * 6.283185307179586476925287;
    add("maxwellian_mass", std::abs(mass - 1.0), 1e-8);
    add("chi0_normalized", std::abs(slice_inner(cache.chi0, cache.chi0, grid) - 1.0), 1e-6);
    add("chi1_normalized", std::abs(slice_inner(cache.chi1, cache.chi1, grid) - 1.0), 1e-6);
    add("chi0_chi1_orthogonal", std::abs(slice_inner(cache.chi0, cache.chi1, grid)), 1e-6);

    double moment_err = 0.0;
    for (int ell = 0; ell <= 3; ++ell) {
        double q = 0.0;
        for (std::size_t k = 0; k < grid.n_nu(); ++k) {
            const double nu = grid.g.nodes[k].nu;
            for (int j = 0; j < grid.n_omega; ++j)
                q += std::pow(grid.omega(k, j) - nu, 2 * ell) * cache.M[cache.idx(k, j)];
        }
        q *= grid.d_omega;
        moment_err = std::max(moment_err, std::abs(q - gaussian_moment(cfg.params, ell)));
    }
    add("gaussian_moments", moment_err, 1e-8);

    const IdentityReport rep =
        operator_identity_suite(grid, cache, cfg.params, cfg.seed, cfg.verify_trials);
    for (const auto& c : rep.checks) add(c.name, c.measured, c.tolerance);

    json summary;
    summary["schema_version"] = 1;
    summary["mode"] = "verify";
    summary["identities"] = identities;
    summary["noise_margin"] = margin_to_json(noise_condition_margin(cfg.params, g));
    try {
        const CoercivityEstimate est =
            coercivity_rayleigh(grid, cache, cfg.params, cfg.seed + 1, cfg.coercivity_trials);
        summary["lambda0"] = json{{"estimate", est.lambda0}, {"trials", est.n_trials}};
        std::printf("%-28s estimate=%.6f (over %d trials)\n", "coercivity_lambda0",
                    est.lambda0, est.n_trials);
        all_pass = all_pass && est.lambda0 > 0.0;
    } catch (const numerics_error& err) {
        summary["lambda0"] = json{{"error", err.what()}};
        all_pass = false;
    }
    summary["status"] = all_pass ? "ok" : "failed";
    out.summary = summary;
    out.code = all_pass ? 0 : 1;
    return out;
}

// -------------------------------------------------------------- decay-study --

int drive_decay_study(const RunConfig& cfg, const std::string& out_dir) {
    json runs = json::array();
    std::string table = "value,ratio,rate,r_squared,no_decay\n";
    int code = 0;
    for (double value : cfg.study_values) {
        RunConfig sub = cfg;
        sub.mode = "kinetic";
        if (cfg.study_parameter == "sigma")
            sub.params.sigma = value;
        else
            sub.params.kappa = value;
        char name[64];
        std::snprintf(name, sizeof name, "%s_%g", cfg.study_parameter.c_str(), value);
        sub.out_dir = out_dir + "/" + name;
        std::filesystem::create_directories(sub.out_dir);
        write_text(sub.out_dir + "/config_resolved.txt", sub.resolved_text());

        KineticOutcome sub_out = drive_kinetic(sub, sub.out_dir);
        sub_out.diag.write_csv(sub.out_dir + "/diagnostics.csv");
        write_json(sub.out_dir + "/summary.json", sub_out.summary);
        code = std::max(code, sub_out.code);

        std::vector<double> times, series;
        for (const auto& row : sub_out.diag.rows) {
            times.push_back(row.t);
            if (row.f_l2) series.push_back(*row.f_l2);
        }
        json entry;
        entry[cfg.study_parameter] = value;
        const NoiseMarginReport margin = noise_condition_margin(sub.params, sub.make_g());
        entry["ratio"] = margin.ratio;
        char line[160];
        if (series.size() == times.size() && times.size() >= 25) {
            const DecayFitResult fit = decay_fit(times, series);
            entry["fit"] = fit_to_json(fit);
            std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%d\n", value, margin.ratio,
                          fit.rate, fit.r_squared, fit.no_decay ? 1 : 0);
        } else {
            std::snprintf(line, sizeof line, "%.17g,%.17g,,,\n", value, margin.ratio);
        }
        table += line;
        runs.push_back(entry);
    }
    json summary;
    summary["schema_version"] = 1;
    summary["mode"] = "decay-study";
    summary["status"] = code == 0 ? "ok" : "failed";
    summary["parameter"] = cfg.study_parameter;
    summary["runs"] = runs;
    write_json(out_dir + "/summary.json", summary);
    write_text(out_dir + "/study_summary.csv", table);
    return code;
}

} // namespace

int run_mode(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    write_text(cfg.out_dir + "/config_resolved.txt", cfg.resolved_text());

    if (cfg.mode == "decay-study") return drive_decay_study(cfg, cfg.out_dir);

    KineticOutcome out;
    if (cfg.mode == "kinetic")
        out = drive_kinetic(cfg, cfg.out_dir);
    else if (cfg.mode == "particles")
        out = drive_particles(cfg, cfg.out_dir);
    else if (cfg.mode == "hydro")
        out = drive_hydro(cfg, cfg.out_dir);
    else if (cfg.mode == "verify")
        out = drive_verify(cfg, cfg.out_dir);
    else
        throw config_error("unknown mode '" + cfg.mode + "'");

    if (!out.diag.rows.empty() || cfg.mode != "verify")
        out.diag.write_csv(cfg.out_dir + "/diagnostics.csv");
    write_json(cfg.out_dir + "/summary.json", out.summary);
    return out.code;
}

} // namespace ksk
