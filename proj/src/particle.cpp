#include "ksk/particle.hpp"

#include <cmath>
#include <cstddef>
#include <string>

#include "ksk/errors.hpp"
#include "ksk/parallel.hpp"

namespace ksk {

namespace {

constexpr double two_pi = 6.283185307179586476925287;

double wrap_phase(double theta) {
    double t = std::fmod(theta, two_pi);
    if (t < 0.0) t += two_pi;
    return t;
}

// Fixed-order pairwise sum; deterministic and more accurate than a running sum.
double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

// Inverse CDF of (1 + eps cos theta)/2pi by Newton with bisection fallback.
double phase_bump_quantile(double u, double eps) {
    double lo = 0.0, hi = two_pi;
    double theta = two_pi * u;
    for (int it = 0; it < 60; ++it) {
        const double cdf = (theta + eps * std::sin(theta)) / two_pi;
        const double err = cdf - u;
        if (std::abs(err) < 1e-14) break;
        if (err > 0.0) hi = theta; else lo = theta;
        const double slope = (1.0 + eps * std::cos(theta)) / two_pi;
        double next = theta - err / slope;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        theta = next;
    }
    return theta;
}

// Draw a nu node index from g's weights with a single uniform.
std::size_t pick_node(const FrequencyDistribution& g, double u) {
    double acc = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        acc += g.nodes[k].weight;
        if (u <= acc) return k;
    }
    return g.size() - 1;
}

} // namespace

ParticleEnsemble sample_initial(std::size_t n, const PhaseLaw& phase, const OmegaLaw& omega_law,
                                const FrequencyDistribution& g, const ModelParams& params,
                                std::uint64_t seed) {
    if (n < 1) throw config_error("particles.n must be >= 1");
    g.validate();
    params.validate(true);
    const CounterRng rng(seed);

    ParticleEnsemble ens;
    ens.theta.resize(n);
    ens.omega.resize(n);
    ens.nu.resize(n);
    ens.t = 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        // lanes: 0 phase, 1 omega, 2 nu pick, 3 stratified jitter
        if (phase.kind == "uniform") {
            ens.theta[i] = two_pi * rng.uniform(i, 0);
        } else if (phase.kind == "wrapped-gaussian") {
            ens.theta[i] = wrap_phase(phase.mu + phase.sd * rng.normal(i, 0));
        } else if (phase.kind == "point") {
            ens.theta[i] = wrap_phase(phase.mu);
        } else if (phase.kind == "phase-bump") {
            if (!(std::abs(phase.epsilon) < 1.0))
                throw config_error("phase-bump law requires |epsilon| < 1");
            const double u = phase.stratified
                                 ? (static_cast<double>(i) + rng.uniform(i, 3)) / static_cast<double>(n)
                                 : rng.uniform(i, 0);
            ens.theta[i] = phase_bump_quantile(u, phase.epsilon);
        } else {
            throw config_error("unknown phase law '" + phase.kind + "'");
        }

        const std::size_t k = g.size() == 1 ? 0 : pick_node(g, rng.uniform(i, 2));
        ens.nu[i] = g.nodes[k].nu;

        if (omega_law.kind == "gaussian") {
            ens.omega[i] = omega_law.mean + omega_law.sd * rng.normal(i, 1);
        } else if (omega_law.kind == "point") {
            ens.omega[i] = omega_law.mean;
        } else if (omega_law.kind == "maxwellian") {
            if (!(params.sigma > 0.0))
                throw config_error("maxwellian omega law requires sigma > 0");
            ens.omega[i] = ens.nu[i] + omega_law.mean +
                           std::sqrt(params.sigma / params.m) * rng.normal(i, 1);
        } else {
            throw config_error("unknown omega law '" + omega_law.kind + "'");
        }
    }
    return ens;
}

OrderParameter order_parameter(const ParticleEnsemble& ens) {
    const std::size_t n = ens.n();
    if (n < 1) throw config_error("empty ensemble");
    std::vector<double> cs(n), sn(n);
    for (std::size_t i = 0; i < n; ++i) {
        cs[i] = std::cos(ens.theta[i]);
        sn[i] = std::sin(ens.theta[i]);
    }
    const double re = pairwise_sum(cs.data(), n) / static_cast<double>(n);
    const double im = pairwise_sum(sn.data(), n) / static_cast<double>(n);
    OrderParameter op;
    op.r = std::hypot(re, im);
    op.phi = op.r > 0.0 ? wrap_phase(std::atan2(im, re)) : 0.0;
    return op;
}

double coupling_field(const OrderParameter& op, double kappa, double theta) {
    return kappa * op.r * std::sin(op.phi - theta);
}

void step(ParticleEnsemble& ens, const ModelParams& params, double dt,
          const CounterRng& rng, std::uint64_t step_index, int n_threads) {
    params.validate(true);
    if (!(dt > 0.0) || dt > params.m / 10.0)
        throw numerics_error("particle step: dt must satisfy 0 < dt <= m/10");

    const OrderParameter op = order_parameter(ens);
    const std::size_t n = ens.n();
    const double inv_m = 1.0 / params.m;
    const double noise_scale = std::sqrt(2.0 * params.sigma) * inv_m * std::sqrt(dt);
    const bool with_noise = params.sigma > 0.0;
    const std::uint64_t base = step_index * n;

    parallel_for(n, n_threads, [&](std::size_t i) {
        const double theta_old = ens.theta[i];
        const double omega_old = ens.omega[i];
        double drift = inv_m * (-omega_old + ens.nu[i] +
                                coupling_field(op, params.kappa, theta_old));
        double omega_new = omega_old + drift * dt;
        if (with_noise) omega_new += noise_scale * rng.normal(base + i, 0);
        ens.theta[i] = wrap_phase(theta_old + omega_old * dt);
        ens.omega[i] = omega_new;
    });

    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(ens.theta[i]) || !std::isfinite(ens.omega[i]))
            throw numerics_error("particle step: non-finite state at index " + std::to_string(i));
    }
    ens.t += dt;
}

EmpiricalMoments empirical_moments(const ParticleEnsemble& ens) {
    if (ens.n() < 1) throw config_error("empty ensemble");
    EmpiricalMoments m;
    m.m1 = pairwise_sum(ens.omega.data(), ens.n()) / static_cast<double>(ens.n());
    return m;
}

std::vector<double> phase_histogram(const ParticleEnsemble& ens, int bins) {
    if (bins < 1) throw config_error("histogram needs bins >= 1");
    std::vector<double> h(bins, 0.0);
    const double scale = bins / two_pi;
    for (double theta : ens.theta) {
        int b = static_cast<int>(wrap_phase(theta) * scale);
        if (b >= bins) b = bins - 1;
        h[b] += 1.0;
    }
    for (double& v : h) v /= static_cast<double>(ens.n());
    return h;
}

} // namespace ksk
