#include "ksk/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ksk/errors.hpp"

namespace ksk {

namespace {
constexpr double two_pi = 6.283185307179586476925287;
}

void ModelParams::validate(bool allow_zero_sigma) const {
    if (!(m > 0.0)) throw config_error("params.m must be > 0");
    if (!(kappa >= 0.0)) throw config_error("params.kappa must be >= 0");
    if (!(sigma >= 0.0)) throw config_error("params.sigma must be >= 0");
    if (sigma == 0.0 && !allow_zero_sigma)
        throw config_error("params.sigma = 0: degenerate diffusion (allowed only in particle mode)");
}

FrequencyDistribution FrequencyDistribution::dirac(double nu0) {
    FrequencyDistribution g;
    g.kind = FrequencyKind::dirac;
    g.nodes = {FrequencyNode{nu0, 1.0}};
    return g;
}

FrequencyDistribution FrequencyDistribution::discrete(std::vector<FrequencyNode> nodes) {
    FrequencyDistribution g;
    g.kind = FrequencyKind::discrete;
    g.nodes = std::move(nodes);
    g.validate();
    return g;
}

namespace {

// Roots and weights of the physicists' Hermite polynomial H_n by Newton
// iteration, then rescaled to integrate against a unit Gaussian.
void gauss_hermite(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const double pi_quarter = 0.7511255444649425; // pi^(-1/4)
    const int half = (n + 1) / 2;
    std::vector<double> roots(half, 0.0); // descending positive roots
    double z = 0.0;
    for (int i = 0; i < half; ++i) {
        // Initial guesses track the previous root (Numerical Recipes gauher).
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        else if (i == 1)
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * roots[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * roots[1];
        else
            z = 2.0 * z - roots[i - 2];
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Recurrence for orthonormal Hermite functions.
            double p1 = pi_quarter;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
                     std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        roots[i] = z;
        x[n - 1 - i] = z;
        x[i] = -z;
        w[n - 1 - i] = 2.0 / (pp * pp);
        w[i] = w[n - 1 - i];
    }
}

} // namespace

FrequencyDistribution FrequencyDistribution::gaussian(double mean, double stddev, int n_nodes) {
    if (n_nodes < 1) throw config_error("g.nodes must be >= 1");
    if (!(stddev > 0.0)) throw config_error("g.stddev must be > 0");
    std::vector<double> x, w;
    gauss_hermite(n_nodes, x, w);
    FrequencyDistribution g;
    g.kind = FrequencyKind::gaussian_quadrature;
    g.nodes.clear();
    double wsum = 0.0;
    for (int i = 0; i < n_nodes; ++i) wsum += w[i];
    for (int i = 0; i < n_nodes; ++i) {
        // nu = mean + sqrt(2) s x; Gaussian weights normalized to sum to 1.
        g.nodes.push_back(FrequencyNode{mean + std::sqrt(2.0) * stddev * x[i], w[i] / wsum});
    }
    g.validate();
    return g;
}

double FrequencyDistribution::mean_nu() const {
    double s = 0.0;
    for (const auto& n : nodes) s += n.nu * n.weight;
    return s;
}

double FrequencyDistribution::nu_norm_sq() const {
    double s = 0.0;
    for (const auto& n : nodes) s += (1.0 + n.nu * n.nu) * n.weight;
    return s;
}

double FrequencyDistribution::weight_at(double nu) const {
    for (const auto& n : nodes)
        if (std::abs(n.nu - nu) <= 1e-12 * std::max(1.0, std::abs(nu))) return n.weight;
    throw config_error("frequency value is not a node of g");
}

void FrequencyDistribution::validate() const {
    if (nodes.empty()) throw config_error("g has no nodes");
    double sum = 0.0;
    for (const auto& n : nodes) {
        if (!(n.weight > 0.0)) throw config_error("g weights must be positive");
        if (!std::isfinite(n.nu)) throw config_error("g nodes must be finite");
        sum += n.weight;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw config_error("g weights must sum to 1");
}

double maxwellian_density(const ModelParams& params, double omega, double nu) {
    const double d = omega - nu;
    return (1.0 / two_pi) * std::sqrt(params.m / (two_pi * params.sigma)) *
           std::exp(-0.5 * (params.m / params.sigma) * d * d);
}

double maxwellian(const ModelParams& params, const FrequencyDistribution& g,
                  double omega, double nu) {
    if (!(params.sigma > 0.0)) throw config_error("degenerate diffusion: sigma must be > 0");
    return maxwellian_density(params, omega, nu) * g.weight_at(nu);
}

double gaussian_moment(const ModelParams& params, int ell) {
    if (ell < 0 || ell > 4) throw config_error("gaussian_moment: ell must be in [0, 4]");
    double double_factorial = 1.0; // (2l-1)!!
    for (int k = 2 * ell - 1; k > 1; k -= 2) double_factorial *= k;
    return double_factorial / two_pi * std::pow(params.sigma / params.m, ell);
}

NoiseMarginReport noise_condition_margin(const ModelParams& params,
                                         const FrequencyDistribution& g) {
    NoiseMarginReport r;
    r.term_m_kappa_sq = params.m * params.kappa * params.kappa;
    r.term_kappa = params.kappa;
    r.term_inv_m = 1.0 / params.m;
    r.term_m_g_norm = params.m * g.nu_norm_sq();
    r.threshold = std::max({r.term_m_kappa_sq, r.term_kappa, r.term_inv_m, r.term_m_g_norm});
    r.ratio = params.sigma / r.threshold;
    return r;
}

} // namespace ksk
