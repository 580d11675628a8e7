#ifndef KSK_MODEL_HPP
#define KSK_MODEL_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace ksk {

// Physical constants of the inertial Kuramoto-Sakaguchi model.
struct ModelParams {
    double m = 1.0;     // inertia strength, > 0
    double kappa = 1.0; // coupling strength, >= 0
    double sigma = 1.0; // noise strength, >= 0 (0 only admissible in particle mode)

    // Throws config_error on violated bounds.  `allow_zero_sigma` is set by the
    // particle driver, where the noiseless model is well defined.
    void validate(bool allow_zero_sigma = false) const;
};

enum class FrequencyKind { dirac, discrete, gaussian_quadrature };

struct FrequencyNode {
    double nu = 0.0;
    double weight = 1.0;
};

// Natural-frequency law g(nu) as quadrature nodes and probability weights.
struct FrequencyDistribution {
    FrequencyKind kind = FrequencyKind::dirac;
    std::vector<FrequencyNode> nodes{FrequencyNode{}};

    static FrequencyDistribution dirac(double nu0);
    static FrequencyDistribution discrete(std::vector<FrequencyNode> nodes);
    // Gauss-Hermite nodes for a Gaussian g with the given mean and standard
    // deviation; the node count is a user knob (default 8).
    static FrequencyDistribution gaussian(double mean, double stddev, int n_nodes = 8);

    std::size_t size() const { return nodes.size(); }
    double mean_nu() const;            // integral of nu g(nu)
    double nu_norm_sq() const;         // integral of (1 + nu^2) g(nu)
    double weight_at(double nu) const; // weight of the node matching nu; throws if absent

    // weights positive and summing to 1 within 1e-12
    void validate() const;
};

// Stationary phase-homogeneous density at one (omega, nu) point, without the
// g-weight: (1/2pi) sqrt(m/2pi sigma) exp(-(m/2sigma)(omega-nu)^2).
double maxwellian_density(const ModelParams& params, double omega, double nu);

// Full Maxwellian value M(omega, nu) = maxwellian_density * g-weight at nu.
// Requires sigma > 0; throws config_error("degenerate diffusion") otherwise.
double maxwellian(const ModelParams& params, const FrequencyDistribution& g,
                  double omega, double nu);

// Analytic even moments of M for a unit-mass frequency marginal:
//   integral (omega-nu)^(2l) M domega dnu = ((2l-1)!! / 2pi) (sigma/m)^l.
// Used as the oracle for all omega-quadrature tests.  l <= 4.
double gaussian_moment(const ModelParams& params, int ell);

// Ratio of sigma against the strong-noise threshold max{m kappa^2, kappa,
// 1/m, m ||g||_nu^2}.  The proportionality constant in front of the
// threshold is not pinned down, so this is a report rather than a verdict.
struct NoiseMarginReport {
    double term_m_kappa_sq = 0.0; // m kappa^2
    double term_kappa = 0.0;      // kappa
    double term_inv_m = 0.0;      // 1/m
    double term_m_g_norm = 0.0;   // m ||g||_nu^2
    double threshold = 0.0;       // max of the four terms
    double ratio = 0.0;           // sigma / threshold
};

NoiseMarginReport noise_condition_margin(const ModelParams& params,
                                         const FrequencyDistribution& g);

} // namespace ksk

#endif
