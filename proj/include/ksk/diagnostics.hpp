#ifndef KSK_DIAGNOSTICS_HPP
#define KSK_DIAGNOSTICS_HPP

#include <optional>
#include <string>
#include <vector>

namespace ksk {

// One row of the shared CSV schema.  Quantities a mode does not produce stay
// unset and are written as empty fields.
struct DiagnosticsRow {
    double t = 0.0;
    std::optional<double> mass;
    std::optional<double> marginal_err;
    std::optional<double> min_F;
    std::optional<double> m0;
    std::optional<double> m1;
    std::optional<double> r;
    std::optional<double> f_l2;
    std::optional<double> f_h1;
    std::optional<double> f0_l2;
    std::optional<double> f1_l2;
    std::optional<double> imp_f_mu;      // ||(I - P) f||_mu
    std::optional<double> residual_mass;
    std::optional<double> residual_mom;
    std::optional<double> residual_energy;
};

struct DiagnosticsSeries {
    std::vector<DiagnosticsRow> rows;

    static const char* header(); // fixed column order
    std::string to_csv() const;
    void write_csv(const std::string& path) const;
};

} // namespace ksk

#endif
