#include "ksk/diagnostics.hpp"

#include <cstdio>
#include <fstream>

#include "ksk/errors.hpp"

namespace ksk {

namespace {

void append_value(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

void append_cell(std::string& out, const std::optional<double>& v) {
    out += ',';
    if (v) append_value(out, *v);
}

} // namespace

const char* DiagnosticsSeries::header() {
    return "t,mass,marginal_err,min_F,M0,M1,r,f_L2,f_H1,f0_L2,f1_L2,ImPf_mu,"
           "residual_mass,residual_mom,residual_energy";
}

std::string DiagnosticsSeries::to_csv() const {
    std::string out(header());
    out += '\n';
    for (const auto& row : rows) {
        append_value(out, row.t);
        append_cell(out, row.mass);
        append_cell(out, row.marginal_err);
        append_cell(out, row.min_F);
        append_cell(out, row.m0);
        append_cell(out, row.m1);
        append_cell(out, row.r);
        append_cell(out, row.f_l2);
        append_cell(out, row.f_h1);
        append_cell(out, row.f0_l2);
        append_cell(out, row.f1_l2);
        append_cell(out, row.imp_f_mu);
        append_cell(out, row.residual_mass);
        append_cell(out, row.residual_mom);
        append_cell(out, row.residual_energy);
        out += '\n';
    }
    return out;
}

void DiagnosticsSeries::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("cannot open diagnostics file for writing: " + path);
    const std::string csv = to_csv();
    out.write(csv.data(), static_cast<std::streamsize>(csv.size()));
    if (!out) throw config_error("failed writing diagnostics: " + path);
}

} // namespace ksk
