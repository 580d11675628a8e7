#include "ksk/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ksk/errors.hpp"

namespace ksk {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// The full key registry, in echo order.
const std::array<const char*, 40> known_keys = {
    "mode",
    "params.m", "params.kappa", "params.sigma",
    "g.kind", "g.nu0", "g.values", "g.mean", "g.stddev", "g.nodes",
    "grid.n_theta", "grid.n_omega", "grid.width_factor",
    "init.profile", "init.epsilon", "init.mode", "init.shift", "init.amplitude", "init.file",
    "run.t_end", "run.dt", "run.diag_cadence", "run.snapshot_cadence",
    "run.seed", "run.threads", "run.out",
    "particles.n", "particles.phase_law", "particles.phase_mu", "particles.phase_sd",
    "particles.phase_eps", "particles.stratified",
    "particles.omega_law", "particles.omega_mean", "particles.omega_sd",
    "hydro.bump_eps", "hydro.u0",
    "verify.trials", "verify.coercivity_trials",
    "study.values",
};

bool is_known(const std::string& key) {
    for (const char* k : known_keys)
        if (key == k) return true;
    // study.parameter intentionally included below; keep list in sync
    return key == "study.parameter";
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "': expected a number, got '" + value + "'");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "': expected an integer, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw config_error("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw config_error("config key '" + key + "': empty list");
    return out;
}

void apply(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (!is_known(key)) throw config_error("unknown config key '" + key + "'");

    if (key == "mode") cfg.mode = value;
    else if (key == "params.m") cfg.params.m = parse_double(key, value);
    else if (key == "params.kappa") cfg.params.kappa = parse_double(key, value);
    else if (key == "params.sigma") cfg.params.sigma = parse_double(key, value);
    else if (key == "g.kind") cfg.g_kind = value;
    else if (key == "g.nu0") cfg.g_nu0 = parse_double(key, value);
    else if (key == "g.values") cfg.g_values = value;
    else if (key == "g.mean") cfg.g_mean = parse_double(key, value);
    else if (key == "g.stddev") cfg.g_stddev = parse_double(key, value);
    else if (key == "g.nodes") cfg.g_nodes = static_cast<int>(parse_int(key, value));
    else if (key == "grid.n_theta") cfg.n_theta = static_cast<int>(parse_int(key, value));
    else if (key == "grid.n_omega") cfg.n_omega = static_cast<int>(parse_int(key, value));
    else if (key == "grid.width_factor") cfg.width_factor = parse_double(key, value);
    else if (key == "init.profile") cfg.profile.name = value;
    else if (key == "init.epsilon") cfg.profile.epsilon = parse_double(key, value);
    else if (key == "init.mode") cfg.profile.mode = static_cast<int>(parse_int(key, value));
    else if (key == "init.shift") cfg.profile.shift = parse_double(key, value);
    else if (key == "init.amplitude") cfg.profile.amplitude = parse_double(key, value);
    else if (key == "init.file") cfg.profile.file = value;
    else if (key == "run.t_end") cfg.t_end = parse_double(key, value);
    else if (key == "run.dt") cfg.dt = parse_double(key, value);
    else if (key == "run.diag_cadence") cfg.diag_cadence = parse_double(key, value);
    else if (key == "run.snapshot_cadence") cfg.snapshot_cadence = parse_double(key, value);
    else if (key == "run.seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "run.threads") cfg.threads = static_cast<int>(parse_int(key, value));
    else if (key == "run.out") cfg.out_dir = value;
    else if (key == "particles.n") cfg.particles_n = static_cast<std::size_t>(parse_int(key, value));
    else if (key == "particles.phase_law") cfg.phase_law.kind = value;
    else if (key == "particles.phase_mu") cfg.phase_law.mu = parse_double(key, value);
    else if (key == "particles.phase_sd") cfg.phase_law.sd = parse_double(key, value);
    else if (key == "particles.phase_eps") cfg.phase_law.epsilon = parse_double(key, value);
    else if (key == "particles.stratified") cfg.phase_law.stratified = parse_bool(key, value);
    else if (key == "particles.omega_law") cfg.omega_law.kind = value;
    else if (key == "particles.omega_mean") cfg.omega_law.mean = parse_double(key, value);
    else if (key == "particles.omega_sd") cfg.omega_law.sd = parse_double(key, value);
    else if (key == "hydro.bump_eps") cfg.hydro_bump_eps = parse_double(key, value);
    else if (key == "hydro.u0") cfg.hydro_u0 = parse_double(key, value);
    else if (key == "verify.trials") cfg.verify_trials = static_cast<int>(parse_int(key, value));
    else if (key == "verify.coercivity_trials")
        cfg.coercivity_trials = static_cast<int>(parse_int(key, value));
    else if (key == "study.parameter") cfg.study_parameter = value;
    else if (key == "study.values") cfg.study_values = parse_double_list(key, value);
}

void validate(RunConfig& cfg) {
    static const std::array<const char*, 5> modes = {"particles", "kinetic", "hydro", "verify",
                                                     "decay-study"};
    if (std::find(modes.begin(), modes.end(), cfg.mode) == modes.end())
        throw config_error(cfg.mode.empty()
                               ? "config key 'mode': a mode must be given"
                               : "config key 'mode': unknown mode '" + cfg.mode + "'");

    const bool particle_mode = cfg.mode == "particles";
    if (!(cfg.params.m > 0.0)) throw config_error("config key 'params.m': must be > 0");
    if (!(cfg.params.kappa >= 0.0)) throw config_error("config key 'params.kappa': must be >= 0");
    if (!(cfg.params.sigma >= 0.0)) throw config_error("config key 'params.sigma': must be >= 0");
    if (cfg.params.sigma == 0.0 && !particle_mode)
        throw config_error("config key 'params.sigma': 0 is only admissible in particle mode");

    if (cfg.g_kind != "dirac" && cfg.g_kind != "discrete" && cfg.g_kind != "gaussian")
        throw config_error("config key 'g.kind': unknown kind '" + cfg.g_kind + "'");
    if (!(cfg.t_end >= 0.0)) throw config_error("config key 'run.t_end': must be >= 0");
    if (cfg.dt < 0.0) throw config_error("config key 'run.dt': must be >= 0 (0 = auto)");
    if (!(cfg.diag_cadence > 0.0))
        throw config_error("config key 'run.diag_cadence': must be > 0");
    if (cfg.snapshot_cadence < 0.0)
        throw config_error("config key 'run.snapshot_cadence': must be >= 0");
    if (cfg.threads < 1) throw config_error("config key 'run.threads': must be >= 1");
    if (cfg.particles_n < 1) throw config_error("config key 'particles.n': must be >= 1");
    if (cfg.study_parameter != "sigma" && cfg.study_parameter != "kappa")
        throw config_error("config key 'study.parameter': must be sigma or kappa");
    if (cfg.verify_trials < 1) throw config_error("config key 'verify.trials': must be >= 1");
    if (cfg.coercivity_trials < 10)
        throw config_error("config key 'verify.coercivity_trials': must be >= 10");
}

} // namespace

FrequencyDistribution RunConfig::make_g() const {
    if (g_kind == "dirac") return FrequencyDistribution::dirac(g_nu0);
    if (g_kind == "gaussian")
        return FrequencyDistribution::gaussian(g_mean, g_stddev, g_nodes);
    // discrete: "nu:w, nu:w, ..."
    std::vector<FrequencyNode> nodes;
    std::stringstream ss(g_values);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos)
            throw config_error("config key 'g.values': expected nu:weight pairs");
        nodes.push_back(FrequencyNode{parse_double("g.values", trim(item.substr(0, colon))),
                                      parse_double("g.values", trim(item.substr(colon + 1)))});
    }
    if (nodes.empty()) throw config_error("config key 'g.values': no nodes given");
    return FrequencyDistribution::discrete(std::move(nodes));
}

PhaseSpaceGrid RunConfig::make_grid() const {
    return PhaseSpaceGrid::make(params, make_g(), n_theta, n_omega, width_factor);
}

std::string RunConfig::resolved_text() const {
    auto fmt = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::string s;
    s += "mode = " + mode + "\n";
    s += "params.m = " + fmt(params.m) + "\n";
    s += "params.kappa = " + fmt(params.kappa) + "\n";
    s += "params.sigma = " + fmt(params.sigma) + "\n";
    s += "g.kind = " + g_kind + "\n";
    s += "g.nu0 = " + fmt(g_nu0) + "\n";
    s += "g.values = " + g_values + "\n";
    s += "g.mean = " + fmt(g_mean) + "\n";
    s += "g.stddev = " + fmt(g_stddev) + "\n";
    s += "g.nodes = " + std::to_string(g_nodes) + "\n";
    s += "grid.n_theta = " + std::to_string(n_theta) + "\n";
    s += "grid.n_omega = " + std::to_string(n_omega) + "\n";
    s += "grid.width_factor = " + fmt(width_factor) + "\n";
    s += "init.profile = " + profile.name + "\n";
    s += "init.epsilon = " + fmt(profile.epsilon) + "\n";
    s += "init.mode = " + std::to_string(profile.mode) + "\n";
    s += "init.shift = " + fmt(profile.shift) + "\n";
    s += "init.amplitude = " + fmt(profile.amplitude) + "\n";
    s += "init.file = " + profile.file + "\n";
    s += "run.t_end = " + fmt(t_end) + "\n";
    s += "run.dt = " + fmt(dt) + "\n";
    s += "run.diag_cadence = " + fmt(diag_cadence) + "\n";
    s += "run.snapshot_cadence = " + fmt(snapshot_cadence) + "\n";
    s += "run.seed = " + std::to_string(seed) + "\n";
    s += "run.threads = " + std::to_string(threads) + "\n";
    s += "run.out = " + out_dir + "\n";
    s += "particles.n = " + std::to_string(particles_n) + "\n";
    s += "particles.phase_law = " + phase_law.kind + "\n";
    s += "particles.phase_mu = " + fmt(phase_law.mu) + "\n";
    s += "particles.phase_sd = " + fmt(phase_law.sd) + "\n";
    s += "particles.phase_eps = " + fmt(phase_law.epsilon) + "\n";
    s += "particles.stratified = " + std::string(phase_law.stratified ? "true" : "false") + "\n";
    s += "particles.omega_law = " + omega_law.kind + "\n";
    s += "particles.omega_mean = " + fmt(omega_law.mean) + "\n";
    s += "particles.omega_sd = " + fmt(omega_law.sd) + "\n";
    s += "hydro.bump_eps = " + fmt(hydro_bump_eps) + "\n";
    s += "hydro.u0 = " + fmt(hydro_u0) + "\n";
    s += "verify.trials = " + std::to_string(verify_trials) + "\n";
    s += "verify.coercivity_trials = " + std::to_string(coercivity_trials) + "\n";
    s += "study.parameter = " + study_parameter + "\n";
    s += "study.values =";
    for (std::size_t i = 0; i < study_values.size(); ++i)
        s += (i == 0 ? " " : ", ") + fmt(study_values[i]);
    s += "\n";
    return s;
}

RunConfig parse_config(const std::string& file_text,
                       const std::vector<std::string>& overrides,
                       const std::string& mode) {
    RunConfig cfg;
    if (!mode.empty()) cfg.mode = mode;

    std::string section;
    std::stringstream ss(file_text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("config line " + std::to_string(line_no) +
                                   ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(line_no) +
                               ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
        apply(cfg, key, value);
    }

    for (const std::string& ov : overrides) {
        const std::size_t eq = ov.find('=');
        if (eq == std::string::npos)
            throw config_error("override '" + ov + "': expected key=value");
        apply(cfg, trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
    }

    if (!mode.empty()) cfg.mode = mode; // the subcommand wins
    validate(cfg);
    return cfg;
}

RunConfig parse_config_file(const std::string& path,
                            const std::vector<std::string>& overrides,
                            const std::string& mode) {
    std::string text;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot read config file: " + path);
        std::stringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }
    return parse_config(text, overrides, mode);
}

} // namespace ksk
