#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ksk/config.hpp"
#include "ksk/errors.hpp"
#include "ksk/run.hpp"

using namespace ksk;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("defaults and mode requirement") {
    const RunConfig cfg = parse_config("", {}, "kinetic");
    CHECK(cfg.params.m == 1.0);
    CHECK(cfg.n_theta == 64);
    CHECK(cfg.n_omega == 128);
    CHECK(cfg.g_kind == "dirac");
    CHECK(cfg.seed == 12345);

    CHECK_THROWS_AS(parse_config("", {}, ""), config_error);
}

TEST_CASE("unknown keys and constraint violations name the key") {
    try {
        parse_config("[params]\nmm = 3\n", {}, "kinetic");
        CHECK(false);
    } catch (const config_error& err) {
        CHECK(std::string(err.what()).find("params.mm") != std::string::npos);
    }
    try {
        parse_config("[params]\nm = -1\n", {}, "kinetic");
        CHECK(false);
    } catch (const config_error& err) {
        CHECK(std::string(err.what()).find("params.m") != std::string::npos);
    }
    // sigma = 0 admissible only for particles
    CHECK_THROWS_AS(parse_config("[params]\nsigma = 0\n", {}, "kinetic"), config_error);
    CHECK_NOTHROW(parse_config("[params]\nsigma = 0\n", {}, "particles"));
}

TEST_CASE("parsing is deterministic and overrides win") {
    const std::string text = "[params]\nm = 2 # inertia\nkappa = 0.25\n\n[grid]\nn_theta = 32\n";
    const RunConfig a = parse_config(text, {}, "kinetic");
    const RunConfig b = parse_config(text, {}, "kinetic");
    CHECK(a.resolved_text() == b.resolved_text());
    CHECK(a.params.m == 2.0);
    CHECK(a.n_theta == 32);

    const RunConfig c = parse_config(text, {"params.m=4", "run.seed=9"}, "kinetic");
    CHECK(c.params.m == 4.0);
    CHECK(c.seed == 9);
    CHECK(c.resolved_text().find("params.m = 4") != std::string::npos);
}

TEST_CASE("discrete g parsing") {
    const RunConfig cfg =
        parse_config("[g]\nkind = discrete\nvalues = -0.5:0.25, 0.5:0.75\n", {}, "kinetic");
    const FrequencyDistribution g = cfg.make_g();
    CHECK(g.size() == 2);
    CHECK(g.nodes[0].nu == doctest::Approx(-0.5));
    CHECK(g.nodes[1].weight == doctest::Approx(0.75));
}

TEST_CASE("run_mode: kinetic with t_end = 0 emits a single row") {
    RunConfig cfg = parse_config("", {"grid.n_theta=16", "grid.n_omega=64", "run.t_end=0"},
                                 "kinetic");
    cfg.out_dir = "test_out/kin_t0";
    CHECK(run_mode(cfg) == 0);
    const std::string csv = slurp("test_out/kin_t0/diagnostics.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2); // header + one row
    CHECK(std::filesystem::exists("test_out/kin_t0/summary.json"));
    CHECK(std::filesystem::exists("test_out/kin_t0/config_resolved.txt"));
}

TEST_CASE("run_mode: verify emits identity report") {
    RunConfig cfg = parse_config(
        "", {"grid.n_theta=16", "grid.n_omega=128", "verify.trials=5",
             "verify.coercivity_trials=10"},
        "verify");
    cfg.out_dir = "test_out/verify";
    CHECK(run_mode(cfg) == 0);
    const std::string summary = slurp("test_out/verify/summary.json");
    CHECK(summary.find("self_adjointness") != std::string::npos);
    CHECK(summary.find("lambda0") != std::string::npos);
    CHECK(summary.find("\"status\": \"ok\"") != std::string::npos);
}

TEST_CASE("run_mode: diagnostics are byte-identical across thread counts") {
    auto run_with_threads = [](const std::string& mode, int threads, const std::string& out) {
        RunConfig cfg = parse_config(
            "", {"grid.n_theta=16", "grid.n_omega=64", "run.t_end=0.2", "run.dt=0.001",
                 "run.diag_cadence=0.05", "init.profile=phase-bump", "init.epsilon=0.2",
                 "particles.n=2000"},
            mode);
        cfg.out_dir = out;
        cfg.threads = threads;
        REQUIRE(run_mode(cfg) == 0);
        return slurp(out + "/diagnostics.csv");
    };
    CHECK(run_with_threads("kinetic", 1, "test_out/k1") ==
          run_with_threads("kinetic", 3, "test_out/k3"));
    CHECK(run_with_threads("particles", 1, "test_out/p1") ==
          run_with_threads("particles", 3, "test_out/p3"));
}

TEST_CASE("run_mode: equilibrium start keeps all decay diagnostics flat at zero") {
    RunConfig cfg = parse_config(
        "", {"grid.n_theta=16", "grid.n_omega=64", "run.t_end=0.1", "run.diag_cadence=0.02",
             "init.profile=maxwellian"},
        "kinetic");
    cfg.out_dir = "test_out/kin_eq";
    CHECK(run_mode(cfg) == 0);
    // M1 and r stay at round-off; the f-norms stay at the (coarse) scheme
    // error level of the discrete steady state
    std::stringstream ss(slurp("test_out/kin_eq/diagnostics.csv"));
    std::string line;
    std::getline(ss, line); // header
    int rows = 0;
    while (std::getline(ss, line)) {
        std::stringstream cells(line);
        std::vector<std::string> cell;
        std::string c;
        while (std::getline(cells, c, ',')) cell.push_back(c);
        CHECK(std::abs(std::stod(cell[5])) <= 1e-12); // M1
        CHECK(std::abs(std::stod(cell[6])) <= 1e-12); // r
        CHECK(std::abs(std::stod(cell[7])) <= 0.05);  // f_L2
        ++rows;
    }
    CHECK(rows >= 5);
}

TEST_CASE("run_mode: decay study produces one summary row per value") {
    RunConfig cfg = parse_config(
        "",
        {"grid.n_theta=16", "grid.n_omega=64", "run.t_end=0.3", "run.diag_cadence=0.05",
         "init.profile=chi0-bump", "init.amplitude=0.1", "study.values=2,5"},
        "decay-study");
    cfg.out_dir = "test_out/study";
    CHECK(run_mode(cfg) == 0);
    const std::string table = slurp("test_out/study/study_summary.csv");
    CHECK(std::count(table.begin(), table.end(), '\n') == 3); // header + two rows
    CHECK(std::filesystem::exists("test_out/study/sigma_2/diagnostics.csv"));
    CHECK(std::filesystem::exists("test_out/study/sigma_5/summary.json"));
}
