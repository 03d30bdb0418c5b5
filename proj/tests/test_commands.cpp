#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "posc/commands.hpp"
#include "posc/csv.hpp"
#include "posc/dpp.hpp"
#include "posc/errors.hpp"

using namespace posc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("posc_cmd_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

RunConfig small_lq_config(const TempDir& dir) {
    RunConfig cfg;
    cfg.T = 0.1;
    cfg.dx_list = {0.2, 0.14, 0.1};
    cfg.node_radius = 2;
    cfg.resolution = 4;
    cfg.sim_paths = 2000;
    cfg.mc_paths = 2000;
    cfg.ode_steps = 200;
    cfg.out = (dir.path / "out").string();
    validate_config(cfg);
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Drops the final (wall_time) column of every data row.
std::string strip_wall_time(const std::string& csv) {
    std::stringstream out;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '#') {
            const std::size_t cut = line.find_last_of(',');
            if (cut != std::string::npos) line = line.substr(0, cut);
        }
        out << line << '\n';
    }
    return out.str();
}

}  // namespace

TEST_CASE("cmd_check passes the lq and zero configurations") {
    TempDir dir;
    RunConfig cfg = small_lq_config(dir);
    std::ostringstream os;
    CHECK(cmd_check(cfg, CliOptions{}, os) == 0);
    CHECK(fs::exists(fs::path(cfg.out) / "check_report.csv"));

    RunConfig zero = cfg;
    zero.problem = "zero";
    zero.h_ratio = 0.5;
    std::ostringstream os2;
    CHECK(cmd_check(zero, CliOptions{}, os2) == 0);
    CHECK(os2.str().find("[PASS]") != std::string::npos);
}

TEST_CASE("cmd_solve prints a zero value for the zero problem") {
    TempDir dir;
    RunConfig cfg = small_lq_config(dir);
    cfg.problem = "zero";
    cfg.h_ratio = 0.5;
    std::ostringstream os;
    CHECK(cmd_solve(cfg, CliOptions{}, os) == 0);
    CHECK(os.str().find("V_h = 0 ") != std::string::npos);
    CHECK(fs::exists(fs::path(cfg.out) / "value_table.csv"));
    CHECK(fs::exists(fs::path(cfg.out) / "policy_table.csv"));
}

TEST_CASE("cmd_solve with one step matches the strategy-enumeration oracle") {
    TempDir dir;
    RunConfig cfg = small_lq_config(dir);
    cfg.T = 0.001;          // one step at dx = 0.1, h = dx^2/10
    cfg.dx_list = {0.1};
    cfg.action_count = 3;   // {-3, 0, 3}
    std::ostringstream os;
    CHECK(cmd_solve(cfg, CliOptions{}, os) == 0);

    const Instance inst = make_instance(cfg, 0.1);
    REQUIRE(inst.lattice.n_steps == 1);
    const double brute =
        inst.spec->reported_value(brute_force_value(*inst.spec, *inst.kernel, inst.law, 1));
    const std::string text = os.str();
    const std::size_t pos = text.find("V_h = ");
    REQUIRE(pos != std::string::npos);
    const double printed = std::stod(text.substr(pos + 6));
    // One step: the terminal layer is linear in the belief, so the grid
    // interpolation is exact and the DPP value equals the exhaustive sup.
    CHECK(printed == doctest::Approx(brute).epsilon(1e-10));
}

TEST_CASE("cmd_simulate requires a policy source") {
    TempDir dir;
    RunConfig cfg = small_lq_config(dir);
    std::ostringstream os;
    CHECK_THROWS_AS(cmd_simulate(cfg, CliOptions{}, os), ConfigError);
}

TEST_CASE("cmd_simulate with a constant action on the zero problem") {
    TempDir dir;
    RunConfig cfg = small_lq_config(dir);
    cfg.problem = "zero";
    cfg.h_ratio = 0.5;
    cfg.sim_paths = 100;
    CliOptions options;
    options.const_action = 0.0;
    options.dump_paths = 7;
    std::ostringstream os;
    CHECK(cmd_simulate(cfg, options, os) == 0);
    CHECK(os.str().find("J_h = 0 ") != std::string::npos);
    const std::string paths = slurp(fs::path(cfg.out) / "paths.csv");
    // Header plus 7 recorded paths of n_steps+1 rows each.
    const Instance inst = make_instance(cfg, cfg.dx_list.front());
    const std::size_t expected_rows =
        1 + 7 * (static_cast<std::size_t>(inst.lattice.n_steps) + 1);
    std::size_t rows = 0;
    for (char ch : paths) {
        if (ch == '\n') ++rows;
    }
    CHECK(rows == expected_rows);
}

TEST_CASE("policy tables round-trip through solve and simulate") {
    TempDir dir;
    RunConfig cfg = small_lq_config(dir);
    cfg.dx_list = {0.14};
    std::ostringstream os;
    REQUIRE(cmd_solve(cfg, CliOptions{}, os) == 0);

    const std::string policy_path = (fs::path(cfg.out) / "policy_table.csv").string();
    const PolicyTable loaded = load_policy_table(policy_path);
    const Instance inst = make_instance(cfg, 0.14);
    CHECK(loaded.n_steps == inst.lattice.n_steps);
    CHECK(loaded.node_count == inst.lattice.node_count);
    CHECK(loaded.resolution == cfg.resolution);

    CliOptions options;
    options.policy_path = policy_path;
    std::ostringstream os2;
    CHECK(cmd_simulate(cfg, options, os2) == 0);
    CHECK(os2.str().find("J_h = ") != std::string::npos);
}

TEST_CASE("cmd_simulate rejects a mismatched policy table") {
    TempDir dir;
    RunConfig cfg = small_lq_config(dir);
    cfg.dx_list = {0.14};
    std::ostringstream os;
    REQUIRE(cmd_solve(cfg, CliOptions{}, os) == 0);
    RunConfig other = cfg;
    other.dx_list = {0.1};  // different n_steps
    CliOptions options;
    options.policy_path = (fs::path(cfg.out) / "policy_table.csv").string();
    std::ostringstream os2;
    CHECK_THROWS_AS(cmd_simulate(other, options, os2), ConfigError);
}

TEST_CASE("cmd_lq_ref runs and writes the ode curves") {
    TempDir dir;
    RunConfig cfg = small_lq_config(dir);
    cfg.mc_paths = 500;
    std::ostringstream os;
    CHECK(cmd_lq_ref(cfg, CliOptions{}, os) == 0);
    CHECK(os.str().find("V_ref = ") != std::string::npos);
    CHECK(fs::exists(fs::path(cfg.out) / "lq_curves.csv"));

    RunConfig zero = cfg;
    zero.problem = "zero";
    zero.h_ratio = 0.5;
    std::ostringstream os2;
    CHECK_THROWS_AS(cmd_lq_ref(zero, CliOptions{}, os2), ConfigError);
}

TEST_CASE("cmd_converge needs at least three rungs") {
    TempDir dir;
    RunConfig cfg = small_lq_config(dir);
    cfg.dx_list = {0.14};
    std::ostringstream os;
    CHECK_THROWS_AS(cmd_converge(cfg, CliOptions{}, os), ConfigError);
}

TEST_CASE("cmd_converge in self mode is deterministic and writes the ladder") {
    TempDir dir;
    RunConfig cfg = small_lq_config(dir);
    cfg.reference = "self";
    std::ostringstream os;
    CHECK(cmd_converge(cfg, CliOptions{}, os) == 0);
    CHECK(os.str().find("slope(") != std::string::npos);
    const std::string first = slurp(fs::path(cfg.out) / "converge.csv");

    std::ostringstream os2;
    CHECK(cmd_converge(cfg, CliOptions{}, os2) == 0);
    const std::string second = slurp(fs::path(cfg.out) / "converge.csv");
    CHECK(strip_wall_time(first) == strip_wall_time(second));

    // Self mode drops the reference rung: 3 dx values -> 2 data rows.
    std::size_t data_rows = 0;
    std::istringstream in(first);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '#') ++data_rows;
    }
    CHECK(data_rows == 2);
}

TEST_CASE("converge with mc reference on a non-lq problem is a config error") {
    TempDir dir;
    RunConfig cfg = small_lq_config(dir);
    cfg.problem = "zero";
    cfg.h_ratio = 0.5;
    std::ostringstream os;
    CHECK_THROWS_AS(cmd_converge(cfg, CliOptions{}, os), ConfigError);
}
