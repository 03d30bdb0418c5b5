#include "posc/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "posc/csv.hpp"
#include "posc/errors.hpp"
#include "posc/rng.hpp"
#include "posc/simulate.hpp"

namespace posc {

namespace {

namespace fs = std::filesystem;

void apply_overrides(RunConfig& cfg, const CliOptions& options) {
    if (options.seed) cfg.mc_seed = *options.seed;
    if (options.out) cfg.out = *options.out;
    validate_config(cfg);
}

fs::path ensure_out_dir(const RunConfig& cfg) {
    fs::path dir(cfg.out);
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_csv(const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write output file '" + path.string() + "'");
    return f;
}

std::vector<NodeSample> sample_interior_nodes(const Instance& inst, int count,
                                              std::uint64_t seed) {
    const LatticeParams& lat = inst.lattice;
    if (lat.node_count < 3) {
        throw InvalidProblemError("consistency check needs at least one interior node");
    }
    std::mt19937_64 rng = make_stream(seed, 0x436f6e73ull);
    std::uniform_int_distribution<int> ui(0, lat.n_steps - 1);
    std::uniform_int_distribution<int> uk(1, lat.node_count - 2);
    std::uniform_int_distribution<int> ua(0, static_cast<int>(inst.spec->action_grid.size()) - 1);
    std::vector<NodeSample> samples(static_cast<std::size_t>(count));
    for (NodeSample& s : samples) s = {ui(rng), uk(rng), ua(rng)};
    return samples;
}

struct SolveOutcome {
    Instance inst;
    MeasureGrid grid;
    ValueTable table;
    double engine_value = 0.0;
    double wall_seconds = 0.0;
};

SolveOutcome solve_one(const RunConfig& cfg, double dx, int threads) {
    SolveOutcome out;
    out.inst = make_instance(cfg, dx);
    out.grid = MeasureGrid::build(out.inst.lattice.node_count, cfg.resolution);
    const auto t0 = std::chrono::steady_clock::now();
    out.table = backward_induction(*out.inst.spec, *out.inst.kernel, out.inst.law, out.grid,
                                   DppOptions{threads});
    out.engine_value = initial_value(out.table, out.grid, out.inst.lattice, cfg.x0);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace

int cmd_check(RunConfig cfg, const CliOptions& options, std::ostream& os) {
    apply_overrides(cfg, options);
    const fs::path dir = ensure_out_dir(cfg);
    std::ofstream csv = open_csv(dir / "check_report.csv");
    csv << "dx,time_index,node_index,action_index,mean_error,variance_error,"
           "third_ratio,exp_ratio_c1,exp_ratio_c2\n";

    bool all_pass = true;
    for (double dx : cfg.dx_list) {
        const Instance inst = make_instance(cfg, dx);
        const ValidationReport vr = validate_problem(*inst.spec, 1000, cfg.mc_seed);
        const std::vector<NodeSample> samples = sample_interior_nodes(inst, 200, cfg.mc_seed);
        const ConsistencyReport cr = check_local_consistency(*inst.spec, *inst.kernel, samples);
        const ObsMomentReport om = check_observation_moments(inst.law);

        for (const ConsistencyRow& row : cr.rows) {
            csv << fmt_g17(dx) << ',' << row.where.time_index << ',' << row.where.node_index
                << ',' << row.where.action_index << ',' << fmt_g17(row.mean_error) << ','
                << fmt_g17(row.variance_error) << ',' << fmt_g17(row.third_moment_ratio) << ','
                << fmt_g17(row.exp_moment_ratio_c1) << ',' << fmt_g17(row.exp_moment_ratio_c2)
                << '\n';
        }

        const bool pass = vr.pass && cr.pass && om.pass;
        all_pass = all_pass && pass;
        os << (pass ? "[PASS]" : "[FAIL]") << " dx=" << dx << " h=" << inst.lattice.h
           << " n=" << inst.lattice.n_steps << " nodes=" << inst.lattice.node_count << "\n"
           << "  coefficients: " << vr.detail << (vr.pass ? " (ok)" : " (bound exceeded)") << "\n"
           << "  kernel moments: max mean err " << cr.max_mean_error << ", max var err "
           << cr.max_variance_error << " (tol " << cr.identity_tolerance << ")\n"
           << "  third-moment ratio " << cr.max_third_ratio << " <= " << cr.third_ratio_bound
           << ", exp ratios " << cr.max_exp_ratio_c1 << " <= " << cr.exp_ratio_bound_c1 << ", "
           << cr.max_exp_ratio_c2 << " <= " << cr.exp_ratio_bound_c2 << "\n"
           << "  observation law: mean err " << om.mean_error << ", var err " << om.variance_error
           << ", E|eta|^3/h^1.5 = " << om.third_moment_ratio << "\n";
    }
    os << (all_pass ? "check passed" : "check FAILED") << "; report at "
       << (dir / "check_report.csv").string() << "\n";
    return all_pass ? 0 : 1;
}

int cmd_solve(RunConfig cfg, const CliOptions& options, std::ostream& os) {
    apply_overrides(cfg, options);
    const fs::path dir = ensure_out_dir(cfg);
    const double dx = cfg.dx_list.front();
    SolveOutcome sol = solve_one(cfg, dx, options.threads);
    const double reported = sol.inst.spec->reported_value(sol.engine_value);

    const PolicyTable policy = extract_policy(sol.table, *sol.inst.spec, sol.grid);
    write_value_table((dir / "value_table.csv").string(), sol.table, policy, cfg, dx,
                      sol.inst.lattice.h);
    write_policy_table((dir / "policy_table.csv").string(), policy);

    os << "problem = " << cfg.problem << "\n"
       << "dx = " << fmt_g17(dx) << ", h = " << fmt_g17(sol.inst.lattice.h)
       << ", n_steps = " << sol.inst.lattice.n_steps << ", nodes = "
       << sol.inst.lattice.node_count << ", vertices = " << sol.grid.size() << "\n"
       << "V_h = " << fmt_g17(reported)
       << (sol.inst.spec->objective == Objective::minimize ? "  (minimal cost)"
                                                           : "  (maximal reward)")
       << "\n"
       << "tables written to " << dir.string() << "\n";
    return 0;
}

int cmd_simulate(RunConfig cfg, const CliOptions& options, std::ostream& os) {
    apply_overrides(cfg, options);
    const fs::path dir = ensure_out_dir(cfg);
    const double dx = cfg.dx_list.front();
    const Instance inst = make_instance(cfg, dx);

    BeliefPolicy policy;
    std::string policy_desc;
    if (options.const_action) {
        policy = constant_policy(*options.const_action);
        policy_desc = "constant action " + fmt_g17(*options.const_action);
    } else if (options.policy_path) {
        const PolicyTable table = load_policy_table(*options.policy_path);
        if (table.n_steps != inst.lattice.n_steps ||
            table.node_count != inst.lattice.node_count || table.resolution != cfg.resolution) {
            std::ostringstream msg;
            msg << "policy table (n=" << table.n_steps << ", nodes=" << table.node_count
                << ", M=" << table.resolution << ") does not match the configured instance (n="
                << inst.lattice.n_steps << ", nodes=" << inst.lattice.node_count
                << ", M=" << cfg.resolution << ")";
            throw ConfigError(msg.str());
        }
        const MeasureGrid grid = MeasureGrid::build(table.node_count, table.resolution);
        policy = policy_from_table(table, grid);
        policy_desc = "policy table " + *options.policy_path;
    } else {
        throw ConfigError("simulate: give --policy FILE or --const-action VALUE");
    }

    SimOptions sim_options;
    sim_options.threads = options.threads;
    sim_options.record_cap = options.dump_paths;
    const SimResult res = simulate_discrete_paths(*inst.spec, *inst.kernel, inst.law, policy,
                                                  cfg.sim_paths, cfg.mc_seed, sim_options);
    const double reported = inst.spec->reported_value(res.estimate);

    os << "policy: " << policy_desc << "\n"
       << "paths = " << cfg.sim_paths << ", seed = " << cfg.mc_seed << "\n"
       << "J_h = " << fmt_g17(reported) << " +- " << fmt_g17(res.std_error) << " (std error"
       << (inst.spec->objective == Objective::minimize ? ", cost convention)" : ")") << "\n"
       << "E[L_n] = " << fmt_g17(res.mean_likelihood) << " +- "
       << fmt_g17(res.likelihood_std_error) << "\n";

    if (options.dump_paths > 0) {
        std::ofstream csv = open_csv(dir / "paths.csv");
        csv << "path_id,step,x,y,l,action\n";
        for (std::size_t p = 0; p < res.bundle.recorded.size(); ++p) {
            const PathRecord& rec = res.bundle.recorded[p];
            for (std::size_t i = 0; i < rec.x.size(); ++i) {
                csv << p << ',' << i << ',' << fmt_g17(rec.x[i]) << ',' << fmt_g17(rec.y[i])
                    << ',' << fmt_g17(rec.l[i]) << ',';
                if (i < rec.u.size()) csv << fmt_g17(rec.u[i]);
                csv << '\n';
            }
        }
        os << "paths written to " << (dir / "paths.csv").string() << "\n";
    }
    return 0;
}

int cmd_lq_ref(RunConfig cfg, const CliOptions& options, std::ostream& os) {
    apply_overrides(cfg, options);
    if (cfg.problem != "lq") {
        throw ConfigError("lq-ref: only defined for problem = lq");
    }
    const fs::path dir = ensure_out_dir(cfg);
    const LQReference ref =
        lq_reference_value(cfg.T, cfg.x0, cfg.mc_paths, cfg.ode_steps, cfg.mc_seed,
                           options.threads);

    std::ofstream csv = open_csv(dir / "lq_curves.csv");
    csv << "t,riccati,variance\n";
    const double dt = ref.riccati.step();
    for (std::size_t j = 0; j < ref.riccati.values.size(); ++j) {
        csv << fmt_g17(static_cast<double>(j) * dt) << ',' << fmt_g17(ref.riccati.values[j])
            << ',' << fmt_g17(ref.variance.values[j]) << '\n';
    }

    os << "V_ref = " << fmt_g17(ref.value_estimate) << " +- " << fmt_g17(ref.ci_halfwidth)
       << " (3-sigma, " << ref.path_count << " paths, " << ref.euler_steps
       << " Euler steps)\n"
       << "curves written to " << (dir / "lq_curves.csv").string() << "\n";
    return 0;
}

int cmd_converge(RunConfig cfg, const CliOptions& options, std::ostream& os) {
    apply_overrides(cfg, options);
    if (cfg.dx_list.size() < 3) {
        throw ConfigError("converge: need at least 3 dx values for a slope");
    }
    const bool self_mode = cfg.reference == "self";
    if (!self_mode && cfg.problem != "lq") {
        throw ConfigError("converge: reference = mc requires problem = lq");
    }
    const fs::path dir = ensure_out_dir(cfg);

    struct Rung {
        double dx = 0.0;
        double h = 0.0;
        std::int64_t vertices = 0;
        double v_reported = 0.0;
        double seconds = 0.0;
    };
    std::vector<Rung> rungs;
    for (double dx : cfg.dx_list) {
        SolveOutcome sol = solve_one(cfg, dx, options.threads);
        rungs.push_back({dx, sol.inst.lattice.h, sol.grid.size(),
                         sol.inst.spec->reported_value(sol.engine_value), sol.wall_seconds});
        os << "solved dx=" << fmt_g17(dx) << " h=" << fmt_g17(sol.inst.lattice.h)
           << " vertices=" << sol.grid.size() << " V_h=" << fmt_g17(rungs.back().v_reported)
           << " (" << sol.wall_seconds << " s)\n";
    }

    double v_ref = 0.0;
    double ci = 0.0;
    if (self_mode) {
        v_ref = rungs.back().v_reported;  // finest dx
        os << "reference: self (V_h at dx=" << fmt_g17(rungs.back().dx) << ") = "
           << fmt_g17(v_ref) << "\n";
    } else {
        const LQReference ref = lq_reference_value(cfg.T, cfg.x0, cfg.mc_paths, cfg.ode_steps,
                                                   cfg.mc_seed, options.threads);
        v_ref = ref.value_estimate;
        ci = ref.ci_halfwidth;
        os << "reference: Monte Carlo V_ref = " << fmt_g17(v_ref) << " +- " << fmt_g17(ci)
           << " (3-sigma)\n";
    }

    const std::size_t n_rows = self_mode ? rungs.size() - 1 : rungs.size();
    std::ofstream csv = open_csv(dir / "converge.csv");
    csv << "dx,h,vertex_count,V_h,V_ref,ci_halfwidth,abs_error,log_h,log_error,wall_time\n";
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    bool monotone = true;
    double prev_err = 0.0;
    for (std::size_t r = 0; r < n_rows; ++r) {
        const Rung& rung = rungs[r];
        const double abs_error = std::abs(rung.v_reported - v_ref);
        const double log_h = std::log(rung.h);
        const double log_error = std::log(std::max(abs_error, 1e-300));
        csv << fmt_g17(rung.dx) << ',' << fmt_g17(rung.h) << ',' << rung.vertices << ','
            << fmt_g17(rung.v_reported) << ',' << fmt_g17(v_ref) << ',' << fmt_g17(ci) << ','
            << fmt_g17(abs_error) << ',' << fmt_g17(log_h) << ',' << fmt_g17(log_error) << ','
            << fmt_g17(rung.seconds) << '\n';
        os << "dx=" << fmt_g17(rung.dx) << " |V_h - V_ref| = " << fmt_g17(abs_error) << "\n";
        if (r > 0 && abs_error > prev_err) monotone = false;
        prev_err = abs_error;
        sx += log_h;
        sy += log_error;
        sxx += log_h * log_h;
        sxy += log_h * log_error;
    }
    const double n_d = static_cast<double>(n_rows);
    const double slope = (sxy - sx * sy / n_d) / (sxx - sx * sx / n_d);
    csv << "# slope_log_error_vs_log_h = " << fmt_g17(slope) << '\n';

    os << "slope(log|V_h - V_ref| vs log h) = " << fmt_g17(slope) << "\n"
       << "errors " << (monotone ? "decrease monotonically" : "are NOT monotone")
       << " along the ladder\n"
       << "rows written to " << (dir / "converge.csv").string() << "\n";
    return 0;
}

void write_value_table(const std::string& path, const ValueTable& table,
                       const PolicyTable& policy, const RunConfig& config, double dx, double h) {
    std::ofstream f = open_csv(path);
    f << "# posc value table\n"
      << "# problem = " << config.problem << "\n"
      << "# n_steps = " << table.n_steps << "\n"
      << "# node_count = " << policy.node_count << "\n"
      << "# resolution = " << policy.resolution << "\n"
      << "# dx = " << fmt_g17(dx) << "\n"
      << "# h = " << fmt_g17(h) << "\n"
      << "# action_grid =";
    for (double a : policy.action_grid) f << ' ' << fmt_g17(a);
    f << "\nvertex_id,time_index,value,action_index\n";
    for (std::int64_t v = 0; v < table.vertex_count; ++v) {
        for (int l = 0; l <= table.n_steps; ++l) {
            f << v << ',' << l << ','
              << fmt_g17(table.values[static_cast<std::size_t>(l)][static_cast<std::size_t>(v)])
              << ',';
            if (l < table.n_steps) {
                f << table.policy[static_cast<std::size_t>(l)][static_cast<std::size_t>(v)];
            } else {
                f << -1;
            }
            f << '\n';
        }
    }
}

void write_policy_table(const std::string& path, const PolicyTable& policy) {
    std::ofstream f = open_csv(path);
    f << "# posc policy table\n"
      << "# n_steps = " << policy.n_steps << "\n"
      << "# node_count = " << policy.node_count << "\n"
      << "# resolution = " << policy.resolution << "\n"
      << "# action_grid =";
    for (double a : policy.action_grid) f << ' ' << fmt_g17(a);
    f << "\nvertex_id,time_index,action_index\n";
    for (std::int64_t v = 0; v < policy.vertex_count; ++v) {
        for (int l = 0; l < policy.n_steps; ++l) {
            f << v << ',' << l << ','
              << policy.actions[static_cast<std::size_t>(l)][static_cast<std::size_t>(v)] << '\n';
        }
    }
}

PolicyTable load_policy_table(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open policy file '" + path + "'");
    PolicyTable table;
    std::string line;
    bool header_done = false;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream is(line.substr(1));
            std::string key, eq;
            is >> key >> eq;
            if (eq != "=") continue;
            if (key == "n_steps") is >> table.n_steps;
            else if (key == "node_count") is >> table.node_count;
            else if (key == "resolution") is >> table.resolution;
            else if (key == "action_grid") {
                double a;
                while (is >> a) table.action_grid.push_back(a);
            }
            continue;
        }
        if (!header_done) {  // column header row
            header_done = true;
            if (table.n_steps <= 0 || table.node_count <= 0 || table.resolution <= 0 ||
                table.action_grid.empty()) {
                throw ConfigError("policy file '" + path + "': incomplete header");
            }
            const MeasureGrid grid = MeasureGrid::build(table.node_count, table.resolution);
            table.vertex_count = grid.size();
            table.actions.assign(static_cast<std::size_t>(table.n_steps),
                                 std::vector<int>(static_cast<std::size_t>(table.vertex_count), 0));
            continue;
        }
        std::istringstream is(line);
        std::int64_t v;
        int l, a;
        char c1, c2;
        if (!(is >> v >> c1 >> l >> c2 >> a) || c1 != ',' || c2 != ',') {
            throw ConfigError("policy file '" + path + "': bad row '" + line + "'");
        }
        if (v < 0 || v >= table.vertex_count || l < 0 || l >= table.n_steps || a < 0 ||
            a >= static_cast<int>(table.action_grid.size())) {
            throw ConfigError("policy file '" + path + "': row out of range '" + line + "'");
        }
        table.actions[static_cast<std::size_t>(l)][static_cast<std::size_t>(v)] = a;
    }
    if (!header_done) throw ConfigError("policy file '" + path + "': no data");
    return table;
}

}  // namespace posc
