#include "posc/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "posc/errors.hpp"

namespace posc {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void bad_key(const std::string& key, int line, const std::string& why) {
    std::ostringstream os;
    os << "config line " << line << ", key '" << key << "': " << why;
    throw ConfigError(os.str());
}

double to_double(const std::string& key, int line, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) bad_key(key, line, "trailing characters in number '" + v + "'");
        return d;
    } catch (const ConfigError&) {
        throw;
    } catch (...) {
        bad_key(key, line, "expected a number, got '" + v + "'");
    }
}

std::int64_t to_int(const std::string& key, int line, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long i = std::stoll(v, &used);
        if (used != v.size()) bad_key(key, line, "trailing characters in integer '" + v + "'");
        return i;
    } catch (const ConfigError&) {
        throw;
    } catch (...) {
        bad_key(key, line, "expected an integer, got '" + v + "'");
    }
}

std::vector<double> to_list(const std::string& key, int line, const std::string& v) {
    std::vector<double> xs;
    std::string token;
    std::istringstream is(v);
    while (std::getline(is, token, ',')) {
        token = trim(token);
        if (token.empty()) continue;
        xs.push_back(to_double(key, line, token));
    }
    if (xs.empty()) bad_key(key, line, "expected a comma-separated list of numbers");
    return xs;
}

}  // namespace

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");

    RunConfig cfg;
    bool saw_T = false;
    bool saw_dx = false;

    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << "config line " << line_no << ": expected 'key = value', got '" << line << "'";
            throw ConfigError(os.str());
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (value.empty()) bad_key(key, line_no, "empty value");

        if (key == "problem") {
            cfg.problem = value;
        } else if (key == "T") {
            cfg.T = to_double(key, line_no, value);
            saw_T = true;
        } else if (key == "x0") {
            cfg.x0 = to_double(key, line_no, value);
        } else if (key == "dx_list") {
            cfg.dx_list = to_list(key, line_no, value);
            saw_dx = true;
        } else if (key == "h_ratio") {
            cfg.h_ratio = to_double(key, line_no, value);
        } else if (key == "x_min") {
            cfg.x_min = to_double(key, line_no, value);
        } else if (key == "x_max") {
            cfg.x_max = to_double(key, line_no, value);
        } else if (key == "node_radius") {
            cfg.node_radius = static_cast<int>(to_int(key, line_no, value));
        } else if (key == "resolution") {
            cfg.resolution = static_cast<int>(to_int(key, line_no, value));
        } else if (key == "action_bound") {
            cfg.action_bound = to_double(key, line_no, value);
        } else if (key == "action_count") {
            cfg.action_count = static_cast<int>(to_int(key, line_no, value));
        } else if (key == "mc_paths") {
            cfg.mc_paths = to_int(key, line_no, value);
        } else if (key == "sim_paths") {
            cfg.sim_paths = to_int(key, line_no, value);
        } else if (key == "mc_seed") {
            cfg.mc_seed = static_cast<std::uint64_t>(to_int(key, line_no, value));
        } else if (key == "ode_steps") {
            cfg.ode_steps = static_cast<int>(to_int(key, line_no, value));
        } else if (key == "reference") {
            cfg.reference = value;
        } else if (key == "out") {
            cfg.out = value;
        } else {
            bad_key(key, line_no, "unknown key");
        }
    }
    if (!saw_T) throw ConfigError("config: missing required key 'T'");
    if (!saw_dx) throw ConfigError("config: missing required key 'dx_list'");

    validate_config(cfg);
    return cfg;
}

void validate_config(const RunConfig& cfg) {
    if (cfg.problem != "lq" && cfg.problem != "zero") {
        throw ConfigError("config: unknown problem '" + cfg.problem + "' (expected lq or zero)");
    }
    if (!(cfg.T > 0.0)) throw ConfigError("config: T must be > 0");
    if (cfg.dx_list.empty()) throw ConfigError("config: dx_list must be nonempty");
    for (double dx : cfg.dx_list) {
        if (!(dx > 0.0)) throw ConfigError("config: dx values must be > 0");
    }
    for (std::size_t j = 1; j < cfg.dx_list.size(); ++j) {
        if (!(cfg.dx_list[j] < cfg.dx_list[j - 1])) {
            throw ConfigError("config: dx_list must be strictly descending");
        }
    }
    if (!(cfg.h_ratio > 0.0)) throw ConfigError("config: h_ratio must be > 0");
    if (cfg.x_min.has_value() != cfg.x_max.has_value()) {
        throw ConfigError("config: x_min and x_max must be given together");
    }
    if (cfg.x_min && !(*cfg.x_min < *cfg.x_max)) {
        throw ConfigError("config: x_min must be below x_max");
    }
    if (cfg.x_min && !(*cfg.x_min <= cfg.x0 && cfg.x0 <= *cfg.x_max)) {
        throw ConfigError("config: x0 outside [x_min, x_max]");
    }
    if (cfg.node_radius < 1) throw ConfigError("config: node_radius must be >= 1");
    if (cfg.resolution < 1) throw ConfigError("config: resolution must be >= 1");
    if (!(cfg.action_bound > 0.0)) throw ConfigError("config: action_bound must be > 0");
    if (cfg.action_count < 2 && cfg.problem == "lq") {
        throw ConfigError("config: action_count must be >= 2");
    }
    if (cfg.mc_paths < 1) throw ConfigError("config: mc_paths must be >= 1");
    if (cfg.sim_paths < 1) throw ConfigError("config: sim_paths must be >= 1");
    if (cfg.ode_steps < 100) throw ConfigError("config: ode_steps must be >= 100");
    if (cfg.reference != "mc" && cfg.reference != "self") {
        throw ConfigError("config: reference must be 'mc' or 'self'");
    }

    // Courant condition: h_ratio * dx^2 must not exceed dx^2 / (b^2 + s^2).
    const double bound_b = cfg.problem == "lq" ? cfg.action_bound : 0.0;
    const double bound_sigma = 1.0;
    const double c_zero = 1.0 / (bound_b * bound_b + bound_sigma * bound_sigma);
    if (cfg.h_ratio > c_zero * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "config: h_ratio " << cfg.h_ratio << " violates the Courant bound "
           << c_zero << " for problem '" << cfg.problem << "'";
        throw CourantViolationError(os.str());
    }
}

Instance make_instance(const RunConfig& cfg, double dx) {
    Instance inst;
    const double bound_b = cfg.problem == "lq" ? cfg.action_bound : 0.0;
    const double bound_sigma = 1.0;
    const double safety_ratio = cfg.h_ratio * (bound_b * bound_b + bound_sigma * bound_sigma);

    if (cfg.problem == "lq") {
        double x_min = cfg.x_min.value_or(cfg.x0 - cfg.node_radius * dx);
        double x_max = cfg.x_max.value_or(cfg.x0 + cfg.node_radius * dx);
        inst.spec = std::make_shared<const ProblemSpec>(
            lq_problem(cfg.T, cfg.x0, cfg.action_bound, cfg.action_count, x_min, x_max));
    } else {
        ProblemSpec z = zero_problem(cfg.T, cfg.x0);
        if (cfg.x_min) {
            z.x_min = *cfg.x_min;
            z.x_max = *cfg.x_max;
        } else {
            z.x_min = cfg.x0 - cfg.node_radius * dx;
            z.x_max = cfg.x0 + cfg.node_radius * dx;
        }
        inst.spec = std::make_shared<const ProblemSpec>(std::move(z));
    }

    inst.lattice = cfg.x_min ? make_lattice(*inst.spec, dx, safety_ratio)
                             : make_lattice_radius(*inst.spec, dx, safety_ratio, cfg.node_radius);
    inst.law = ObservationLaw{ObsKind::rademacher, inst.lattice.h};
    inst.kernel = std::make_shared<const TrinomialKernel>(*inst.spec, inst.lattice);
    return inst;
}

}  // namespace posc
