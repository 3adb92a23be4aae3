#include "subdiff/config.hpp"

#include "subdiff/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace subdiff {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

double to_number(const std::string& s, int line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError("not a number: '" + s + "'", line);
    }
}

} // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path, 0);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& name) {
    ConfigFile cfg;
    cfg.name_ = name;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("unterminated section header", lineno,
                                 static_cast<int>(line.size()));
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ParseError("empty section name", lineno, 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value'", lineno, 1);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", lineno, 1);
        cfg.data_[section][key] = {value, lineno};
        cfg.entries_.push_back({section, key, value});
    }
    return cfg;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    const auto s = data_.find(section);
    return s != data_.end() && s->second.count(key) > 0;
}

std::string ConfigFile::get(const std::string& section, const std::string& key) const {
    const auto s = data_.find(section);
    if (s != data_.end()) {
        const auto k = s->second.find(key);
        if (k != s->second.end()) return k->second.first;
    }
    throw ParseError("missing required key [" + section + "] " + key, 0);
}

std::string ConfigFile::get_or(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
}

double ConfigFile::number(const std::string& section, const std::string& key) const {
    const auto s = data_.find(section);
    if (s != data_.end()) {
        const auto k = s->second.find(key);
        if (k != s->second.end()) return to_number(k->second.first, k->second.second);
    }
    throw ParseError("missing required key [" + section + "] " + key, 0);
}

double ConfigFile::number_or(const std::string& section, const std::string& key,
                             double fallback) const {
    return has(section, key) ? number(section, key) : fallback;
}

Index ConfigFile::integer_or(const std::string& section, const std::string& key,
                             Index fallback) const {
    if (!has(section, key)) return fallback;
    const double v = number(section, key);
    return static_cast<Index>(std::llround(v));
}

std::vector<double> ConfigFile::number_list(const std::string& section,
                                            const std::string& key) const {
    const auto s = data_.find(section);
    if (s == data_.end() || !s->second.count(key))
        throw ParseError("missing required key [" + section + "] " + key, 0);
    const auto& [value, line] = s->second.at(key);
    std::vector<double> out;
    if (trim(value).empty()) return out;
    for (const auto& piece : split(value, ','))
        if (!piece.empty()) out.push_back(to_number(piece, line));
    return out;
}

std::vector<double> ConfigFile::number_list_or(const std::string& section, const std::string& key,
                                               std::vector<double> fallback) const {
    return has(section, key) ? number_list(section, key) : std::move(fallback);
}

// ---------------------------------------------------------------------------
// Coefficient catalog
// ---------------------------------------------------------------------------

namespace {

struct Tabulated {
    // shared sampled curve with linear interpolation, constant extrapolation
    std::vector<double> t, v;
    double operator()(double tt) const {
        if (tt <= t.front()) return v.front();
        if (tt >= t.back()) return v.back();
        std::size_t lo = 0, hi = t.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (t[mid] <= tt ? lo : hi) = mid;
        }
        const double w = (tt - t[lo]) / (t[hi] - t[lo]);
        return (1.0 - w) * v[lo] + w * v[hi];
    }
};

Tabulated load_table(const std::string& path, int line) {
    History h;
    try {
        h = read_history_csv(path);
    } catch (const std::exception& e) {
        throw ParseError(std::string("tabulated coefficient: ") + e.what(), line);
    }
    Tabulated tab;
    for (Index j = 0; j < h.size(); ++j) {
        tab.t.push_back(h.mesh.nodes(j));
        tab.v.push_back(h.values(j));
    }
    if (tab.t.size() < 2) throw ParseError("tabulated coefficient needs at least 2 rows", line);
    return tab;
}

struct CoeffSpec {
    std::string form;
    std::vector<double> args;
    std::string path;
};

CoeffSpec parse_coeff(const std::string& text, int line) {
    const auto colon = text.find(':');
    CoeffSpec c;
    c.form = trim(colon == std::string::npos ? text : text.substr(0, colon));
    const std::string rest = colon == std::string::npos ? "" : trim(text.substr(colon + 1));
    if (c.form == "tabulated") {
        c.path = rest;
        if (c.path.empty()) throw ParseError("tabulated coefficient needs a path", line);
        return c;
    }
    if (!rest.empty())
        for (const auto& piece : split(rest, ','))
            c.args.push_back(to_number(piece, line));
    return c;
}

void need_args(const CoeffSpec& c, std::size_t n, int line) {
    if (c.args.size() != n)
        throw ParseError("coefficient form '" + c.form + "' takes " + std::to_string(n) +
                             " arguments",
                         line);
}

} // namespace

SpaceTimeFn parse_space_time_coeff(const std::string& text, int line) {
    const CoeffSpec c = parse_coeff(text, line);
    if (c.form == "constant") {
        need_args(c, 1, line);
        const double v = c.args[0];
        return [v](double, double, double) { return v; };
    }
    if (c.form == "exp_decay") {
        need_args(c, 2, line);
        const double a = c.args[0], b = c.args[1];
        return [a, b](double, double, double t) { return a + b * std::exp(-t); };
    }
    if (c.form == "affine_x") {
        need_args(c, 2, line);
        const double a = c.args[0], b = c.args[1];
        return [a, b](double x, double, double) { return a + b * x; };
    }
    if (c.form == "plateau") {
        need_args(c, 3, line);
        const double a = c.args[0], b = c.args[1], T = c.args[2];
        return [a, b, T](double, double, double t) { return a + b * std::min(t, T); };
    }
    if (c.form == "tabulated") {
        auto tab = load_table(c.path, line);
        return [tab](double, double, double t) { return tab(t); };
    }
    throw ParseError("unknown coefficient form '" + c.form + "'", line);
}

TimeFn parse_time_coeff(const std::string& text, int line) {
    if (parse_coeff(text, line).form == "affine_x")
        throw ParseError("a temporal coefficient cannot depend on x", line);
    auto f = parse_space_time_coeff(text, line);
    return [f](double t) { return f(0.0, 0.0, t); };
}

double coeff_plateau_time(const std::string& text) {
    const CoeffSpec c = parse_coeff(text, 0);
    if (c.form == "plateau" && c.args.size() == 3) return c.args[2];
    return 0.0;
}

// ---------------------------------------------------------------------------
// Experiment assembly
// ---------------------------------------------------------------------------

namespace {

std::function<double(double, double)> make_u0(const ConfigFile& cfg, const Grid& grid,
                                              unsigned seed) {
    const std::string kind = cfg.get_or("initial_conditions", "kind", "zero");
    const double amp = cfg.number_or("initial_conditions", "amplitude", 1.0);
    auto xhat = [grid](double x, int axis) {
        return (x - grid.lo[axis]) / (grid.hi[axis] - grid.lo[axis]);
    };
    if (kind == "zero") return [](double, double) { return 0.0; };
    if (kind == "constant") return [amp](double, double) { return amp; };
    if (kind == "sin_pi") {
        if (grid.dim == 1)
            return [amp, xhat](double x, double) { return amp * std::sin(M_PI * xhat(x, 0)); };
        return [amp, xhat](double x, double y) {
            return amp * std::sin(M_PI * xhat(x, 0)) * std::sin(M_PI * xhat(y, 1));
        };
    }
    if (kind == "cos_pi") {
        if (grid.dim == 1)
            return [amp, xhat](double x, double) { return amp * std::cos(M_PI * xhat(x, 0)); };
        return [amp, xhat](double x, double y) {
            return amp * std::cos(M_PI * xhat(x, 0)) * std::cos(M_PI * xhat(y, 1));
        };
    }
    if (kind == "random_smooth") {
        const int kmax = static_cast<int>(cfg.integer_or("initial_conditions", "kmax", 4));
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        std::vector<double> ax, ay;
        for (int k = 0; k < kmax; ++k) {
            ax.push_back(uni(rng) / (k + 1.0));
            ay.push_back(uni(rng) / (k + 1.0));
        }
        const int dim = grid.dim;
        return [amp, ax, ay, xhat, dim](double x, double y) {
            double v = 0.0;
            for (std::size_t k = 0; k < ax.size(); ++k) {
                double m = ax[k] * std::sin((k + 1.0) * M_PI * xhat(x, 0));
                if (dim == 2) m *= 1.0 + ay[k] * std::sin((k + 1.0) * M_PI * xhat(y, 1));
                v += m;
            }
            return amp * v;
        };
    }
    throw ParseError("unknown initial condition kind '" + kind + "'", 0);
}

TimeMesh make_mesh(const ConfigFile& cfg, double nu) {
    const double T = cfg.number("time_mesh", "T");
    const Index nodes = cfg.integer_or("time_mesh", "nodes", 1000);
    const std::string kind = cfg.get_or("time_mesh", "kind", "graded");
    if (kind == "uniform") return TimeMesh::uniform(T, nodes);
    if (kind != "graded") throw ParseError("unknown time_mesh kind '" + kind + "'", 0);
    const std::string grading = cfg.get_or("time_mesh", "grading", "auto");
    const double r = grading == "auto" ? (2.0 - nu) / nu : to_number(grading, 0);
    return TimeMesh::graded(T, nodes, std::max(1.0, r));
}

Nonlinearity make_nonlinearity(const ConfigFile& cfg) {
    const std::string text = cfg.get("nonlinearity", "form");
    const CoeffSpec c = parse_coeff(text, 0);
    if (c.form == "zero") return Nonlinearity::zero();
    if (c.form == "odd_poly") return Nonlinearity::odd_polynomial(c.args);
    if (c.form == "saturating") {
        need_args(c, 2, 0);
        return Nonlinearity::saturating(c.args[0], c.args[1]);
    }
    throw ParseError("unknown nonlinearity form '" + c.form + "'", 0);
}

SingularKernel make_kernel(const ConfigFile& cfg) {
    const std::string text = cfg.get_or("kernel", "form", "zero");
    const CoeffSpec c = parse_coeff(text, 0);
    if (c.form == "zero") return SingularKernel{0.0, 0.0};
    if (c.form == "power") {
        need_args(c, 2, 0);
        return SingularKernel{c.args[0], c.args[1]};
    }
    throw ParseError("unknown kernel form '" + c.form + "'", 0);
}

} // namespace

ProblemSpec ExperimentConfig::scaled_problem(std::size_t k) const {
    ProblemSpec s = problem;
    const double c = u0_scales.at(k);
    auto base = problem.u0;
    s.u0 = [base, c](double x, double y) { return c * base(x, y); };
    return s;
}

ExperimentConfig experiment_from_config(const ConfigFile& cfg) {
    ExperimentConfig ex;
    ex.raw = cfg;
    ProblemSpec& s = ex.problem;

    s.orders.nu = cfg.number("orders", "nu");
    s.orders.nus = cfg.number_list_or("orders", "nus", {});
    s.orders.validate();

    const std::string type = cfg.get_or("fdo", "type", "I");
    if (type == "I")
        s.fdo = FdoType::TypeI;
    else if (type == "II")
        s.fdo = FdoType::TypeII;
    else
        throw ParseError("fdo type must be I or II", 0);
    const std::string rho_text = cfg.get("fdo", "rho");
    s.rho = parse_time_coeff(rho_text, 0);
    s.rho_plateau_time = coeff_plateau_time(rho_text);
    if (cfg.has("fdo", "rho_i")) {
        for (const auto& piece : split(cfg.get("fdo", "rho_i"), ';')) {
            if (piece.empty()) continue;
            s.rho_i.push_back(parse_time_coeff(piece, 0));
            s.rho_i_plateau_times.push_back(coeff_plateau_time(piece));
        }
    }
    if (s.rho_i.size() != s.orders.nus.size())
        throw ParseError("[fdo] rho_i must list one coefficient per lower order", 0);

    s.grid.dim = static_cast<int>(cfg.integer_or("domain", "dim", 1));
    s.grid.lo[0] = cfg.number("domain", "lo");
    s.grid.hi[0] = cfg.number("domain", "hi");
    if (s.grid.dim == 2) {
        s.grid.lo[1] = cfg.number("domain", "lo2");
        s.grid.hi[1] = cfg.number("domain", "hi2");
    }
    const std::string bc = cfg.get_or("domain", "bc", "dirichlet");
    if (bc == "dirichlet")
        s.bc = BcKind::Dirichlet;
    else if (bc == "neumann")
        s.bc = BcKind::Neumann;
    else
        throw ParseError("bc must be dirichlet or neumann", 0);
    s.grid.npts[0] = cfg.integer_or("grid", "nx", 101);
    s.grid.npts[1] = s.grid.dim == 2 ? cfg.integer_or("grid", "ny", s.grid.npts[0]) : 1;
    s.grid.validate();

    if (s.grid.dim == 1)
        s.a1 = parse_space_time_coeff(cfg.get("operators", "a1"), 0);
    else if (cfg.has("operators", "a1"))
        s.a1 = parse_space_time_coeff(cfg.get("operators", "a1"), 0);
    s.a0 = parse_space_time_coeff(cfg.get("operators", "a0"), 0);
    if (cfg.has("operators", "b1")) s.b[0] = parse_space_time_coeff(cfg.get("operators", "b1"), 0);
    if (cfg.has("operators", "b2")) s.b[1] = parse_space_time_coeff(cfg.get("operators", "b2"), 0);
    if (cfg.has("operators", "b0")) s.b0 = parse_space_time_coeff(cfg.get("operators", "b0"), 0);

    s.kernel = make_kernel(cfg);
    s.f = make_nonlinearity(cfg);

    ex.seed = static_cast<unsigned>(cfg.number_or("", "seed", 0.0));
    s.u0 = make_u0(cfg, s.grid, ex.seed);
    ex.u0_scales = cfg.number_list_or("initial_conditions", "scales", {1.0});
    if (ex.u0_scales.empty()) ex.u0_scales = {1.0};

    ex.mesh = make_mesh(cfg, s.orders.nu);
    ex.probe_times = cfg.number_list_or("outputs", "snapshots", {});
    ex.write_svg = cfg.get_or("outputs", "svg", "false") == "true";

    ex.series.abs_tol = cfg.number_or("tolerances", "series_abs", 1e-14);
    ex.series.rel_tol = cfg.number_or("tolerances", "series_rel", 1e-12);
    ex.series.max_total_degree =
        static_cast<int>(cfg.integer_or("tolerances", "max_total_degree", 500));
    ex.series.asymptotic_switch_radius =
        cfg.number_or("tolerances", "asymptotic_switch_radius", 0.1);
    ex.newton.tol = cfg.number_or("tolerances", "newton_tol", 1e-11);
    ex.newton.max_iter = static_cast<int>(cfg.integer_or("tolerances", "newton_max_iter", 50));
    ex.monitor.slack = cfg.number_or("tolerances", "monitor_slack", 0.05);
    ex.monitor.node_fraction = cfg.number_or("tolerances", "monitor_fraction", 0.95);
    if (cfg.has("tolerances", "delta_star"))
        ex.delta_star = cfg.number("tolerances", "delta_star");

    s.validate();
    return ex;
}

ExperimentConfig load_experiment(const std::string& path) {
    return experiment_from_config(ConfigFile::parse_file(path));
}

FodeExperiment load_fode_experiment(const std::string& path) {
    const ConfigFile cfg = ConfigFile::parse_file(path);
    FodeExperiment ex;
    ex.raw = cfg;
    ex.spec.orders.nu = cfg.number("orders", "nu");
    ex.spec.orders.nus = cfg.number_list_or("orders", "nus", {});
    ex.spec.orders.validate();
    ex.spec.leading = parse_time_coeff(cfg.get("fode", "rho"), 0);
    if (cfg.has("fode", "rho_i"))
        for (const auto& piece : split(cfg.get("fode", "rho_i"), ';'))
            if (!piece.empty()) ex.spec.lower.push_back(parse_time_coeff(piece, 0));
    if (ex.spec.lower.size() != ex.spec.orders.nus.size())
        throw ParseError("[fode] rho_i must list one coefficient per lower order", 0);
    ex.spec.damping = cfg.number("fode", "damping");
    ex.spec.forcing = parse_time_coeff(cfg.get("fode", "forcing"), 0);
    ex.spec.initial = cfg.number("fode", "initial");
    const SingularKernel k = make_kernel(cfg);
    if (k.c != 0.0) ex.spec.memory = k;
    ex.analytic = cfg.get_or("fode", "solver", "numeric") == "analytic";
    ex.mesh = make_mesh(cfg, ex.spec.orders.nu);
    ex.spec.validate();
    return ex;
}

} // namespace subdiff
