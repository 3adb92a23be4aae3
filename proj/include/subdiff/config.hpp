#pragma once

#include "subdiff/analysis.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace subdiff {

/// Parse failure with position information; the CLI maps it to exit code 1.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line, int column = 0)
        : std::runtime_error(what + " (line " + std::to_string(line) +
                             (column > 0 ? ", column " + std::to_string(column) : "") + ")"),
          line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_, column_;
};

/// Sectioned key-value configuration text: `[section]` headers, `key = value`
/// entries, `#`/`;` comments.  Keys before the first header live in the
/// global section "".
class ConfigFile {
public:
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_string(const std::string& text, const std::string& name = "<string>");

    bool has(const std::string& section, const std::string& key) const;
    /// Required fetch: throws ParseError naming the missing key.
    std::string get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    double number(const std::string& section, const std::string& key) const;
    double number_or(const std::string& section, const std::string& key, double fallback) const;
    Index integer_or(const std::string& section, const std::string& key, Index fallback) const;
    std::vector<double> number_list(const std::string& section, const std::string& key) const;
    std::vector<double> number_list_or(const std::string& section, const std::string& key,
                                       std::vector<double> fallback) const;

    /// Every (section, key, value) triple in input order, for report echoing.
    const std::vector<std::array<std::string, 3>>& entries() const { return entries_; }
    const std::string& name() const { return name_; }

private:
    std::map<std::string, std::map<std::string, std::pair<std::string, int>>> data_;
    std::vector<std::array<std::string, 3>> entries_;
    std::string name_;
};

/// Registered closed-form coefficient catalog:
///   constant:v | exp_decay:c,d (= c + d e^{-t}) | affine_x:c0,c1 (= c0 + c1 x)
///   | plateau:c0,c1,T (= c0 + c1 min(t, T)) | tabulated:path (CSV, linear interp)
/// Time-only coefficients reject affine_x.
SpaceTimeFn parse_space_time_coeff(const std::string& text, int line);
TimeFn parse_time_coeff(const std::string& text, int line);
/// Plateau time of a registered time coefficient (0 for constants/tabulated).
double coeff_plateau_time(const std::string& text);

/// A parsed experiment: the problem plus run-control knobs.
struct ExperimentConfig {
    ProblemSpec problem;            ///< base problem (first scale applied)
    std::vector<double> u0_scales;  ///< family of initial-data scalings
    TimeMesh mesh;
    std::vector<double> probe_times;
    bool write_svg = false;
    unsigned seed = 0;
    SeriesPolicy series;
    NewtonOptions newton;
    MonitorOptions monitor;
    std::optional<double> delta_star;
    ConfigFile raw;

    /// Problem with the initial data scaled by u0_scales[k].
    ProblemSpec scaled_problem(std::size_t k) const;
};

ExperimentConfig load_experiment(const std::string& path);
ExperimentConfig experiment_from_config(const ConfigFile& cfg);

/// A parsed scalar FODE problem for the `fode` subcommand.
struct FodeExperiment {
    FodeSpec spec;
    TimeMesh mesh;
    bool analytic = false;
    ConfigFile raw;
};

FodeExperiment load_fode_experiment(const std::string& path);

} // namespace subdiff
