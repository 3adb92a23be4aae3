// Command-line front end: experiment runs, reproduction suites, and direct
// special-function evaluation.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "subdiff/experiment.hpp"
#include "suites.hpp"

namespace {

int finish(const subdiff::RunOutcome& outcome) {
    if (!outcome.message.empty())
        std::fprintf(stderr, "subdiff: %s\n", outcome.message.c_str());
    return outcome.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-term Caputo subdiffusion laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    bool force = false;

    auto* run_cmd = app.add_subcommand("run", "run an experiment config");
    run_cmd->add_option("config", config_path, "experiment config file")->required();
    run_cmd->add_flag("--force", force, "run even if hypothesis validation fails");
    run_cmd->add_option("--out", out_dir, "output directory (default: current)");

    std::string suite_name;
    auto* rep_cmd = app.add_subcommand("reproduce", "run a reproduction suite");
    rep_cmd->add_option("suite", suite_name, "suite name")->required();

    double beta0 = 1.0;
    std::vector<double> betas, zs;
    auto* ml_cmd = app.add_subcommand("ml", "evaluate the multinomial Mittag-Leffler function");
    ml_cmd->add_option("beta0", beta0, "second parameter beta0")->required();
    ml_cmd->add_option("beta", betas, "exponents beta_1 ... beta_m")->required();
    ml_cmd->add_option("--z", zs, "arguments z_1 ... z_m")->required();

    auto* fode_cmd = app.add_subcommand("fode", "solve a scalar fractional ODE config");
    fode_cmd->add_option("config", config_path, "fode config file")->required();
    fode_cmd->add_option("--out", out_dir, "output directory (default: current)");

    auto* val_cmd = app.add_subcommand("validate", "validate hypotheses of a config");
    val_cmd->add_option("config", config_path, "experiment config file")->required();
    val_cmd->add_option("--out", out_dir, "output directory (default: current)");

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) return finish(subdiff::run_experiment(config_path, force, out_dir));
    if (val_cmd->parsed()) return finish(subdiff::run_validation(config_path, out_dir));
    if (fode_cmd->parsed()) return finish(subdiff::run_fode_experiment(config_path, out_dir));

    if (ml_cmd->parsed()) {
        try {
            subdiff::MLParams params(betas, beta0, std::vector<double>(betas.size(), 0.0));
            const double v = subdiff::ml_multinomial(params, zs);
            std::printf("%.17g\n", v);
            return 0;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "subdiff ml: %s\n", e.what());
            return 1;
        }
    }

    if (rep_cmd->parsed()) {
        try {
            return subdiff::suites::run_suite(suite_name) ? 0 : 2;
        } catch (const std::invalid_argument& e) {
            std::fprintf(stderr, "subdiff reproduce: %s\n", e.what());
            std::fprintf(stderr, "registered suites:");
            for (const auto& n : subdiff::suites::suite_names())
                std::fprintf(stderr, " %s", n.c_str());
            std::fprintf(stderr, "\n");
            return 1;
        }
    }
    return 1;
}
