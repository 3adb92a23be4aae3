#include "subdiff/experiment.hpp"

#include "subdiff/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace subdiff {

namespace {

std::string status_name(CheckStatus s) {
    switch (s) {
        case CheckStatus::Pass: return "pass";
        case CheckStatus::Fail: return "FAIL";
        case CheckStatus::NotApplicable: return "n/a";
    }
    return "?";
}

void echo_config(std::ostream& out, const ConfigFile& cfg) {
    out << "[config]\n";
    for (const auto& e : cfg.entries())
        out << "config." << (e[0].empty() ? "global" : e[0]) << '.' << e[1] << " = " << e[2]
            << "\n";
}

void write_report_header(std::ostream& out, const ExperimentConfig& ex,
                         const HypothesisReport& rep) {
    echo_config(out, ex.raw);
    out << "\n[hypotheses]\n";
    auto line = [&](const char* name, const HypothesisCheck& c) {
        out << name << " = " << status_name(c.status) << " ; " << c.detail << "\n";
    };
    line("h1_orders", rep.h1);
    line("h2_operator_signs", rep.h2);
    line("h3_coefficient_regularity", rep.h3);
    line("h4_kernel", rep.h4);
    line("h5_nonlinearity", rep.h5);
    line("condition_a1_variation", rep.cond_a1_variation);
    line("condition_weak_growth_1d", rep.cond_weak_growth_1d);
    line("condition_weak_growth_2d", rep.cond_weak_growth_2d);
    out << "\n[constants]\n";
    out << "delta = " << format_float(rep.delta) << "\n";
    out << "delta0 = " << format_float(rep.delta0) << "\n";
    out << "delta1 = " << format_float(rep.delta1) << "\n";
    out << "delta_star = " << format_float(rep.delta_star) << "\n";
    out << "delta_star_interval = (" << format_float(rep.delta_star_lo) << ", "
        << format_float(rep.delta_star_hi) << ")\n";
    out << "a1_variation_margin = " << format_float(rep.a1_variation_margin) << "\n";
    out << "eps0 = " << format_float(rep.eps0) << "\n";
    out << "eps1 = " << format_float(rep.eps1) << "\n";
    out << "eps3 = " << format_float(rep.eps3) << "\n";
    out << "eps4 = " << format_float(rep.eps4) << "\n";
    out << "c2 = " << format_float(rep.c2) << "\n";
    out << "c3 = " << format_float(rep.c3) << "\n";
    out << "c4 = " << format_float(rep.c4) << "\n";
    out << "t_star = " << format_float(rep.t_star) << "\n";
    out << "kernel_l1 = " << format_float(rep.kernel_l1) << "\n";
    out << "k0_scale = " << format_float(rep.k0_scale) << "\n";
    out << "gamma = " << format_float(rep.gamma_exp) << "\n";
    out << "gamma_regime = " << (rep.gamma_ge_one ? "gamma>=1" : "gamma<1") << "\n";
}

} // namespace

RunOutcome run_experiment(const std::string& config_path, bool force,
                          const std::string& out_dir) {
    ExperimentConfig ex;
    try {
        ex = load_experiment(config_path);
    } catch (const std::exception& e) {
        return {kParseError, e.what()};
    }

    std::filesystem::create_directories(out_dir);
    const auto path = [&](const std::string& name) { return out_dir + "/" + name; };

    ValidateOptions vopts;
    vopts.delta_star = ex.delta_star;
    vopts.horizon = ex.mesh.horizon();
    const HypothesisReport rep = validate_hypotheses(ex.problem, vopts);

    std::ofstream report(path("report.txt"));
    write_report_header(report, ex, rep);

    if (!rep.all_pass() && !force) {
        report << "\n[outcome]\nstatus = hypothesis failure (use --force to run anyway)\n";
        return {kHypothesisFailure, "hypothesis validation failed; see report.txt"};
    }

    std::vector<Trajectory> trajs;
    try {
        for (std::size_t k = 0; k < ex.u0_scales.size(); ++k)
            trajs.push_back(run(ex.scaled_problem(k), ex.mesh, ex.probe_times, ex.newton));
    } catch (const std::exception& e) {
        report << "\n[outcome]\nstatus = solver failure: " << e.what() << "\n";
        return {kSolverFailure, e.what()};
    }

    for (std::size_t k = 0; k < trajs.size(); ++k) {
        const Trajectory& tr = trajs[k];
        const std::string suffix = k == 0 ? "" : "_scale" + std::to_string(k);
        write_table_csv(path("trajectory" + suffix + ".csv"), {"t", "V", "sup_norm", "mem_norm"},
                        {tr.mesh.nodes, tr.energy, tr.sup_norm, tr.mem_norm});
        const auto mon = monitor_energy_inequality(tr, rep, ex.scaled_problem(k), ex.monitor);
        Vector forcing(tr.mesh.size()), lhs(tr.mesh.size());
        forcing(0) = lhs(0) = 0.0;
        for (Index j = 1; j < tr.mesh.size(); ++j) {
            forcing(j) = rep.forcing(tr.mesh.nodes(j), tr.energy(0), ex.problem.orders);
            lhs(j) = forcing(j) - mon.margins(j);
        }
        write_table_csv(path("energy" + suffix + ".csv"), {"t", "V", "lhs", "F", "margin"},
                        {tr.mesh.nodes, tr.energy, lhs, forcing, mon.margins});
        report << "\n[run" << (k == 0 ? "" : "." + std::to_string(k)) << "]\n";
        report << "u0_scale = " << format_float(ex.u0_scales[k]) << "\n";
        report << "V0 = " << format_float(tr.energy(0)) << "\n";
        report << "sup_V = " << format_float(tr.energy.maxCoeff()) << "\n";
        report << "final_V = " << format_float(tr.energy(tr.mesh.size() - 1)) << "\n";
        report << "monitor_min_margin = " << format_float(mon.min_margin) << "\n";
        report << "monitor_fraction_ok = " << format_float(mon.fraction_ok) << "\n";
        int max_newton = 0;
        for (int it : tr.newton_iters) max_newton = std::max(max_newton, it);
        report << "max_newton_iterations = " << max_newton << "\n";
        for (const auto& [pt, field] : tr.snapshots) {
            const Grid& g = tr.grid;
            std::vector<Vector> cols;
            std::vector<std::string> header;
            Vector xs(g.total()), ys(g.total());
            for (Index j = 0; j < (g.dim == 2 ? g.npts[1] : 1); ++j)
                for (Index i = 0; i < g.npts[0]; ++i) {
                    xs(g.flat(i, j)) = g.coord(0, i);
                    if (g.dim == 2) ys(g.flat(i, j)) = g.coord(1, j);
                }
            header.push_back("x1");
            cols.push_back(xs);
            if (g.dim == 2) {
                header.push_back("x2");
                cols.push_back(ys);
            }
            header.push_back("u");
            cols.push_back(field);
            std::ostringstream name;
            name << "snapshot" << suffix << "_t" << format_float(pt) << ".csv";
            write_table_csv(path(name.str()), header, cols);
        }
    }

    // absorbing-set summary for families
    if (trajs.size() > 1) {
        const Index m = ex.mesh.size();
        const Index tail_start = static_cast<Index>(0.8 * static_cast<double>(m));
        double radius_sq = 0.0;
        for (const auto& tr : trajs)
            radius_sq = std::max(radius_sq, tr.energy.tail(m - tail_start).maxCoeff());
        radius_sq *= 1.05;
        std::vector<History> energies;
        for (const auto& tr : trajs) energies.push_back(tr.energy_history());
        const auto entries = absorbing_time(energies, radius_sq);
        report << "\n[absorbing]\n";
        report << "radius_sq = " << format_float(radius_sq) << "\n";
        for (std::size_t k = 0; k < entries.size(); ++k)
            report << "entry_time." << k << " = "
                   << (entries[k] ? format_float(*entries[k]) : std::string("not entered"))
                   << "\n";
    }

    if (ex.write_svg) {
        std::vector<SvgSeries> series;
        SvgSeries v;
        v.label = "V(t)";
        v.color = "#1f77b4";
        for (Index j = 1; j < ex.mesh.size(); ++j) {
            v.x.push_back(ex.mesh.nodes(j));
            v.y.push_back(trajs[0].energy(j));
        }
        series.push_back(std::move(v));
        // envelope from the decay function when the corollary applies
        const bool const_coeffs =
            FodeSpec{ex.problem.orders,
                     ex.problem.rho,
                     ex.problem.rho_i,
                     0.0,
                     std::nullopt,
                     [](double) { return 0.0; },
                     0.0}
                .coefficients_constant(ex.mesh.horizon());
        if (ex.problem.kernel.c == 0.0 && const_coeffs && rep.c4 > 0.0) {
            std::vector<double> rho_i0;
            for (const auto& f : ex.problem.rho_i) rho_i0.push_back(f(0.0));
            const double norm0 = std::sqrt(trajs[0].energy(0));
            double c0fit = 0.0;
            SvgSeries env;
            env.label = "envelope";
            env.color = "#d62728";
            for (Index j = 1; j < ex.mesh.size(); ++j) {
                const double g = decay_g(ex.mesh.nodes(j), ex.problem.orders,
                                         ex.problem.rho(0.0), rho_i0, rep.c4);
                const double e = 1.0 + norm0 * g;
                c0fit = std::max(c0fit, std::sqrt(trajs[0].energy(j)) / e);
                env.x.push_back(ex.mesh.nodes(j));
                env.y.push_back(e);
            }
            for (auto& y : env.y) y = (c0fit * y) * (c0fit * y);
            series.push_back(std::move(env));
        }
        write_loglog_svg(path("decay.svg"), series, "t", "V");
    }

    report << "\n[outcome]\nstatus = ok\n";
    return {kOk, ""};
}

RunOutcome run_fode_experiment(const std::string& config_path, const std::string& out_dir) {
    FodeExperiment ex;
    try {
        ex = load_fode_experiment(config_path);
    } catch (const std::exception& e) {
        return {kParseError, e.what()};
    }
    std::filesystem::create_directories(out_dir);
    History v;
    VolterraStats stats;
    try {
        v = ex.analytic ? solve_const_multiterm(ex.spec, ex.mesh, &stats)
                        : step_fode_numeric(ex.spec, ex.mesh);
    } catch (const std::exception& e) {
        return {kSolverFailure, e.what()};
    }
    write_history_csv(out_dir + "/fode.csv", v, "V");
    std::ofstream report(out_dir + "/fode_report.txt");
    echo_config(report, ex.raw);
    report << "\n[result]\n";
    report << "solver = " << (ex.analytic ? "analytic" : "numeric") << "\n";
    report << "final_V = " << format_float(v.values(v.size() - 1)) << "\n";
    if (ex.analytic && ex.spec.memory) {
        report << "picard_iterations = " << stats.picard_iterations << "\n";
        report << "resolvent_kernel_l1 = " << format_float(stats.kernel_l1) << "\n";
    }
    return {kOk, ""};
}

RunOutcome run_validation(const std::string& config_path, const std::string& out_dir) {
    ExperimentConfig ex;
    try {
        ex = load_experiment(config_path);
    } catch (const std::exception& e) {
        return {kParseError, e.what()};
    }
    std::filesystem::create_directories(out_dir);
    ValidateOptions vopts;
    vopts.delta_star = ex.delta_star;
    vopts.horizon = ex.mesh.horizon();
    const HypothesisReport rep = validate_hypotheses(ex.problem, vopts);
    std::ofstream report(out_dir + "/report.txt");
    write_report_header(report, ex, rep);
    report << "\n[outcome]\nstatus = " << (rep.all_pass() ? "ok" : "hypothesis failure") << "\n";
    if (!rep.all_pass()) return {kHypothesisFailure, "hypothesis validation failed"};
    return {kOk, ""};
}

} // namespace subdiff
