#include "subdiff/analysis.hpp"

#include <cmath>
#include <sstream>

namespace subdiff {

namespace {

// second-order gradient along one axis at index i of a line of n values
double line_gradient(const std::function<double(Index)>& u, Index i, Index n, double h) {
    if (i == 0) return (-3.0 * u(0) + 4.0 * u(1) - u(2)) / (2.0 * h);
    if (i == n - 1) return (3.0 * u(n - 1) - 4.0 * u(n - 2) + u(n - 3)) / (2.0 * h);
    return (u(i + 1) - u(i - 1)) / (2.0 * h);
}

double trapz_weight(Index i, Index n, double h) {
    return (i == 0 || i == n - 1) ? 0.5 * h : h;
}

} // namespace

double sobolev_energy(const Vector& field, const Grid& grid) {
    grid.validate();
    if (field.size() != grid.total())
        throw std::invalid_argument("sobolev_energy: field size does not match grid");
    const Index nx = grid.npts[0];
    if (grid.dim == 1) {
        const double h = grid.h(0);
        double acc = 0.0;
        for (Index i = 0; i < nx; ++i) {
            const double g =
                line_gradient([&](Index k) { return field(k); }, i, nx, h);
            acc += trapz_weight(i, nx, h) * (field(i) * field(i) + g * g);
        }
        return acc;
    }
    const Index ny = grid.npts[1];
    const double hx = grid.h(0), hy = grid.h(1);
    double acc = 0.0;
    for (Index j = 0; j < ny; ++j) {
        for (Index i = 0; i < nx; ++i) {
            const double gx = line_gradient(
                [&](Index k) { return field(grid.flat(k, j)); }, i, nx, hx);
            const double gy = line_gradient(
                [&](Index k) { return field(grid.flat(i, k)); }, j, ny, hy);
            const double u = field(grid.flat(i, j));
            acc += trapz_weight(i, nx, hx) * trapz_weight(j, ny, hy) * (u * u + gx * gx + gy * gy);
        }
    }
    return acc;
}

bool HypothesisReport::all_pass() const {
    auto ok = [](const HypothesisCheck& c) { return c.status != CheckStatus::Fail; };
    return ok(h1) && ok(h2) && ok(h3) && ok(h4) && ok(h5) && ok(cond_a1_variation) && ok(cond_weak_growth_1d) &&
           ok(cond_weak_growth_2d);
}

double HypothesisReport::forcing(double t, double v0, const FractionalOrders& orders) const {
    double f = c2 + v0 * c3;
    f += v0 * rho_at_0 * omega_kernel(1.0 - orders.nu, t);
    for (std::size_t i = 0; i < rho_i_at_0.size(); ++i)
        f += v0 * rho_i_at_0[i] * omega_kernel(1.0 - orders.nus[i], t);
    return f;
}

HypothesisReport validate_hypotheses(const ProblemSpec& spec, const ValidateOptions& opts) {
    spec.grid.validate();
    HypothesisReport rep;
    const Grid& g = spec.grid;
    const bool two_d = g.dim == 2;

    // h1
    try {
        spec.orders.validate();
        rep.h1 = {CheckStatus::Pass, "orders strictly increasing in (0, 1)"};
    } catch (const std::exception& e) {
        rep.h1 = {CheckStatus::Fail, e.what()};
    }

    double plateau = std::max(spec.rho_plateau_time, 1.0);
    for (double tk : spec.rho_i_plateau_times) plateau = std::max(plateau, tk);
    rep.t_star = plateau;
    const double horizon = opts.horizon > 0.0 ? opts.horizon : 2.0 * plateau + 1.0;

    const Index ns = std::max<Index>(opts.space_samples, 8);
    const Index nt = std::max<Index>(opts.time_samples, 8);
    auto xs = Vector::LinSpaced(ns, g.lo[0], g.hi[0]);
    auto ys = two_d ? Vector::LinSpaced(ns, g.lo[1], g.hi[1]) : Vector::Zero(1).eval();
    // the hypotheses quantify over all t >= 0: sample the window densely and
    // probe far into the plateau/decay tail for the infima
    Vector ts(nt + 4);
    ts.head(nt) = Vector::LinSpaced(nt, 0.0, horizon);
    ts(nt) = 4.0 * horizon;
    ts(nt + 1) = 32.0 * horizon;
    ts(nt + 2) = 256.0 * horizon;
    ts(nt + 3) = std::max(1e4, 1024.0 * horizon);

    // h2: operator coefficient signs
    double min_neg_a0 = 1e300, min_a1 = two_d ? 1.0 : 1e300;
    rep.da1_norm = 0.0;
    rep.da0_norm = 0.0;
    const double dx = 1e-6 * (g.hi[0] - g.lo[0]);
    for (Index it = 0; it < ts.size(); ++it)
        for (Index jy = 0; jy < ys.size(); ++jy)
            for (Index ix = 0; ix < ns; ++ix) {
                const double x = xs(ix), y = ys(jy), t = ts(it);
                min_neg_a0 = std::min(min_neg_a0, -spec.a0(x, y, t));
                const double a0p = spec.a0(std::min(x + dx, g.hi[0]), y, t);
                const double a0m = spec.a0(std::max(x - dx, g.lo[0]), y, t);
                double da0 = std::abs(a0p - a0m) / (2.0 * dx);
                if (two_d) {
                    const double q0p = spec.a0(x, std::min(y + dx, g.hi[1]), t);
                    const double q0m = spec.a0(x, std::max(y - dx, g.lo[1]), t);
                    da0 = std::hypot(da0, std::abs(q0p - q0m) / (2.0 * dx));
                }
                rep.da0_norm = std::max(rep.da0_norm, da0);
                if (!two_d && spec.a1) {
                    min_a1 = std::min(min_a1, spec.a1(x, y, t));
                    const double a1p = spec.a1(std::min(x + dx, g.hi[0]), y, t);
                    const double a1m = spec.a1(std::max(x - dx, g.lo[0]), y, t);
                    rep.da1_norm = std::max(rep.da1_norm, std::abs(a1p - a1m) / (2.0 * dx));
                }
            }
    rep.delta0 = min_neg_a0;
    rep.delta1 = min_a1;

    double min_rho = 1e300;
    rep.rho_at_0 = spec.rho ? spec.rho(0.0) : 0.0;
    bool rho_monotone = true;
    rep.rho_deriv_norm = 0.0;
    double prev = rep.rho_at_0;
    for (Index it = 0; it < ts.size(); ++it) {
        const double v = spec.rho(ts(it));
        min_rho = std::min(min_rho, v);
        if (it > 0) {
            const double d = (v - prev) / (ts(it) - ts(it - 1));
            if (d < -1e-10) rho_monotone = false;
            rep.rho_deriv_norm = std::max(rep.rho_deriv_norm, std::abs(d));
            prev = v;
        }
    }
    rep.rho_i_at_0.clear();
    rep.rho_i_deriv_norm.clear();
    bool rho_i_ok = true;
    for (const auto& f : spec.rho_i) {
        rep.rho_i_at_0.push_back(f(0.0));
        double dn = 0.0, pv = f(0.0);
        for (Index it = 0; it < ts.size(); ++it) {
            const double v = f(ts(it));
            if (v < -1e-14) rho_i_ok = false;
            if (it > 0) {
                const double d = (v - pv) / (ts(it) - ts(it - 1));
                if (d < -1e-10) rho_monotone = false;
                dn = std::max(dn, std::abs(d));
                pv = v;
            }
        }
        rep.rho_i_deriv_norm.push_back(dn);
    }
    rep.delta = min_rho;

    {
        std::ostringstream os;
        os << "delta0=" << rep.delta0 << " delta1=" << rep.delta1 << " delta=" << rep.delta;
        const bool ok = rep.delta0 > 0.0 && rep.delta1 > 0.0 && rep.delta > 0.0 && rho_i_ok;
        rep.h2 = {ok ? CheckStatus::Pass : CheckStatus::Fail, os.str()};
    }
    rep.h3 = {rho_monotone ? CheckStatus::Pass : CheckStatus::Fail,
              rho_monotone ? "coefficients nondecreasing with plateaus"
                           : "a temporal coefficient decreases"};

    // h4: kernel integrability over the horizon
    rep.kernel_bound_c = spec.kernel.c;
    rep.kernel_exponent = spec.kernel.nu_star;
    rep.kernel_l1 = spec.kernel.c != 0.0 ? spec.kernel.mass(0.0, horizon) : 0.0;
    {
        const bool ok = spec.kernel.c == 0.0 ||
                        (spec.kernel.nu_star >= 0.0 && spec.kernel.nu_star <= spec.orders.nu);
        std::ostringstream os;
        os << "|K| <= " << rep.kernel_bound_c << " t^-" << rep.kernel_exponent
           << ", L1(0," << horizon << ") = " << rep.kernel_l1;
        rep.h4 = {ok ? CheckStatus::Pass : CheckStatus::Fail, os.str()};
    }

    // h5: growth bounds of the registered nonlinearity, verified by sampling
    rep.gamma_exp = spec.f.gamma_exp;
    rep.gamma_ge_one = spec.f.gamma_exp >= 1.0;
    {
        bool ok = true;
        std::string why = "growth bounds hold on the sample grid";
        if (spec.f.form != Nonlinearity::Form::Zero) {
            for (double u = -20.0; u <= 20.0 && ok; u += 0.01) {
                const double fu = spec.f(u);
                const double gu = std::pow(std::abs(u), spec.f.gamma_exp);
                if (std::abs(fu) > spec.f.L1 * (1.0 + gu) * (1.0 + 1e-9) + 1e-12) {
                    ok = false;
                    why = "|f| growth bound violated near u=" + std::to_string(u);
                }
                if (u * fu < -spec.f.L2 + spec.f.L3 * gu * std::abs(u) - 1e-9 * (1.0 + gu)) {
                    ok = false;
                    why = "coercivity bound violated near u=" + std::to_string(u);
                }
                if (spec.f.derivative(u) < -spec.f.L4 - 1e-9) {
                    ok = false;
                    why = "derivative bound violated near u=" + std::to_string(u);
                }
            }
        }
        rep.h5 = {ok ? CheckStatus::Pass : CheckStatus::Fail, why};
    }

    // variable-diffusivity coercivity condition and the epsilon bookkeeping
    const bool a1_varies = rep.da1_norm > 1e-12;
    if (rep.delta0 > 0.0 && rep.delta1 > 0.0) {
        if (a1_varies) {
            rep.delta_star_lo = rep.da1_norm * rep.da1_norm / (rep.delta1 + rep.delta0);
            rep.delta_star_hi = rep.delta1;
            const bool feasible = rep.delta_star_lo < rep.delta_star_hi;
            rep.delta_star = opts.delta_star.value_or(
                0.5 * (rep.delta_star_lo + rep.delta_star_hi));
            rep.a1_variation_margin = rep.delta_star * (rep.delta1 + rep.delta0) -
                           rep.da1_norm * rep.da1_norm;
            std::ostringstream os;
            os << "feasible delta* in (" << rep.delta_star_lo << ", " << rep.delta_star_hi
               << "), margin(" << rep.delta_star << ") = " << rep.a1_variation_margin;
            rep.cond_a1_variation = {feasible && rep.a1_variation_margin > 0.0 ? CheckStatus::Pass : CheckStatus::Fail,
                          os.str()};
        } else {
            rep.delta_star_lo = 0.0;
            rep.delta_star_hi = rep.delta1;
            rep.delta_star = opts.delta_star.value_or(0.5 * rep.delta1);
            rep.a1_variation_margin = rep.delta_star * (rep.delta1 + rep.delta0);
            rep.cond_a1_variation = {CheckStatus::NotApplicable, "a1 is x-independent"};
        }

        rep.eps0 = rep.delta_star;
        rep.eps1 = (rep.delta_star * (rep.delta1 + rep.delta0) - rep.da1_norm * rep.da1_norm) /
                   (4.0 * rep.delta_star);
        if (rep.kernel_l1 > 0.0) {
            rep.eps3 = rep.delta0 / (8.0 * rep.kernel_l1);
            rep.eps4 = (rep.delta1 - rep.delta_star) / (8.0 * rep.kernel_l1);
        } else {
            rep.eps3 = rep.eps4 = std::numeric_limits<double>::infinity();
        }
        rep.c4 = two_d ? std::min(0.5 * (1.0 + rep.delta0), 7.0 * rep.delta0 / 8.0)
                       : std::min(3.0 * rep.eps1, 7.0 * rep.delta0 / 8.0);

        // C2 from the nonlinearity bookkeeping (gamma > 1 branch of the Young step)
        const double omega_measure =
            (g.hi[0] - g.lo[0]) * (two_d ? (g.hi[1] - g.lo[1]) : 1.0);
        const double denom = two_d ? 1.0 : (rep.delta1 - rep.delta_star);
        const double gm = spec.f.gamma_exp;
        if (spec.f.form == Nonlinearity::Form::Zero) {
            rep.c2 = 0.0;
        } else if (gm > 1.0 + 1e-9 && spec.f.L3 > 0.0) {
            const double grad_term = two_d ? 2.0 / (1.0 + rep.delta0) : 1.0 / rep.eps1;
            const double eps_inv = (2.0 / (spec.f.L3 * (1.0 + gm))) *
                                   (8.0 * spec.f.L4 * spec.f.L4 / denom +
                                    grad_term * rep.da0_norm * rep.da0_norm);
            const double eps = 1.0 / std::max(eps_inv, 1e-300);
            rep.c2 = omega_measure *
                     (spec.f.L2 +
                      spec.f.L3 * std::pow(eps, -(3.0 * gm + 1.0) / (gm - 1.0)) * (gm - 1.0) / 2.0 +
                      8.0 * spec.f.L1 * spec.f.L1 / denom);
        } else {
            rep.c2 = omega_measure * (spec.f.L2 + 8.0 * spec.f.L1 * spec.f.L1 / denom);
        }

        const double nu1 = spec.orders.nus.empty() ? spec.orders.nu : spec.orders.nus.front();
        double deriv_sum = rep.rho_deriv_norm;
        for (double d : rep.rho_i_deriv_norm) deriv_sum += d;
        rep.c3 = std::pow(rep.t_star, 1.0 - nu1) * (spec.orders.nu + 1.0) *
                 recip_gamma(2.0 - spec.orders.nu) * deriv_sum;

        // sup-norms of the individual b_l, accumulated as a sum of squares
        double bsum = 0.0;
        for (int axis = 0; axis < g.dim; ++axis) {
            double m = 0.0;
            if (spec.b[axis])
                for (Index it = 0; it < ts.size(); ++it)
                    for (Index jy = 0; jy < ys.size(); ++jy)
                        for (Index ix = 0; ix < ns; ++ix)
                            m = std::max(m, std::abs(spec.b[axis](xs(ix), ys(jy), ts(it))));
            bsum += m * m;
        }
        double b0m = 0.0;
        if (spec.b0)
            for (Index it = 0; it < ts.size(); ++it)
                for (Index jy = 0; jy < ys.size(); ++jy)
                    for (Index ix = 0; ix < ns; ++ix)
                        b0m = std::max(b0m, std::abs(spec.b0(xs(ix), ys(jy), ts(it))));
        bsum += b0m * b0m;
        rep.b_norm_sq_sum = bsum;
        const double bracket = two_d ? (1.0 / rep.delta0 + 1.0)
                                     : (1.0 / (rep.delta1 - rep.delta_star) + 1.0 / rep.delta0);
        rep.k0_scale = 8.0 * bsum * rep.kernel_l1 * bracket;
    }

    // gamma < 1 path: weak-growth conditions on the damping/drift balance
    if (!rep.gamma_ge_one && spec.f.form != Nonlinearity::Form::Zero) {
        const double L4 = spec.f.L4;
        if (!two_d) {
            rep.delta1_star = rep.delta_star > 0.0
                                  ? (rep.delta_star * (rep.delta1 + rep.delta0) -
                                     rep.da1_norm * rep.da1_norm) / rep.delta_star
                                  : 0.0;
            const double d2_sup = (a1_varies ? rep.delta1 - rep.delta_star : rep.delta1);
            rep.delta2_star = 0.999999 * d2_sup;
            rep.weak_growth_margin_1d = rep.delta0 - L4 * L4 / rep.delta2_star -
                           rep.da0_norm * rep.da0_norm / std::max(rep.delta1_star, 1e-300);
            rep.cond_weak_growth_1d = {rep.weak_growth_margin_1d > 0.0 ? CheckStatus::Pass : CheckStatus::Fail,
                          "margin " + std::to_string(rep.weak_growth_margin_1d)};
        } else {
            rep.delta3_star = 0.999999 * (1.0 + rep.delta0);
            rep.delta4_star = 0.999999;
            rep.weak_growth_margin_2d = rep.delta0 - L4 * L4 / rep.delta4_star -
                            rep.da0_norm * rep.da0_norm / rep.delta3_star;
            rep.cond_weak_growth_2d = {rep.weak_growth_margin_2d > 0.0 ? CheckStatus::Pass : CheckStatus::Fail,
                           "margin " + std::to_string(rep.weak_growth_margin_2d)};
        }
    }
    return rep;
}

DecayFit fit_decay_exponent(const History& series, double t_lo, double t_hi) {
    if (!(t_hi > t_lo) || !(t_lo > 0.0))
        throw std::invalid_argument("fit_decay_exponent: need 0 < t_lo < t_hi");
    std::vector<double> lx, ly;
    for (Index j = 0; j < series.size(); ++j) {
        const double t = series.mesh.nodes(j);
        if (t < t_lo || t > t_hi) continue;
        if (!(series.values(j) > 0.0))
            throw std::domain_error("fit_decay_exponent: nonpositive values in the window");
        lx.push_back(std::log(t));
        ly.push_back(std::log(series.values(j)));
    }
    if (lx.size() < 3)
        throw std::invalid_argument("fit_decay_exponent: window contains fewer than 3 nodes");
    const double n = static_cast<double>(lx.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    DecayFit fit;
    fit.t_lo = t_lo;
    fit.t_hi = t_hi;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

MonitorResult monitor_energy_inequality(const Trajectory& traj, const HypothesisReport& report,
                                        const ProblemSpec& spec, const MonitorOptions& opts) {
    const History V = traj.energy_history();
    V.mesh.validate();
    const Index n = V.size();
    MonitorResult res;
    res.margins = Vector::Zero(n);

    // K0 * V with K0 = k0_scale * K
    Vector conv = Vector::Zero(n);
    if (spec.kernel.c != 0.0 && report.k0_scale > 0.0) {
        SingularKernel k0{report.k0_scale * spec.kernel.c, spec.kernel.nu_star};
        conv = convolve_singular(k0, V).values;
    }

    const double v0 = V.values(0);
    double worst = 1e300;
    Index ok_count = 0;
    res.max_forcing = 0.0;
    for (Index j = 1; j < n; ++j) {
        const double t = V.mesh.nodes(j);
        double lhs = 0.5 * spec.rho(t) * caputo_l1(V, spec.orders.nu, j);
        for (std::size_t q = 0; q < spec.orders.nus.size(); ++q)
            lhs += 0.5 * spec.rho_i[q](t) * caputo_l1(V, spec.orders.nus[q], j);
        lhs += -conv(j) + report.c4 * V.values(j);
        const double F = report.forcing(t, v0, spec.orders);
        res.max_forcing = std::max(res.max_forcing, F);
        res.margins(j) = F - lhs;
        worst = std::min(worst, res.margins(j));
    }
    for (Index j = 1; j < n; ++j)
        if (res.margins(j) >= -opts.slack * res.max_forcing) ++ok_count;
    res.min_margin = worst;
    res.fraction_ok = static_cast<double>(ok_count) / static_cast<double>(n - 1);
    return res;
}

std::vector<std::optional<double>> absorbing_time(const std::vector<History>& energies,
                                                  double radius_sq) {
    if (!(radius_sq > 0.0)) throw std::invalid_argument("absorbing_time: radius must be positive");
    std::vector<std::optional<double>> out;
    out.reserve(energies.size());
    for (const auto& V : energies) {
        V.require_complete();
        const Index n = V.size();
        Index last_above = -1;
        for (Index j = n - 1; j >= 0; --j)
            if (V.values(j) > radius_sq) {
                last_above = j;
                break;
            }
        if (last_above == n - 1) {
            out.push_back(std::nullopt);
        } else if (last_above < 0) {
            out.push_back(0.0);
        } else {
            const double t0 = V.mesh.nodes(last_above), t1 = V.mesh.nodes(last_above + 1);
            const double v0 = V.values(last_above), v1 = V.values(last_above + 1);
            const double w = (v0 - radius_sq) / std::max(v0 - v1, 1e-300);
            out.push_back(t0 + w * (t1 - t0));
        }
    }
    return out;
}

} // namespace subdiff
