#pragma once

#include "subdiff/pde.hpp"

#include <optional>
#include <string>
#include <vector>

namespace subdiff {

/// Sobolev energy V = int (u^2 + |grad u|^2): trapezoid weights, central
/// differences inside, second-order one-sided differences at the boundary.
double sobolev_energy(const Vector& field, const Grid& grid);

enum class CheckStatus { Pass, Fail, NotApplicable };

struct HypothesisCheck {
    CheckStatus status = CheckStatus::NotApplicable;
    std::string detail;
};

/// Structural constants extracted from a problem specification, following the
/// energy-argument bookkeeping.  Generic constants of the auxiliary bounds are
/// pinned to 1.
struct HypothesisReport {
    HypothesisCheck h1, h2, h3, h4, h5, cond_a1_variation, cond_weak_growth_1d, cond_weak_growth_2d;

    double delta = 0.0;       ///< inf rho
    double delta0 = 0.0;      ///< inf(-a0)
    double delta1 = 0.0;      ///< inf a1 (1 in 2D)
    double delta_star = 0.0;  ///< chosen value inside the feasible interval
    double delta_star_lo = 0.0, delta_star_hi = 0.0;
    double delta1_star = 0.0, delta2_star = 0.0, delta3_star = 0.0, delta4_star = 0.0;
    double a1_variation_margin = 0.0, weak_growth_margin_1d = 0.0, weak_growth_margin_2d = 0.0;
    double da1_norm = 0.0; ///< sup |d a1/dx|
    double da0_norm = 0.0; ///< sup |grad a0|
    double b_norm_sq_sum = 0.0;

    double eps0 = 0.0, eps1 = 0.0, eps3 = 0.0, eps4 = 0.0;
    double c2 = 0.0, c3 = 0.0, c4 = 0.0;
    double t_star = 1.0;
    double rho_at_0 = 0.0;
    std::vector<double> rho_i_at_0;
    double rho_deriv_norm = 0.0;
    std::vector<double> rho_i_deriv_norm;

    double kernel_l1 = 0.0; ///< L1 norm over the sampling horizon
    double kernel_bound_c = 0.0, kernel_exponent = 0.0;
    double k0_scale = 0.0; ///< K0(t) = k0_scale |K(t)|

    bool gamma_ge_one = true; ///< selects the main path vs the gamma < 1 path
    double gamma_exp = 1.0;

    bool all_pass() const;
    /// Forcing profile F(t) of the energy inequality for initial energy V0.
    double forcing(double t, double v0, const FractionalOrders& orders) const;
};

struct ValidateOptions {
    Index space_samples = 64;
    Index time_samples = 128;
    double horizon = 0.0;               ///< 0: plateau time + margin
    std::optional<double> delta_star;   ///< default: midpoint of the feasible interval
};

HypothesisReport validate_hypotheses(const ProblemSpec& spec, const ValidateOptions& opts = {});

struct DecayFit {
    double t_lo = 0.0, t_hi = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0; ///< RMS of log-log fit residuals
};

/// Least-squares slope of log V against log t inside the window.
DecayFit fit_decay_exponent(const History& series, double t_lo, double t_hi);

struct MonitorResult {
    Vector margins;     ///< F(t_n) - LHS(t_n) at positive nodes (index 0 unused)
    double min_margin = 0.0;
    double max_forcing = 0.0;
    double fraction_ok = 0.0; ///< share of positive nodes with margin >= -slack*maxF
};

struct MonitorOptions {
    double slack = 0.05;          ///< tolerated negative margin, fraction of max F
    double node_fraction = 0.95;  ///< required share of compliant nodes
};

/// Nodewise check of the dissipation inequality
///   rho/2 D^nu V + sum rho_i/2 D^{nu_i} V - K0*V + C4 V <= F(t)
/// along a computed trajectory; starts at the first positive node.
MonitorResult monitor_energy_inequality(const Trajectory& traj, const HypothesisReport& report,
                                        const ProblemSpec& spec, const MonitorOptions& opts = {});

/// Last-crossing entry time into the ball V <= radius_sq, per trajectory;
/// empty optional when the trajectory is still outside at the horizon.
std::vector<std::optional<double>> absorbing_time(const std::vector<History>& energies,
                                                  double radius_sq);

} // namespace subdiff
