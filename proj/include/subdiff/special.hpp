#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace subdiff {

/// Euler Gamma function on (0, 170], Lanczos approximation (g = 7).
/// Arguments outside the domain throw std::domain_error; 170 keeps the
/// result comfortably inside double range.
double gamma_fn(double x);

/// Entire reciprocal 1/Gamma(x) for any real x (0 at the poles x = 0, -1, ...).
double recip_gamma(double x);

/// Power kernel omega_theta(t) = t^{theta-1} / Gamma(theta), theta > 0, t > 0.
double omega_kernel(double theta, double t);

/// Tolerances and budget for Mittag-Leffler series evaluation.
struct SeriesPolicy {
    double abs_tol = 1e-14;
    double rel_tol = 1e-12;
    int max_total_degree = 500;
    /// Radius below which the small-time expansion is considered valid and
    /// above whose reciprocal the large-time expansion is considered valid.
    /// Parameter-set dependent; comes from configuration, never hard-coded.
    double asymptotic_switch_radius = 0.1;

    void validate() const;
};

/// Parameters of the multinomial Mittag-Leffler family
///   E_{(beta_1,...,beta_m) beta0}(z_1,...,z_m)
/// and of the weighted kernel
///   calE(t) = t^{beta0-1} E_{(beta_bar) beta0}(-d_1 t^{beta_1}, ..., -d_m t^{beta_m}).
///
/// With the monotone flag set the decay ordering 0 < beta_m < ... < beta_1 <= beta0
/// is enforced on construction; that is the regime in which calE is completely
/// monotonic.
struct MLParams {
    std::vector<double> beta_bar; ///< exponents, descending when monotone
    double beta0 = 1.0;
    std::vector<double> d_bar;    ///< weights paired with beta_bar
    bool monotone = false;

    MLParams() = default;
    MLParams(std::vector<double> betas, double b0, std::vector<double> ds,
             bool monotone_flag = false);

    std::size_t m() const { return beta_bar.size(); }
};

/// Thrown when the series budget is exhausted before the tail bound is met.
class NonConvergenceError : public std::runtime_error {
public:
    explicit NonConvergenceError(const std::string& what, double estimate = 0.0)
        : std::runtime_error(what), estimate_(estimate) {}
    /// Best available error/contraction estimate at the point of failure.
    double estimate() const { return estimate_; }

private:
    double estimate_;
};

/// Multinomial Mittag-Leffler function E_{(beta_bar) beta0}(z_bar).
///
/// Summation proceeds by total degree with compensated accumulation and a
/// ratio-based tail bound.  For nonpositive arguments in the admissible
/// exponent range a branch-cut integral of the Laplace transform is used when
/// cancellation makes the series unable to reach the requested accuracy.
double ml_multinomial(const MLParams& params, const std::vector<double>& z_bar,
                      const SeriesPolicy& policy = {});

/// calE(t) = t^{beta0-1} E_{(beta_bar) beta0}(-d_1 t^{beta_1}, ...), t > 0.
/// Supported for beta0 in (0, 2] when all d_j >= 0; other parameter ranges
/// fall back to the plain series.
double calE(double t, const MLParams& params, const SeriesPolicy& policy = {});

/// 1 - d_1 * calE_{beta_bar, beta0+1}(t; d_bar) evaluated without cancellation.
/// Requires beta0 == beta_1 and d_1 > 0 (the relaxation regime, where the
/// value decays monotonically from 1 to 0).  This is the homogeneous-solution
/// profile of the constant-coefficient multi-term fractional ODE.
double calE_complement(double t, const MLParams& params,
                       const SeriesPolicy& policy = {});

/// Precomputed branch-cut density of the calE transform on a log grid.
/// Amortizes the integral evaluation when the same parameter set is queried
/// at many times (kernel tables inside the FODE solvers).
class CalETable {
public:
    enum class Kind {
        Decay,     ///< calE itself, beta0 in (0, 1 + beta_1)
        Complement ///< 1 - d_1 calE_{beta0+1}, beta0 == beta_1
    };

    CalETable(const MLParams& params, Kind kind, double t_min, double t_max,
              double abs_tol = 1e-12);

    double operator()(double t) const;

private:
    std::vector<double> ex_, weight_;
    double d1_ = 1.0;
    Kind kind_;
};

enum class AsymptoticRegime { Zero, Infinity };

/// Leading-order expansions of calE near t = 0 and t = +infinity.
/// The Infinity regime with beta0 == beta_1 needs m >= 2 (it is driven by the
/// second exponent) and throws std::domain_error otherwise.
double calE_asymptotic(double t, const MLParams& params, AsymptoticRegime regime);

namespace detail {

/// 1/Gamma in extended precision; used by series evaluation internally.
long double recip_gamma_l(long double x);

/// Whether the branch-cut integral representation applies to these parameters
/// with every argument z_j = -d_j t^{beta_j} nonpositive.
bool spectral_eligible(const MLParams& params);

/// Branch-cut evaluation of calE for beta0 in (0, 2]; preconditions as in
/// spectral_eligible.
double calE_spectral(double t, const MLParams& params, double abs_tol, double rel_tol);

} // namespace detail

} // namespace subdiff
