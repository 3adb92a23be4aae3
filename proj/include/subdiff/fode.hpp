#pragma once

#include "subdiff/frac_calculus.hpp"
#include "subdiff/special.hpp"

#include <functional>
#include <optional>

namespace subdiff {

using TimeFn = std::function<double(double)>;

/// Orders of the multi-term fractional operator: 0 < nu_1 < ... < nu_M < nu < 1.
struct FractionalOrders {
    double nu = 0.5;
    std::vector<double> nus; ///< ascending, possibly empty

    void validate() const;
    /// Exponent vector (nu, nu - nu_1, ..., nu - nu_M) of the resolvent kernel.
    std::vector<double> resolvent_exponents() const;
};

/// Scalar multi-term fractional Cauchy problem
///   rho(t) D^nu V + sum_i rho_i(t) D^{nu_i} V - (K0 * V) + d0 V = F(t),
///   V(0) = initial.
struct FodeSpec {
    FractionalOrders orders;
    TimeFn leading;                       ///< rho(t) >= delta > 0
    std::vector<TimeFn> lower;            ///< rho_i(t) >= 0, one per orders.nus
    double damping = 0.0;                 ///< d0 >= 0
    std::optional<SingularKernel> memory; ///< K0, nonnegative
    TimeFn forcing;                       ///< F(t) >= 0
    double initial = 0.0;                 ///< V(0) >= 0

    void validate() const;
    bool coefficients_constant(double horizon) const;
    /// Resolvent parameters (beta_bar, nu, d_bar) for constant coefficients.
    MLParams resolvent_params() const;
};

struct VolterraStats {
    int picard_iterations = 0;
    double kernel_l1 = 0.0; ///< trapezoid L1 norm of the resolvent memory kernel
    double last_change = 0.0;
};

/// Mittag-Leffler representation for constant coefficients:
///   V = V(0) (1 - d0' calE_{1+nu}) + (calE * F/rho) + Picard sweep for the
/// memory term V = known + G1 * V with G1 = (K0/rho) * calE.
/// Nonconstant forcing requires a uniform mesh (kernel mass table by lag).
History solve_const_multiterm(const FodeSpec& spec, const TimeMesh& mesh,
                              VolterraStats* stats = nullptr);

/// Implicit L1 stepping for general (plateau) coefficients; the memory term is
/// lagged.  Preserves nonnegativity for F >= 0, V(0) >= 0.
History step_fode_numeric(const FodeSpec& spec, const TimeMesh& mesh);

/// Decay envelope of the constant-coefficient problem:
///   g(t) = |1 - (c0*/rho) (calE * 1)| + sum_i (rho_i/rho)(calE * omega_{1-nu_i})
///          + (calE * omega_{1-nu}),
/// evaluated through the shift identity (no numerical convolution).
/// g(0+) = 2 and g decays algebraically at infinity.
double decay_g(double t, const FractionalOrders& orders, double rho,
               const std::vector<double>& rho_i, double c0_star);

/// Report of the Gronwall-type premise |v| <= C0 + C1 I^theta|k1 v| + C2 (|k2|*|v|).
struct GronwallReport {
    bool premise_holds = false;
    Index first_violation = -1;
    double max_violation = 0.0; ///< worst (lhs - rhs), positive when violated
    double multiplier = 0.0;    ///< empirical max |v| / C0
    bool k1_integral_vanishes = false;
};

GronwallReport gronwall_check(const History& v, const History& k1, const History& k2,
                              double theta, double C0, double C1, double C2);

} // namespace subdiff
