#include "subdiff/fode.hpp"

#include <cmath>

namespace subdiff {

void FractionalOrders::validate() const {
    if (!(nu > 0.0) || !(nu < 1.0))
        throw std::invalid_argument("FractionalOrders: nu must lie in (0, 1)");
    double prev = 0.0;
    for (double v : nus) {
        if (!(v > prev) || !(v < nu))
            throw std::invalid_argument(
                "FractionalOrders: lower orders must be strictly increasing in (0, nu)");
        prev = v;
    }
}

std::vector<double> FractionalOrders::resolvent_exponents() const {
    std::vector<double> beta;
    beta.reserve(nus.size() + 1);
    beta.push_back(nu);
    for (double v : nus) beta.push_back(nu - v);
    return beta;
}

void FodeSpec::validate() const {
    orders.validate();
    if (!leading) throw std::invalid_argument("FodeSpec: leading coefficient missing");
    if (lower.size() != orders.nus.size())
        throw std::invalid_argument("FodeSpec: one lower coefficient per lower order required");
    if (damping < 0.0) throw std::invalid_argument("FodeSpec: damping must be nonnegative");
    if (initial < 0.0) throw std::invalid_argument("FodeSpec: initial value must be nonnegative");
    if (!forcing) throw std::invalid_argument("FodeSpec: forcing missing");
    if (memory && (memory->c < 0.0 || memory->nu_star < 0.0 || memory->nu_star > orders.nu))
        throw std::invalid_argument("FodeSpec: memory kernel exponent must lie in [0, nu]");
}

bool FodeSpec::coefficients_constant(double horizon) const {
    const double r0 = leading(0.0);
    for (double t = 0.0; t <= horizon; t += horizon / 17.0) {
        if (std::abs(leading(t) - r0) > 1e-12 * std::max(1.0, std::abs(r0))) return false;
        for (const auto& f : lower)
            if (std::abs(f(t) - f(0.0)) > 1e-12 * std::max(1.0, std::abs(f(0.0)))) return false;
    }
    return true;
}

MLParams FodeSpec::resolvent_params() const {
    const double rho = leading(0.0);
    if (!(rho > 0.0)) throw std::invalid_argument("FodeSpec: leading coefficient must be positive");
    std::vector<double> d;
    d.reserve(lower.size() + 1);
    d.push_back(damping / rho);
    for (const auto& f : lower) d.push_back(f(0.0) / rho);
    return MLParams(orders.resolvent_exponents(), orders.nu, std::move(d), true);
}

namespace {

// convolution of a finite sampled kernel against piecewise-linear v on the
// full prefix, trapezoid in the kernel variable
double trapz_l1(const Vector& t, const Vector& k) {
    double acc = 0.0;
    for (Index j = 0; j + 1 < t.size(); ++j)
        acc += 0.5 * (t(j + 1) - t(j)) * (std::abs(k(j)) + std::abs(k(j + 1)));
    return acc;
}

} // namespace

History solve_const_multiterm(const FodeSpec& spec, const TimeMesh& mesh,
                              VolterraStats* stats) {
    spec.validate();
    mesh.validate();
    if (!spec.coefficients_constant(mesh.horizon()))
        throw std::invalid_argument("solve_const_multiterm: coefficients must be constant");

    const Index n = mesh.size();
    const Vector& t = mesh.nodes;
    const double rho = spec.leading(0.0);
    const double d0 = spec.damping / rho;
    MLParams params = spec.resolvent_params();

    // forcing profile; constant forcing avoids any convolution
    Vector fvals(n);
    for (Index j = 0; j < n; ++j) fvals(j) = spec.forcing(t(j)) / rho;
    const bool f_const = (fvals.array() - fvals(0)).abs().maxCoeff() <=
                         1e-12 * std::max(1.0, std::abs(fvals(0)));

    // homogeneous profile and the kernel primitive E1(t) = (calE * 1)(t)
    Vector hom(n), e1(n);
    hom(0) = 1.0;
    e1(0) = 0.0;
    if (d0 > 0.0) {
        CalETable complement(params, CalETable::Kind::Complement, t(1), t(n - 1));
        for (Index j = 1; j < n; ++j) {
            const double c = complement(t(j));
            hom(j) = c;
            e1(j) = (1.0 - c) / d0;
        }
    } else {
        MLParams shifted = params;
        shifted.beta0 = 1.0 + spec.orders.nu;
        shifted.monotone = false;
        bool all_zero = true;
        for (double v : params.d_bar) all_zero &= (v == 0.0);
        for (Index j = 1; j < n; ++j) {
            hom(j) = 1.0;
            e1(j) = all_zero ? omega_kernel(shifted.beta0, t(j)) * t(j) / shifted.beta0
                             : calE(t(j), shifted);
        }
    }

    Vector known = spec.initial * hom;
    if (f_const) {
        known += fvals(0) * e1;
    } else {
        if (mesh.kind != TimeMesh::Kind::Uniform)
            throw std::invalid_argument(
                "solve_const_multiterm: nonconstant forcing needs a uniform mesh");
        // midpoint-in-value, exact-in-kernel product integration using the
        // lag table e1(j) = E1(j dt)
        for (Index i = 1; i < n; ++i) {
            double acc = 0.0;
            for (Index j = 0; j < i; ++j) {
                const double fmid = 0.5 * (fvals(j) + fvals(j + 1));
                acc += fmid * (e1(i - j) - e1(i - j - 1));
            }
            known(i) += acc;
        }
    }

    History out;
    out.mesh = mesh;
    out.values = known;
    VolterraStats local;
    if (spec.memory && spec.memory->c > 0.0) {
        // G1 = (K0/rho) * calE, exact through the shift identity
        Vector g1(n);
        const double c_over_rho = spec.memory->c / rho;
        const double ns = spec.memory->nu_star;
        if (ns > 0.0) {
            MLParams shifted = params;
            shifted.beta0 = spec.orders.nu + 1.0 - ns;
            shifted.monotone = false;
            CalETable table(shifted, CalETable::Kind::Decay, t(1), t(n - 1));
            const double scale = c_over_rho * gamma_fn(1.0 - ns);
            g1(0) = (std::abs(shifted.beta0 - 1.0) < 1e-12) ? scale : 0.0;
            for (Index j = 1; j < n; ++j) g1(j) = scale * table(t(j));
        } else {
            // constant kernel: G1(t) = (c/rho) (calE * 1)(t)
            for (Index j = 0; j < n; ++j) g1(j) = c_over_rho * e1(j);
        }
        local.kernel_l1 = trapz_l1(t, g1);

        History g1h{mesh, g1};
        Vector v = known;
        for (int it = 0; it < 200; ++it) {
            History vh{mesh, v};
            Vector next = known + convolve_singular(g1h, vh).values;
            local.last_change = (next - v).cwiseAbs().maxCoeff();
            v = next;
            local.picard_iterations = it + 1;
            if (local.last_change < 1e-10) break;
        }
        if (local.last_change >= 1e-10)
            throw NonConvergenceError("solve_const_multiterm: Picard iteration stalled; "
                                      "resolvent kernel L1 norm " +
                                          std::to_string(local.kernel_l1),
                                      local.kernel_l1);
        out.values = v;
    }
    if (stats) *stats = local;
    return out;
}

History step_fode_numeric(const FodeSpec& spec, const TimeMesh& mesh) {
    spec.validate();
    mesh.validate();
    const Index n = mesh.size();
    const Vector& t = mesh.nodes;
    const std::size_t m = spec.orders.nus.size();

    Vector v(n);
    v(0) = spec.initial;
    Vector w, wm;
    const double scale_guard = 1e-10;

    for (Index i = 1; i < n; ++i) {
        double coef = spec.damping;
        double rhs = spec.forcing(t(i));
        // leading order
        {
            caputo_l1_weights(t, spec.orders.nu, i, w);
            const double c = spec.leading(t(i));
            coef += c * w(i);
            double hist = 0.0;
            for (Index j = 0; j < i; ++j) hist += w(j) * v(j);
            rhs -= c * hist;
        }
        for (std::size_t q = 0; q < m; ++q) {
            caputo_l1_weights(t, spec.orders.nus[q], i, w);
            const double c = spec.lower[q](t(i));
            coef += c * w(i);
            double hist = 0.0;
            for (Index j = 0; j < i; ++j) hist += w(j) * v(j);
            rhs -= c * hist;
        }
        if (spec.memory && spec.memory->c != 0.0) {
            lagged_memory_weights(*spec.memory, t, i, wm);
            for (Index j = 0; j < i; ++j) rhs += wm(j) * v(j);
        }
        if (!(coef > 0.0))
            throw std::logic_error("step_fode_numeric: nonpositive implicit coefficient");
        v(i) = rhs / coef;
        if (v(i) < -scale_guard * std::max(1.0, v.head(i).cwiseAbs().maxCoeff()))
            throw std::logic_error("step_fode_numeric: positivity violated");
    }
    return History{mesh, v};
}

double decay_g(double t, const FractionalOrders& orders, double rho,
               const std::vector<double>& rho_i, double c0_star) {
    orders.validate();
    if (!(t > 0.0)) throw std::domain_error("decay_g: t must be positive");
    if (!(rho > 0.0) || !(c0_star > 0.0))
        throw std::invalid_argument("decay_g: rho and c0_star must be positive");
    if (rho_i.size() != orders.nus.size())
        throw std::invalid_argument("decay_g: one coefficient per lower order required");

    std::vector<double> d;
    d.push_back(c0_star / rho);
    for (double r : rho_i) d.push_back(r / rho);
    MLParams params(orders.resolvent_exponents(), orders.nu, d, true);

    double g = calE_complement(t, params); // |1 - (c0*/rho)(calE * 1)|, nonnegative
    for (std::size_t i = 0; i < rho_i.size(); ++i) {
        MLParams shifted = params;
        shifted.beta0 = 1.0 + orders.nu - orders.nus[i];
        shifted.monotone = false;
        g += (rho_i[i] / rho) * calE(t, shifted);
    }
    MLParams last = params;
    last.beta0 = 1.0;
    last.monotone = false;
    g += calE(t, last);
    return g;
}

GronwallReport gronwall_check(const History& v, const History& k1, const History& k2,
                              double theta, double C0, double C1, double C2) {
    detail::require_same_mesh(v, k1);
    detail::require_same_mesh(v, k2);
    if (!(C0 > 0.0)) throw std::invalid_argument("gronwall_check: C0 must be positive");

    const Index n = v.size();
    History absk1v{v.mesh, (k1.values.cwiseProduct(v.values)).cwiseAbs()};
    History absk1{v.mesh, k1.values.cwiseAbs()};
    History absv{v.mesh, v.values.cwiseAbs()};
    History absk2{v.mesh, k2.values.cwiseAbs()};

    const Vector ik1v = rl_integral(absk1v, theta).values;
    const Vector ik1 = rl_integral(absk1, theta).values;
    const Vector conv = convolve_singular(absk2, absv).values;

    GronwallReport rep;
    rep.multiplier = absv.values.maxCoeff() / C0;
    const double ik1_max = std::max(ik1.maxCoeff(), 1e-300);
    rep.k1_integral_vanishes = ik1(1) <= 0.1 * ik1_max + 1e-12;

    rep.premise_holds = true;
    for (Index j = 0; j < n; ++j) {
        const double rhs = C0 + C1 * ik1v(j) + C2 * conv(j);
        const double excess = std::abs(v.values(j)) - rhs;
        if (excess > 1e-10 * std::max(1.0, rhs)) {
            if (rep.premise_holds) rep.first_violation = j;
            rep.premise_holds = false;
            rep.max_violation = std::max(rep.max_violation, excess);
        }
    }
    return rep;
}

} // namespace subdiff
