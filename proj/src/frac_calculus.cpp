#include "subdiff/frac_calculus.hpp"

#include "subdiff/special.hpp"

#include <cmath>

namespace subdiff {

TimeMesh TimeMesh::uniform(double T, Index intervals) {
    if (!(T > 0.0) || intervals < 1)
        throw std::invalid_argument("TimeMesh::uniform: need T > 0 and at least one interval");
    TimeMesh m;
    m.kind = Kind::Uniform;
    m.nodes = Vector::LinSpaced(intervals + 1, 0.0, T);
    m.nodes(0) = 0.0;
    m.nodes(intervals) = T;
    return m;
}

TimeMesh TimeMesh::graded(double T, Index intervals, double r) {
    if (!(T > 0.0) || intervals < 1 || !(r >= 1.0))
        throw std::invalid_argument("TimeMesh::graded: need T > 0, intervals >= 1, r >= 1");
    TimeMesh m;
    m.kind = Kind::Graded;
    m.grading = r;
    m.nodes.resize(intervals + 1);
    for (Index j = 0; j <= intervals; ++j)
        m.nodes(j) = T * std::pow(static_cast<double>(j) / intervals, r);
    m.nodes(intervals) = T;
    return m;
}

void TimeMesh::validate() const {
    if (nodes.size() < 2 || nodes(0) != 0.0)
        throw std::invalid_argument("TimeMesh: nodes must start at 0");
    for (Index j = 0; j + 1 < nodes.size(); ++j)
        if (!(nodes(j + 1) > nodes(j)))
            throw std::invalid_argument("TimeMesh: nodes must be strictly increasing");
}

History History::sample(const TimeMesh& mesh, const std::function<double(double)>& f) {
    History h;
    h.mesh = mesh;
    h.values.resize(mesh.size());
    for (Index j = 0; j < mesh.size(); ++j) h.values(j) = f(mesh.nodes(j));
    return h;
}

void History::require_complete() const {
    if (values.size() != mesh.size())
        throw std::invalid_argument("History: incomplete history where a full one is required");
}

namespace detail {

double pow_diff(double a, double b, double c) {
    if (b <= 0.0) return std::pow(a, c);
    return -std::pow(a, c) * std::expm1(c * std::log(b / a));
}

void require_same_mesh(const History& a, const History& b) {
    if (a.mesh.size() != b.mesh.size() || !a.mesh.nodes.isApprox(b.mesh.nodes, 0.0))
        throw std::invalid_argument("histories must share the mesh");
}

} // namespace detail

using detail::pow_diff;

History rl_integral(const History& h, double theta) {
    h.require_complete();
    h.mesh.validate();
    if (!(theta > 0.0) || theta > 1.0)
        throw std::invalid_argument("rl_integral: theta must lie in (0, 1]");

    const Vector& t = h.mesh.nodes;
    const Vector& v = h.values;
    const Index n = t.size();
    const double rg1 = recip_gamma(theta + 1.0); // 1/Gamma(theta+1)
    const double rg = recip_gamma(theta);        // 1/Gamma(theta)

    History out;
    out.mesh = h.mesh;
    out.values = Vector::Zero(n);
    for (Index i = 1; i < n; ++i) {
        double acc = 0.0, comp = 0.0;
        for (Index j = 0; j < i; ++j) {
            const double A = t(i) - t(j);
            const double B = t(i) - t(j + 1);
            const double tau = t(j + 1) - t(j);
            const double d0 = pow_diff(A, B, theta);
            // int (s - t_j) omega_theta(t_i - s) ds over the cell
            const double m0 = d0 * rg1;
            const double m1 = (A * d0 / theta - pow_diff(A, B, theta + 1.0) / (theta + 1.0)) * rg;
            const double slope = (v(j + 1) - v(j)) / tau;
            const double term = v(j) * m0 + slope * m1;
            const double y = term - comp;
            const double s = acc + y;
            comp = (s - acc) - y;
            acc = s;
        }
        out.values(i) = acc;
    }
    return out;
}

double caputo_l1(const History& h, double theta, Index n) {
    h.mesh.validate();
    if (!(theta > 0.0) || !(theta < 1.0))
        throw std::invalid_argument("caputo_l1: theta must lie in (0, 1)");
    if (n < 1 || n >= h.values.size())
        throw std::invalid_argument("caputo_l1: node index out of the populated range");

    const Vector& t = h.mesh.nodes;
    const Vector& v = h.values;
    const double rg = recip_gamma(2.0 - theta);
    double acc = 0.0, comp = 0.0;
    for (Index j = 0; j < n; ++j) {
        const double A = t(n) - t(j);
        const double B = t(n) - t(j + 1);
        const double w = pow_diff(A, B, 1.0 - theta) / (t(j + 1) - t(j));
        const double term = w * (v(j + 1) - v(j));
        const double y = term - comp;
        const double s = acc + y;
        comp = (s - acc) - y;
        acc = s;
    }
    return acc * rg;
}

History caputo_l1_all(const History& h, double theta) {
    h.require_complete();
    History out;
    out.mesh = h.mesh;
    out.values = Vector::Zero(h.size());
    for (Index i = 1; i < h.size(); ++i) out.values(i) = caputo_l1(h, theta, i);
    return out;
}

double SingularKernel::operator()(double t) const {
    if (nu_star == 0.0) return c;
    if (!(t > 0.0)) throw std::domain_error("SingularKernel: t must be positive");
    return c * std::pow(t, -nu_star);
}

double SingularKernel::mass(double a, double b) const {
    if (!(b > a) || a < 0.0) throw std::domain_error("SingularKernel::mass: need 0 <= a < b");
    return c * pow_diff(b, a, 1.0 - nu_star) / (1.0 - nu_star);
}

History convolve_singular(const SingularKernel& kernel, const History& h) {
    if (kernel.nu_star >= 1.0)
        throw std::domain_error("convolve_singular: kernel exponent >= 1 is not integrable");
    if (kernel.nu_star < 0.0)
        throw std::domain_error("convolve_singular: kernel exponent must be nonnegative");
    if (kernel.c == 0.0) {
        History out;
        out.mesh = h.mesh;
        out.values = Vector::Zero(h.size());
        return out;
    }
    // c t^{-nu*} = c Gamma(1-nu*) omega_{1-nu*}
    History out = rl_integral(h, 1.0 - kernel.nu_star);
    out.values *= kernel.c * gamma_fn(1.0 - kernel.nu_star);
    return out;
}

History convolve_singular(const History& kernel, const History& h) {
    detail::require_same_mesh(kernel, h);
    h.require_complete();
    for (Index j = 0; j < kernel.size(); ++j)
        if (!std::isfinite(kernel.values(j)))
            throw std::domain_error("convolve_singular: sampled kernel must be finite");

    const Vector& t = h.mesh.nodes;
    const Index n = t.size();
    // piecewise-linear interpolation of the kernel at arbitrary lag
    auto kat = [&](double lag) {
        if (lag <= 0.0) return kernel.values(0);
        Index lo = 0, hi = n - 1;
        while (hi - lo > 1) {
            const Index mid = (lo + hi) / 2;
            (t(mid) <= lag ? lo : hi) = mid;
        }
        const double w = (lag - t(lo)) / (t(hi) - t(lo));
        return (1.0 - w) * kernel.values(lo) + w * kernel.values(hi);
    };

    History out;
    out.mesh = h.mesh;
    out.values = Vector::Zero(n);
    for (Index i = 1; i < n; ++i) {
        double acc = 0.0;
        for (Index j = 0; j < i; ++j) {
            const double tau = t(j + 1) - t(j);
            acc += 0.5 * tau *
                   (kat(t(i) - t(j)) * h.values(j) + kat(t(i) - t(j + 1)) * h.values(j + 1));
        }
        out.values(i) = acc;
    }
    return out;
}

void caputo_l1_weights(const Vector& t, double theta, Index n, Vector& w) {
    if (!(theta > 0.0) || !(theta < 1.0))
        throw std::invalid_argument("caputo_l1_weights: theta must lie in (0, 1)");
    if (n < 1 || n >= t.size())
        throw std::invalid_argument("caputo_l1_weights: node index out of range");
    const double rg = recip_gamma(2.0 - theta);
    w.setZero(n + 1);
    double a_prev = 0.0;
    for (Index j = 0; j < n; ++j) {
        const double A = t(n) - t(j);
        const double B = t(n) - t(j + 1);
        const double a = pow_diff(A, B, 1.0 - theta) / (t(j + 1) - t(j)) * rg;
        w(j) = a_prev - a;
        a_prev = a;
    }
    w(n) = a_prev;
}

void lagged_memory_weights(const SingularKernel& k, const Vector& t, Index n, Vector& w) {
    if (k.nu_star < 0.0 || k.nu_star >= 1.0)
        throw std::domain_error("lagged_memory_weights: kernel exponent must lie in [0, 1)");
    if (n < 1 || n >= t.size())
        throw std::invalid_argument("lagged_memory_weights: node index out of range");
    w.setZero(n);
    if (k.c == 0.0) return;
    const double theta = 1.0 - k.nu_star; // kernel = c Gamma(theta) omega_theta
    const double scale = k.c;
    for (Index j = 0; j + 1 < n; ++j) {
        const double A = t(n) - t(j);
        const double B = t(n) - t(j + 1);
        const double tau = t(j + 1) - t(j);
        const double m0 = scale * pow_diff(A, B, theta) / theta;
        const double m1 = scale * (A * pow_diff(A, B, theta) / theta -
                                   pow_diff(A, B, theta + 1.0) / (theta + 1.0));
        w(j) += m0 - m1 / tau;
        w(j + 1) += m1 / tau;
    }
    w(n - 1) += k.mass(0.0, t(n) - t(n - 1));
}

double caputo_product(const History& rho_h, const History& u_h, double theta, Index n) {
    detail::require_same_mesh(rho_h, u_h);
    History prod;
    prod.mesh = u_h.mesh;
    prod.values = rho_h.values.cwiseProduct(u_h.values);
    return caputo_l1(prod, theta, n);
}

double jtheta(const History& w1_h, const History& w2_h, double theta, Index n) {
    detail::require_same_mesh(w1_h, w2_h);
    if (!(theta > 0.0) || !(theta < 1.0))
        throw std::invalid_argument("jtheta: theta must lie in (0, 1)");
    if (n < 1 || n >= w1_h.values.size())
        throw std::invalid_argument("jtheta: node index out of the populated range");

    const Vector& t = w1_h.mesh.nodes;
    const Vector& w1 = w1_h.values;
    const Vector& w2 = w2_h.values;
    const double w1n = w1(n);
    const double w20 = w2(0);

    double acc = 0.0;
    for (Index j = 0; j + 1 < n; ++j) {
        const double A = t(n) - t(j);
        const double B = t(n) - t(j + 1);
        const double tau = t(j + 1) - t(j);
        // moments of sigma^p (A - sigma)^{-1-theta} over sigma in [0, tau]
        const double m0 = pow_diff(B, A, -theta) / theta;
        const double j1 = pow_diff(A, B, 1.0 - theta) / (1.0 - theta);
        const double j2 = pow_diff(A, B, 2.0 - theta) / (2.0 - theta);
        const double m1 = A * m0 - j1;
        const double m2 = A * A * m0 - 2.0 * A * j1 + j2;
        const double a1 = w1n - w1(j);
        const double b1 = -(w1(j + 1) - w1(j)) / tau;
        const double a2 = w2(j) - w20;
        const double b2 = (w2(j + 1) - w2(j)) / tau;
        acc += a1 * a2 * m0 + (a1 * b2 + a2 * b1) * m1 + b1 * b2 * m2;
    }
    // last subinterval: [w1(t_n) - w1(s)] / (t_n - s) is the constant slope of
    // the reconstruction, so the kernel exponent drops to -theta
    {
        const Index j = n - 1;
        const double tau = t(n) - t(j);
        const double slope1 = (w1(n) - w1(j)) / tau;
        const double p0 = std::pow(tau, 1.0 - theta) / (1.0 - theta);
        const double p1 = std::pow(tau, 2.0 - theta) * (1.0 / (1.0 - theta) - 1.0 / (2.0 - theta));
        const double a2 = w2(j) - w20;
        const double b2 = (w2(n) - w2(j)) / tau;
        acc += slope1 * (a2 * p0 + b2 * p1);
    }
    return acc;
}

} // namespace subdiff
