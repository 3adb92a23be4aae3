#pragma once

#include <Eigen/Core>

#include <functional>
#include <stdexcept>

namespace subdiff {

using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Time meshes on [0, T].  Graded meshes cluster nodes at t = 0 as
/// T (j/M)^r to resolve the algebraic initial layer of fractional problems.
struct TimeMesh {
    enum class Kind { Uniform, Graded };

    Vector nodes;
    Kind kind = Kind::Uniform;
    double grading = 1.0;

    static TimeMesh uniform(double T, Index intervals);
    static TimeMesh graded(double T, Index intervals, double r);

    Index size() const { return nodes.size(); }
    double horizon() const { return nodes(nodes.size() - 1); }
    double dt(Index j) const { return nodes(j + 1) - nodes(j); }

    void validate() const;
};

/// Sampled scalar time history on a mesh.  Prefixes (fewer values than nodes)
/// are permitted while a solver is still stepping.
struct History {
    TimeMesh mesh;
    Vector values;

    History() = default;
    History(TimeMesh m, Vector v) : mesh(std::move(m)), values(std::move(v)) {}

    static History sample(const TimeMesh& mesh, const std::function<double(double)>& f);

    Index size() const { return values.size(); }
    void require_complete() const;
};

/// Riemann-Liouville integral (omega_theta * v) at every node, theta in (0,1].
/// Piecewise-linear reconstruction of v, exact integration of the kernel.
History rl_integral(const History& h, double theta);

/// L1 value of the Caputo derivative of order theta in (0,1) at node n >= 1.
double caputo_l1(const History& h, double theta, Index n);

/// Caputo derivative at every node (node 0 is set to 0).
History caputo_l1_all(const History& h, double theta);

/// Algebraically singular closed-form kernel k(t) = c t^{-nu_star}.
struct SingularKernel {
    double c = 0.0;
    double nu_star = 0.0; ///< in [0, 1) for convolution; [0, nu] in the model

    double operator()(double t) const;
    /// Exact kernel mass over [a, b], 0 <= a < b.
    double mass(double a, double b) const;
};

/// (k * v) at all nodes with the endpoint singularity integrated exactly
/// against piecewise-linear v.  Requires nu_star < 1.
History convolve_singular(const SingularKernel& kernel, const History& h);

/// (k * v) for a kernel sampled on the same mesh (finite values throughout).
History convolve_singular(const History& kernel, const History& h);

/// L1 Caputo derivative of the pointwise product (rho u) at node n.
double caputo_product(const History& rho_h, const History& u_h, double theta, Index n);

/// Singular double-difference integral
///   J_theta(t_n; w1, w2) = int_0^{t_n} [w1(t_n)-w1(s)] (t_n-s)^{-1-theta} [w2(s)-w2(0)] ds
/// with the difference quotient of w1 folded into the kernel exponent on the
/// final subinterval.
double jtheta(const History& w1_h, const History& w2_h, double theta, Index n);

/// L1 weights of the Caputo derivative at node n:
///   D^theta v(t_n) ~ sum_{j=0}^{n} w(j) v_j,
/// with w(n) the leading (implicit) weight; w has size n+1.
void caputo_l1_weights(const Vector& t, double theta, Index n, Vector& w);

/// Lagged-memory weights at node n: the convolution over [0, t_{n-1}] of the
/// kernel against piecewise-linear v (exact kernel moments) plus the kernel
/// mass of the current interval applied to v_{n-1}:
///   (k * v)(t_n) ~ sum_{j=0}^{n-1} w(j) v_j.
void lagged_memory_weights(const SingularKernel& k, const Vector& t, Index n, Vector& w);

namespace detail {
/// a^c - b^c for a >= b >= 0 without cancellation.
double pow_diff(double a, double b, double c);
void require_same_mesh(const History& a, const History& b);
} // namespace detail

} // namespace subdiff
