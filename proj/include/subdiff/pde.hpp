#pragma once

#include "subdiff/fode.hpp"

#include <Eigen/SparseCore>

#include <array>
#include <functional>
#include <utility>

namespace subdiff {

using SpMat = Eigen::SparseMatrix<double>;

/// Tensor-product grid on a box, dim 1 or 2, uniform spacing per axis.
struct Grid {
    int dim = 1;
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 1.0};
    std::array<Index, 2> npts{101, 1}; ///< node count per axis (>= 3 per active axis)

    Index total() const { return dim == 1 ? npts[0] : npts[0] * npts[1]; }
    double h(int axis) const { return (hi[axis] - lo[axis]) / (npts[axis] - 1); }
    double coord(int axis, Index i) const { return lo[axis] + i * h(axis); }
    Index flat(Index i, Index j) const { return i + npts[0] * j; }
    bool on_boundary(Index i, Index j) const;
    void validate() const;
};

/// Space-time coefficient a(x, t); y is ignored in 1D.
using SpaceTimeFn = std::function<double(double x, double y, double t)>;

enum class FdoType { TypeI, TypeII };
enum class BcKind { Dirichlet, Neumann };

/// Registered nonlinearity forms together with the structural constants of
/// their growth bounds:
///   |f(u)| <= L1 (1 + |u|^gamma),  u f(u) >= -L2 + L3 |u|^{gamma+1},
///   f'(u) >= -L4.
class Nonlinearity {
public:
    enum class Form { Zero, OddPolynomial, Saturating };

    /// f(u) = sum_k coeffs[k] u^k; odd degree, positive leading coefficient.
    static Nonlinearity odd_polynomial(std::vector<double> coeffs);
    /// f(u) = u (1 + u^2)^{a-b} with max{0, b-1/2} < a < b < 1 (gamma < 1).
    static Nonlinearity saturating(double a, double b);
    static Nonlinearity zero();

    double operator()(double u) const;
    double derivative(double u) const;

    Form form = Form::Zero;
    std::vector<double> coeffs;
    double a = 0.0, b = 0.0;
    double L1 = 0.0, L2 = 0.0, L3 = 0.0, L4 = 0.0;
    double gamma_exp = 1.0;
};

/// The initial-boundary value problem
///   D_t u - L1 u - K * L2 u + f(u) = 0,  u(.,0) = u0,
/// with D_t the type I or type II multi-term fractional operator,
/// L1 = d/dx(a1 d/dx) + a0 (1D) or Laplacian + a0 (2D),
/// L2 = sum_i b_i d/dx_i + b0.
struct ProblemSpec {
    FractionalOrders orders;
    FdoType fdo = FdoType::TypeI;
    TimeFn rho;
    std::vector<TimeFn> rho_i;
    double rho_plateau_time = 0.0;
    std::vector<double> rho_i_plateau_times;

    SpaceTimeFn a1; ///< must be identically 1 when dim >= 2
    SpaceTimeFn a0;
    std::array<SpaceTimeFn, 2> b{};
    SpaceTimeFn b0;
    SingularKernel kernel{0.0, 0.0};
    Nonlinearity f;
    Grid grid;
    BcKind bc = BcKind::Dirichlet;
    std::function<double(double, double)> u0;

    void validate() const;
};

struct NewtonOptions {
    double tol = 1e-11;
    int max_iter = 50;
};

/// Discrete elliptic operators at time t over the active unknowns
/// (interior for Dirichlet, all nodes for Neumann): conservative flux form
/// for a1, central first differences for L2, ghost-node elimination at
/// Neumann boundaries.  Throws on h2 sign violations at any sampled node.
std::pair<SpMat, SpMat> assemble_operators(const ProblemSpec& spec, const Grid& grid, double t);

struct Trajectory {
    TimeMesh mesh;
    Grid grid;
    std::vector<Vector> fields;  ///< full-grid u at each populated node
    std::vector<Vector> l2_next; ///< L2h u on active nodes (memory integrand)
    Vector energy;               ///< Sobolev energy V(t)
    Vector sup_norm;
    Vector mem_norm; ///< discrete L2 norm of the lagged memory term
    std::vector<int> newton_iters;
    std::vector<std::pair<double, Vector>> snapshots;

    Index populated() const { return static_cast<Index>(fields.size()); }
    History energy_history() const;
};

/// Advance a populated prefix (nodes 0..n-1) to node n; returns the full-grid
/// field and appends diagnostics to the trajectory.
Vector step(Trajectory& state, const ProblemSpec& spec, const TimeMesh& mesh, Index n,
            const NewtonOptions& opts = {});

/// Run the problem over the whole mesh.  Probe times snapshot the nearest
/// mesh node's full field.
Trajectory run(const ProblemSpec& spec, const TimeMesh& mesh,
               const std::vector<double>& probe_times = {},
               const NewtonOptions& opts = {});

} // namespace subdiff
