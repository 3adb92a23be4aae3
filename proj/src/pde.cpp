#include "subdiff/pde.hpp"

#include "subdiff/analysis.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <vector>

namespace subdiff {

bool Grid::on_boundary(Index i, Index j) const {
    if (i == 0 || i == npts[0] - 1) return true;
    if (dim == 2 && (j == 0 || j == npts[1] - 1)) return true;
    return false;
}

void Grid::validate() const {
    if (dim != 1 && dim != 2) throw std::invalid_argument("Grid: dim must be 1 or 2");
    for (int a = 0; a < dim; ++a) {
        if (!(hi[a] > lo[a])) throw std::invalid_argument("Grid: empty box");
        if (npts[a] < 3) throw std::invalid_argument("Grid: need at least 3 nodes per axis");
    }
    if (dim == 1 && npts[1] != 1) throw std::invalid_argument("Grid: npts[1] must be 1 in 1D");
}

// ---------------------------------------------------------------------------
// Nonlinearity
// ---------------------------------------------------------------------------

namespace {

// minimum of a smooth scalar function over [-R, R]: coarse scan + golden polish
double scan_min(const std::function<double(double)>& f, double R) {
    const int N = 20001;
    double best = f(-R), arg = -R;
    for (int i = 1; i < N; ++i) {
        const double u = -R + 2.0 * R * i / (N - 1);
        const double v = f(u);
        if (v < best) {
            best = v;
            arg = u;
        }
    }
    double lo = arg - 2.0 * R / (N - 1), hi = arg + 2.0 * R / (N - 1);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    for (int it = 0; it < 80; ++it) {
        if (f(x1) < f(x2)) {
            hi = x2;
            x2 = x1;
            x1 = hi - gr * (hi - lo);
        } else {
            lo = x1;
            x1 = x2;
            x2 = lo + gr * (hi - lo);
        }
    }
    return std::min(best, f(0.5 * (lo + hi)));
}

double horner(const std::vector<double>& c, double u) {
    double v = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) v = v * u + c[k];
    return v;
}

} // namespace

Nonlinearity Nonlinearity::zero() {
    Nonlinearity f;
    f.form = Form::Zero;
    f.gamma_exp = 1.0;
    return f;
}

Nonlinearity Nonlinearity::odd_polynomial(std::vector<double> coeffs) {
    while (!coeffs.empty() && coeffs.back() == 0.0) coeffs.pop_back();
    if (coeffs.size() < 2 || coeffs.size() % 2 != 0)
        throw std::invalid_argument("odd_polynomial: need odd degree");
    if (!(coeffs.back() > 0.0))
        throw std::invalid_argument("odd_polynomial: leading coefficient must be positive");

    Nonlinearity f;
    f.form = Form::OddPolynomial;
    f.coeffs = std::move(coeffs);
    const int n = static_cast<int>(f.coeffs.size()) - 1;
    const double cn = f.coeffs.back();
    f.gamma_exp = n;
    f.L1 = 0.0;
    for (double c : f.coeffs) f.L1 += std::abs(c);
    f.L3 = 0.5 * cn;
    double csum = 0.0;
    for (int k = 0; k < n; ++k) csum += std::abs(f.coeffs[k]);
    const double R = std::max(1.0, 2.0 * csum / cn + 1.0);
    f.L2 = std::max(0.0, -scan_min(
                             [&](double u) {
                                 double s = 0.5 * cn * std::pow(u, n + 1);
                                 for (int k = 0; k < n; ++k)
                                     s += f.coeffs[k] * std::pow(u, k + 1);
                                 return s;
                             },
                             R));
    f.L4 = std::max(0.0, -scan_min(
                             [&](double u) {
                                 double s = 0.0;
                                 for (int k = 1; k <= n; ++k)
                                     s += k * f.coeffs[k] * std::pow(u, k - 1);
                                 return s;
                             },
                             R));
    return f;
}

Nonlinearity Nonlinearity::saturating(double a, double b) {
    if (!(b < 1.0) || !(a < b) || !(a > std::max(0.0, b - 0.5)))
        throw std::invalid_argument("saturating: need max{0, b-1/2} < a < b < 1");
    Nonlinearity f;
    f.form = Form::Saturating;
    f.a = a;
    f.b = b;
    f.gamma_exp = 1.0 - 2.0 * b + 2.0 * a;
    f.L1 = f.L2 = f.L3 = 1.0;
    f.L4 = 0.0;
    return f;
}

double Nonlinearity::operator()(double u) const {
    switch (form) {
        case Form::Zero: return 0.0;
        case Form::OddPolynomial: return horner(coeffs, u);
        case Form::Saturating: return u * std::pow(1.0 + u * u, a - b);
    }
    return 0.0;
}

double Nonlinearity::derivative(double u) const {
    switch (form) {
        case Form::Zero: return 0.0;
        case Form::OddPolynomial: {
            double v = 0.0;
            for (std::size_t k = coeffs.size(); k-- > 1;) v = v * u + k * coeffs[k];
            return v;
        }
        case Form::Saturating:
            return std::pow(1.0 + u * u, a - b - 1.0) * (1.0 + (1.0 + 2.0 * a - 2.0 * b) * u * u);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// ProblemSpec
// ---------------------------------------------------------------------------

void ProblemSpec::validate() const {
    orders.validate();
    grid.validate();
    if (!rho) throw std::invalid_argument("ProblemSpec: rho missing");
    if (rho_i.size() != orders.nus.size())
        throw std::invalid_argument("ProblemSpec: one rho_i per lower order required");
    if (!a0 || !u0) throw std::invalid_argument("ProblemSpec: a0 and u0 are required");
    if (grid.dim == 1 && !a1) throw std::invalid_argument("ProblemSpec: a1 required in 1D");
    if (kernel.c != 0.0) {
        if (kernel.nu_star < 0.0 || kernel.nu_star > orders.nu)
            throw std::invalid_argument("ProblemSpec: kernel exponent must lie in [0, nu]");
        if (!b0 && !b[0]) throw std::invalid_argument("ProblemSpec: memory needs L2 coefficients");
    }
    if (grid.dim == 2 && a1) {
        for (double x : {grid.lo[0], 0.5 * (grid.lo[0] + grid.hi[0]), grid.hi[0]})
            for (double t : {0.0, 1.0, 10.0})
                if (std::abs(a1(x, grid.lo[1], t) - 1.0) > 1e-12)
                    throw std::invalid_argument("ProblemSpec: a1 must be identically 1 in 2D");
    }
    if (bc == BcKind::Dirichlet) {
        double scale = 0.0, worst = 0.0;
        for (Index j = 0; j < (grid.dim == 2 ? grid.npts[1] : 1); ++j)
            for (Index i = 0; i < grid.npts[0]; ++i) {
                const double v = u0(grid.coord(0, i), grid.dim == 2 ? grid.coord(1, j) : 0.0);
                scale = std::max(scale, std::abs(v));
                if (grid.on_boundary(i, j)) worst = std::max(worst, std::abs(v));
            }
        if (worst > 1e-10 * std::max(1.0, scale))
            throw std::invalid_argument("ProblemSpec: u0 must vanish on the Dirichlet boundary");
    }
}

// ---------------------------------------------------------------------------
// Discrete operators
// ---------------------------------------------------------------------------

namespace {

struct ActiveMap {
    std::vector<Index> to_grid;   // active -> flat grid index
    std::vector<Index> from_grid; // flat grid index -> active (-1 if boundary-eliminated)
    Index count = 0;

    ActiveMap() = default;
    ActiveMap(const Grid& g, BcKind bc) {
        const Index total = g.total();
        from_grid.assign(total, -1);
        for (Index j = 0; j < (g.dim == 2 ? g.npts[1] : 1); ++j)
            for (Index i = 0; i < g.npts[0]; ++i) {
                if (bc == BcKind::Dirichlet && g.on_boundary(i, j)) continue;
                from_grid[g.flat(i, j)] = count;
                to_grid.push_back(g.flat(i, j));
                ++count;
            }
    }

    Vector restrict_field(const Vector& full) const {
        Vector v(count);
        for (Index k = 0; k < count; ++k) v(k) = full(to_grid[k]);
        return v;
    }
    Vector prolong(const Vector& act, Index total) const {
        Vector v = Vector::Zero(total);
        for (Index k = 0; k < count; ++k) v(to_grid[k]) = act(k);
        return v;
    }
};

} // namespace

std::pair<SpMat, SpMat> assemble_operators(const ProblemSpec& spec, const Grid& grid, double t) {
    grid.validate();
    const ActiveMap map(grid, spec.bc);
    const Index nact = map.count;
    const Index nx = grid.npts[0];
    const Index ny = grid.dim == 2 ? grid.npts[1] : 1;

    std::vector<Eigen::Triplet<double>> t1, t2;
    t1.reserve(5 * nact);
    t2.reserve(5 * nact);

    auto a0_at = [&](double x, double y) {
        const double v = spec.a0(x, y, t);
        // nonpositive keeps the discrete operator dissipative; the strict
        // delta_0 > 0 quantification is the validator's job
        if (!(v <= 0.0))
            throw std::invalid_argument("assemble_operators: a0 must be nonpositive (h2)");
        return v;
    };
    auto a1_at = [&](double x, double y) {
        const double v = spec.a1 ? spec.a1(x, y, t) : 1.0;
        if (!(v > 0.0))
            throw std::invalid_argument("assemble_operators: a1 must be strictly positive (h2)");
        return v;
    };
    auto b_at = [&](int axis, double x, double y) {
        return spec.b[axis] ? spec.b[axis](x, y, t) : 0.0;
    };
    auto b0_at = [&](double x, double y) { return spec.b0 ? spec.b0(x, y, t) : 0.0; };

    for (Index j = 0; j < ny; ++j) {
        for (Index i = 0; i < nx; ++i) {
            const Index row = map.from_grid[grid.flat(i, j)];
            if (row < 0) continue;
            const double x = grid.coord(0, i);
            const double y = grid.dim == 2 ? grid.coord(1, j) : 0.0;

            double diag1 = a0_at(x, y);
            // second-order part, axis by axis
            for (int axis = 0; axis < grid.dim; ++axis) {
                const double h = grid.h(axis);
                const Index idx = axis == 0 ? i : j;
                const Index nax = axis == 0 ? nx : ny;
                auto neighbor = [&](int dir) {
                    return axis == 0 ? grid.flat(i + dir, j) : grid.flat(i, j + dir);
                };
                auto aface = [&](double sign) {
                    if (grid.dim == 2) return 1.0; // pure Laplacian in 2D
                    return a1_at(x + sign * 0.5 * h, y);
                };
                if (idx > 0 && idx < nax - 1) {
                    const double am = aface(-1.0), ap = aface(+1.0);
                    diag1 -= (am + ap) / (h * h);
                    const Index gm = neighbor(-1), gp = neighbor(+1);
                    if (map.from_grid[gm] >= 0)
                        t1.emplace_back(row, map.from_grid[gm], am / (h * h));
                    if (map.from_grid[gp] >= 0)
                        t1.emplace_back(row, map.from_grid[gp], ap / (h * h));
                } else {
                    // Neumann boundary (Dirichlet rows were eliminated):
                    // mirror ghost, flux 2 a(face) (u_in - u_b)/h^2
                    const int dir = (idx == 0) ? +1 : -1;
                    const double af = aface(dir);
                    diag1 -= 2.0 * af / (h * h);
                    const Index gin = neighbor(dir);
                    t1.emplace_back(row, map.from_grid[gin], 2.0 * af / (h * h));
                }
            }
            t1.emplace_back(row, row, diag1);

            // first-order operator L2
            double diag2 = b0_at(x, y);
            for (int axis = 0; axis < grid.dim; ++axis) {
                const double h = grid.h(axis);
                const Index idx = axis == 0 ? i : j;
                const Index nax = axis == 0 ? nx : ny;
                const double bc_ = b_at(axis, x, y);
                if (bc_ == 0.0) continue;
                auto neighbor = [&](int dir) {
                    return axis == 0 ? grid.flat(i + dir, j) : grid.flat(i, j + dir);
                };
                if (idx > 0 && idx < nax - 1) {
                    const Index gm = neighbor(-1), gp = neighbor(+1);
                    if (map.from_grid[gm] >= 0)
                        t2.emplace_back(row, map.from_grid[gm], -bc_ / (2.0 * h));
                    if (map.from_grid[gp] >= 0)
                        t2.emplace_back(row, map.from_grid[gp], bc_ / (2.0 * h));
                }
                // at a Neumann boundary the normal derivative vanishes
            }
            t2.emplace_back(row, row, diag2);
        }
    }

    SpMat L1h(nact, nact), L2h(nact, nact);
    L1h.setFromTriplets(t1.begin(), t1.end());
    L2h.setFromTriplets(t2.begin(), t2.end());
    return {std::move(L1h), std::move(L2h)};
}

// ---------------------------------------------------------------------------
// Time stepping
// ---------------------------------------------------------------------------

History Trajectory::energy_history() const {
    History h;
    h.mesh = mesh;
    h.values = energy;
    return h;
}

namespace {

struct Stepper {
    const ProblemSpec& spec;
    const TimeMesh& mesh;
    ActiveMap map;
    std::vector<double> thetas;              // nu first, then lower orders
    std::vector<std::vector<double>> coeff;  // c_q(t_j) per order per node
    Eigen::SparseLU<SpMat> lu;
    bool analyzed = false;
    Vector w, wm;

    Stepper(const ProblemSpec& s, const TimeMesh& m) : spec(s), mesh(m), map(s.grid, s.bc) {
        thetas.push_back(spec.orders.nu);
        for (double v : spec.orders.nus) thetas.push_back(v);
        coeff.resize(thetas.size());
        for (std::size_t q = 0; q < thetas.size(); ++q) {
            coeff[q].resize(mesh.size());
            for (Index j = 0; j < mesh.size(); ++j)
                coeff[q][j] = q == 0 ? spec.rho(mesh.nodes(j)) : spec.rho_i[q - 1](mesh.nodes(j));
            for (Index j = 0; j < mesh.size(); ++j)
                if (!(coeff[q][j] >= 0.0) || (q == 0 && !(coeff[q][j] > 0.0)))
                    throw std::invalid_argument("Stepper: rho must be positive, rho_i nonnegative");
        }
    }

    Vector advance(Trajectory& traj, Index n, const NewtonOptions& opts) {
        const Vector& t = mesh.nodes;
        auto [L1h, L2h] = assemble_operators(spec, spec.grid, t(n));
        const Index nact = map.count;

        double lead = 0.0;
        Vector rhs = Vector::Zero(nact);
        for (std::size_t q = 0; q < thetas.size(); ++q) {
            caputo_l1_weights(t, thetas[q], n, w);
            const bool type2 = spec.fdo == FdoType::TypeII;
            lead += coeff[q][n] * w(n);
            for (Index j = 0; j < n; ++j) {
                const double cw = (type2 ? coeff[q][j] : coeff[q][n]) * w(j);
                if (cw != 0.0) rhs.noalias() -= cw * map.restrict_field(traj.fields[j]);
            }
        }

        Vector memvec = Vector::Zero(nact);
        if (spec.kernel.c != 0.0) {
            lagged_memory_weights(spec.kernel, t, n, wm);
            for (Index j = 0; j < n; ++j)
                if (wm(j) != 0.0) memvec.noalias() += wm(j) * traj.l2_next[j];
            rhs += memvec;
        }

        // Newton on G(u) = lead u + f(u) - L1h u - rhs
        Vector u = map.restrict_field(traj.fields[n - 1]);
        auto residual = [&](const Vector& v) {
            Vector g = lead * v - L1h * v - rhs;
            for (Index k = 0; k < nact; ++k) g(k) += spec.f(v(k));
            return g;
        };
        Vector g = residual(u);
        const double scale = std::max(1.0, lead * u.cwiseAbs().maxCoeff());
        int iters = 0;
        while (g.cwiseAbs().maxCoeff() > opts.tol * scale) {
            if (++iters > opts.max_iter)
                throw NonConvergenceError("pde step: Newton did not converge; residual " +
                                              std::to_string(g.cwiseAbs().maxCoeff()),
                                          g.cwiseAbs().maxCoeff());
            SpMat J = -L1h;
            Vector shift(nact);
            for (Index k = 0; k < nact; ++k) shift(k) = lead + spec.f.derivative(u(k));
            J += SpMat(shift.asDiagonal());
            if (!analyzed) {
                lu.analyzePattern(J);
                analyzed = true;
            }
            lu.factorize(J);
            if (lu.info() != Eigen::Success)
                throw NonConvergenceError("pde step: linear solve breakdown", 0.0);
            const Vector delta = lu.solve(-g);
            double lambda = 1.0;
            const double g0 = g.cwiseAbs().maxCoeff();
            for (int halve = 0; halve < 30; ++halve) {
                Vector trial = u + lambda * delta;
                Vector gt = residual(trial);
                if (gt.cwiseAbs().maxCoeff() < g0 || halve == 29) {
                    u = std::move(trial);
                    g = std::move(gt);
                    break;
                }
                lambda *= 0.5;
            }
        }
        if (!u.allFinite())
            throw NonConvergenceError("pde step: non-finite field", 0.0);

        traj.fields.push_back(map.prolong(u, spec.grid.total()));
        traj.l2_next.push_back(L2h * u);
        traj.newton_iters.push_back(iters);

        const double hprod = spec.grid.h(0) * (spec.grid.dim == 2 ? spec.grid.h(1) : 1.0);
        traj.energy(n) = sobolev_energy(traj.fields.back(), spec.grid);
        traj.sup_norm(n) = traj.fields.back().cwiseAbs().maxCoeff();
        traj.mem_norm(n) = std::sqrt(hprod * memvec.squaredNorm());
        return traj.fields.back();
    }
};

Trajectory make_trajectory(const ProblemSpec& spec, const TimeMesh& mesh) {
    Trajectory traj;
    traj.mesh = mesh;
    traj.grid = spec.grid;
    const Index total = spec.grid.total();
    Vector u0(total);
    for (Index j = 0; j < (spec.grid.dim == 2 ? spec.grid.npts[1] : 1); ++j)
        for (Index i = 0; i < spec.grid.npts[0]; ++i) {
            const bool pin = spec.bc == BcKind::Dirichlet && spec.grid.on_boundary(i, j);
            u0(spec.grid.flat(i, j)) =
                pin ? 0.0
                    : spec.u0(spec.grid.coord(0, i), spec.grid.dim == 2 ? spec.grid.coord(1, j) : 0.0);
        }
    traj.fields.push_back(u0);
    traj.energy = Vector::Zero(mesh.size());
    traj.sup_norm = Vector::Zero(mesh.size());
    traj.mem_norm = Vector::Zero(mesh.size());
    traj.energy(0) = sobolev_energy(u0, spec.grid);
    traj.sup_norm(0) = u0.cwiseAbs().maxCoeff();
    return traj;
}

} // namespace

Vector step(Trajectory& state, const ProblemSpec& spec, const TimeMesh& mesh, Index n,
            const NewtonOptions& opts) {
    spec.validate();
    mesh.validate();
    if (state.populated() != n)
        throw std::invalid_argument("step: nodes 0..n-1 must be populated");
    Stepper st(spec, mesh);
    // rebuild the L2 history for the memory term if the caller did not keep it
    if (spec.kernel.c != 0.0 && state.l2_next.size() + 0u < static_cast<std::size_t>(n)) {
        state.l2_next.clear();
        ActiveMap map(spec.grid, spec.bc);
        for (Index j = 0; j < n; ++j) {
            auto [L1h, L2h] = assemble_operators(spec, spec.grid, mesh.nodes(j));
            state.l2_next.push_back(L2h * map.restrict_field(state.fields[j]));
        }
    }
    return st.advance(state, n, opts);
}

Trajectory run(const ProblemSpec& spec, const TimeMesh& mesh,
               const std::vector<double>& probe_times, const NewtonOptions& opts) {
    spec.validate();
    mesh.validate();
    Trajectory traj = make_trajectory(spec, mesh);
    {
        ActiveMap map(spec.grid, spec.bc);
        auto [L1h, L2h] = assemble_operators(spec, spec.grid, 0.0);
        traj.l2_next.push_back(L2h * map.restrict_field(traj.fields[0]));
    }
    Stepper st(spec, mesh);
    for (Index n = 1; n < mesh.size(); ++n) {
        st.advance(traj, n, opts);
        if (!std::isfinite(traj.energy(n)))
            throw NonConvergenceError("run: non-finite energy", 0.0);
    }
    for (double pt : probe_times) {
        Index best = 0;
        for (Index j = 1; j < mesh.size(); ++j)
            if (std::abs(mesh.nodes(j) - pt) < std::abs(mesh.nodes(best) - pt)) best = j;
        traj.snapshots.emplace_back(mesh.nodes(best), traj.fields[best]);
    }
    return traj;
}

} // namespace subdiff
