#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "subdiff/analysis.hpp"
#include "subdiff/pde.hpp"

using namespace subdiff;

namespace {

ProblemSpec laplace_spec(Index nx, double nu = 0.4) {
    ProblemSpec s;
    s.orders.nu = nu;
    s.rho = [](double) { return 1.0; };
    s.a1 = [](double, double, double) { return 1.0; };
    s.a0 = [](double, double, double) { return 0.0; };
    s.f = Nonlinearity::zero();
    s.grid.dim = 1;
    s.grid.lo = {0.0, 0.0};
    s.grid.hi = {1.0, 1.0};
    s.grid.npts = {nx, 1};
    s.bc = BcKind::Dirichlet;
    s.u0 = [](double x, double) { return std::sin(M_PI * x); };
    return s;
}

} // namespace

TEST_CASE("nonlinearity registration and growth constants") {
    auto cubic = Nonlinearity::odd_polynomial({0.0, 1.0, 0.0, 1.0}); // u + u^3
    CHECK(cubic.gamma_exp == 3.0);
    CHECK(cubic.L4 == 0.0);
    CHECK(cubic(2.0) == doctest::Approx(10.0));
    CHECK(cubic.derivative(2.0) == doctest::Approx(13.0));
    CHECK(cubic.L3 == doctest::Approx(0.5));
    CHECK_THROWS_AS(Nonlinearity::odd_polynomial({0.0, 1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(Nonlinearity::odd_polynomial({0.0, 0.0, 0.0, -1.0}), std::invalid_argument);

    auto sat = Nonlinearity::saturating(0.4, 0.6);
    CHECK(sat.gamma_exp == doctest::Approx(0.6));
    CHECK(sat.L4 == 0.0);
    CHECK(sat(1.0) == doctest::Approx(std::pow(2.0, -0.2)));
    CHECK_THROWS_AS(Nonlinearity::saturating(0.7, 0.6), std::invalid_argument);

    // f' >= -L4 for a polynomial with a negative linear part
    auto bistable = Nonlinearity::odd_polynomial({0.0, -1.0, 0.0, 1.0}); // u^3 - u
    CHECK(bistable.L4 >= 1.0 - 1e-9);
}

TEST_CASE("discrete elliptic operator reproduces the Laplacian eigenfunction") {
    auto s = laplace_spec(101);
    auto [L1h, L2h] = assemble_operators(s, s.grid, 0.0);
    const Index n = s.grid.npts[0];
    Vector u(n - 2);
    for (Index i = 1; i + 1 < n; ++i) u(i - 1) = std::sin(M_PI * s.grid.coord(0, i));
    Vector lap = L1h * u;
    double worst = 0.0;
    for (Index i = 0; i < n - 2; ++i)
        worst = std::max(worst, std::abs(lap(i) + M_PI * M_PI * u(i)));
    CHECK(worst < 1e-2); // pi^4 h^2 / 12 ~ 8e-4 at h = 0.01
    CHECK(worst > 1e-5);

    // b == 0, b0 == 1 makes L2h the identity on interior nodes
    s.b0 = [](double, double, double) { return 1.0; };
    auto [L1b, L2b] = assemble_operators(s, s.grid, 0.0);
    Vector e = L2b * u - u;
    CHECK(e.cwiseAbs().maxCoeff() < 1e-14);

    // sign violation of h2 is a configuration error
    s.a0 = [](double, double, double) { return 1.0; };
    CHECK_THROWS_AS(assemble_operators(s, s.grid, 0.0), std::invalid_argument);
}

TEST_CASE("zero data and zero-preserving nonlinearity stay zero") {
    auto s = laplace_spec(41);
    s.f = Nonlinearity::odd_polynomial({0.0, 0.0, 0.0, 1.0}); // u^3
    s.u0 = [](double, double) { return 0.0; };
    s.a0 = [](double, double, double) { return -1.0; };
    auto traj = run(s, TimeMesh::uniform(1.0, 50));
    for (const auto& f : traj.fields) CHECK(f.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("separation of variables against the Mittag-Leffler factor") {
    // u(x, t) = sin(pi x) E_{nu,1}(-pi^2 t^nu); frozen 200-digit factors
    const double nu = 0.4;
    auto s = laplace_spec(201, nu);
    auto mesh = TimeMesh::graded(1.0, 1000, (2.0 - nu) / nu);
    auto traj = run(s, mesh);

    // midpoint factors come from interpolation-free sup-norm checks at the
    // closest mesh nodes; the final node sits at t = 1 exactly
    const struct { double t, e; } table[] = {
        {0.25, 0.11099107327010877408},
        {0.5, 0.085556856724958816584},
        {1.0, 0.065650944450887873145},
    };
    for (const auto& row : table) {
        Index jn = 0;
        for (Index j = 1; j < mesh.size(); ++j)
            if (std::abs(mesh.nodes(j) - row.t) < std::abs(mesh.nodes(jn) - row.t)) jn = j;
        const double mid = traj.fields[jn](s.grid.npts[0] / 2);
        // compare against the factor at the node's own time (nu = 0.4 decay is
        // slow, so the nearest-node shift matters only at first order)
        const double shift = std::abs(mesh.nodes(jn) - row.t);
        CHECK(std::abs(mid - row.e) < 2e-3 + 0.5 * shift);
    }
    const Index last = mesh.size() - 1;
    double worst = 0.0;
    for (Index i = 0; i < s.grid.npts[0]; ++i) {
        const double want = std::sin(M_PI * s.grid.coord(0, i)) * 0.065650944450887873145;
        worst = std::max(worst, std::abs(traj.fields[last](i) - want));
    }
    CHECK(worst < 2e-3);
    CHECK(worst > 1e-8); // the discretization error is genuinely present
}

TEST_CASE("type II coincides with type I for constant coefficients") {
    auto s = laplace_spec(61, 0.6);
    s.orders.nus = {0.2};
    s.rho_i = {[](double) { return 0.7; }};
    s.a0 = [](double, double, double) { return -1.0; };
    s.f = Nonlinearity::odd_polynomial({0.0, 1.0, 0.0, 2.0});
    auto mesh = TimeMesh::graded(2.0, 200, 2.0);
    s.fdo = FdoType::TypeI;
    auto t1 = run(s, mesh);
    s.fdo = FdoType::TypeII;
    auto t2 = run(s, mesh);
    double worst = 0.0;
    for (Index j = 0; j < mesh.size(); ++j)
        worst = std::max(worst, (t1.fields[j] - t2.fields[j]).cwiseAbs().maxCoeff());
    CHECK(worst < 1e-12);
}

TEST_CASE("Dirichlet trace is exactly zero at every node") {
    auto s = laplace_spec(41, 0.5);
    s.a0 = [](double, double, double) { return -2.0; };
    s.f = Nonlinearity::odd_polynomial({0.0, 0.5, 0.0, 1.0});
    auto traj = run(s, TimeMesh::graded(1.0, 100, 3.0));
    for (const auto& f : traj.fields) {
        CHECK(f(0) == 0.0);
        CHECK(f(s.grid.npts[0] - 1) == 0.0);
    }
}

TEST_CASE("energy is non-increasing for the pure dissipative problem") {
    auto s = laplace_spec(81, 0.7);
    s.a0 = [](double, double, double) { return -1.0; };
    auto traj = run(s, TimeMesh::graded(4.0, 400, 2.0));
    for (Index j = 1; j < traj.mesh.size(); ++j)
        CHECK(traj.energy(j) <= traj.energy(j - 1) * (1.0 + 1e-12));
}

TEST_CASE("Neumann dimensional reduction matches the scalar solvers") {
    // spatially constant data: the spatial operator contributes only a0
    const double nu = 0.55, a0v = -2.0, c0 = 1.5;
    ProblemSpec s;
    s.orders.nu = nu;
    s.rho = [](double) { return 1.0; };
    s.a1 = [](double, double, double) { return 1.0; };
    s.a0 = [&](double, double, double) { return a0v; };
    s.grid.dim = 1;
    s.grid.lo = {0.0, 0.0};
    s.grid.hi = {1.0, 1.0};
    s.grid.npts = {31, 1};
    s.bc = BcKind::Neumann;
    s.u0 = [&](double, double) { return c0; };
    auto mesh = TimeMesh::graded(2.0, 400, (2.0 - nu) / nu);

    SUBCASE("linear f: exact fractional ODE cross-check") {
        s.f = Nonlinearity::odd_polynomial({0.0, 1.0}); // f(u) = u
        auto traj = run(s, mesh);
        FodeSpec fs;
        fs.orders.nu = nu;
        fs.leading = [](double) { return 1.0; };
        fs.damping = 1.0 - a0v; // -a0 + f'(0)
        fs.forcing = [](double) { return 0.0; };
        fs.initial = c0;
        auto y = step_fode_numeric(fs, mesh);
        double worst = 0.0;
        for (Index j = 0; j < mesh.size(); ++j)
            worst = std::max(worst, std::abs(traj.fields[j](7) - y.values(j)));
        CHECK(worst < 1e-10); // identical discretizations of the same scalar problem
        // the field stays spatially constant
        for (const auto& f : traj.fields)
            CHECK((f.array() - f(0)).abs().maxCoeff() < 1e-11);
    }

    SUBCASE("cubic f: independent scalar L1-Newton reference") {
        s.f = Nonlinearity::odd_polynomial({0.0, 1.0, 0.0, 1.0}); // u + u^3
        auto traj = run(s, mesh);
        // hand-rolled scalar implicit L1 stepping of D^nu y - a0 y + f(y) = 0
        const Vector& t = mesh.nodes;
        Vector y(mesh.size()), w;
        y(0) = c0;
        for (Index n = 1; n < mesh.size(); ++n) {
            caputo_l1_weights(t, nu, n, w);
            double hist = 0.0;
            for (Index j = 0; j < n; ++j) hist += w(j) * y(j);
            double u = y(n - 1);
            for (int it = 0; it < 100; ++it) {
                const double g = w(n) * u + hist - a0v * u + u + u * u * u;
                const double dg = w(n) - a0v + 1.0 + 3.0 * u * u;
                const double step = g / dg;
                u -= step;
                if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(u))) break;
            }
            y(n) = u;
        }
        double worst = 0.0;
        for (Index j = 0; j < mesh.size(); ++j)
            worst = std::max(worst, std::abs(traj.fields[j](11) - y(j)));
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("one-step run reproduces step") {
    auto s = laplace_spec(41, 0.5);
    s.a0 = [](double, double, double) { return -1.0; };
    s.f = Nonlinearity::odd_polynomial({0.0, 0.0, 0.0, 1.0});
    auto mesh = TimeMesh::uniform(0.1, 1);
    auto traj = run(s, mesh);

    Trajectory manual;
    manual.mesh = mesh;
    manual.grid = s.grid;
    Vector u0(s.grid.total());
    for (Index i = 0; i < s.grid.npts[0]; ++i)
        u0(i) = s.u0(s.grid.coord(0, i), 0.0);
    manual.fields.push_back(u0);
    manual.energy = Vector::Zero(2);
    manual.sup_norm = Vector::Zero(2);
    manual.mem_norm = Vector::Zero(2);
    Vector u1 = step(manual, s, mesh, 1);
    CHECK((u1 - traj.fields[1]).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("Newton failure reports rather than looping") {
    auto s = laplace_spec(21, 0.5);
    s.a0 = [](double, double, double) { return -1.0; };
    s.f = Nonlinearity::odd_polynomial({0.0, 0.0, 0.0, 1.0});
    NewtonOptions opts;
    opts.max_iter = 0;
    CHECK_THROWS_AS(run(s, TimeMesh::uniform(1.0, 4), {}, opts), NonConvergenceError);
}

TEST_CASE("memory term: lagged convolution feeds the step and the diagnostics") {
    auto s = laplace_spec(51, 0.6);
    s.a0 = [](double, double, double) { return -2.0; };
    s.kernel = SingularKernel{0.1, 0.2};
    s.b[0] = [](double, double, double) { return 0.3; };
    s.b0 = [](double, double, double) { return 0.5; };
    s.f = Nonlinearity::odd_polynomial({0.0, 1.0, 0.0, 1.0});
    auto traj = run(s, TimeMesh::graded(2.0, 300, 2.0));
    CHECK(traj.mem_norm.tail(traj.mem_norm.size() - 1).minCoeff() > 0.0);
    CHECK(traj.energy.allFinite());
    // probes snapshot the nearest node
    auto traj2 = run(s, TimeMesh::graded(2.0, 300, 2.0), {0.5, 2.0});
    REQUIRE(traj2.snapshots.size() == 2);
    CHECK(traj2.snapshots[1].first == 2.0);
}

TEST_CASE("2D Neumann diffusion decays toward the mean-free state") {
    ProblemSpec s;
    s.orders.nu = 0.5;
    s.rho = [](double) { return 1.0; };
    s.a0 = [](double, double, double) { return -1.0; };
    s.f = Nonlinearity::zero();
    s.grid.dim = 2;
    s.grid.lo = {0.0, 0.0};
    s.grid.hi = {1.0, 1.0};
    s.grid.npts = {21, 21};
    s.bc = BcKind::Neumann;
    s.u0 = [](double x, double y) { return std::cos(M_PI * x) * std::cos(M_PI * y); };
    auto traj = run(s, TimeMesh::graded(1.0, 120, 3.0));
    for (Index j = 1; j < traj.mesh.size(); ++j)
        CHECK(traj.energy(j) <= traj.energy(j - 1) * (1.0 + 1e-12));
    // eigenfunction of the Neumann Laplacian: u stays proportional to u0
    const Vector& u = traj.fields.back();
    const double ratio = u(s.grid.flat(0, 0)) / 1.0;
    double worst = 0.0;
    for (Index j = 0; j < s.grid.npts[1]; ++j)
        for (Index i = 0; i < s.grid.npts[0]; ++i) {
            const double want =
                ratio * std::cos(M_PI * s.grid.coord(0, i)) * std::cos(M_PI * s.grid.coord(1, j));
            worst = std::max(worst, std::abs(u(s.grid.flat(i, j)) - want));
        }
    CHECK(worst < 5e-3 * std::abs(ratio) + 1e-12);
}

TEST_CASE("2D requires a1 identically one") {
    ProblemSpec s;
    s.orders.nu = 0.5;
    s.rho = [](double) { return 1.0; };
    s.a0 = [](double, double, double) { return -1.0; };
    s.a1 = [](double x, double, double) { return 1.0 + x; };
    s.f = Nonlinearity::zero();
    s.grid.dim = 2;
    s.grid.npts = {11, 11};
    s.bc = BcKind::Neumann;
    s.u0 = [](double, double) { return 1.0; };
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}
