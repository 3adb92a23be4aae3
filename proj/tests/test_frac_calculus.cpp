#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "subdiff/frac_calculus.hpp"
#include "subdiff/io.hpp"
#include "subdiff/special.hpp"
#include "test_util.hpp"

using namespace subdiff;

namespace {
double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1e-300, std::abs(want));
}
double max_abs_diff(const Vector& a, const Vector& b) {
    return (a - b).cwiseAbs().maxCoeff();
}
} // namespace

TEST_CASE("mesh factories and validation") {
    auto u = TimeMesh::uniform(2.0, 4);
    CHECK(u.nodes(0) == 0.0);
    CHECK(u.nodes(4) == 2.0);
    CHECK(u.dt(1) == doctest::Approx(0.5));
    auto g = TimeMesh::graded(1.0, 10, 2.0);
    CHECK(g.nodes(5) == doctest::Approx(0.25));
    CHECK(g.nodes(10) == 1.0);
    CHECK_THROWS_AS(TimeMesh::graded(1.0, 10, 0.5), std::invalid_argument);
    TimeMesh bad = u;
    bad.nodes(2) = bad.nodes(1);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("rl_integral of a constant with theta = 1 is t") {
    auto mesh = TimeMesh::uniform(3.0, 30);
    auto h = History::sample(mesh, [](double) { return 1.0; });
    auto I = rl_integral(h, 1.0);
    CHECK(I.values(0) == 0.0);
    for (Index j = 1; j < mesh.size(); ++j)
        CHECK(rel_err(I.values(j), mesh.nodes(j)) < 1e-14);
}

TEST_CASE("rl_integral reproduces the power-kernel semigroup on linear data") {
    // v = omega_2 = t is represented exactly, so I^theta v = omega_{2+theta}
    auto mesh = TimeMesh::uniform(1.5, 100);
    auto h = History::sample(mesh, [](double t) { return t; });
    for (double theta : {0.3, 0.5, 0.9}) {
        auto I = rl_integral(h, theta);
        for (Index j = 1; j < mesh.size(); ++j)
            CHECK(rel_err(I.values(j), omega_kernel(2.0 + theta, mesh.nodes(j))) < 5e-14);
    }
}

TEST_CASE("rl_integral converges at second order on smooth data") {
    // v = omega_3 = t^2/2, quadratic, so the piecewise-linear reconstruction
    // carries the only error
    double prev = -1.0;
    for (Index m : {500, 1000, 2000}) {
        auto mesh = TimeMesh::uniform(1.0, m);
        auto h = History::sample(mesh, [](double t) { return 0.5 * t * t; });
        auto I = rl_integral(h, 0.7);
        double err = 0.0;
        for (Index j = 1; j < mesh.size(); ++j)
            err = std::max(err, std::abs(I.values(j) - omega_kernel(3.7, mesh.nodes(j))));
        if (prev > 0.0) {
            const double slope = std::log2(prev / err);
            CHECK(slope > 1.9);
        }
        prev = err;
    }
    CHECK(prev < 4e-8);
}

TEST_CASE("half integrals compose to the full integral") {
    double prev = -1.0;
    for (Index m : {256, 512, 1024}) {
        auto mesh = TimeMesh::uniform(2.0, m);
        auto h = History::sample(mesh, [](double t) { return std::sin(t); });
        auto I1 = rl_integral(rl_integral(h, 0.5), 0.5);
        auto direct = History::sample(mesh, [](double t) { return 1.0 - std::cos(t); });
        const double err = max_abs_diff(I1.values, direct.values);
        if (prev > 0.0) CHECK(std::log2(prev / err) > 1.6);
        prev = err;
    }
    CHECK(prev < 1e-6);
}

TEST_CASE("caputo_l1 of a constant is exactly zero") {
    auto mesh = TimeMesh::graded(2.0, 50, 2.0);
    auto h = History::sample(mesh, [](double) { return 4.25; });
    for (Index n = 1; n < mesh.size(); ++n) CHECK(caputo_l1(h, 0.4, n) == 0.0);
}

TEST_CASE("caputo_l1 is exact on linear data for any mesh") {
    for (auto mesh : {TimeMesh::uniform(2.0, 64), TimeMesh::graded(2.0, 64, 2.5)}) {
        auto h = History::sample(mesh, [](double t) { return 3.0 * t; });
        for (double theta : {0.25, 0.5, 0.75}) {
            for (Index n = 1; n < mesh.size(); ++n) {
                const double want =
                    3.0 * std::pow(mesh.nodes(n), 1.0 - theta) * recip_gamma(2.0 - theta);
                CHECK(rel_err(caputo_l1(h, theta, n), want) < 1e-12);
            }
        }
    }
}

TEST_CASE("caputo_l1 and the Riemann-Liouville form agree") {
    // for v = 1 + t:  RL derivative = omega_{1-theta}(t) + t^{1-theta}/Gamma(2-theta)
    const double theta = 0.35;
    auto mesh = TimeMesh::uniform(1.0, 40);
    auto h = History::sample(mesh, [](double t) { return 1.0 + t; });
    for (Index n = 1; n < mesh.size(); ++n) {
        const double t = mesh.nodes(n);
        const double caputo = caputo_l1(h, theta, n);
        const double rl = caputo + omega_kernel(1.0 - theta, t) * h.values(0);
        const double rl_exact =
            omega_kernel(1.0 - theta, t) + std::pow(t, 1.0 - theta) * recip_gamma(2.0 - theta);
        CHECK(rel_err(rl, rl_exact) < 1e-12);
    }
}

TEST_CASE("caputo_l1 eigenfunction check against the relaxation profile") {
    // v(t) = E_{theta,1}(-t^theta) satisfies D^theta v = -v
    const double theta = 0.5;
    MLParams relax({theta}, theta, {1.0}, true);
    double prev = -1.0;
    for (Index m : {256, 512, 1024}) {
        auto mesh = TimeMesh::uniform(1.0, m);
        auto h = History::sample(mesh, [&](double t) {
            return t == 0.0 ? 1.0 : calE_complement(t, relax);
        });
        double err = 0.0;
        for (Index n = m / 2; n < mesh.size(); ++n)
            err = std::max(err, std::abs(caputo_l1(h, theta, n) + h.values(n)));
        if (prev > 0.0) CHECK(std::log2(prev / err) > 1.3);
        prev = err;
    }
    CHECK(prev < 2e-4);
}

TEST_CASE("measured convergence order on t^{1+theta}") {
    const double theta = 0.5;
    double prev = -1.0;
    for (Index m : {250, 500, 1000}) {
        auto mesh = TimeMesh::uniform(1.0, m);
        auto h = History::sample(mesh, [&](double t) { return std::pow(t, 1.0 + theta); });
        const double want = gamma_fn(2.0 + theta) * 1.0; // at t = 1
        const double err = std::abs(caputo_l1(h, theta, mesh.size() - 1) - want);
        if (prev > 0.0) CHECK(std::log2(prev / err) >= 1.8 - theta);
        prev = err;
    }
}

TEST_CASE("inverse identity: I^theta recovers v from its Caputo derivative") {
    // the t^{1-theta} layer limits the first nodes to first order; the rate
    // is measured past the layer (uniform mesh) and globally (graded mesh)
    const double theta = 0.5;
    double prev_late = -1.0, prev_graded = -1.0;
    for (Index m : {256, 512, 1024}) {
        for (int kind = 0; kind < 2; ++kind) {
            auto mesh = kind == 0 ? TimeMesh::uniform(2.0, m)
                                  : TimeMesh::graded(2.0, m, (2.0 - theta) / theta);
            auto h = History::sample(mesh, [](double t) { return 1.0 + std::sin(t); });
            auto d = caputo_l1_all(h, theta);
            auto back = rl_integral(d, theta);
            back.values.array() += h.values(0);
            double err = 0.0;
            for (Index j = 1; j < mesh.size(); ++j)
                if (kind == 1 || mesh.nodes(j) >= 0.5)
                    err = std::max(err, std::abs(back.values(j) - h.values(j)));
            if (kind == 0) {
                if (prev_late > 0.0) CHECK(std::log2(prev_late / err) >= 1.8 - theta);
                prev_late = err;
            } else {
                if (prev_graded > 0.0) CHECK(std::log2(prev_graded / err) >= 1.8 - theta);
                prev_graded = err;
            }
        }
    }
    CHECK(prev_late < 2e-5);
    CHECK(prev_graded < 2e-4);
}

TEST_CASE("fractional chain inequality at the discrete level") {
    auto mesh = TimeMesh::uniform(6.0, 600);
    auto v = History::sample(mesh, [](double t) { return 1.0 + std::sin(t); });
    for (double theta : {0.3, 0.5, 0.8}) {
        for (int p : {2, 3, 4}) { // odd p admissible because v >= 0
            History vp;
            vp.mesh = mesh;
            vp.values = v.values.array().pow(p);
            for (Index n = 1; n < mesh.size(); ++n) {
                const double lhs = p * std::pow(v.values(n), p - 1) * caputo_l1(v, theta, n) -
                                   caputo_l1(vp, theta, n);
                CHECK(lhs >= -1e-10);
            }
        }
    }
}

TEST_CASE("convolve_singular with a zero kernel") {
    auto mesh = TimeMesh::uniform(1.0, 16);
    auto h = History::sample(mesh, [](double t) { return std::cos(t); });
    auto z = convolve_singular(SingularKernel{0.0, 0.5}, h);
    CHECK(z.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("convolve_singular: omega kernel against a constant") {
    auto mesh = TimeMesh::graded(2.0, 80, 2.0);
    auto h = History::sample(mesh, [](double) { return 1.0; });
    const double theta = 0.6;
    SingularKernel k{recip_gamma(theta), 1.0 - theta}; // omega_theta
    auto conv = convolve_singular(k, h);
    for (Index j = 1; j < mesh.size(); ++j)
        CHECK(rel_err(conv.values(j), omega_kernel(1.0 + theta, mesh.nodes(j))) < 1e-12);
}

TEST_CASE("convolve_singular: Beta-integral value and quadrature oracle") {
    auto mesh = TimeMesh::uniform(1.0, 400);
    auto h = History::sample(mesh, [](double t) { return t; });
    SingularKernel k{1.0, 0.3};
    auto conv = convolve_singular(k, h);
    // (t^{-0.3} * t)(T) = B(0.7, 2) T^{1.7}; exact for piecewise-linear data
    const double beta_07_2 = 1.0 / (0.7 * 1.7);
    for (Index j : {Index(100), Index(250), Index(400)})
        CHECK(rel_err(conv.values(j), beta_07_2 * std::pow(mesh.nodes(j), 1.7)) < 1e-12);
    // independent refined quadrature at the final node
    const double t = 1.0;
    const double oracle = testutil::integrate(
        [&](double y) { // t - s = y^{1/0.7} absorbs the kernel singularity at s = t
            return (t - std::pow(y, 1.0 / 0.7)) / 0.7;
        },
        0.0, std::pow(t, 0.7), 16);
    CHECK(rel_err(conv.values(mesh.size() - 1), oracle) < 1e-10);
    CHECK_THROWS_AS(convolve_singular(SingularKernel{1.0, 1.0}, h), std::domain_error);
}

TEST_CASE("convolve_singular with a sampled kernel") {
    auto mesh = TimeMesh::uniform(1.0, 800);
    auto h = History::sample(mesh, [](double t) { return t; });
    auto k = History::sample(mesh, [](double t) { return std::exp(-t); });
    auto conv = convolve_singular(k, h);
    // exact: (e^{-t} * t)(T) = T - 1 + e^{-T}
    const double T = 1.0;
    CHECK(rel_err(conv.values(mesh.size() - 1), T - 1.0 + std::exp(-T)) < 1e-6);
    History infk = k;
    infk.values(0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(convolve_singular(infk, h), std::domain_error);
}

TEST_CASE("caputo_product trivial reductions") {
    auto mesh = TimeMesh::uniform(2.0, 64);
    auto rho = History::sample(mesh, [](double t) { return 1.0 + std::min(t, 1.0); });
    auto ones = History::sample(mesh, [](double) { return 1.0; });
    auto u = History::sample(mesh, [](double t) { return std::sin(t); });
    for (Index n = 1; n < mesh.size(); ++n) {
        CHECK(caputo_product(ones, u, 0.5, n) == doctest::Approx(caputo_l1(u, 0.5, n)).epsilon(1e-14));
        // u == c pulls the constant out
        History c = ones;
        c.values *= 3.5;
        CHECK(caputo_product(rho, c, 0.5, n) ==
              doctest::Approx(3.5 * caputo_l1(rho, 0.5, n)).epsilon(1e-13));
    }
    auto other = History::sample(TimeMesh::uniform(1.0, 64), [](double) { return 1.0; });
    CHECK_THROWS_AS(caputo_product(rho, other, 0.5, 3), std::invalid_argument);
}

TEST_CASE("jtheta vanishes when either factor is constant") {
    auto mesh = TimeMesh::uniform(1.0, 32);
    auto c = History::sample(mesh, [](double) { return 2.0; });
    auto u = History::sample(mesh, [](double t) { return std::sin(3.0 * t); });
    auto w2c = History::sample(mesh, [](double) { return -1.0; });
    for (Index n = 1; n < mesh.size(); ++n) {
        CHECK(jtheta(c, u, 0.5, n) == 0.0);
        CHECK(jtheta(u, w2c, 0.5, n) == 0.0);
    }
}

TEST_CASE("product-rule decomposition cross-check") {
    // D(w1 w2) == w1 D w2 + w2(0) D w1 + theta/Gamma(1-theta) * J_theta
    const double theta = 0.5;
    auto mesh = TimeMesh::uniform(2.0, 2000); // dt = 1e-3
    auto w1 = History::sample(mesh, [](double t) { return 1.0 + std::min(t, 1.0); });
    auto w2 = History::sample(mesh, [](double t) { return t * t; });
    const double coef = theta * recip_gamma(1.0 - theta);
    double worst = 0.0;
    for (Index n = 1; n < mesh.size(); n += 7) {
        const double direct = caputo_product(w1, w2, theta, n);
        const double decomposed = w1.values(n) * caputo_l1(w2, theta, n) +
                                  w2.values(0) * caputo_l1(w1, theta, n) +
                                  coef * jtheta(w1, w2, theta, n);
        worst = std::max(worst, std::abs(direct - decomposed));
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("plateau-coefficient lower bound for J_theta") {
    // J_theta(t; rho^2, u^2) / (2 rho(t)) >= -(u(0)^2/(1-theta)) T_w^{1-theta} max|rho'|
    const double theta = 0.6, Tw = 1.0, rho_slope = 1.0;
    auto mesh = TimeMesh::uniform(3.0, 600);
    auto rho2 = History::sample(mesh, [&](double t) {
        const double r = 1.0 + rho_slope * std::min(t, Tw);
        return r * r;
    });
    auto u2 = History::sample(mesh, [](double t) {
        const double u = std::cos(t);
        return u * u;
    });
    const double bound = -(1.0 / (1.0 - theta)) * std::pow(Tw, 1.0 - theta) * rho_slope;
    for (Index n = 1; n < mesh.size(); ++n) {
        const double rho_t = 1.0 + rho_slope * std::min(mesh.nodes(n), Tw);
        CHECK(jtheta(rho2, u2, theta, n) / (2.0 * rho_t) >= bound - 1e-8);
    }
}

TEST_CASE("coefficient-derivative bound along plateau coefficients") {
    const double theta = 0.45, Tw = 1.0, rho_slope = 0.8, rho0 = 1.0;
    auto mesh = TimeMesh::uniform(4.0, 800);
    auto rho2 = History::sample(mesh, [&](double t) {
        const double r = rho0 + rho_slope * std::min(t, Tw);
        return r * r;
    });
    for (Index n = 1; n < mesh.size(); ++n) {
        const double t = mesh.nodes(n);
        const double rho_t = rho0 + rho_slope * std::min(t, Tw);
        const double rl = caputo_l1(rho2, theta, n) + omega_kernel(1.0 - theta, t) * rho2.values(0);
        const double rhs = rho0 * omega_kernel(1.0 - theta, t) +
                           2.0 * rho_slope * std::pow(Tw, 1.0 - theta) * recip_gamma(2.0 - theta);
        CHECK(std::abs(rl) / rho_t <= rhs * (1.0 + 1e-9) + 1e-9);
    }
}

TEST_CASE("history CSV golden round trip") {
    auto mesh = TimeMesh::uniform(1.0, 4);
    auto h = History::sample(mesh, [](double t) { return t * t - 0.5; });
    const std::string path = "history_golden_test.csv";
    write_history_csv(path, h);
    // golden content
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content ==
          "t,value\n0,-0.5\n0.25,-0.4375\n0.5,-0.25\n0.75,0.0625\n1,0.5\n");
    auto back = read_history_csv(path);
    REQUIRE(back.size() == h.size());
    for (Index j = 0; j < h.size(); ++j) {
        CHECK(back.mesh.nodes(j) == h.mesh.nodes(j));
        CHECK(back.values(j) == h.values(j));
    }
    std::remove(path.c_str());
}
