#include "subdiff/special.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <cfloat>
#include <numeric>

namespace subdiff {

namespace {

// Lanczos g = 7, nine coefficients (Godfrey's set).
constexpr double kLanczos[9] = {
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
};

constexpr double kSqrtTwoPi = 2.5066282746310005024;

double lanczos_series(double x) {
    double a = kLanczos[0];
    for (int i = 1; i < 9; ++i) a += kLanczos[i] / (x + i);
    return a;
}

} // namespace

double gamma_fn(double x) {
    if (!(x > 0.0) || x > 170.0)
        throw std::domain_error("gamma_fn: argument must lie in (0, 170]");
    const double z = x - 1.0;
    const double a = lanczos_series(z);
    // exp in extended precision keeps the relative error of the large-argument
    // exponent below the 1e-13 budget.
    const long double t = z + 7.5L;
    const long double e = (static_cast<long double>(z) + 0.5L) * logl(t) - t;
    return static_cast<double>(kSqrtTwoPi * a * expl(e));
}

namespace detail {

long double recip_gamma_l(long double x) {
    if (x > 0.5L) {
        if (x > 1755.0L) return 0.0L; // Gamma overflows long double range
        return expl(-lgammal(x));
    }
    // reflection: 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi
    const long double pi = 3.14159265358979323846264338327950288L;
    long double n = nearbyintl(x);
    if (x == n && x <= 0.5L) return 0.0L; // poles at 0, -1, -2, ...
    long double s = sinl(pi * (x - n)) * (static_cast<long double>(std::fmod(n, 2.0L)) == 0.0L ? 1.0L : -1.0L);
    return s * expl(lgammal(1.0L - x)) / pi;
}

} // namespace detail

double recip_gamma(double x) {
    return static_cast<double>(detail::recip_gamma_l(static_cast<long double>(x)));
}

double omega_kernel(double theta, double t) {
    if (!(theta > 0.0))
        throw std::domain_error("omega_kernel: theta must be positive");
    if (!(t > 0.0))
        throw std::domain_error("omega_kernel: t must be positive");
    return std::pow(t, theta - 1.0) * recip_gamma(theta);
}

void SeriesPolicy::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
        throw std::invalid_argument("SeriesPolicy: tolerances must be positive");
    if (max_total_degree < 1)
        throw std::invalid_argument("SeriesPolicy: max_total_degree must be >= 1");
}

MLParams::MLParams(std::vector<double> betas, double b0, std::vector<double> ds,
                   bool monotone_flag)
    : beta_bar(std::move(betas)), beta0(b0), d_bar(std::move(ds)), monotone(monotone_flag) {
    if (beta_bar.empty())
        throw std::invalid_argument("MLParams: need at least one exponent");
    if (beta_bar.size() != d_bar.size())
        throw std::invalid_argument("MLParams: beta_bar and d_bar sizes differ");
    for (double b : beta_bar)
        if (!(b > 0.0)) throw std::invalid_argument("MLParams: exponents must be positive");
    if (monotone) {
        for (std::size_t j = 0; j + 1 < beta_bar.size(); ++j)
            if (!(beta_bar[j] > beta_bar[j + 1]))
                throw std::invalid_argument("MLParams: monotone ordering requires strictly descending exponents");
        if (!(beta_bar.front() <= beta0))
            throw std::invalid_argument("MLParams: monotone ordering requires beta_1 <= beta0");
        if (!(beta_bar.back() > 0.0))
            throw std::invalid_argument("MLParams: monotone ordering requires beta_m > 0");
    }
}

namespace {

struct SeriesResult {
    long double value = 0.0L;
    long double error = std::numeric_limits<long double>::infinity();
    bool converged = false;
    bool overflowed = false;
};

// Neumaier compensated accumulator.
struct Accum {
    long double sum = 0.0L, comp = 0.0L;
    void add(long double v) {
        long double t = sum + v;
        if (fabsl(sum) >= fabsl(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    long double total() const { return sum + comp; }
};

// Direct summation by total degree.  Per degree the inner multinomial sum is
// enumerated recursively; term magnitudes are tracked to expose the
// cancellation floor of the working precision.
SeriesResult ml_series(const MLParams& p, const std::vector<double>& z,
                       const SeriesPolicy& policy) {
    const std::size_t m = p.m();
    const int kmax = policy.max_total_degree;

    bool all_zero = true;
    for (double v : z) all_zero &= (v == 0.0);
    if (all_zero) {
        SeriesResult r;
        r.value = detail::recip_gamma_l(p.beta0);
        r.error = fabsl(r.value) * 1e-17L;
        r.converged = true;
        return r;
    }

    // z_j^k tables in extended precision
    std::vector<std::vector<long double>> zpow(m);
    for (std::size_t j = 0; j < m; ++j) {
        zpow[j].resize(kmax + 1);
        zpow[j][0] = 1.0L;
        for (int k = 1; k <= kmax; ++k)
            zpow[j][k] = zpow[j][k - 1] * static_cast<long double>(z[j]);
    }

    Accum total, mag;
    long double deg_abs_prev2 = 0.0L, deg_abs_prev = 0.0L;
    int small_ratio_run = 0;
    SeriesResult out;

    for (int k = 0; k <= kmax; ++k) {
        Accum deg, deg_mag;
        // enumerate k_1 + ... + k_m = k with the Gamma argument and the
        // multinomial coefficient threaded through the recursion
        struct Rec {
            const MLParams& p;
            const std::vector<std::vector<long double>>& zpow;
            Accum& deg;
            Accum& deg_mag;
            bool overflow = false;
            void operator()(std::size_t j, int rem, long double coeff,
                            long double zprod, long double arg) {
                if (j + 1 == p.m()) {
                    const long double term = coeff * zprod * zpow[j][rem] *
                        detail::recip_gamma_l(arg + static_cast<long double>(p.beta_bar[j]) * rem);
                    if (!std::isfinite(term)) { overflow = true; return; }
                    deg.add(term);
                    deg_mag.add(fabsl(term));
                    return;
                }
                // multinomial coefficient built incrementally:
                // C(rem_total, k_j) factors via binomials
                long double c = coeff;
                for (int kj = 0; kj <= rem; ++kj) {
                    if (kj > 0) c *= static_cast<long double>(rem - kj + 1) / static_cast<long double>(kj);
                    if (!std::isfinite(c)) { overflow = true; return; }
                    (*this)(j + 1, rem - kj, c, zprod * zpow[j][kj],
                            arg + static_cast<long double>(p.beta_bar[j]) * kj);
                    if (overflow) return;
                }
            }
        } rec{p, zpow, deg, deg_mag};

        rec(0, k, 1.0L, 1.0L, static_cast<long double>(p.beta0));
        if (rec.overflow) {
            out.overflowed = true;
            out.value = total.total();
            return out;
        }

        const long double deg_sum = deg.total();
        const long double deg_abs = deg_mag.total();
        total.add(deg_sum);
        mag.add(deg_abs);

        const long double value = total.total();
        const long double tol = std::max(static_cast<long double>(policy.abs_tol),
                                         static_cast<long double>(policy.rel_tol) * fabsl(value));
        const long double floor = mag.total() * 64.0L * LDBL_EPSILON;

        if (k >= 2) {
            long double q1 = deg_abs_prev > 0.0L ? fabsl(deg_sum) / deg_abs_prev : 0.0L;
            long double q2 = deg_abs_prev2 > 0.0L ? deg_abs_prev / deg_abs_prev2 : 0.0L;
            long double q = std::max(q1, q2);
            if (q < 0.5L)
                ++small_ratio_run;
            else
                small_ratio_run = 0;
            if (small_ratio_run >= 3) {
                const long double tail = fabsl(deg_sum) * q / (1.0L - q);
                if (tail <= tol) {
                    out.value = value;
                    out.error = tail + floor;
                    out.converged = (out.error <= tol);
                    if (out.converged) return out;
                }
            }
        }
        deg_abs_prev2 = deg_abs_prev;
        deg_abs_prev = fabsl(deg_sum);
        if (deg_abs_prev == 0.0L) deg_abs_prev = deg_abs;
    }

    out.value = total.total();
    out.converged = false;
    return out;
}

// ---------------------------------------------------------------------------
// Branch-cut integral machinery.
//
// The Laplace transform of calE is s^{-beta0} / (1 + sum_j d_j s^{-beta_j}).
// Deforming the Bromwich contour onto the negative real axis gives
//   calE(t) = int_0^inf exp(-r t) H(r) dr,
//   H(r) = (1/pi) r^{-beta0} Im[ exp(i pi beta0) / (1 + w(r)) ],
//   w(r) = sum_j d_j r^{-beta_j} exp(i pi beta_j),
// valid for 0 < beta_j < 1, d_j >= 0 (no poles in the cut plane) and
// beta0 < 1 + beta_1.  For beta0 in (1, 2] outside that range we integrate
// once more in time: calE_{beta0} = int_0^t calE_{beta0-1}, i.e. the kernel
// exp(-rt) becomes (1 - exp(-rt)) / r.
// ---------------------------------------------------------------------------

struct CutIntegrand {
    std::vector<double> beta, d, cb, sb; // exponents, weights, cos/sin(pi beta_j)
    double beta0 = 0.0, c0 = 0.0, s0 = 0.0;
    double t = 0.0;
    enum class Kind { Decay, Primitive, Complement } kind = Kind::Decay;

    // H(e^x) e^x weighted by the time kernel, as a function of x = log r.
    double operator()(double x) const {
        std::complex<double> w(0.0, 0.0);
        for (std::size_t j = 0; j < beta.size(); ++j) {
            const double rm = std::exp(-beta[j] * x);
            w += std::complex<double>(d[j] * rm * cb[j], d[j] * rm * sb[j]);
        }
        // TODO: refine the grid around the |1 + w| minimum once beta_1 > 0.95
        // parameter sets show up; the near-pole dip narrows like sin(pi beta_1)
        const std::complex<double> den = 1.0 + w;
        const std::complex<double> zc = std::complex<double>(c0, s0) / den;
        const double him = zc.imag() / M_PI; // H(r) = e^{-beta0 x} * him
        const double rt = t * std::exp(x);
        switch (kind) {
            case Kind::Decay:
                // int e^{-rt} H(r) dr  ->  e^{(1-beta0)x - rt} him
                if (rt > 740.0) return 0.0;
                return std::exp((1.0 - beta0) * x - rt) * him;
            case Kind::Primitive:
                // int (1-e^{-rt})/r H(r) dr  ->  e^{-beta0 x} (1-e^{-rt}) him
                return std::exp(-beta0 * x) * (-std::expm1(-std::min(rt, 740.0))) * him;
            case Kind::Complement:
                // int e^{-rt}/r H(r) dr  ->  e^{-beta0 x - rt} him
                if (rt > 740.0) return 0.0;
                return std::exp(-beta0 * x - rt) * him;
        }
        return 0.0;
    }
};

// Trapezoid rule on a fixed window with interval doubling; the integrands are
// analytic and decay exponentially in x on both sides, so this converges
// geometrically once the window is wide enough.
double integrate_doubling(const CutIntegrand& f, double xlo, double xhi,
                          double abs_tol, double rel_tol) {
    int n = 64;
    double h = (xhi - xlo) / n;
    double s = 0.5 * (f(xlo) + f(xhi));
    for (int i = 1; i < n; ++i) s += f(xlo + i * h);
    double prev = s * h;
    for (int level = 0; level < 12; ++level) {
        double mid = 0.0;
        for (int i = 0; i < n; ++i) mid += f(xlo + (i + 0.5) * h);
        const double cur = 0.5 * prev + 0.5 * h * mid;
        n *= 2;
        h *= 0.5;
        const double tol = std::max(abs_tol, rel_tol * std::abs(cur));
        if (std::abs(cur - prev) <= 0.25 * tol && level >= 2) return cur;
        prev = cur;
    }
    return prev;
}

double cut_integral(CutIntegrand f, double abs_tol, double rel_tol) {
    // Window centered to bracket both the exp(-rt) scale r ~ 1/t and the
    // kernel structure scale r ~ 1, then grown until the boundary values are
    // negligible.
    const double xc = std::log(1.0 / std::max(f.t, 1e-300));
    double xlo = std::min(-8.0, xc - 6.0);
    double xhi;
    const double gate = 0.125 * abs_tol;

    for (int i = 0; i < 400 && std::abs(f(xlo)) > gate; ++i) xlo -= 2.0;
    if (f.kind == CutIntegrand::Kind::Primitive) {
        xhi = std::max(8.0, xc + 6.0);
        for (int i = 0; i < 4000 && std::abs(f(xhi)) * std::exp(xhi) * 1e-2 > gate; ++i)
            xhi += 2.0;
    } else {
        const double cap = std::log(745.0 / std::max(f.t, 1e-300)) + 4.0;
        xhi = std::min(cap, std::max(8.0, xc + 6.0));
        while (xhi < cap && std::abs(f(xhi)) > gate) xhi += 2.0;
    }
    return integrate_doubling(f, xlo, xhi, abs_tol, rel_tol);
}

// Canonical (beta, d) pairs for the cut integral: strictly descending beta,
// duplicate exponents merged, zero weights dropped.
bool canonical_pairs(const MLParams& p, std::vector<double>& beta, std::vector<double>& d) {
    std::vector<std::size_t> order(p.m());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return p.beta_bar[a] > p.beta_bar[b]; });
    beta.clear();
    d.clear();
    for (std::size_t idx : order) {
        const double b = p.beta_bar[idx], w = p.d_bar[idx];
        if (w < 0.0) return false;
        if (w == 0.0) continue;
        if (!(b > 0.0 && b < 1.0)) return false;
        if (!beta.empty() && beta.back() == b)
            d.back() += w;
        else {
            beta.push_back(b);
            d.push_back(w);
        }
    }
    return !beta.empty();
}

CutIntegrand make_integrand(const std::vector<double>& beta, const std::vector<double>& d,
                            double beta0, double t, CutIntegrand::Kind kind) {
    CutIntegrand f;
    f.beta = beta;
    f.d = d;
    f.cb.resize(beta.size());
    f.sb.resize(beta.size());
    for (std::size_t j = 0; j < beta.size(); ++j) {
        f.cb[j] = std::cos(M_PI * beta[j]);
        f.sb[j] = std::sin(M_PI * beta[j]);
    }
    f.beta0 = beta0;
    f.c0 = std::cos(M_PI * beta0);
    f.s0 = std::sin(M_PI * beta0);
    f.t = t;
    f.kind = kind;
    return f;
}

} // namespace

namespace detail {

bool spectral_eligible(const MLParams& params) {
    std::vector<double> beta, d;
    if (!canonical_pairs(params, beta, d)) return false;
    return params.beta0 > 0.0 && params.beta0 <= 2.0;
}

double calE_spectral(double t, const MLParams& params, double abs_tol, double rel_tol) {
    std::vector<double> beta, d;
    if (!canonical_pairs(params, beta, d))
        throw std::domain_error("calE_spectral: parameters outside the integral representation range");
    const double b0 = params.beta0;
    if (!(t > 0.0)) throw std::domain_error("calE_spectral: t must be positive");
    if (b0 > 0.0 && b0 < 1.0 + beta.front() - 1e-12) {
        auto f = make_integrand(beta, d, b0, t, CutIntegrand::Kind::Decay);
        return cut_integral(f, abs_tol, rel_tol);
    }
    if (b0 > 1.0 && b0 <= 2.0) {
        auto f = make_integrand(beta, d, b0 - 1.0, t, CutIntegrand::Kind::Primitive);
        return cut_integral(f, abs_tol, rel_tol);
    }
    throw std::domain_error("calE_spectral: beta0 outside (0, 2]");
}

} // namespace detail

CalETable::CalETable(const MLParams& params, Kind kind, double t_min, double t_max,
                     double abs_tol)
    : kind_(kind) {
    std::vector<double> beta, d;
    if (!canonical_pairs(params, beta, d))
        throw std::domain_error("CalETable: parameters outside the integral representation range");
    d1_ = d.front();
    const double b0 = params.beta0;
    if (kind == Kind::Decay) {
        if (!(b0 > 0.0) || !(b0 < 1.0 + beta.front() - 1e-12))
            throw std::domain_error("CalETable: Decay kind needs beta0 in (0, 1 + beta_1)");
    } else {
        if (std::abs(b0 - beta.front()) > 1e-12)
            throw std::domain_error("CalETable: Complement kind needs beta0 == beta_1");
    }
    auto f = make_integrand(beta, d, b0, 1.0, CutIntegrand::Kind::Decay);

    // left extent: integrand mass for the largest t; right: exp cutoff for the
    // smallest t.  The left decay rate of the density depends on the kind.
    double rate;
    if (kind == Kind::Decay)
        rate = std::max(0.05, 1.0 + beta.front() - b0);
    else
        rate = std::max(0.05, beta.size() > 1 ? beta[0] - beta[1] : beta[0]);
    double xlo = std::min(std::log(1.0 / t_max) - 8.0,
                          std::log(abs_tol * rate) / rate - 4.0);
    double xhi = std::log(745.0 / std::max(t_min, 1e-12)) + 1.0;
    const double h = 0.04;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(std::ceil((xhi - xlo) / h)) + 1;
    ex_.resize(n);
    weight_.resize(n);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double x = xlo + i * h;
        std::complex<double> w(0.0, 0.0);
        for (std::size_t j = 0; j < beta.size(); ++j) {
            const double rm = std::exp(-beta[j] * x);
            w += std::complex<double>(d[j] * rm * f.cb[j], d[j] * rm * f.sb[j]);
        }
        const std::complex<double> zc = std::complex<double>(f.c0, f.s0) / (1.0 + w);
        const double him = zc.imag() / M_PI;
        ex_[i] = std::exp(x);
        // trapezoid weight on the log axis, constant h in the interior
        const double tw = (i == 0 || i + 1 == n) ? 0.5 * h : h;
        weight_[i] = tw * him *
                     ((kind == Kind::Decay) ? std::exp((1.0 - b0) * x) : std::exp(-b0 * x));
    }
}

double CalETable::operator()(double t) const {
    if (!(t > 0.0)) throw std::domain_error("CalETable: t must be positive");
    double acc = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < ex_.size(); ++i) {
        const double rt = t * ex_[i];
        if (rt > 745.0) break;
        const double term = weight_[i] * std::exp(-rt);
        const double y = term - comp;
        const double s = acc + y;
        comp = (s - acc) - y;
        acc = s;
    }
    return kind_ == Kind::Decay ? acc : d1_ * acc;
}

double ml_multinomial(const MLParams& params, const std::vector<double>& z_bar,
                      const SeriesPolicy& policy) {
    policy.validate();
    if (z_bar.size() != params.m())
        throw std::invalid_argument("ml_multinomial: argument count must match exponent count");

    bool nonpositive = true;
    double zsum = 0.0;
    for (double z : z_bar) {
        nonpositive &= (z <= 0.0);
        zsum += std::abs(z);
    }

    MLParams shifted = params;
    shifted.d_bar.assign(z_bar.size(), 0.0);
    for (std::size_t j = 0; j < z_bar.size(); ++j) shifted.d_bar[j] = -z_bar[j];
    const bool spectral_ok = nonpositive && detail::spectral_eligible(shifted) &&
                             shifted.beta0 < 1.0 + *std::max_element(shifted.beta_bar.begin(),
                                                                     shifted.beta_bar.end()) &&
                             shifted.beta0 > 0.0;

    // Heavy cancellation regime: go straight to the integral (t = 1 gives
    // E(z) = calE(1)).
    if (spectral_ok && zsum > 2.0)
        return detail::calE_spectral(1.0, shifted, policy.abs_tol, policy.rel_tol);

    SeriesResult r = ml_series(params, z_bar, policy);
    if (r.converged) return static_cast<double>(r.value);
    if (spectral_ok)
        return detail::calE_spectral(1.0, shifted, policy.abs_tol, policy.rel_tol);
    throw NonConvergenceError(
        "ml_multinomial: series budget exhausted before the tail bound was met",
        static_cast<double>(r.error));
}

double calE(double t, const MLParams& params, const SeriesPolicy& policy) {
    policy.validate();
    if (!(t > 0.0)) throw std::domain_error("calE: t must be positive");
    const double prefac = std::pow(t, params.beta0 - 1.0);

    std::vector<double> z(params.m());
    double zsum = 0.0;
    bool nonpositive = true;
    for (std::size_t j = 0; j < params.m(); ++j) {
        z[j] = -params.d_bar[j] * std::pow(t, params.beta_bar[j]);
        nonpositive &= (z[j] <= 0.0);
        zsum += std::abs(z[j]);
    }

    const bool spectral_ok = nonpositive && detail::spectral_eligible(params);
    const double direct_limit = 1.0 + (params.beta_bar.empty()
                                           ? 0.0
                                           : *std::max_element(params.beta_bar.begin(),
                                                               params.beta_bar.end()));
    if (spectral_ok && (zsum > 2.0 || params.beta0 >= direct_limit))
        return detail::calE_spectral(t, params, policy.abs_tol, policy.rel_tol);

    SeriesResult r = ml_series(params, z, policy);
    if (r.converged) return prefac * static_cast<double>(r.value);
    if (spectral_ok)
        return detail::calE_spectral(t, params, policy.abs_tol, policy.rel_tol);
    throw NonConvergenceError("calE: series budget exhausted before the tail bound was met",
                              static_cast<double>(r.error));
}

double calE_complement(double t, const MLParams& params, const SeriesPolicy& policy) {
    policy.validate();
    if (!(t > 0.0)) throw std::domain_error("calE_complement: t must be positive");
    std::vector<double> beta, d;
    if (!canonical_pairs(params, beta, d))
        throw std::domain_error("calE_complement: requires positive weights and exponents in (0,1)");
    if (std::abs(params.beta0 - beta.front()) > 1e-12)
        throw std::domain_error("calE_complement: requires beta0 == beta_1");
    auto f = make_integrand(beta, d, params.beta0, t, CutIntegrand::Kind::Complement);
    return d.front() * cut_integral(f, policy.abs_tol, policy.rel_tol);
}

double calE_asymptotic(double t, const MLParams& params, AsymptoticRegime regime) {
    if (!(t > 0.0)) throw std::domain_error("calE_asymptotic: t must be positive");
    const double b0 = params.beta0;
    if (regime == AsymptoticRegime::Zero) {
        double v = std::pow(t, b0 - 1.0) * recip_gamma(b0);
        for (std::size_t j = 0; j < params.m(); ++j)
            v -= params.d_bar[j] * std::pow(t, b0 + params.beta_bar[j] - 1.0) *
                 recip_gamma(b0 + params.beta_bar[j]);
        return v;
    }
    const double b1 = params.beta_bar.front();
    const double d1 = params.d_bar.front();
    if (std::abs(b0 - b1) > 1e-12) {
        if (d1 == 0.0)
            throw std::domain_error("calE_asymptotic: infinity regime needs d_1 != 0");
        return std::pow(t, b0 - b1 - 1.0) * recip_gamma(b0 - b1) / d1;
    }
    if (params.m() < 2)
        throw std::domain_error("calE_asymptotic: beta0 == beta_1 branch needs m >= 2");
    const double b2 = params.beta_bar[1];
    const double d2 = params.d_bar[1];
    // second-order term of the transform expansion; note the d_1^2.
    return -(d2 / (d1 * d1)) * std::pow(t, b2 - b1 - 1.0) * recip_gamma(b2 - b1);
}

} // namespace subdiff
