#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bubble/errors.hpp"
#include "bubble/rng.hpp"
#include "bubble/special.hpp"

using namespace bubble::special;

namespace {

// Adaptive Simpson quadrature, the independent oracle for CDF values.
double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fb,
               double fm, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson(f, a, m, fa, fm, flm, tol / 2, depth - 1) +
           simpson(f, m, b, fm, fb, frm, tol / 2, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    const double m = 0.5 * (a + b);
    return simpson(f, a, b, f(a), f(b), f(m), tol, 48);
}

}  // namespace

TEST_CASE("normal_cdf basics", "[special]") {
    REQUIRE(normal_cdf(0.0) == Catch::Approx(0.5).epsilon(1e-15));
    REQUIRE(normal_cdf(1.959963984540054) == Catch::Approx(0.975).epsilon(1e-12));
    REQUIRE(normal_cdf(-8.0) == Catch::Approx(6.22096057427178e-16).epsilon(1e-6));
    REQUIRE(normal_cdf(37.0) == 1.0);
}

TEST_CASE("regularized incomplete gamma agrees with quadrature", "[special]") {
    // P(a,x) = int_0^x t^{a-1} e^{-t} dt / Gamma(a); the singular head below
    // eps is added analytically with e^{-t} ~ 1.
    for (double a : {0.5, 1.0, 2.5, 10.0, 117.0}) {
        for (double x : {0.25, 1.0, 3.0, 9.0, 140.0}) {
            auto dens = [a](double t) {
                return std::exp((a - 1.0) * std::log(t) - t - std::lgamma(a));
            };
            const double eps = 1e-12;
            const double head = std::exp(a * std::log(eps) - std::log(a) - std::lgamma(a));
            const double ref = head + integrate(dens, eps, x, 1e-14);
            REQUIRE(gamma_p(a, x) == Catch::Approx(ref).margin(1e-10));
            REQUIRE(gamma_q(a, x) == Catch::Approx(1.0 - ref).margin(1e-10));
        }
    }
}

TEST_CASE("gamma_q keeps precision in the far tail", "[special]") {
    // Q(2.5, 118) ~ 1e-47; a plain 1-P would round to zero.
    const double q = gamma_q(2.5, 118.0);
    REQUIRE(q > 0.0);
    REQUIRE(q < 1e-40);
}

TEST_CASE("noncentral chi-square: zero noncentrality reduces to central", "[special]") {
    for (double x : {0.5, 2.0, 7.0}) {
        for (double df : {1.0, 2.5, 6.0}) {
            REQUIRE(noncentral_chi2_cdf(x, df, 0.0) ==
                    Catch::Approx(chi2_cdf(x, df)).epsilon(1e-14));
        }
    }
}

TEST_CASE("noncentral chi-square: lower support endpoint", "[special]") {
    REQUIRE(noncentral_chi2_cdf(0.0, 3.0, 2.5) == 0.0);
    REQUIRE(noncentral_chi2_cdf(-1.0, 3.0, 2.5) == 0.0);
    REQUIRE(noncentral_chi2_sf(0.0, 3.0, 2.5) == 1.0);
}

TEST_CASE("noncentral chi-square CDF matches the quadrature oracle", "[special]") {
    // Frozen value computed by adaptive quadrature of the Bessel-form density
    // at 40-digit precision.
    REQUIRE(noncentral_chi2_cdf(4.0, 3.0, 2.5) ==
            Catch::Approx(0.4314614991869632).margin(1e-9));

    // Runtime oracle: integrate the Poisson-mixture density directly.
    for (auto [x, df, nc] : {std::tuple{4.0, 3.0, 2.5}, std::tuple{2.0, 1.5, 0.7},
                             std::tuple{15.0, 4.0, 9.0}, std::tuple{30.0, 2.0, 22.0}}) {
        auto dens = [df = df, nc = nc](double z) { return noncentral_chi2_pdf(z, df, nc); };
        const double ref = integrate(dens, 1e-12, x, 1e-13);
        REQUIRE(noncentral_chi2_cdf(x, df, nc) == Catch::Approx(ref).margin(1e-9));
        REQUIRE(noncentral_chi2_sf(x, df, nc) == Catch::Approx(1.0 - ref).margin(1e-9));
    }
}

TEST_CASE("noncentral chi-square CDF is monotone in x", "[special]") {
    bubble::rng::Stream s(7, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const double df = s.uniform(0.3, 30.0);
        const double nc = s.uniform(0.0, 200.0);
        const double x1 = s.uniform(0.0, 80.0);
        const double x2 = x1 + s.uniform(0.0, 40.0);
        const double f1 = noncentral_chi2_cdf(x1, df, nc);
        const double f2 = noncentral_chi2_cdf(x2, df, nc);
        REQUIRE(f1 >= 0.0);
        REQUIRE(f2 <= 1.0);
        REQUIRE(f2 >= f1 - 1e-12);
    }
}

TEST_CASE("large noncentrality switches to the normal-approximation branch", "[special]") {
    // Frozen 30-digit references straddling the nc = 1e4 switch.
    const double df = 4.0;
    const double below = noncentral_chi2_cdf(10100.0, df, 9999.0);  // series branch
    REQUIRE(below == Catch::Approx(0.687505871974996299).margin(1e-10));
    const double above = noncentral_chi2_cdf(10100.0, df, 10001.0);  // Sankaran branch
    REQUIRE(above == Catch::Approx(0.683957316543748278).margin(1e-6));
    // Median-scale sanity at huge nc: CDF at the mean is ~0.5.
    const double big = noncentral_chi2_cdf(2.0e9 + df, df, 2.0e9);
    REQUIRE(big == Catch::Approx(0.5).margin(0.01));
}
