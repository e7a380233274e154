#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "bubble/errors.hpp"
#include "bubble/models.hpp"
#include "bubble/special.hpp"

namespace bubble::pricing {

// ---------------------------------------------------------------------------
// Grids and surfaces

struct SurfaceGrid {
    std::vector<double> maturities;  // strictly increasing, positive, years
    std::vector<double> strikes;     // strictly increasing, positive

    void validate() const {
        auto check = [](const std::vector<double>& v, const char* what) {
            if (v.empty()) throw Error(std::string("SurfaceGrid: empty ") + what);
            double prev = 0.0;
            for (double x : v) {
                if (!(x > prev) || !std::isfinite(x))
                    throw Error(std::string("SurfaceGrid: ") + what +
                                " must be finite, positive, strictly increasing");
                prev = x;
            }
        };
        check(maturities, "maturities");
        check(strikes, "strikes");
    }

    std::size_t n_maturities() const { return maturities.size(); }
    std::size_t n_strikes() const { return strikes.size(); }
    std::size_t cells() const { return maturities.size() * strikes.size(); }

    static std::vector<double> linspace(double lo, double hi, std::size_t n) {
        if (n < 1 || !(hi >= lo)) throw Error("linspace: bad range");
        std::vector<double> v(n);
        if (n == 1) {
            v[0] = lo;
            return v;
        }
        for (std::size_t i = 0; i < n; ++i)
            v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        return v;
    }

    static SurfaceGrid make(double t_lo, double t_hi, std::size_t nt, double k_lo, double k_hi,
                            std::size_t nk) {
        SurfaceGrid g{linspace(t_lo, t_hi, nt), linspace(k_lo, k_hi, nk)};
        g.validate();
        return g;
    }
};

enum class SurfaceSource { analytic, monte_carlo, ingested };

inline const char* to_string(SurfaceSource s) {
    switch (s) {
        case SurfaceSource::analytic: return "analytic";
        case SurfaceSource::monte_carlo: return "monte_carlo";
        default: return "ingested";
    }
}

/// Collateralized call prices C^alpha(T,K) on a maturity/strike grid,
/// row-major by maturity. std_errors accompany Monte Carlo surfaces.
struct PriceSurface {
    SurfaceGrid grid;
    double alpha = 1.0;
    double x0 = 0.0;
    std::vector<double> prices;                     // n_maturities * n_strikes
    std::optional<std::vector<double>> std_errors;  // same layout
    SurfaceSource source = SurfaceSource::analytic;

    double price(std::size_t i_t, std::size_t i_k) const {
        return prices[i_t * grid.n_strikes() + i_k];
    }
    double std_error(std::size_t i_t, std::size_t i_k) const {
        return (*std_errors)[i_t * grid.n_strikes() + i_k];
    }

    /// Checks the structural invariants: nonnegative prices, the upper bound
    /// (1+alpha)*x0, and monotonicity in strike within tolerance (1e-9 for
    /// analytic surfaces, 3 standard errors for Monte Carlo ones).
    void validate() const {
        grid.validate();
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("PriceSurface: alpha not in [0,1]");
        if (!(x0 > 0)) throw Error("PriceSurface: x0 must be positive");
        if (prices.size() != grid.cells()) throw Error("PriceSurface: price matrix shape");
        if (std_errors && std_errors->size() != grid.cells())
            throw Error("PriceSurface: std_error matrix shape");
        const double bound = x0 + alpha * x0;
        for (std::size_t i = 0; i < prices.size(); ++i) {
            if (!std::isfinite(prices[i]) || prices[i] < -1e-12)
                throw Error("PriceSurface: prices must be finite and nonnegative");
            const double slack = source == SurfaceSource::monte_carlo && std_errors
                                     ? std::max(1e-9, 5.0 * (*std_errors)[i])
                                     : 1e-9;
            if (prices[i] > bound + slack) throw Error("PriceSurface: price above (1+alpha)*x0");
        }
        const std::size_t nk = grid.n_strikes();
        for (std::size_t it = 0; it < grid.n_maturities(); ++it) {
            for (std::size_t ik = 0; ik + 1 < nk; ++ik) {
                const double tol =
                    source == SurfaceSource::monte_carlo && std_errors
                        ? 3.0 * (std_error(it, ik) + std_error(it, ik + 1))
                        : 1e-9;
                if (price(it, ik + 1) > price(it, ik) + tol)
                    throw Error("PriceSurface: prices increase in strike");
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Lognormal (Black) call, zero rates

inline double black_call(double f0, double k, double t, double vol) {
    if (!(f0 > 0) || !(k > 0) || !(t > 0) || !(vol > 0))
        throw Error("black_call: arguments must be positive");
    const double sd = vol * std::sqrt(t);
    if (sd < 1e-14) return std::max(f0 - k, 0.0);
    const double d1 = (std::log(f0 / k) + 0.5 * sd * sd) / sd;
    const double d2 = d1 - sd;
    return f0 * special::normal_cdf(d1) - k * special::normal_cdf(d2);
}

// ---------------------------------------------------------------------------
// Displaced CEV: exact expectations through noncentral chi-square CDFs.
//
// With S = X + d the process is plain CEV dS = sigma S^beta dW started at
// s0 = x0 + d and absorbed at zero, and E[(X-k)^+] = E[(S-(k+d))^+]. S maps
// to a squared Bessel process, which makes S_t noncentral chi-square
// distributed; beta < 1 and beta > 1 use mirrored parameterizations and
// beta = 1 is lognormal. Every branch is cross-checked against the Euler
// Monte Carlo oracle in the acceptance suite.

namespace detail {

inline constexpr double kBetaOneBand = 1e-6;

struct CevTransform {
    double kappa;  // 1 / ((beta-1)^2 sigma^2 t)
    double zs;     // spot transform
    double zk;     // strike transform
};

inline CevTransform cev_transform(double s0, double k, double sigma, double beta, double t) {
    const double e = 2.0 * (1.0 - beta);  // sign carries the branch
    const double kappa = 1.0 / ((1.0 - beta) * (1.0 - beta) * sigma * sigma * t);
    return {kappa, std::pow(s0, e) * kappa, std::pow(k, e) * kappa};
}

// E[S_t] - E[S_t 1{S_t > K}] style positive-term series for the beta > 1
// call: F0(zs; df) - F(zs; df, zk) without cancellation when zk is small.
inline double cev_itm_gap(double zs, double df, double zk) {
    if (zk > 120.0)
        return special::chi2_cdf(zs, df) - special::noncentral_chi2_cdf(zs, df, zk);
    // sum_j w_j(zk) * [P(df/2, zs/2) - P(df/2 + j, zs/2)], all terms >= 0
    const double xh = zs / 2, lam = zk / 2;
    double w = std::exp(-lam);
    double d = std::exp((df / 2) * std::log(xh) - xh - std::lgamma(df / 2 + 1.0));
    double partial = 0.0;  // P(df/2) - P(df/2 + j)
    double sum = 0.0, wsum = w;
    double a = df / 2;
    for (long j = 1; j < 100000; ++j) {
        partial += d;
        d *= xh / (a + 1.0);
        a += 1.0;
        w *= lam / j;
        sum += w * partial;
        wsum += w;
        if (1.0 - wsum < 1e-15 || (w < 1e-280 && j > 8)) break;
    }
    return sum;
}

}  // namespace detail

/// E[X_t] for the displaced CEV model.
inline double cev_mean(const models::DisplacedCev& m, double t) {
    models::validate(m);
    if (!(t > 0)) throw Error("cev_mean: t must be positive");
    if (std::abs(m.beta - 1.0) < detail::kBetaOneBand) return m.x0;
    if (m.beta < 1.0) return m.x0;  // absorbed CEV is a true martingale
    const double s0 = m.x0 + m.d;
    const auto tr = detail::cev_transform(s0, 1.0, m.sigma, m.beta, t);
    const double df = 1.0 / (m.beta - 1.0);
    return s0 * special::chi2_cdf(tr.zs, df) - m.d;
}

/// Martingale defect m(t) = x0 - E[X_t]; kept in survival-function form so
/// tiny defects stay strictly positive in double precision.
inline double cev_defect(const models::DisplacedCev& m, double t) {
    models::validate(m);
    if (!(t > 0)) throw Error("cev_defect: t must be positive");
    if (m.beta <= 1.0 + detail::kBetaOneBand) return 0.0;
    const double s0 = m.x0 + m.d;
    const auto tr = detail::cev_transform(s0, 1.0, m.sigma, m.beta, t);
    const double df = 1.0 / (m.beta - 1.0);
    return s0 * special::chi2_sf(tr.zs, df);
}

/// Undefected call expectation E[(X_t - k)^+].
inline double cev_call(const models::DisplacedCev& m, double t, double k) {
    models::validate(m);
    if (!(t > 0) || !(k > 0)) throw Error("cev_call: t and k must be positive");
    const double s0 = m.x0 + m.d;
    const double ke = k + m.d;

    if (std::abs(m.beta - 1.0) < detail::kBetaOneBand) return black_call(s0, ke, t, m.sigma);

    if (m.beta < 1.0) {
        const auto tr = detail::cev_transform(s0, ke, m.sigma, m.beta, t);
        const double b = 1.0 / (1.0 - m.beta);
        return s0 * special::noncentral_chi2_sf(tr.zk, b + 2.0, tr.zs) -
               ke * special::noncentral_chi2_cdf(tr.zs, b, tr.zk);
    }
    const auto tr = detail::cev_transform(s0, ke, m.sigma, m.beta, t);
    const double df = 1.0 / (m.beta - 1.0);
    return s0 * detail::cev_itm_gap(tr.zs, df, tr.zk) -
           ke * special::noncentral_chi2_cdf(tr.zk, df + 2.0, tr.zs);
}

/// E[(k - X_t)^+] from the same chi-square parameterization (used by the
/// put-call consistency checks).
inline double cev_put(const models::DisplacedCev& m, double t, double k) {
    models::validate(m);
    if (!(t > 0) || !(k > 0)) throw Error("cev_put: t and k must be positive");
    const double s0 = m.x0 + m.d;
    const double ke = k + m.d;

    if (std::abs(m.beta - 1.0) < detail::kBetaOneBand)
        return black_call(s0, ke, t, m.sigma) - s0 + ke;

    if (m.beta < 1.0) {
        const auto tr = detail::cev_transform(s0, ke, m.sigma, m.beta, t);
        const double b = 1.0 / (1.0 - m.beta);
        return ke * special::noncentral_chi2_sf(tr.zs, b, tr.zk) -
               s0 * special::noncentral_chi2_cdf(tr.zk, b + 2.0, tr.zs);
    }
    const auto tr = detail::cev_transform(s0, ke, m.sigma, m.beta, t);
    const double df = 1.0 / (m.beta - 1.0);
    return ke * special::noncentral_chi2_sf(tr.zk, df + 2.0, tr.zs) -
           s0 * special::noncentral_chi2_cdf(tr.zs, df, tr.zk);
}

// ---------------------------------------------------------------------------
// SABR implied volatility (Hagan expansion, lognormal gamma = 1 form)

inline double hagan_implied_vol(const models::Sabr& m, double t, double k) {
    models::validate(m);
    if (m.gamma != 1.0) throw UnsupportedModel("hagan_implied_vol requires gamma = 1");
    if (!(t > 0) || !(k > 0)) throw Error("hagan_implied_vol: t and k must be positive");
    if (1.0 - m.rho < 1e-12) throw Error("hagan_implied_vol: rho too close to 1");

    const double z = (m.volvol / m.sigma0) * std::log(m.f0 / k);
    double ratio;
    if (std::abs(z) < 1e-4) {
        // z/x(z) = 1 - rho z/2 + (2 - 3 rho^2) z^2 / 12 + O(z^3)
        ratio = 1.0 - 0.5 * m.rho * z + (2.0 - 3.0 * m.rho * m.rho) * z * z / 12.0;
    } else {
        const double x =
            std::log((std::sqrt(1.0 - 2.0 * m.rho * z + z * z) + z - m.rho) / (1.0 - m.rho));
        ratio = z / x;
    }
    const double correction =
        1.0 + t * (0.25 * m.rho * m.volvol * m.sigma0 +
                   (2.0 - 3.0 * m.rho * m.rho) * m.volvol * m.volvol / 24.0);
    return m.sigma0 * ratio * correction;
}

}  // namespace bubble::pricing
