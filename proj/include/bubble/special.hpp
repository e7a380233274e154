#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "bubble/errors.hpp"

namespace bubble::special {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

namespace detail {

inline constexpr int kMaxIter = 1000000;
inline constexpr double kEps = 3e-16;
inline constexpr double kFpMin = std::numeric_limits<double>::min() / kEps;

// Lower regularized incomplete gamma by series, valid for x < a+1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < kMaxIter; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * kEps)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw NumericalError("incomplete gamma series did not converge");
}

// Upper regularized incomplete gamma by continued fraction, valid for x >= a+1.
inline double gamma_q_cf(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kFpMin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = b + an / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps)
            return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    }
    throw NumericalError("incomplete gamma continued fraction did not converge");
}

}  // namespace detail

/// Lower regularized incomplete gamma P(a,x).
inline double gamma_p(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw NumericalError("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    return x < a + 1.0 ? detail::gamma_p_series(a, x) : 1.0 - detail::gamma_q_cf(a, x);
}

/// Upper regularized incomplete gamma Q(a,x); accurate in the far tail.
inline double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw NumericalError("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    return x < a + 1.0 ? 1.0 - detail::gamma_p_series(a, x) : detail::gamma_q_cf(a, x);
}

inline double chi2_cdf(double x, double df) { return x <= 0.0 ? 0.0 : gamma_p(df / 2, x / 2); }

inline double chi2_sf(double x, double df) { return x <= 0.0 ? 1.0 : gamma_q(df / 2, x / 2); }

namespace detail {

inline constexpr double kSeriesTol = 1e-12;
inline constexpr double kBigNoncentrality = 1e4;

// Sankaran's normal approximation, used once the Poisson-mixture series
// would need ~nc/2 terms. Its error vanishes as nc grows.
inline double sankaran_z(double x, double df, double nc) {
    const double s = df + nc;
    const double h = 1.0 - (2.0 / 3.0) * s * (df + 3.0 * nc) / ((df + 2.0 * nc) * (df + 2.0 * nc));
    const double p = (df + 2.0 * nc) / (s * s);
    const double m = (h - 1.0) * (1.0 - 3.0 * h);
    const double num = std::pow(x / s, h) - (1.0 + h * p * (h - 1.0 - 0.5 * (2.0 - h) * m * p));
    const double den = h * std::sqrt(2.0 * p) * (1.0 + 0.5 * m * p);
    return num / den;
}

// Shared state for the Poisson-weighted sweep over central chi-square
// terms: weights start at the modal index j0 = floor(nc/2) and extend both
// ways until all but kSeriesTol of the Poisson mass is covered. The gamma
// terms follow the recursions P(a+1) = P(a) - D(a), Q(a+1) = Q(a) + D(a)
// with D(a) = x^a e^-x / Gamma(a+1).
struct MixtureStart {
    long j0;
    double a0, w0, d0;
};

inline MixtureStart mixture_start(double xh, double lam, double df) {
    MixtureStart s;
    s.j0 = static_cast<long>(lam);
    s.a0 = df / 2 + s.j0;
    s.w0 = std::exp(-lam + (s.j0 > 0 ? s.j0 * std::log(lam) : 0.0) - std::lgamma(s.j0 + 1.0));
    s.d0 = std::exp(s.a0 * std::log(xh) - xh - std::lgamma(s.a0 + 1.0));
    return s;
}

}  // namespace detail

/// CDF of the noncentral chi-square with `df` degrees of freedom and
/// noncentrality `nc`: a series of central chi-square terms with absolute
/// truncation tolerance 1e-12, switching to Sankaran's normal approximation
/// when nc > 1e4. Throws NumericalError if the series does not converge
/// within 1e6 terms.
inline double noncentral_chi2_cdf(double x, double df, double nc) {
    if (df <= 0.0 || nc < 0.0 || !std::isfinite(df) || !std::isfinite(nc))
        throw NumericalError("noncentral_chi2_cdf: bad arguments");
    if (x <= 0.0) return 0.0;
    if (nc == 0.0) return chi2_cdf(x, df);
    if (nc > detail::kBigNoncentrality) return normal_cdf(detail::sankaran_z(x, df, nc));

    const double xh = x / 2;
    const double lam = nc / 2;
    const auto s = detail::mixture_start(xh, lam, df);
    const double p0 = gamma_p(s.a0, xh);

    double sum = s.w0 * p0;
    double wsum = s.w0;
    {  // up: P(a+1) = P(a) - D(a)
        double w = s.w0, d = s.d0, p = p0, a = s.a0;
        long iter = 0;
        while (wsum < 1.0 - detail::kSeriesTol) {
            if (++iter > detail::kMaxIter)
                throw NumericalError("noncentral chi-square series did not converge");
            w *= lam / static_cast<double>(s.j0 + iter);
            p -= d;
            if (p < 0.0) p = 0.0;
            d *= xh / (a + 1.0);
            a += 1.0;
            sum += w * p;
            wsum += w;
            if (w < 1e-280 && iter > 8) break;
        }
    }
    {  // down: P(a-1) = P(a) + D(a-1)
        double w = s.w0, d = s.d0, p = p0, a = s.a0;
        for (long j = s.j0; j >= 1 && wsum < 1.0 - detail::kSeriesTol; --j) {
            w *= static_cast<double>(j) / lam;
            d *= a / xh;
            a -= 1.0;
            p += d;
            if (p > 1.0) p = 1.0;
            sum += w * p;
            wsum += w;
            if (w < 1e-280) break;
        }
    }
    return std::min(sum, 1.0);
}

/// Survival function 1 - CDF, computed directly so far tails keep precision.
inline double noncentral_chi2_sf(double x, double df, double nc) {
    if (df <= 0.0 || nc < 0.0 || !std::isfinite(df) || !std::isfinite(nc))
        throw NumericalError("noncentral_chi2_sf: bad arguments");
    if (x <= 0.0) return 1.0;
    if (nc == 0.0) return chi2_sf(x, df);
    if (nc > detail::kBigNoncentrality) return normal_cdf(-detail::sankaran_z(x, df, nc));

    const double xh = x / 2;
    const double lam = nc / 2;
    const auto s = detail::mixture_start(xh, lam, df);
    const double q0 = gamma_q(s.a0, xh);

    double sum = s.w0 * q0;
    double wsum = s.w0;
    {  // up: Q(a+1) = Q(a) + D(a)
        double w = s.w0, d = s.d0, q = q0, a = s.a0;
        long iter = 0;
        while (wsum < 1.0 - detail::kSeriesTol) {
            if (++iter > detail::kMaxIter)
                throw NumericalError("noncentral chi-square series did not converge");
            w *= lam / static_cast<double>(s.j0 + iter);
            q += d;
            if (q > 1.0) q = 1.0;
            d *= xh / (a + 1.0);
            a += 1.0;
            sum += w * q;
            wsum += w;
            if (w < 1e-280 && iter > 8) break;
        }
    }
    {  // down: Q(a-1) = Q(a) - D(a-1)
        double w = s.w0, d = s.d0, q = q0, a = s.a0;
        for (long j = s.j0; j >= 1 && wsum < 1.0 - detail::kSeriesTol; --j) {
            w *= static_cast<double>(j) / lam;
            d *= a / xh;
            a -= 1.0;
            q -= d;
            if (q < 0.0) q = 0.0;
            sum += w * q;
            wsum += w;
            if (w < 1e-280) break;
        }
    }
    return std::min(sum, 1.0);
}

/// Density of the noncentral chi-square (Poisson mixture of central pdfs).
inline double noncentral_chi2_pdf(double x, double df, double nc) {
    if (x <= 0.0) return 0.0;
    const double xh = x / 2;
    auto log_central_pdf = [&](double a) {
        // chi-square pdf with 2a dof at x, in logs
        return (a - 1.0) * std::log(xh) - xh - std::lgamma(a) - std::numbers::ln2;
    };
    if (nc == 0.0) return std::exp(log_central_pdf(df / 2));

    const double lam = nc / 2;
    const long j0 = static_cast<long>(lam);
    const double lw0 = -lam + (j0 > 0 ? j0 * std::log(lam) : 0.0) - std::lgamma(j0 + 1.0);

    double sum = 0.0, wsum = 0.0;
    {
        double w = std::exp(lw0);
        for (long j = j0;; ++j) {
            sum += w * std::exp(log_central_pdf(df / 2 + j));
            wsum += w;
            if ((w < 1e-280 && j > j0 + 8) || wsum >= 1.0 - detail::kSeriesTol) break;
            if (j - j0 > detail::kMaxIter)
                throw NumericalError("noncentral chi-square pdf series");
            w *= lam / static_cast<double>(j + 1);
        }
    }
    {
        double w = std::exp(lw0);
        for (long j = j0 - 1; j >= 0 && wsum < 1.0 - detail::kSeriesTol; --j) {
            w *= static_cast<double>(j + 1) / lam;
            sum += w * std::exp(log_central_pdf(df / 2 + j));
            wsum += w;
            if (w < 1e-280) break;
        }
    }
    return sum;
}

}  // namespace bubble::special
