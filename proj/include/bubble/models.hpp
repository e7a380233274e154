#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bubble/errors.hpp"
#include "bubble/rng.hpp"

namespace bubble::models {

// ---------------------------------------------------------------------------
// Model families

/// dX = sigma * (X + d)^beta dW, X0 = x0. Martingale iff beta <= 1.
struct DisplacedCev {
    double sigma;
    double beta;
    double d;
    double x0;
};

/// dF = sigma_t F^gamma dW, dsigma_t = volvol * sigma_t dZ, corr(W,Z) = rho.
/// For gamma = 1 a strict local martingale iff rho > 0.
struct Sabr {
    double f0;
    double sigma0;
    double gamma;
    double volvol;
    double rho;
};

/// Two-driver stochastic volatility family:
///   dY = sigma1 v^alpha_exp Y dB1 + sigma2 v^alpha_exp Y dB2
///   dv = a1 v dB1 + a2 v dB2 + kappa (big_l - v) dt
/// Strict local martingale iff a1*sigma1 + a2*sigma2 > 0.
struct SinSv {
    double y0;
    double v0;
    double alpha_exp;
    double kappa;
    double big_l;
    double sigma1;
    double sigma2;
    double a1;
    double a2;
};

using ModelSpec = std::variant<DisplacedCev, Sabr, SinSv>;

inline void validate(const DisplacedCev& m) {
    if (!(m.sigma > 0)) throw Error("DisplacedCev: sigma must be positive");
    if (!(m.beta > 0)) throw Error("DisplacedCev: beta must be positive");
    if (!(m.d >= 0)) throw Error("DisplacedCev: d must be nonnegative");
    if (!(m.x0 > 0)) throw Error("DisplacedCev: x0 must be positive");
}

inline void validate(const Sabr& m) {
    if (!(m.f0 > 0)) throw Error("Sabr: f0 must be positive");
    if (!(m.sigma0 > 0)) throw Error("Sabr: sigma0 must be positive");
    if (!(m.gamma > 0)) throw Error("Sabr: gamma must be positive");
    if (!(m.volvol > 0)) throw Error("Sabr: volvol must be positive");
    if (!(m.rho >= -1.0 && m.rho <= 1.0)) throw Error("Sabr: rho must be in [-1,1]");
}

inline void validate(const SinSv& m) {
    if (!(m.y0 > 0)) throw Error("SinSv: y0 must be positive");
    if (!(m.v0 > 0)) throw Error("SinSv: v0 must be positive");
    if (!(m.alpha_exp > 0)) throw Error("SinSv: alpha_exp must be positive");
    if (!(m.kappa >= 0)) throw Error("SinSv: kappa must be nonnegative");
    if (!(m.big_l >= 0)) throw Error("SinSv: big_l must be nonnegative");
    if (!std::isfinite(m.sigma1) || !std::isfinite(m.sigma2) || !std::isfinite(m.a1) ||
        !std::isfinite(m.a2))
        throw Error("SinSv: sigma1/sigma2/a1/a2 must be finite");
}

inline void validate(const ModelSpec& spec) {
    std::visit([](const auto& m) { validate(m); }, spec);
}

inline double spot(const ModelSpec& spec) {
    return std::visit(
        [](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DisplacedCev>) return m.x0;
            if constexpr (std::is_same_v<T, Sabr>) return m.f0;
            if constexpr (std::is_same_v<T, SinSv>) return m.y0;
        },
        spec);
}

// ---------------------------------------------------------------------------
// Ground-truth bubble labels

/// Closed-form strict-local-martingale rule per family. For Sabr the rule is
/// only known at gamma = 1; anything else throws UnsupportedModel.
inline bool is_strict_local_martingale(const ModelSpec& spec) {
    validate(spec);
    return std::visit(
        [](const auto& m) -> bool {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DisplacedCev>) {
                return m.beta > 1.0;
            } else if constexpr (std::is_same_v<T, Sabr>) {
                if (m.gamma != 1.0)
                    throw UnsupportedModel(
                        "closed-form label for Sabr is only available at gamma = 1");
                return m.rho > 0.0;
            } else {
                return m.a1 * m.sigma1 + m.a2 * m.sigma2 > 0.0;
            }
        },
        spec);
}

/// Local volatility of the displaced CEV family: sigma * (x + d)^beta.
inline double local_vol(const DisplacedCev& m, double /*t*/, double x) {
    if (!(x > 0)) throw Error("local_vol: x must be positive");
    return m.sigma * std::pow(x + m.d, m.beta);
}

// ---------------------------------------------------------------------------
// Tail-integral label for general local-volatility functions.
//
// X with dX = vol(t,X) dW is a true martingale iff the tail integral
// int_c^inf x / vol(t,x)^2 dx diverges for every admissible maturity.
// Numerically we fit a power law vol(t,x) ~ C x^p on [c, c_max] and use that
// int x^(1-2p) dx converges iff p > 1.

struct TailFitOptions {
    double window_factor = 10.0;  // c_max = window_factor * c unless overridden
    double c_max = 0.0;           // explicit upper end; 0 means use window_factor
    int samples = 32;             // log-spaced sample count
    double margin = 0.05;         // dead band around the critical exponent p = 1
    double fit_tol = 0.05;        // max |log-residual| tolerated by the fit
};

namespace detail {

struct PowerFit {
    double slope;
    double max_residual;
    int n;
};

inline PowerFit fit_log_slope(const std::vector<double>& lx, const std::vector<double>& ly) {
    const int n = static_cast<int>(lx.size());
    double mx = 0, my = 0;
    for (int i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double max_res = 0;
    for (int i = 0; i < n; ++i)
        max_res = std::max(max_res, std::abs(ly[i] - (intercept + slope * lx[i])));
    return {slope, max_res, n};
}

inline bool contains_time(const std::vector<double>& times, double t) {
    for (double s : times)
        if (std::abs(s - t) <= 1e-12 * std::max(1.0, std::abs(t))) return true;
    return false;
}

}  // namespace detail

/// Labels vol_fn as strict-local-martingale dynamics (true) or martingale
/// dynamics (false) by the tail-exponent fit described above, evaluated at
/// each maturity of t_grid outside local_max_times. vol_fn may return NaN
/// where it cannot be evaluated; such samples are skipped.
///
/// Throws IndeterminateFit when no admissible maturity produces a clean,
/// decisive fit (fewer than 4 samples, residual above fit_tol, or exponent
/// inside the margin band).
inline bool tail_integral_label(const std::function<double(double, double)>& vol_fn, double c,
                                const std::vector<double>& t_grid,
                                const std::vector<double>& local_max_times,
                                const TailFitOptions& opt = {}) {
    if (!(c > 0)) throw Error("tail_integral_label: cutoff must be positive");
    if (t_grid.empty()) throw Error("tail_integral_label: empty maturity grid");

    const double c_max = opt.c_max > 0 ? opt.c_max : opt.window_factor * c;
    if (!(c_max > c)) throw IndeterminateFit("tail window is empty");

    bool any_indeterminate = false;
    bool any_divergent = false;
    std::string why;

    const double lc = std::log(c), lcm = std::log(c_max);
    for (double t : t_grid) {
        if (detail::contains_time(local_max_times, t)) continue;

        std::vector<double> lx, ly;
        lx.reserve(opt.samples);
        ly.reserve(opt.samples);
        for (int i = 0; i < opt.samples; ++i) {
            const double x = std::exp(lc + (lcm - lc) * i / (opt.samples - 1.0));
            const double v = vol_fn(t, x);
            if (!std::isfinite(v) || v <= 0) continue;
            lx.push_back(std::log(x));
            ly.push_back(std::log(v));
        }
        if (static_cast<int>(lx.size()) < 4) {
            any_indeterminate = true;
            why = "fewer than 4 tail samples";
            continue;
        }
        const auto fit = detail::fit_log_slope(lx, ly);
        if (fit.max_residual > opt.fit_tol) {
            any_indeterminate = true;
            why = "tail is not power-law within fit tolerance";
            continue;
        }
        if (fit.slope > 1.0 + opt.margin) return true;  // convergent integral at this t
        if (fit.slope >= 1.0 - opt.margin) {
            any_indeterminate = true;
            why = "tail exponent inside the margin band";
            continue;
        }
        any_divergent = true;
    }

    if (any_indeterminate) throw IndeterminateFit("tail_integral_label: " + why);
    if (!any_divergent) throw IndeterminateFit("tail_integral_label: no admissible maturity");
    return false;
}

// ---------------------------------------------------------------------------
// Parameter sampling

struct Range {
    double lo;
    double hi;

    double sample(rng::Stream& s) const { return lo == hi ? lo : s.uniform(lo, hi); }
};

/// Displaced CEV protocol: fixed-or-uniform sigma and d, beta drawn from the
/// martingale half (subset of (0,1]) or the bubble half (subset of (1,inf)).
struct CevProtocol {
    double x0 = 2.0;
    Range sigma{0.2, 0.2};
    Range d{0.0, 0.2};
    Range beta_martingale{0.5, 1.0};
    Range beta_bubble{1.0, 3.0};  // sampled on the open side above 1
};

struct SabrProtocol {
    double f0 = 2.0;
    double gamma = 1.0;
    Range sigma0{1.0, 1.0};
    Range volvol{0.5, 0.5};
    Range rho_martingale{-0.8, 0.0};
    Range rho_bubble{0.0, 0.8};  // sampled on the open side above 0
};

struct SinProtocol {
    double y0 = 2.0;
    double v0 = 0.5;
    double alpha_exp = 1.0;
    double kappa = 0.0;
    double big_l = 0.0;
    double sigma2 = -0.5;
    double a1 = 1.8;
    double a2 = 1.2;
    Range sigma1_martingale{0.0, 1.0 / 3.0};
    Range sigma1_bubble{1.0 / 3.0, 1.0};  // sampled on the open side above 1/3
};

using FamilyProtocol = std::variant<CevProtocol, SabrProtocol, SinProtocol>;

struct SamplingProtocol {
    FamilyProtocol family;
    double balance = 0.5;  // fraction of strict local martingales
    std::uint64_t seed = 0;
};

namespace detail {

// Draw from (lo, hi]: uniform01() is in [0,1), so lo + (hi-lo)*(1-u) > lo.
inline double sample_open_below(const Range& r, rng::Stream& s) {
    return r.lo == r.hi ? r.hi : r.lo + (r.hi - r.lo) * (1.0 - s.uniform01());
}

inline ModelSpec sample_one(const CevProtocol& p, bool bubble, rng::Stream& s) {
    DisplacedCev m;
    m.sigma = p.sigma.sample(s);
    m.d = p.d.sample(s);
    m.beta = bubble ? sample_open_below(p.beta_bubble, s) : p.beta_martingale.sample(s);
    m.x0 = p.x0;
    return m;
}

inline ModelSpec sample_one(const SabrProtocol& p, bool bubble, rng::Stream& s) {
    Sabr m;
    m.f0 = p.f0;
    m.gamma = p.gamma;
    m.sigma0 = p.sigma0.sample(s);
    m.volvol = p.volvol.sample(s);
    m.rho = bubble ? sample_open_below(p.rho_bubble, s) : p.rho_martingale.sample(s);
    return m;
}

inline ModelSpec sample_one(const SinProtocol& p, bool bubble, rng::Stream& s) {
    SinSv m;
    m.y0 = p.y0;
    m.v0 = p.v0;
    m.alpha_exp = p.alpha_exp;
    m.kappa = p.kappa;
    m.big_l = p.big_l;
    m.sigma2 = p.sigma2;
    m.a1 = p.a1;
    m.a2 = p.a2;
    m.sigma1 = bubble ? sample_open_below(p.sigma1_bubble, s) : p.sigma1_martingale.sample(s);
    return m;
}

inline void validate_ranges(const SamplingProtocol& proto) {
    // Each half must produce the label it claims; probe the endpoints.
    std::visit(
        [](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, CevProtocol>) {
                if (!(p.beta_martingale.lo > 0) || p.beta_martingale.hi > 1.0)
                    throw Error("CevProtocol: martingale half must lie in (0, 1]");
                if (p.beta_bubble.lo < 1.0 || !(p.beta_bubble.hi > 1.0))
                    throw Error("CevProtocol: bubble half must lie in (1, inf)");
                if (!(p.sigma.lo > 0) || p.sigma.hi < p.sigma.lo || p.d.lo < 0 ||
                    p.d.hi < p.d.lo || !(p.x0 > 0))
                    throw Error("CevProtocol: bad sigma/d/x0 ranges");
            } else if constexpr (std::is_same_v<T, SabrProtocol>) {
                if (p.gamma != 1.0)
                    throw UnsupportedModel("SabrProtocol: labels require gamma = 1");
                if (p.rho_martingale.lo < -1.0 || p.rho_martingale.hi > 0.0)
                    throw Error("SabrProtocol: martingale half must lie in [-1, 0]");
                if (p.rho_bubble.lo < 0.0 || !(p.rho_bubble.hi > 0.0) || p.rho_bubble.hi > 1.0)
                    throw Error("SabrProtocol: bubble half must lie in (0, 1]");
                if (!(p.sigma0.lo > 0) || !(p.volvol.lo > 0) || !(p.f0 > 0))
                    throw Error("SabrProtocol: bad sigma0/volvol/f0 ranges");
            } else {
                if (p.a1 == 0.0) throw Error("SinProtocol: a1 = 0 cannot split on sigma1");
                const double threshold = -p.a2 * p.sigma2 / p.a1;
                const bool up = p.a1 > 0;  // bubble side is sigma1 > threshold when a1 > 0
                const auto& mart = p.sigma1_martingale;
                const auto& bub = p.sigma1_bubble;
                const bool mart_ok = up ? mart.hi <= threshold + 1e-12 : mart.lo >= threshold - 1e-12;
                const bool bub_ok = up ? bub.lo >= threshold - 1e-12 && bub.hi > threshold
                                       : bub.hi <= threshold + 1e-12 && bub.lo < threshold;
                if (!mart_ok || !bub_ok)
                    throw Error("SinProtocol: sigma1 halves straddle the martingale threshold");
            }
        },
        proto.family);
    if (!(proto.balance >= 0.0 && proto.balance <= 1.0))
        throw Error("SamplingProtocol: balance must be in [0,1]");
}

}  // namespace detail

/// Draws n model specs with exactly n*balance strict local martingales.
/// Sample i depends only on (seed, i), so any evaluation order (or a later
/// parallel implementation) yields identical output.
inline std::vector<std::pair<ModelSpec, bool>> sample_models(const SamplingProtocol& proto,
                                                             std::size_t n) {
    detail::validate_ranges(proto);
    if (n < 2) throw Error("sample_models: n must be at least 2");
    const double nb = static_cast<double>(n) * proto.balance;
    if (std::abs(nb - std::round(nb)) > 1e-9)
        throw Error("sample_models: n * balance must be integral");
    const std::size_t n_bubble = static_cast<std::size_t>(std::llround(nb));

    std::vector<std::pair<ModelSpec, bool>> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool bubble = i < n_bubble;
        rng::Stream s(proto.seed, i);
        ModelSpec spec = std::visit(
            [&](const auto& p) { return detail::sample_one(p, bubble, s); }, proto.family);
        validate(spec);
        if (is_strict_local_martingale(spec) != bubble)
            throw Error("sample_models: sampled spec does not match its half");
        out.emplace_back(std::move(spec), bubble);
    }
    return out;
}

}  // namespace bubble::models
