#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "bubble/errors.hpp"
#include "bubble/models.hpp"
#include "bubble/pricing.hpp"
#include "bubble/rng.hpp"

namespace bubble::mc {

enum class Scheme { euler_full_truncation, log_euler };

struct McConfig {
    std::size_t n_paths = 200000;
    double dt = 0.01;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::log_euler;
    bool antithetic = true;

    void validate() const {
        if (n_paths < 2) throw Error("McConfig: n_paths must be at least 2");
        if (antithetic && n_paths % 2 != 0)
            throw Error("McConfig: antithetic pairing needs an even n_paths");
        if (!(dt > 0)) throw Error("McConfig: dt must be positive");
    }
};

// ---------------------------------------------------------------------------
// Reductions: block-pairwise summation over a fixed tree so results do not
// depend on evaluation schedule, and fl-monotonicity is preserved for the
// common-random-number dominance argument.

namespace detail {

inline constexpr std::size_t kSumBlock = 256;

inline double pairwise_combine(std::vector<double>& part) {
    std::size_t n = part.size();
    while (n > 1) {
        const std::size_t half = (n + 1) / 2;
        for (std::size_t i = 0; i + half < n; ++i) part[i] += part[i + half];
        n = half;
    }
    return n == 1 ? part[0] : 0.0;
}

}  // namespace detail

inline double pairwise_sum(std::span<const double> v) {
    std::vector<double> part;
    part.reserve(v.size() / detail::kSumBlock + 1);
    for (std::size_t i = 0; i < v.size(); i += detail::kSumBlock) {
        double b = 0.0;
        const std::size_t end = std::min(v.size(), i + detail::kSumBlock);
        for (std::size_t j = i; j < end; ++j) b += v[j];
        part.push_back(b);
    }
    return detail::pairwise_combine(part);
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

/// Mean and standard error of a sample, block-pairwise.
inline MeanSe mean_se(std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    const double s1 = pairwise_sum(v);
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = v[i] * v[i];
    const double s2 = pairwise_sum(sq);
    const double mean = s1 / n;
    const double var = std::max(0.0, (s2 - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n)};
}

// ---------------------------------------------------------------------------
// Time stepping

namespace detail {

struct Segment {
    std::size_t n_full;
    double dt, sqrt_dt;
    double rem, sqrt_rem;  // final partial step, 0 if dt divides the segment
};

inline std::vector<Segment> build_segments(const std::vector<double>& maturities, double dt) {
    std::vector<Segment> segs;
    segs.reserve(maturities.size());
    double t0 = 0.0;
    for (double t1 : maturities) {
        if (!(t1 > t0)) throw Error("maturities must be increasing and positive");
        const double len = t1 - t0;
        auto n_full = static_cast<std::size_t>(std::floor(len / dt + 1e-12));
        double rem = len - static_cast<double>(n_full) * dt;
        if (rem < 1e-12) rem = 0.0;
        segs.push_back({n_full, dt, std::sqrt(dt), rem, rem > 0 ? std::sqrt(rem) : 0.0});
        t0 = t1;
    }
    return segs;
}

// Per-pair stream: antithetic twins 2i and 2i+1 share the draws of substream
// (seed, i) with opposite signs, so every path is still a pure function of
// (seed, path index).
struct PathKey {
    std::uint64_t substream;
    double sign;
};

inline PathKey path_key(const McConfig& cfg, std::size_t path) {
    if (cfg.antithetic) return {path / 2, path % 2 == 0 ? 1.0 : -1.0};
    return {path, 1.0};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sin-model simulation. The SABR (gamma = 1) simulator reuses this engine:
// with v = sigma_t the SABR pair (F, sigma) is the Sin model with sigma1 = 1,
// sigma2 = 0, alpha_exp = 1, kappa = 0, a1 = rho volvol, a2 =
// sqrt(1-rho^2) volvol.

namespace detail {

struct SinState {
    double ln_y;  // log scheme
    double y;     // euler scheme
    double v;
};

template <bool LogScheme>
inline void sin_step(SinState& st, const models::SinSv& m, double s2sum, double dt,
                     double sqrt_dt, double z1, double z2) {
    const double vp = st.v > 0.0 ? st.v : 0.0;
    const double vf = m.alpha_exp == 1.0 ? vp : std::pow(vp, m.alpha_exp);
    const double dy_noise = vf * (m.sigma1 * z1 + m.sigma2 * z2) * sqrt_dt;
    if constexpr (LogScheme) {
        st.ln_y += -0.5 * s2sum * vf * vf * dt + dy_noise;
    } else {
        if (st.y > 0.0) {
            st.y += st.y * dy_noise;
            if (st.y <= 0.0) st.y = 0.0;  // absorbed
        }
    }
    st.v += vp * (m.a1 * z1 + m.a2 * z2) * sqrt_dt + m.kappa * (m.big_l - vp) * dt;
}

// One antithetic unit (a path, or a +/- twin pair) of the Sin dynamics;
// unit u consumes only substream (seed, u), so units are order-independent.
// harvested[seg][w] receives the unit's terminals.
template <bool LogScheme>
inline void simulate_sin_unit(const models::SinSv& m, const std::vector<Segment>& segs,
                              const McConfig& cfg, std::size_t u,
                              std::array<double, 2>* harvested) {
    const double s2sum = m.sigma1 * m.sigma1 + m.sigma2 * m.sigma2;
    const std::size_t twins = cfg.antithetic ? 2 : 1;
    rng::Stream s(cfg.seed, u);
    SinState st[2];
    for (std::size_t w = 0; w < twins; ++w) st[w] = {std::log(m.y0), m.y0, m.v0};
    for (std::size_t seg = 0; seg < segs.size(); ++seg) {
        const auto& sg = segs[seg];
        for (std::size_t k = 0; k <= sg.n_full; ++k) {
            double dt, sdt;
            if (k < sg.n_full) {
                dt = sg.dt;
                sdt = sg.sqrt_dt;
            } else if (sg.rem > 0) {
                dt = sg.rem;
                sdt = sg.sqrt_rem;
            } else {
                break;
            }
            const double z1 = s.normal();
            const double z2 = s.normal();
            sin_step<LogScheme>(st[0], m, s2sum, dt, sdt, z1, z2);
            if (twins == 2) sin_step<LogScheme>(st[1], m, s2sum, dt, sdt, -z1, -z2);
        }
        for (std::size_t w = 0; w < twins; ++w) {
            const double y = LogScheme ? std::exp(st[w].ln_y) : st[w].y;
            if (!std::isfinite(y)) throw NumericalError("sin simulation produced NaN/Inf");
            harvested[seg][w] = y;
        }
    }
}

template <bool LogScheme>
inline void simulate_sin_block(const models::SinSv& m, const std::vector<Segment>& segs,
                               const McConfig& cfg, std::vector<std::vector<double>>& out) {
    const std::size_t n_units = cfg.antithetic ? cfg.n_paths / 2 : cfg.n_paths;
    const std::size_t twins = cfg.antithetic ? 2 : 1;
    std::vector<std::array<double, 2>> harvested(segs.size());
    for (std::size_t u = 0; u < n_units; ++u) {
        simulate_sin_unit<LogScheme>(m, segs, cfg, u,
                                     reinterpret_cast<double(*)[2]>(harvested.data()));
        for (std::size_t seg = 0; seg < segs.size(); ++seg)
            for (std::size_t w = 0; w < twins; ++w) out[seg][u * twins + w] = harvested[seg][w];
    }
}

}  // namespace detail

/// Terminal samples of Y at each maturity (strictly increasing), one shared
/// set of paths harvested along the way. Layout: out[maturity][path].
inline std::vector<std::vector<double>> simulate_sin_terminals(
    const models::SinSv& m, const std::vector<double>& maturities, const McConfig& cfg) {
    models::validate(m);
    cfg.validate();
    const auto segs = detail::build_segments(maturities, cfg.dt);
    std::vector<std::vector<double>> out(maturities.size(),
                                         std::vector<double>(cfg.n_paths));
    if (cfg.scheme == Scheme::log_euler)
        detail::simulate_sin_block<true>(m, segs, cfg, out);
    else
        detail::simulate_sin_block<false>(m, segs, cfg, out);
    return out;
}

inline std::vector<double> simulate_sin_terminal(const models::SinSv& m, double t,
                                                 const McConfig& cfg) {
    return simulate_sin_terminals(m, {t}, cfg).front();
}

inline models::SinSv sabr_as_sin(const models::Sabr& m) {
    if (m.gamma != 1.0) throw UnsupportedModel("SABR simulation requires gamma = 1");
    models::SinSv s{};
    s.y0 = m.f0;
    s.v0 = m.sigma0;
    s.alpha_exp = 1.0;
    s.kappa = 0.0;
    s.big_l = 0.0;
    s.sigma1 = 1.0;
    s.sigma2 = 0.0;
    s.a1 = m.rho * m.volvol;
    s.a2 = std::sqrt(1.0 - m.rho * m.rho) * m.volvol;
    return s;
}

inline std::vector<std::vector<double>> simulate_sabr_terminals(
    const models::Sabr& m, const std::vector<double>& maturities, const McConfig& cfg) {
    models::validate(m);
    return simulate_sin_terminals(sabr_as_sin(m), maturities, cfg);
}

// ---------------------------------------------------------------------------
// Displaced CEV by Euler on the shifted coordinate S = X + d (plain CEV
// absorbed at zero); terminals are reported as X = S - d.

namespace detail {

inline double cev_pow(double s, double beta) {
    if (beta == 1.0) return s;
    if (beta == 2.0) return s * s;
    if (beta == 0.5) return std::sqrt(s);
    if (beta == 1.5) return s * std::sqrt(s);
    return std::pow(s, beta);
}

}  // namespace detail

inline std::vector<std::vector<double>> simulate_cev_terminals(
    const models::DisplacedCev& m, const std::vector<double>& maturities, const McConfig& cfg) {
    models::validate(m);
    cfg.validate();
    const auto segs = detail::build_segments(maturities, cfg.dt);
    std::vector<std::vector<double>> out(maturities.size(),
                                         std::vector<double>(cfg.n_paths));
    const double s0 = m.x0 + m.d;
    const std::size_t n_units = cfg.antithetic ? cfg.n_paths / 2 : cfg.n_paths;
    const std::size_t twins = cfg.antithetic ? 2 : 1;

    for (std::size_t u = 0; u < n_units; ++u) {
        rng::Stream rs(cfg.seed, u);
        double s[2] = {s0, s0};
        for (std::size_t seg = 0; seg < segs.size(); ++seg) {
            const auto& sg = segs[seg];
            for (std::size_t k = 0; k <= sg.n_full; ++k) {
                double sdt;
                if (k < sg.n_full)
                    sdt = sg.sqrt_dt;
                else if (sg.rem > 0)
                    sdt = sg.sqrt_rem;
                else
                    break;
                const double z = rs.normal();
                for (std::size_t w = 0; w < twins; ++w) {
                    if (s[w] <= 0.0) continue;  // absorbed at the displaced boundary
                    s[w] += m.sigma * detail::cev_pow(s[w], m.beta) * (w == 0 ? z : -z) * sdt;
                    if (s[w] <= 0.0) s[w] = 0.0;
                }
            }
            for (std::size_t w = 0; w < twins; ++w) {
                if (!std::isfinite(s[w])) throw NumericalError("cev simulation produced NaN/Inf");
                out[seg][u * twins + w] = s[w] - m.d;
            }
        }
    }
    return out;
}

/// Terminal samples for any model family, as the underlying X itself.
inline std::vector<std::vector<double>> simulate_terminals(
    const models::ModelSpec& spec, const std::vector<double>& maturities, const McConfig& cfg) {
    return std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, models::DisplacedCev>)
                return simulate_cev_terminals(m, maturities, cfg);
            else if constexpr (std::is_same_v<T, models::Sabr>)
                return simulate_sabr_terminals(m, maturities, cfg);
            else
                return simulate_sin_terminals(m, maturities, cfg);
        },
        spec);
}

/// Sample mean and standard error of X_t per maturity.
inline std::vector<MeanSe> mc_mean_curve(const models::ModelSpec& spec,
                                         const std::vector<double>& maturities,
                                         const McConfig& cfg) {
    const auto terminals = simulate_terminals(spec, maturities, cfg);
    std::vector<MeanSe> out;
    out.reserve(terminals.size());
    for (const auto& ys : terminals) out.push_back(mean_se(ys));
    return out;
}

// ---------------------------------------------------------------------------
// Call surfaces with common random numbers across strikes.

namespace detail {

// One pass over the terminals for a single strike: block-pairwise sums of
// payoff, payoff^2 and payoff*y, feeding the combined-estimator variance.
struct PayoffSums {
    double pay = 0, pay2 = 0, payy = 0;
};

inline PayoffSums payoff_sums(std::span<const double> ys, double k) {
    std::vector<double> p_part, p2_part, py_part;
    const std::size_t nb = ys.size() / kSumBlock + 1;
    p_part.reserve(nb);
    p2_part.reserve(nb);
    py_part.reserve(nb);
    for (std::size_t i = 0; i < ys.size(); i += kSumBlock) {
        double bp = 0, bp2 = 0, bpy = 0;
        const std::size_t end = std::min(ys.size(), i + kSumBlock);
        for (std::size_t j = i; j < end; ++j) {
            const double d = ys[j] - k;
            const double pay = d > 0.0 ? d : 0.0;
            bp += pay;
            bp2 += pay * pay;
            bpy += pay * ys[j];
        }
        p_part.push_back(bp);
        p2_part.push_back(bp2);
        py_part.push_back(bpy);
    }
    return {pairwise_combine(p_part), pairwise_combine(p2_part), pairwise_combine(py_part)};
}

}  // namespace detail

/// Monte Carlo collateralized call surface: prices are
///   mean (Y_T - K)^+ + alpha (x0 - mean Y_T)
/// with common random numbers across all strikes of a maturity, and
/// std_errors from the sample variance of the combined per-path estimator
/// f = payoff + alpha (x0 - Y_T).
inline pricing::PriceSurface mc_call_surface(const models::ModelSpec& spec,
                                             const pricing::SurfaceGrid& grid, double alpha,
                                             const McConfig& cfg) {
    grid.validate();
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("mc_call_surface: alpha not in [0,1]");
    const double x0 = models::spot(spec);
    const auto terminals = simulate_terminals(spec, grid.maturities, cfg);

    pricing::PriceSurface surf;
    surf.grid = grid;
    surf.alpha = alpha;
    surf.x0 = x0;
    surf.source = pricing::SurfaceSource::monte_carlo;
    surf.prices.resize(grid.cells());
    surf.std_errors = std::vector<double>(grid.cells());

    const double n = static_cast<double>(cfg.n_paths);
    const std::size_t nk = grid.n_strikes();
    for (std::size_t it = 0; it < grid.n_maturities(); ++it) {
        const auto& ys = terminals[it];
        const auto y_stats = mean_se(ys);
        std::vector<double> sq(ys.size());
        for (std::size_t i = 0; i < ys.size(); ++i) sq[i] = ys[i] * ys[i];
        const double sum_y = y_stats.mean * n;
        const double sum_y2 = pairwise_sum(sq);
        for (std::size_t ik = 0; ik < nk; ++ik) {
            const double k = grid.strikes[ik];
            const auto ps = detail::payoff_sums(ys, k);
            const double mean_f = (ps.pay + alpha * (n * x0 - sum_y)) / n;
            // E f^2 pieces: payoff^2 + 2 alpha payoff (x0 - y) + alpha^2 (x0 - y)^2
            const double sum_f2 = ps.pay2 + 2.0 * alpha * (x0 * ps.pay - ps.payy) +
                                  alpha * alpha * (n * x0 * x0 - 2.0 * x0 * sum_y + sum_y2);
            const double var = std::max(0.0, (sum_f2 - n * mean_f * mean_f) / (n - 1.0));
            // Noise in the defect term can push deep-OTM martingale cells a
            // hair below zero; prices are floored there (max is monotone, so
            // strike dominance survives).
            surf.prices[it * nk + ik] = std::max(0.0, mean_f);
            (*surf.std_errors)[it * nk + ik] = std::sqrt(var / n);
        }
    }
    return surf;
}

}  // namespace bubble::mc
