#pragma once

#include <cmath>
#include <vector>

#include "bubble/errors.hpp"
#include "bubble/models.hpp"
#include "bubble/monte_carlo.hpp"
#include "bubble/pricing.hpp"

namespace bubble::pricing {

enum class Backend { analytic, monte_carlo };

inline const char* to_string(Backend b) {
    return b == Backend::analytic ? "analytic" : "monte_carlo";
}

/// Which pricing route to use, and the Monte Carlo settings for routes that
/// need simulation (Sin always; the SABR defect term when alpha > 0).
struct PricingPolicy {
    Backend backend = Backend::analytic;
    mc::McConfig mc;
};

/// Martingale defect m(t) = x0 - E[X_t]. The analytic backend exists only
/// for the displaced CEV family; Monte Carlo serves any spec.
inline double martingale_defect(const models::ModelSpec& spec, double t,
                                const PricingPolicy& policy) {
    models::validate(spec);
    if (!(t > 0)) throw Error("martingale_defect: t must be positive");
    if (policy.backend == Backend::analytic) {
        if (const auto* cev = std::get_if<models::DisplacedCev>(&spec)) return cev_defect(*cev, t);
        throw UnsupportedModel("analytic defect is only available for the displaced CEV family");
    }
    const auto curve = mc::mc_mean_curve(spec, {t}, policy.mc);
    return models::spot(spec) - curve.front().mean;
}

namespace detail {

// Defect curve along a maturity grid, shared by surface construction.
// Returns (defect, standard error) per maturity; analytic entries have se 0.
inline std::vector<mc::MeanSe> defect_curve(const models::ModelSpec& spec,
                                            const std::vector<double>& maturities,
                                            const PricingPolicy& policy, bool analytic_route) {
    std::vector<mc::MeanSe> out(maturities.size());
    if (const auto* cev = std::get_if<models::DisplacedCev>(&spec); cev && analytic_route) {
        for (std::size_t i = 0; i < maturities.size(); ++i)
            out[i] = {cev_defect(*cev, maturities[i]), 0.0};
        return out;
    }
    if (const auto* sabr = std::get_if<models::Sabr>(&spec); sabr && analytic_route) {
        if (sabr->rho <= 0.0) return out;  // true martingale, defect identically zero
        const auto curve = mc::mc_mean_curve(spec, maturities, policy.mc);
        for (std::size_t i = 0; i < maturities.size(); ++i)
            out[i] = {sabr->f0 - curve[i].mean, curve[i].se};
        return out;
    }
    throw UnsupportedModel("no analytic defect curve for this family");
}

}  // namespace detail

/// Collateralized call price C^alpha(t,k) = E[(X_t-k)^+] + alpha m(t).
inline double collateralized_call(const models::ModelSpec& spec, double t, double k, double alpha,
                                  const PricingPolicy& policy) {
    models::validate(spec);
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("collateralized_call: alpha not in [0,1]");
    if (policy.backend == Backend::monte_carlo) {
        SurfaceGrid g{{t}, {k}};
        return mc::mc_call_surface(spec, g, alpha, policy.mc).prices[0];
    }
    if (const auto* cev = std::get_if<models::DisplacedCev>(&spec))
        return cev_call(*cev, t, k) + alpha * cev_defect(*cev, t);
    if (const auto* sabr = std::get_if<models::Sabr>(&spec)) {
        const double vol = hagan_implied_vol(*sabr, t, k);
        double price = black_call(sabr->f0, k, t, vol);
        if (alpha > 0.0 && sabr->rho > 0.0)
            price += alpha * martingale_defect(spec, t,
                                               {Backend::monte_carlo, policy.mc});
        return price;
    }
    throw UnsupportedModel("no analytic pricing for the Sin family; use the MC backend");
}

/// Full collateralized call surface for one underlying.
///
/// Routes: displaced CEV analytic (chi-square formulas), SABR gamma = 1
/// analytic (Hagan implied vol into Black, plus a Monte Carlo defect term
/// when alpha > 0 and rho > 0), and Monte Carlo for everything (the only
/// backend for Sin). The analytic SABR surface is tagged monte_carlo when it
/// carries a simulated defect, with the defect's standard error per cell.
inline PriceSurface price_surface(const models::ModelSpec& spec, const SurfaceGrid& grid,
                                  double alpha, const PricingPolicy& policy) {
    models::validate(spec);
    grid.validate();
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("price_surface: alpha not in [0,1]");

    if (policy.backend == Backend::monte_carlo) {
        auto surf = mc::mc_call_surface(spec, grid, alpha, policy.mc);
        surf.validate();
        return surf;
    }

    PriceSurface surf;
    surf.grid = grid;
    surf.alpha = alpha;
    surf.x0 = models::spot(spec);
    surf.prices.resize(grid.cells());
    surf.source = SurfaceSource::analytic;

    const std::size_t nk = grid.n_strikes();
    if (const auto* cev = std::get_if<models::DisplacedCev>(&spec)) {
        for (std::size_t it = 0; it < grid.n_maturities(); ++it) {
            const double t = grid.maturities[it];
            const double defect = alpha * cev_defect(*cev, t);
            for (std::size_t ik = 0; ik < nk; ++ik)
                surf.prices[it * nk + ik] = cev_call(*cev, t, grid.strikes[ik]) + defect;
        }
        surf.validate();
        return surf;
    }

    if (const auto* sabr = std::get_if<models::Sabr>(&spec)) {
        const bool needs_defect = alpha > 0.0 && sabr->rho > 0.0;
        const auto defects = detail::defect_curve(spec, grid.maturities, policy, true);
        if (needs_defect) {
            surf.source = SurfaceSource::monte_carlo;
            surf.std_errors = std::vector<double>(grid.cells());
        }
        for (std::size_t it = 0; it < grid.n_maturities(); ++it) {
            const double t = grid.maturities[it];
            for (std::size_t ik = 0; ik < nk; ++ik) {
                const double vol = hagan_implied_vol(*sabr, t, grid.strikes[ik]);
                double price = black_call(sabr->f0, grid.strikes[ik], t, vol) +
                               alpha * defects[it].mean;
                surf.prices[it * nk + ik] = std::max(0.0, price);
                if (needs_defect)
                    (*surf.std_errors)[it * nk + ik] = alpha * defects[it].se;
            }
        }
        surf.validate();
        return surf;
    }

    throw UnsupportedModel("no analytic pricing for the Sin family; use the MC backend");
}

}  // namespace bubble::pricing
