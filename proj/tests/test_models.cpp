#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "bubble/models.hpp"

using namespace bubble::models;
using bubble::Error;
using bubble::IndeterminateFit;
using bubble::UnsupportedModel;

TEST_CASE("closed-form strict-local-martingale rules", "[models]") {
    REQUIRE(is_strict_local_martingale(DisplacedCev{0.2, 1.2, 0.1, 2.0}));
    REQUIRE_FALSE(is_strict_local_martingale(DisplacedCev{0.2, 1.0, 0.1, 2.0}));
    REQUIRE_FALSE(is_strict_local_martingale(DisplacedCev{0.2, 0.7, 0.0, 2.0}));

    REQUIRE_FALSE(is_strict_local_martingale(Sabr{2.0, 1.0, 1.0, 0.5, -0.5}));
    REQUIRE(is_strict_local_martingale(Sabr{2.0, 1.0, 1.0, 0.5, 0.25}));
    REQUIRE_THROWS_AS(is_strict_local_martingale(Sabr{2.0, 1.0, 0.7, 0.5, 0.25}),
                      UnsupportedModel);

    // 1.8*1 + 1.2*(-0.5) = 1.2 > 0
    REQUIRE(is_strict_local_martingale(SinSv{2.0, 0.5, 1.0, 0.0, 0.0, 1.0, -0.5, 1.8, 1.2}));
    REQUIRE_FALSE(
        is_strict_local_martingale(SinSv{2.0, 0.5, 1.0, 0.0, 0.0, 0.25, -0.5, 1.8, 1.2}));
    // exactly representable boundary: 1*0.5 + 1*(-0.5) = 0 is a martingale
    REQUIRE_FALSE(
        is_strict_local_martingale(SinSv{2.0, 0.5, 1.0, 0.0, 0.0, 0.5, -0.5, 1.0, 1.0}));
}

TEST_CASE("spec validation rejects bad parameters", "[models]") {
    REQUIRE_THROWS_AS(validate(DisplacedCev{-0.2, 1.0, 0.0, 2.0}), Error);
    REQUIRE_THROWS_AS(validate(DisplacedCev{0.2, 0.0, 0.0, 2.0}), Error);
    REQUIRE_THROWS_AS(validate(DisplacedCev{0.2, 1.0, -0.1, 2.0}), Error);
    REQUIRE_THROWS_AS(validate(Sabr{2.0, 1.0, 1.0, 0.5, 1.5}), Error);
    REQUIRE_THROWS_AS(validate(SinSv{2.0, -0.5, 1.0, 0.0, 0.0, 1.0, -0.5, 1.8, 1.2}), Error);
}

TEST_CASE("local_vol evaluates sigma (x+d)^beta", "[models]") {
    REQUIRE(local_vol(DisplacedCev{0.2, 1.0, 0.0, 2.0}, 0.3, 2.0) == Catch::Approx(0.4));
    REQUIRE(local_vol(DisplacedCev{0.2, 0.0, 0.0, 2.0}, 1.7, 5.33) == Catch::Approx(0.2));
    REQUIRE(local_vol(DisplacedCev{0.2, 1.5, 0.5, 2.0}, 0.0, 1.5) ==
            Catch::Approx(0.5656854249492380).epsilon(1e-14));
    REQUIRE_THROWS_AS(local_vol(DisplacedCev{0.2, 1.0, 0.0, 2.0}, 0.0, -1.0), Error);
}

TEST_CASE("local_vol is increasing in x for positive beta", "[models]") {
    bubble::rng::Stream s(11, 0);
    for (int i = 0; i < 300; ++i) {
        DisplacedCev m{s.uniform(0.05, 1.0), s.uniform(0.05, 3.0), s.uniform(0.0, 1.0), 2.0};
        const double x1 = s.uniform(0.01, 10.0);
        const double x2 = x1 + s.uniform(0.001, 5.0);
        REQUIRE(local_vol(m, 0.0, x2) > local_vol(m, 0.0, x1));
    }
}

TEST_CASE("tail_integral_label recovers the CEV rule from exact vol functions", "[models]") {
    auto cev_vol = [](double beta) {
        return [beta](double, double x) { return 0.2 * std::pow(x, beta); };
    };
    const std::vector<double> t_grid = {1.0, 1.5, 2.0};

    // Panel from the margin=0.05 band: decisive outside, indeterminate inside.
    for (double beta : {0.5, 0.7, 0.9}) {
        CAPTURE(beta);
        REQUIRE_FALSE(tail_integral_label(cev_vol(beta), 2.0, t_grid, {}));
    }
    for (double beta : {1.06, 1.1, 1.3, 2.0}) {
        CAPTURE(beta);
        REQUIRE(tail_integral_label(cev_vol(beta), 2.0, t_grid, {}));
    }
    for (double beta : {1.0 - 0.01, 1.0 + 0.01}) {
        CAPTURE(beta);
        REQUIRE_THROWS_AS(tail_integral_label(cev_vol(beta), 2.0, t_grid, {}),
                          IndeterminateFit);
    }
}

TEST_CASE("tail_integral_label degenerate fits are errors, not labels", "[models]") {
    // Too few usable samples: vol undefined beyond 1.1 * c.
    auto truncated = [](double, double x) {
        return x > 2.2 ? std::nan("") : 0.2 * x;
    };
    REQUIRE_THROWS_AS(tail_integral_label(truncated, 2.0, {1.0}, {}), IndeterminateFit);

    // Oscillation on top of a power law breaks the fit tolerance.
    auto wiggly = [](double, double x) { return 0.2 * x * (1.0 + 0.3 * std::sin(8 * x)); };
    REQUIRE_THROWS_AS(tail_integral_label(wiggly, 2.0, {1.0}, {}), IndeterminateFit);
}

TEST_CASE("tail_integral_label honors the local-maximum exclusion set", "[models]") {
    // Convergent tail only at t = 1.5. Admissible: bubble. Excluded as a
    // local maximum: the remaining maturities diverge, so martingale.
    auto vol = [](double t, double x) {
        const double beta = std::abs(t - 1.5) < 1e-9 ? 1.5 : 0.8;
        return 0.2 * std::pow(x, beta);
    };
    REQUIRE(tail_integral_label(vol, 2.0, {1.0, 1.5, 2.0}, {}));
    REQUIRE_FALSE(tail_integral_label(vol, 2.0, {1.0, 1.5, 2.0}, {1.5}));
    REQUIRE_FALSE(tail_integral_label(vol, 2.0, {1.0, 2.0}, {}));
}

TEST_CASE("sample_models balances halves exactly and deterministically", "[models]") {
    SamplingProtocol proto;
    proto.family = CevProtocol{2.0, {0.2, 0.2}, {0.0, 0.2}, {0.5, 1.0}, {1.0, 3.0}};
    proto.seed = 77;

    auto batch = sample_models(proto, 4);
    REQUIRE(batch.size() == 4);
    int bubbles = 0;
    for (const auto& [spec, label] : batch) {
        const auto& cev = std::get<DisplacedCev>(spec);
        if (label) {
            REQUIRE(cev.beta > 1.0);
            REQUIRE(cev.beta < 3.0);
            ++bubbles;
        } else {
            REQUIRE(cev.beta > 0.5);
            REQUIRE(cev.beta <= 1.0);
        }
        REQUIRE(is_strict_local_martingale(spec) == label);
    }
    REQUIRE(bubbles == 2);

    auto batch2 = sample_models(proto, 4);
    for (size_t i = 0; i < 4; ++i) {
        REQUIRE(std::get<DisplacedCev>(batch[i].first).beta ==
                std::get<DisplacedCev>(batch2[i].first).beta);
        REQUIRE(std::get<DisplacedCev>(batch[i].first).d ==
                std::get<DisplacedCev>(batch2[i].first).d);
    }
}

TEST_CASE("sample_models covers the Sin protocol halves", "[models]") {
    SamplingProtocol proto;
    proto.family = SinProtocol{};
    proto.seed = 5;
    auto batch = sample_models(proto, 2);
    int bubbles = 0;
    for (const auto& [spec, label] : batch) {
        const auto& sin = std::get<SinSv>(spec);
        if (label) {
            REQUIRE(sin.sigma1 > 1.0 / 3.0);
            ++bubbles;
        } else {
            REQUIRE(sin.sigma1 <= 1.0 / 3.0);
        }
    }
    REQUIRE(bubbles == 1);
}

TEST_CASE("sampled labels agree with their half over a large batch", "[models]") {
    SamplingProtocol proto;
    proto.family = SabrProtocol{};
    proto.seed = 3;
    auto batch = sample_models(proto, 200);
    std::size_t bubbles = 0;
    for (const auto& [spec, label] : batch) {
        REQUIRE(is_strict_local_martingale(spec) == label);
        bubbles += label;
    }
    REQUIRE(bubbles == 100);
}

TEST_CASE("invalid protocol ranges are construction errors", "[models]") {
    SamplingProtocol proto;
    proto.family = CevProtocol{2.0, {0.2, 0.2}, {0.0, 0.2}, {0.5, 1.4}, {1.0, 3.0}};
    REQUIRE_THROWS_AS(sample_models(proto, 4), Error);

    SamplingProtocol sin_bad;
    SinProtocol p;
    p.sigma1_martingale = {0.0, 0.5};  // crosses the 1/3 threshold
    sin_bad.family = p;
    REQUIRE_THROWS_AS(sample_models(sin_bad, 4), Error);

    SamplingProtocol odd;
    odd.family = CevProtocol{};
    REQUIRE_THROWS_AS(sample_models(odd, 5), Error);  // 5 * 0.5 not integral
}
