#include <doctest.h>

#include <cmath>
#include <random>

#include "mixcens/influence.hpp"

using namespace mixcens;

namespace {

Observation make_obs(int a, int c, double y) {
    Observation o;
    o.x = {0.0};
    o.a = a;
    o.c = c;
    if (c == 0) o.y = y;
    return o;
}

NuisanceAt random_eta(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.05, 0.95);
    std::uniform_real_distribution<double> upi(0.0, 0.9);
    return NuisanceAt{u(rng), upi(rng), upi(rng), u(rng), u(rng)};
}

}  // namespace

TEST_CASE("influence row matches hand-computed values") {
    // Running example x=0 unit: A=1, censored.
    const NuisanceAt eta{0.5, 0.10255, 0.2002, 0.1, 0.2};
    const auto r = influence_row(make_obs(1, 1, 0.0), eta);
    CHECK(r.phi2[1] == doctest::Approx(1.7998).epsilon(1e-12));
    CHECK(r.phi1[1] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(r.phi3[1] == doctest::Approx(0.35996).epsilon(1e-12));
    // Off-arm columns are pure plug-ins.
    CHECK(r.phi1[0] == doctest::Approx(0.1));
    CHECK(r.phi2[0] == doctest::Approx(0.10255));
    CHECK(r.phi7[0] == 0.0);
    CHECK(r.phi7[1] == 1.0);
}

TEST_CASE("uncensored unit includes the outcome residual") {
    const NuisanceAt eta{0.5, 0.2, 0.2, 0.3, 0.6};
    const auto r = influence_row(make_obs(0, 0, 1.0), eta);
    // phi1_0 = (1/((1-0.2)*0.5))*(1-0.3) + 0.3 = 2.5*0.7 + 0.3
    CHECK(r.phi1[0] == doctest::Approx(2.5 * 0.7 + 0.3).epsilon(1e-12));
    // phi2_0 = (0-0.2)/0.5 + 0.2
    CHECK(r.phi2[0] == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(r.phi1[1] == doctest::Approx(0.6));
}

TEST_CASE("product-rule identities hold pointwise") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int t = 0; t < 10000; ++t) {
        const NuisanceAt eta = random_eta(rng);
        const int a = u01(rng) < 0.5 ? 1 : 0;
        const int c = u01(rng) < 0.3 ? 1 : 0;
        const double y = u01(rng) < 0.5 ? 1.0 : 0.0;
        const auto r = influence_row(make_obs(a, c, y), eta);
        for (int arm = 0; arm < 2; ++arm) {
            const double mu = eta.mu(arm), pi = eta.pi(arm), ea = eta.e_arm(arm);
            CHECK(r.phi3[arm] ==
                  doctest::Approx(r.phi1[arm] * pi + r.phi2[arm] * mu - mu * pi).epsilon(1e-12));
            CHECK(r.phi4[arm] ==
                  doctest::Approx(r.phi1[arm] * ea + r.phi7[arm] * mu - mu * ea).epsilon(1e-12));
            CHECK(r.phi5[arm] ==
                  doctest::Approx(r.phi2[arm] * ea + r.phi7[arm] * pi - pi * ea).epsilon(1e-12));
            CHECK(r.phi6[arm] == doctest::Approx(r.phi3[arm] * ea + r.phi7[arm] * mu * pi -
                                                 mu * pi * ea)
                                     .epsilon(1e-12));
        }
        CHECK(r.phi3_01 ==
              doctest::Approx(r.phi1[1] * eta.pi0 + r.phi2[0] * eta.mu1 - eta.mu1 * eta.pi0)
                  .epsilon(1e-12));
    }
}

TEST_CASE("smooth SDE influence collapses as epsilon -> 0") {
    // With a large positive mu gap, Phi_eps(+dmu) -> 1 and the density term
    // vanishes, so the plus side equals the phi3_01 - phi3_0 style correction
    // with indicator 1, and the minus side vanishes.
    const NuisanceAt eta{0.5, 0.2, 0.2, 0.1, 0.8};
    const auto obs = make_obs(0, 0, 1.0);
    const SmoothingSpec tight{1e-6};
    const double plus = phi_smooth_sde(obs, eta, tight, +1);
    const double minus = phi_smooth_sde(obs, eta, tight, -1);
    // plus side at Phi=1: ipw residual * pi0 + cens0 * dmu + dmu * pi0
    const double w = 1.0 / ((1.0 - 0.2) * 0.5);
    const double expected =
        -w * (1.0 - 0.1) * 0.2 + (0.0 - 0.2) / 0.5 * 0.7 + 0.7 * 0.2;
    CHECK(plus == doctest::Approx(expected).epsilon(1e-9));
    CHECK(minus == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("influence_matrix validates inputs") {
    Dataset d;
    d.covariate_names = {"x1"};
    d.observations.push_back(make_obs(1, 0, 1.0));
    NuisanceValues eta;  // wrong length
    CHECK_THROWS_AS(influence_matrix(d, eta), std::invalid_argument);
    CHECK_THROWS_AS(influence_matrix(Dataset{}, eta), std::invalid_argument);
    CHECK_THROWS_AS(phi_smooth_sde(make_obs(1, 0, 1.0), NuisanceAt{0.5, 0.1, 0.1, 0.2, 0.3},
                                   SmoothingSpec{0.0}, +1),
                    std::invalid_argument);
}
