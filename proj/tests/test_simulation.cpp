#include <doctest.h>

#include <cmath>

#include "mixcens/simulation.hpp"

using namespace mixcens;

namespace {

const PopulationTable& shared_population() {
    static const PopulationTable pop = [] {
        DGPParams p;
        p.population_size = 200000;
        p.seed = 42;
        return generate_population(p);
    }();
    return pop;
}

}  // namespace

TEST_CASE("generate_population matches the DGP probabilities") {
    const auto& pop = shared_population();
    REQUIRE(pop.size() == 200000);

    // Empirical P(C=1 | A=a, X in bin) tracks the piecewise-expit curve.
    const int bins = 20;
    double count[2][bins] = {}, cens[2][bins] = {}, informative = 0.0, censored = 0.0;
    for (const auto& u : pop.units) {
        const int b = std::min(bins - 1, static_cast<int>((u.x + 3.0) / 6.0 * bins));
        count[u.a][b] += 1.0;
        cens[u.a][b] += u.c;
        if (u.c == 1) {
            censored += 1.0;
            informative += u.u_informative;
        }
    }
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < bins; ++b) {
            if (count[a][b] < 200) continue;
            const double mid = -3.0 + (b + 0.5) * 6.0 / bins;
            const double expect = dgp::pi_total(a, mid);
            const double se = std::sqrt(expect * (1 - expect) / count[a][b]);
            CHECK(std::abs(cens[a][b] / count[a][b] - expect) < 5 * se + 0.01);
        }
    }
    // P(U_I = 1 | C = 1) = pi_I / pi_C = delta, so about half of the
    // censored units are informatively censored.
    CHECK(informative / censored > 0.45);
    CHECK(informative / censored < 0.55);
}

TEST_CASE("delta = 0 would mean no informative events") {
    DGPParams p;
    p.population_size = 5000;
    p.delta0 = p.delta1 = 1e-12;  // delta must be in (0,1); effectively zero
    const auto pop = generate_population(p);
    std::size_t events = 0;
    for (const auto& u : pop.units) events += u.u_informative;
    CHECK(events == 0);
}

TEST_CASE("sample_dataset is deterministic and uniform without replacement") {
    const auto& pop = shared_population();
    const auto d1 = sample_dataset(pop, 500, 7);
    const auto d2 = sample_dataset(pop, 500, 7);
    CHECK(d1 == d2);
    bool differs = false;
    for (std::uint64_t s = 100; s < 110; ++s)
        if (!(sample_dataset(pop, 500, s) == d1)) differs = true;
    CHECK(differs);

    // n = N returns the whole population.
    DGPParams small;
    small.population_size = 300;
    const auto tiny = generate_population(small);
    CHECK(sample_dataset(tiny, 300, 1).size() == 300);
    CHECK_THROWS_AS(sample_dataset(tiny, 301, 1), std::invalid_argument);

    // Censored rows carry no outcome.
    for (const auto& o : d1.observations) CHECK(o.y.has_value() == (o.c == 0));
}

TEST_CASE("run_study with oracle nuisances is unbiased and covers") {
    const auto& pop = shared_population();
    const auto truth = population_truth_dgp(pop.params);
    StudyConfig cfg;
    cfg.n = 1000;
    cfg.reps = 200;
    cfg.mode = StudyMode::perturb;
    cfg.c1 = 0.0;
    cfg.c2 = 0.0;  // no perturbation: exact oracle nuisances
    cfg.seed = 5;
    const auto rep = run_study(pop, truth, cfg);
    REQUIRE(rep.estimands.size() == 6);
    CHECK(rep.reps_completed == 200);
    for (const auto& s : rep.estimands) {
        INFO(s.name);
        CHECK(std::abs(s.bias) <=
              3.0 * std::max(s.rmse, 1e-6) / std::sqrt(200.0) + 1e-4);
        CHECK(s.rmse >= std::abs(s.bias));
        CHECK(s.coverage >= 0.9);
        CHECK(s.coverage <= 1.0);
    }
    // Deterministic in the seeds.
    const auto rep2 = run_study(pop, truth, cfg);
    for (std::size_t j = 0; j < 6; ++j) {
        CHECK(rep.estimands[j].bias == rep2.estimands[j].bias);
        CHECK(rep.estimands[j].coverage == rep2.estimands[j].coverage);
    }
}

TEST_CASE("study config validation") {
    StudyConfig bad;
    bad.n = 10;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.n = 1000;
    bad.reps = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
