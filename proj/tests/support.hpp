#ifndef MIXCENS_TESTS_SUPPORT_HPP
#define MIXCENS_TESTS_SUPPORT_HPP

#include <random>

#include "mixcens/data.hpp"
#include "mixcens/nuisance.hpp"
#include "mixcens/oracle.hpp"

namespace mixcens::testsupport {

/// Draws an observed dataset from a discrete population, with the two
/// censoring sources composed independently.
inline Dataset sample_discrete(const DiscretePopulation& pop, std::size_t n,
                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Dataset d;
    d.covariate_names = {"x1"};
    for (std::size_t i = 0; i < n; ++i) {
        double pick = u(rng);
        std::size_t j = 0;
        while (j + 1 < pop.points.size() && pick >= pop.points[j].prob) {
            pick -= pop.points[j].prob;
            ++j;
        }
        const auto& pt = pop.points[j];
        Observation o;
        o.x = {pt.x};
        o.a = u(rng) < pt.e ? 1 : 0;
        const bool informative = u(rng) < pt.pi_star[o.a];
        const bool noninformative = u(rng) < pt.pi_ni[o.a];
        o.c = (informative || noninformative) ? 1 : 0;
        const double mean = informative ? pt.mu_star[o.a] : pt.mu[o.a];
        const double y = u(rng) < mean ? 1.0 : 0.0;
        if (o.c == 0) o.y = y;
        d.observations.push_back(std::move(o));
    }
    return d;
}

/// True observed-data nuisances (composite censoring probability) at each
/// sampled unit.
inline NuisanceValues true_nuisances_discrete(const Dataset& d, const DiscretePopulation& pop) {
    NuisanceValues out;
    for (const auto& o : d.observations) {
        const DiscretePopulation::Point* pt = nullptr;
        for (const auto& cand : pop.points)
            if (cand.x == o.x.at(0)) pt = &cand;
        if (!pt) throw std::runtime_error("true_nuisances_discrete: unknown support point");
        out.e.push_back(pt->e);
        out.pi0.push_back(DiscretePopulation::composite_pi(*pt, 0));
        out.pi1.push_back(DiscretePopulation::composite_pi(*pt, 1));
        out.mu0.push_back(pt->mu[0]);
        out.mu1.push_back(pt->mu[1]);
    }
    return out;
}

}  // namespace mixcens::testsupport

#endif  // MIXCENS_TESTS_SUPPORT_HPP
