#ifndef MIXCENS_DGP_HPP
#define MIXCENS_DGP_HPP

#include <cstdint>
#include <stdexcept>

#include "mixcens/common.hpp"

namespace mixcens {

/// Parameters of the simulation data-generating process: X ~ U(-3,3),
/// A ~ Bernoulli(expit(X)), piecewise-expit total censoring probabilities, a
/// fraction delta_a of censoring informative, and outcome risk ratio tau_a
/// between informatively censored and uncensored units.
struct DGPParams {
    double beta0 = 1.0, beta1 = 1.0;
    double tau0 = 0.5, tau1 = 0.5;
    double delta0 = 0.5, delta1 = 0.5;
    std::size_t population_size = 2'000'000;
    std::uint64_t seed = 1;

    double beta(int a) const { return a == 1 ? beta1 : beta0; }
    double tau(int a) const { return a == 1 ? tau1 : tau0; }
    double delta(int a) const { return a == 1 ? delta1 : delta0; }

    void validate() const {
        if (!(tau0 > 0.0 && tau1 > 0.0)) throw std::invalid_argument("DGPParams: tau must be > 0");
        if (!(delta0 > 0.0 && delta0 < 1.0 && delta1 > 0.0 && delta1 < 1.0))
            throw std::invalid_argument("DGPParams: delta must lie in (0,1)");
        if (population_size == 0) throw std::invalid_argument("DGPParams: empty population");
    }
};

namespace dgp {

inline constexpr double kXLow = -3.0;
inline constexpr double kXHigh = 3.0;
// The total-censoring curves switch expit pieces here; quadrature splits at
// these points.
inline constexpr double kBreakpoints[] = {0.0, 1.0};

inline double propensity(double x) { return expit(x); }

/// Total censoring probability P(C=1 | A=a, X=x), piecewise in x.
inline double pi_total(int a, double x) {
    if (a == 1) {
        if (x < 0.0) return expit(x);
        if (x < 1.0) return expit(0.8 * x);
        return expit(0.2 + 0.6 * x);
    }
    if (x < 0.0) return expit(0.6 * x);
    if (x < 1.0) return expit(0.5 * x);
    return expit(0.1 + 0.4 * x);
}

inline double pi_informative(const DGPParams& p, int a, double x) {
    return p.delta(a) * pi_total(a, x);
}

// Chosen so that composing the two independent censoring sources reproduces
// pi_total exactly: pi_I + pi_NI - pi_I pi_NI = pi_C.
inline double pi_noninformative(const DGPParams& p, int a, double x) {
    const double pc = pi_total(a, x);
    const double d = p.delta(a);
    return pc * (1.0 - d) / (1.0 - d * pc);
}

/// Outcome mean among units not informatively censored. The risk ratio
/// mu*_a / mu_a = tau_a is enforced with both means in [0,1].
inline double mu_uncensored(const DGPParams& p, int a, double x) {
    const double base = expit(p.beta(a) * x);
    return p.tau(a) <= 1.0 ? base : base / p.tau(a);
}

/// Outcome mean among informatively censored units.
inline double mu_informative(const DGPParams& p, int a, double x) {
    const double base = expit(p.beta(a) * x);
    return p.tau(a) <= 1.0 ? p.tau(a) * base : base;
}

}  // namespace dgp

}  // namespace mixcens

#endif  // MIXCENS_DGP_HPP
