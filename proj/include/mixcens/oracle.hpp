#ifndef MIXCENS_ORACLE_HPP
#define MIXCENS_ORACLE_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixcens/common.hpp"
#include "mixcens/dgp.hpp"
#include "mixcens/estimators.hpp"

namespace mixcens {

// ---------------------------------------------------------------------------
// Quadrature

enum class QuadratureRule { midpoint, gauss_legendre };

struct QuadratureSpec {
    std::size_t nodes = 1024;
    QuadratureRule rule = QuadratureRule::gauss_legendre;
    double lo = dgp::kXLow;
    double hi = dgp::kXHigh;
};

namespace detail {

/// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
inline void gauss_legendre_reference(std::size_t n, std::vector<double>& nodes,
                                     std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
}

}  // namespace detail

/// Expectation of f(X) for X ~ U(lo, hi), by composite quadrature split at the
/// DGP breakpoints so each segment integrand is smooth.
inline double integrate_uniform(const std::function<double(double)>& f,
                                const QuadratureSpec& spec) {
    if (spec.nodes < 64) throw std::invalid_argument("quadrature: need at least 64 nodes");
    if (!(spec.hi > spec.lo)) throw std::invalid_argument("quadrature: empty domain");

    std::vector<double> edges = {spec.lo};
    for (double b : dgp::kBreakpoints)
        if (b > spec.lo && b < spec.hi) edges.push_back(b);
    edges.push_back(spec.hi);

    const std::size_t per_segment = spec.nodes / (edges.size() - 1);
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
        const double a = edges[s], b = edges[s + 1];
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        if (spec.rule == QuadratureRule::gauss_legendre) {
            std::vector<double> x, w;
            detail::gauss_legendre_reference(per_segment, x, w);
            for (std::size_t i = 0; i < per_segment; ++i)
                total += w[i] * half * f(mid + half * x[i]);
        } else {
            const double h = (b - a) / static_cast<double>(per_segment);
            for (std::size_t i = 0; i < per_segment; ++i)
                total += h * f(a + (static_cast<double>(i) + 0.5) * h);
        }
    }
    return total / (spec.hi - spec.lo);
}

// ---------------------------------------------------------------------------
// Discrete populations (running example)

/// Finite covariate support with tabulated nuisance and latent-censoring
/// functions. pi_star is the informative component, pi_ni the non-informative
/// one; the observable total is their independent composition.
struct DiscretePopulation {
    struct Point {
        double x = 0.0;
        double prob = 0.0;
        double e = 0.5;           // P(A=1 | X=x)
        double pi_star[2] = {};   // informative censoring prob per arm
        double pi_ni[2] = {};     // non-informative censoring prob per arm
        double mu[2] = {};        // E[Y | A=a, C=0, X=x]
        double mu_star[2] = {};   // E[Y(a) | informatively censored, X=x]
    };
    std::vector<Point> points;

    static double composite_pi(const Point& pt, int a) {
        return pt.pi_star[a] + pt.pi_ni[a] - pt.pi_star[a] * pt.pi_ni[a];
    }

    void validate() const {
        if (points.empty()) throw std::invalid_argument("DiscretePopulation: no support points");
        double total = 0.0;
        for (const auto& pt : points) {
            total += pt.prob;
            auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
            if (!in01(pt.prob) || !in01(pt.e))
                throw std::invalid_argument("DiscretePopulation: probability outside [0,1]");
            for (int a = 0; a < 2; ++a) {
                if (!in01(pt.pi_star[a]) || !in01(pt.pi_ni[a]) || !in01(pt.mu[a]) ||
                    !in01(pt.mu_star[a]))
                    throw std::invalid_argument("DiscretePopulation: value outside [0,1]");
                if (composite_pi(pt, a) >= 1.0)
                    throw std::invalid_argument("DiscretePopulation: composite pi must be < 1");
            }
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("DiscretePopulation: probabilities must sum to 1");
    }

    /// E[f(point)] over the covariate distribution.
    double mean(const std::function<double(const Point&)>& f) const {
        double s = 0.0;
        for (const auto& pt : points) s += pt.prob * f(pt);
        return s;
    }
};

/// The single-binary-covariate worked example: P(X=1)=0.7, e=0.5,
/// mu_0 = {0.1, 0.15}, mu_1 = 2 mu_0, mu* = 2 mu, pi*_0 = {0.07, 0.12},
/// pi*_1 = {0.14, 0.19}, with non-informative censoring at half those
/// probabilities composed independently.
inline DiscretePopulation running_example() {
    DiscretePopulation pop;
    for (int x = 0; x < 2; ++x) {
        DiscretePopulation::Point pt;
        pt.x = x;
        pt.prob = x == 1 ? 0.7 : 0.3;
        pt.e = 0.5;
        pt.mu[0] = 0.1 + 0.05 * x;
        pt.mu[1] = 2.0 * pt.mu[0];
        pt.mu_star[0] = 2.0 * pt.mu[0];
        pt.mu_star[1] = 2.0 * pt.mu[1];
        pt.pi_star[0] = x == 1 ? 0.12 : 0.07;
        pt.pi_star[1] = x == 1 ? 0.19 : 0.14;
        pt.pi_ni[0] = 0.5 * pt.pi_star[0];
        pt.pi_ni[1] = 0.5 * pt.pi_star[1];
        pop.points.push_back(pt);
    }
    pop.validate();
    return pop;
}

// ---------------------------------------------------------------------------
// Exact functionals and bound displays

/// Population expectations of every influence column (each equals the
/// functional the column estimates).
struct FunctionalValues {
    double mu[2] = {};         // E[mu_a]
    double pi[2] = {};         // E[pi_a]
    double mu_pi[2] = {};      // E[mu_a pi_a]
    double mu1_pi0 = 0.0;      // E[mu_1 pi_0]
    double mu_e[2] = {};       // E[mu_a e_a]
    double pi_e[2] = {};       // E[pi_a e_a]
    double mu_pi_e[2] = {};    // E[mu_a pi_a e_a]
    double e_arm[2] = {};      // E[e_a]
    double sde_plus = 0.0;     // E[pi_0 dmu Phi_eps(+dmu)]
    double sde_minus = 0.0;    // E[pi_0 dmu Phi_eps(-dmu)]

    double naive() const { return mu[1] - mu[0]; }

    double basic(std::size_t j) const {
        switch (j) {
            case 0: return mu[0];
            case 1: return mu[1];
            case 2: return pi[0];
            case 3: return pi[1];
            case 4: return mu_pi[0];
            case 5: return mu_pi[1];
            default: throw std::out_of_range("FunctionalValues::basic");
        }
    }

    double combine(const std::array<double, kBasicColumns>& a_vec) const {
        double s = 0.0;
        for (std::size_t j = 0; j < kBasicColumns; ++j) s += a_vec[j] * basic(j);
        return s;
    }
};

struct BoundPair {
    double lower = 0.0;
    double upper = 0.0;
};

/// Exact truth report for a population: identified functionals, true causal
/// estimands, and every bound display evaluated at the given sensitivity
/// parameters.
struct PopulationReport {
    FunctionalValues f;
    double psi_tilde = 0.0;
    double psi0 = 0.0, psi1 = 0.0, psi2 = 0.0;
    double grave_mu0 = 0.0, grave_mu1 = 0.0;
    BoundPair general, mono_positive, mono_negative, bounded_risk;
    BoundPair psi1_bounds, psi2_bounds, psi2_bounds_smooth;
    BoundPair unconfounded_psi0, unconfounded_psi1;
    double point_ate = 0.0, point_psi1 = 0.0, point_psi2 = 0.0;
};

namespace detail {

/// Evaluates every bound display from exact functional values. Shared by the
/// discrete-summation and quadrature truth engines.
inline PopulationReport bounds_from_functionals(const FunctionalValues& f,
                                                const SensitivityParams& params) {
    params.require_delta_bounds();
    PopulationReport r;
    r.f = f;
    r.psi_tilde = f.naive();
    r.grave_mu0 = f.mu_pi[0];
    r.grave_mu1 = f.mu_pi[1];

    const double pi_one_minus_mu0 = f.pi[0] - f.mu_pi[0];  // E[pi_0 (1-mu_0)]
    const double pi_one_minus_mu1 = f.pi[1] - f.mu_pi[1];

    r.general.lower = r.psi_tilde - f.mu_pi[1] - pi_one_minus_mu0;
    r.general.upper = r.psi_tilde + pi_one_minus_mu1 + f.mu_pi[0];

    r.mono_positive.lower = r.psi_tilde - params.delta_u0 * pi_one_minus_mu0;
    r.mono_positive.upper = r.psi_tilde + params.delta_u1 * pi_one_minus_mu1;

    r.mono_negative.lower = r.psi_tilde - params.delta_u1 * f.mu_pi[1];
    r.mono_negative.upper = r.psi_tilde + params.delta_u0 * f.mu_pi[0];

    if (params.tau0 >= 1.0 && params.tau1 >= 1.0) {
        r.bounded_risk.lower = r.psi_tilde +
                               params.delta_u1 * (1.0 / params.tau1 - 1.0) * f.mu_pi[1] -
                               params.delta_u0 * (params.tau0 - 1.0) * f.mu_pi[0];
        r.bounded_risk.upper = r.psi_tilde +
                               params.delta_u1 * (params.tau1 - 1.0) * f.mu_pi[1] -
                               params.delta_u0 * (1.0 / params.tau0 - 1.0) * f.mu_pi[0];
    }

    r.point_ate = r.psi_tilde + (1.0 - params.tau0) * params.delta0 * f.mu_pi[0] +
                  (params.tau1 - 1.0) * params.delta1 * f.mu_pi[1];

    r.psi1_bounds.lower = r.psi_tilde + params.delta_l1 * pi_one_minus_mu1 -
                          params.delta_u0 * pi_one_minus_mu0;
    r.psi1_bounds.upper = r.psi_tilde + params.delta_u1 * pi_one_minus_mu1 -
                          params.delta_l0 * pi_one_minus_mu0;
    r.point_psi1 = r.psi_tilde + params.delta1 * pi_one_minus_mu1 -
                   params.delta0 * pi_one_minus_mu0;

    r.psi2_bounds_smooth.lower = r.psi_tilde - params.delta_u0 * f.sde_plus;
    r.psi2_bounds_smooth.upper = r.psi_tilde - params.delta_u0 * f.sde_minus;
    r.point_psi2 = r.psi_tilde - params.delta0 * (f.mu1_pi0 - f.mu_pi[0]);

    // Relaxing unconfoundedness. Displays in terms of e-weighted functionals;
    // omega = E[e] = E[e_1].
    const double omega = f.e_arm[1];
    r.unconfounded_psi0.lower = -omega + f.mu_e[1] - f.mu_pi_e[1] -
                                (f.mu_e[0] + f.pi_e[0] - f.mu_pi_e[0]);
    r.unconfounded_psi0.upper = omega + f.mu_e[1] + f.pi_e[1] - f.mu_pi_e[1] -
                                (f.mu_e[0] - f.mu_pi_e[0]);
    {
        const double du0 = params.delta_u0, du1 = params.delta_u1, dl0 = params.delta_l0;
        const double first = du1 * (f.pi_e[1] - f.mu_pi_e[1]) + f.mu_e[1];
        // E[(1-mu0)(1-du0 pi0) e_0]
        const double shrunk0 =
            f.e_arm[0] - f.mu_e[0] - du0 * (f.pi_e[0] - f.mu_pi_e[0]);
        r.unconfounded_psi1.lower = first - (1.0 - shrunk0);

        // E[(1-mu1)(1-du1 pi1) e_1]
        const double shrunk1 =
            f.e_arm[1] - f.mu_e[1] - du1 * (f.pi_e[1] - f.mu_pi_e[1]);
        const double second = dl0 * (f.pi_e[0] - f.mu_pi_e[0]) + f.mu_e[0];
        r.unconfounded_psi1.upper = 1.0 - shrunk1 - second;
    }
    return r;
}

}  // namespace detail

/// Exact functional values for a discrete population, by finite summation.
inline FunctionalValues population_functionals(const DiscretePopulation& pop,
                                               double epsilon = 0.05) {
    pop.validate();
    if (!(epsilon > 0.0)) throw std::invalid_argument("population_functionals: epsilon > 0");
    using Point = DiscretePopulation::Point;
    FunctionalValues f;
    for (int a = 0; a < 2; ++a) {
        auto pi_a = [a](const Point& p) { return DiscretePopulation::composite_pi(p, a); };
        auto e_a = [a](const Point& p) { return a == 1 ? p.e : 1.0 - p.e; };
        f.mu[a] = pop.mean([&](const Point& p) { return p.mu[a]; });
        f.pi[a] = pop.mean(pi_a);
        f.mu_pi[a] = pop.mean([&](const Point& p) { return p.mu[a] * pi_a(p); });
        f.mu_e[a] = pop.mean([&](const Point& p) { return p.mu[a] * e_a(p); });
        f.pi_e[a] = pop.mean([&](const Point& p) { return pi_a(p) * e_a(p); });
        f.mu_pi_e[a] = pop.mean([&](const Point& p) { return p.mu[a] * pi_a(p) * e_a(p); });
        f.e_arm[a] = pop.mean(e_a);
    }
    auto pi0 = [](const Point& p) { return DiscretePopulation::composite_pi(p, 0); };
    f.mu1_pi0 = pop.mean([&](const Point& p) { return p.mu[1] * pi0(p); });
    f.sde_plus = pop.mean([&](const Point& p) {
        const double dmu = p.mu[1] - p.mu[0];
        return pi0(p) * dmu * norm_cdf(dmu / epsilon);
    });
    f.sde_minus = pop.mean([&](const Point& p) {
        const double dmu = p.mu[1] - p.mu[0];
        return pi0(p) * dmu * norm_cdf(-dmu / epsilon);
    });
    return f;
}

/// Full exact report for a discrete population: identified bounds plus the
/// true (latent) estimands from the informative-censoring components.
inline PopulationReport population_bounds(const DiscretePopulation& pop,
                                          const SensitivityParams& params) {
    using Point = DiscretePopulation::Point;
    PopulationReport r =
        detail::bounds_from_functionals(population_functionals(pop, params.epsilon), params);

    auto arm_true_mean = [&](int a) {
        return pop.mean([&](const Point& p) {
            return p.mu[a] * (1.0 - p.pi_star[a]) + p.mu_star[a] * p.pi_star[a];
        });
    };
    auto arm_composite_mean = [&](int a) {
        return pop.mean(
            [&](const Point& p) { return p.mu[a] * (1.0 - p.pi_star[a]) + p.pi_star[a]; });
    };
    r.psi0 = arm_true_mean(1) - arm_true_mean(0);
    r.psi1 = arm_composite_mean(1) - arm_composite_mean(0);
    r.psi2 = r.psi_tilde -
             pop.mean([](const Point& p) { return p.pi_star[0] * (p.mu[1] - p.mu[0]); });

    // Sharp (non-smooth) SDE bounds.
    r.psi2_bounds.lower =
        r.psi_tilde -
        params.delta_u0 * pop.mean([](const Point& p) {
            const double dmu = p.mu[1] - p.mu[0];
            return DiscretePopulation::composite_pi(p, 0) * (dmu > 0.0 ? dmu : 0.0);
        });
    r.psi2_bounds.upper =
        r.psi_tilde -
        params.delta_u0 * pop.mean([](const Point& p) {
            const double dmu = p.mu[1] - p.mu[0];
            return DiscretePopulation::composite_pi(p, 0) * (dmu <= 0.0 ? dmu : 0.0);
        });
    return r;
}

// ---------------------------------------------------------------------------
// Simulation DGP truth via quadrature

/// The six study estimands plus the causal summaries, all exact up to
/// quadrature error.
struct DgpTruth {
    double psi_tilde = 0.0;
    double omega1 = 0.0;  // E[pi_1]
    double omega2 = 0.0;  // E[pi_0]
    double omega3 = 0.0;  // E[pi_1 mu_1]
    double omega4 = 0.0;  // E[pi_0 mu_0]
    double omega5 = 0.0;  // E[pi_0 (mu_1-mu_0) Phi_eps(mu_1-mu_0)]
    double psi0 = 0.0, psi1 = 0.0, psi2 = 0.0;
    double epsilon = 0.05;

    std::array<double, 6> as_array() const {
        return {psi_tilde, omega1, omega2, omega3, omega4, omega5};
    }
};

namespace detail {

inline DgpTruth dgp_truth_at(const DGPParams& p, const QuadratureSpec& quad, double epsilon) {
    auto integ = [&](const std::function<double(double)>& f) {
        return integrate_uniform(f, quad);
    };
    DgpTruth t;
    t.epsilon = epsilon;
    auto mu = [&](int a, double x) { return dgp::mu_uncensored(p, a, x); };
    t.psi_tilde = integ([&](double x) { return mu(1, x) - mu(0, x); });
    t.omega1 = integ([&](double x) { return dgp::pi_total(1, x); });
    t.omega2 = integ([&](double x) { return dgp::pi_total(0, x); });
    t.omega3 = integ([&](double x) { return dgp::pi_total(1, x) * mu(1, x); });
    t.omega4 = integ([&](double x) { return dgp::pi_total(0, x) * mu(0, x); });
    t.omega5 = integ([&](double x) {
        const double dmu = mu(1, x) - mu(0, x);
        return dgp::pi_total(0, x) * dmu * norm_cdf(dmu / epsilon);
    });
    t.psi0 = t.psi_tilde +
             integ([&](double x) {
                 return dgp::pi_informative(p, 1, x) * (dgp::mu_informative(p, 1, x) - mu(1, x));
             }) -
             integ([&](double x) {
                 return dgp::pi_informative(p, 0, x) * (dgp::mu_informative(p, 0, x) - mu(0, x));
             });
    t.psi1 = t.psi_tilde +
             integ([&](double x) { return dgp::pi_informative(p, 1, x) * (1.0 - mu(1, x)); }) -
             integ([&](double x) { return dgp::pi_informative(p, 0, x) * (1.0 - mu(0, x)); });
    t.psi2 = t.psi_tilde - integ([&](double x) {
                 return dgp::pi_informative(p, 0, x) * (mu(1, x) - mu(0, x));
             });
    return t;
}

}  // namespace detail

/// Exact influence-column expectations for the DGP, by quadrature.
inline FunctionalValues dgp_functionals(const DGPParams& p, const QuadratureSpec& quad = {},
                                        double epsilon = 0.05) {
    p.validate();
    if (!(epsilon > 0.0)) throw std::invalid_argument("dgp_functionals: epsilon > 0");
    auto integ = [&](const std::function<double(double)>& f) {
        return integrate_uniform(f, quad);
    };
    auto mu = [&](int a, double x) { return dgp::mu_uncensored(p, a, x); };
    auto e_arm = [](int a, double x) {
        return a == 1 ? dgp::propensity(x) : 1.0 - dgp::propensity(x);
    };
    FunctionalValues f;
    for (int a = 0; a < 2; ++a) {
        f.mu[a] = integ([&](double x) { return mu(a, x); });
        f.pi[a] = integ([&](double x) { return dgp::pi_total(a, x); });
        f.mu_pi[a] = integ([&](double x) { return mu(a, x) * dgp::pi_total(a, x); });
        f.mu_e[a] = integ([&](double x) { return mu(a, x) * e_arm(a, x); });
        f.pi_e[a] = integ([&](double x) { return dgp::pi_total(a, x) * e_arm(a, x); });
        f.mu_pi_e[a] =
            integ([&](double x) { return mu(a, x) * dgp::pi_total(a, x) * e_arm(a, x); });
        f.e_arm[a] = integ([&](double x) { return e_arm(a, x); });
    }
    f.mu1_pi0 = integ([&](double x) { return mu(1, x) * dgp::pi_total(0, x); });
    f.sde_plus = integ([&](double x) {
        const double dmu = mu(1, x) - mu(0, x);
        return dgp::pi_total(0, x) * dmu * norm_cdf(dmu / epsilon);
    });
    f.sde_minus = integ([&](double x) {
        const double dmu = mu(1, x) - mu(0, x);
        return dgp::pi_total(0, x) * dmu * norm_cdf(-dmu / epsilon);
    });
    return f;
}

/// Every bound display evaluated at exact functional values (the same
/// assembly the discrete-population report uses).
inline PopulationReport report_from_functionals(const FunctionalValues& f,
                                                const SensitivityParams& params) {
    return detail::bounds_from_functionals(f, params);
}

/// Quadrature truth for the DGP, with a halved-node refinement self-check.
inline DgpTruth population_truth_dgp(const DGPParams& p, const QuadratureSpec& quad = {},
                                     double epsilon = 0.05) {
    p.validate();
    if (!(epsilon > 0.0)) throw std::invalid_argument("population_truth_dgp: epsilon > 0");
    DgpTruth full = detail::dgp_truth_at(p, quad, epsilon);
    QuadratureSpec half = quad;
    half.nodes = std::max<std::size_t>(64, quad.nodes / 2);
    DgpTruth coarse = detail::dgp_truth_at(p, half, epsilon);
    const double values[][2] = {
        {full.psi_tilde, coarse.psi_tilde}, {full.omega1, coarse.omega1},
        {full.omega2, coarse.omega2},       {full.omega3, coarse.omega3},
        {full.omega4, coarse.omega4},       {full.omega5, coarse.omega5},
        {full.psi0, coarse.psi0},           {full.psi1, coarse.psi1},
        {full.psi2, coarse.psi2}};
    for (const auto& v : values) {
        if (std::abs(v[0] - v[1]) > 1e-10)
            throw std::runtime_error(
                "population_truth_dgp: quadrature refinement check failed; increase nodes");
    }
    return full;
}

}  // namespace mixcens

#endif  // MIXCENS_ORACLE_HPP
