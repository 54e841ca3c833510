#ifndef MIXCENS_ESTIMATORS_HPP
#define MIXCENS_ESTIMATORS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixcens/common.hpp"
#include "mixcens/influence.hpp"

namespace mixcens {

/// Sensitivity parameters: outcome-risk ratios (tau, optionally per arm),
/// known informative-censoring proportions (delta_a) for point
/// identification, and bounded proportions (delta_l/u per arm) for interval
/// bounds. epsilon smooths the SDE-bound indicator.
struct SensitivityParams {
    double tau0 = 1.0, tau1 = 1.0;
    double delta0 = 0.5, delta1 = 0.5;
    double delta_l0 = 0.0, delta_u0 = 1.0;
    double delta_l1 = 0.0, delta_u1 = 1.0;
    double epsilon = 0.05;

    void set_tau(double t) { tau0 = tau1 = t; }
    void set_delta_u(double d) { delta_u0 = delta_u1 = d; }
    void set_delta_l(double d) { delta_l0 = delta_l1 = d; }
    void set_delta(double d) { delta0 = delta1 = d; }

    void require_delta_bounds() const {
        for (auto [lo, hi] : {std::pair{delta_l0, delta_u0}, std::pair{delta_l1, delta_u1}}) {
            if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi))
                throw std::invalid_argument(
                    "SensitivityParams: need 0 <= delta_l <= delta_u <= 1");
        }
    }
};

enum class EstimateKind { interval, point };

struct Endpoint {
    double value = 0.0;
    double se = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
};

/// A bound (or point) estimate with per-endpoint standard errors and Wald
/// confidence intervals. For point estimates lower == upper.
struct BoundEstimate {
    EstimateKind kind = EstimateKind::interval;
    Endpoint lower, upper;
    double alpha_level = 0.05;
    bool crossed = false;  // finite-sample lower > upper; reported, not clamped
    std::map<std::string, std::vector<double>> coefficients_used;

    const Endpoint& point() const { return lower; }
};

// Column order of the basic influence vector, matching the functional vector
// (E[mu_0], E[mu_1], E[pi_0], E[pi_1], E[mu_0 pi_0], E[mu_1 pi_1]).
inline constexpr std::size_t kBasicColumns = 6;

inline double basic_column(const InfluenceRow& r, std::size_t j) {
    switch (j) {
        case 0: return r.phi1[0];
        case 1: return r.phi1[1];
        case 2: return r.phi2[0];
        case 3: return r.phi2[1];
        case 4: return r.phi3[0];
        case 5: return r.phi3[1];
        default: throw std::out_of_range("basic_column");
    }
}

namespace detail {

inline Endpoint mean_endpoint(const std::vector<double>& values, double alpha_level) {
    const std::size_t n = values.size();
    if (n < 2) throw std::invalid_argument("estimate: need n >= 2 for a standard error");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) {
        const double d = v - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    Endpoint ep;
    ep.value = mean;
    ep.se = sd / std::sqrt(static_cast<double>(n));
    const double z = norm_quantile(1.0 - alpha_level / 2.0);
    ep.ci_lower = mean - z * ep.se;
    ep.ci_upper = mean + z * ep.se;
    return ep;
}

using RowFn = std::function<double(const InfluenceRow&)>;

inline Endpoint estimate_rows(const std::vector<InfluenceRow>& rows, const RowFn& fn,
                              double alpha_level) {
    std::vector<double> v;
    v.reserve(rows.size());
    for (const auto& r : rows) v.push_back(fn(r));
    return mean_endpoint(v, alpha_level);
}

inline BoundEstimate make_interval(const std::vector<InfluenceRow>& rows, const RowFn& lo_fn,
                                   const RowFn& hi_fn, double alpha_level) {
    BoundEstimate b;
    b.kind = EstimateKind::interval;
    b.alpha_level = alpha_level;
    b.lower = estimate_rows(rows, lo_fn, alpha_level);
    b.upper = estimate_rows(rows, hi_fn, alpha_level);
    b.crossed = b.lower.value > b.upper.value;
    return b;
}

inline BoundEstimate make_point(const std::vector<InfluenceRow>& rows, const RowFn& fn,
                                double alpha_level) {
    BoundEstimate b;
    b.kind = EstimateKind::point;
    b.alpha_level = alpha_level;
    b.lower = b.upper = estimate_rows(rows, fn, alpha_level);
    return b;
}

}  // namespace detail

/// One-step estimate of a linear combination a'theta of the six basic
/// functionals; SE from the sample variance of a'phi.
inline BoundEstimate estimate_functional(const std::vector<InfluenceRow>& rows,
                                         const std::array<double, kBasicColumns>& a_vec,
                                         double alpha_level = 0.05) {
    auto b = detail::make_point(
        rows,
        [&a_vec](const InfluenceRow& r) {
            double s = 0.0;
            for (std::size_t j = 0; j < kBasicColumns; ++j) s += a_vec[j] * basic_column(r, j);
            return s;
        },
        alpha_level);
    b.coefficients_used["a"] = {a_vec.begin(), a_vec.end()};
    return b;
}

/// Naive functional (difference of uncensored-arm regression means).
inline BoundEstimate naive_ate(const std::vector<InfluenceRow>& rows,
                               double alpha_level = 0.05) {
    return estimate_functional(rows, {-1, 1, 0, 0, 0, 0}, alpha_level);
}

/// Assumption-free bounds on the ATE.
inline BoundEstimate bounds_general(const std::vector<InfluenceRow>& rows,
                                    double alpha_level = 0.05) {
    BoundEstimate b = detail::make_interval(
        rows,
        [](const InfluenceRow& r) {
            return r.phi1[1] - r.phi1[0] - (r.phi3[1] + r.phi2[0] - r.phi3[0]);
        },
        [](const InfluenceRow& r) {
            return r.phi1[1] - r.phi1[0] + r.phi2[1] - r.phi3[1] + r.phi3[0];
        },
        alpha_level);
    b.coefficients_used["lower"] = {-1, 1, -1, 0, 1, -1};
    b.coefficients_used["upper"] = {-1, 1, 0, 1, 1, -1};
    return b;
}

enum class Monotonicity { positive, negative };

/// Bounds under monotone informative censoring, scaled by the bounded
/// informative proportions delta_u.
inline BoundEstimate bounds_monotone(const std::vector<InfluenceRow>& rows,
                                     Monotonicity direction, const SensitivityParams& params,
                                     double alpha_level = 0.05) {
    params.require_delta_bounds();
    const double du0 = params.delta_u0, du1 = params.delta_u1;
    if (direction == Monotonicity::positive) {
        auto b = detail::make_interval(
            rows,
            [du0](const InfluenceRow& r) {
                return r.phi1[1] - r.phi1[0] - du0 * (r.phi2[0] - r.phi3[0]);
            },
            [du1](const InfluenceRow& r) {
                return r.phi1[1] - r.phi1[0] + du1 * (r.phi2[1] - r.phi3[1]);
            },
            alpha_level);
        b.coefficients_used["lower"] = {-1, 1, -du0, 0, du0, 0};
        b.coefficients_used["upper"] = {-1, 1, 0, du1, 0, -du1};
        return b;
    }
    auto b = detail::make_interval(
        rows,
        [du1](const InfluenceRow& r) { return r.phi1[1] - r.phi1[0] - du1 * r.phi3[1]; },
        [du0](const InfluenceRow& r) { return r.phi1[1] - r.phi1[0] + du0 * r.phi3[0]; },
        alpha_level);
    b.coefficients_used["lower"] = {-1, 1, 0, 0, 0, -du1};
    b.coefficients_used["upper"] = {-1, 1, 0, 0, du0, 0};
    return b;
}

/// Bounds under the bounded outcome-risk-ratio assumption (tau >= 1).
inline BoundEstimate bounds_bounded_risk(const std::vector<InfluenceRow>& rows,
                                         const SensitivityParams& params,
                                         double alpha_level = 0.05) {
    params.require_delta_bounds();
    if (params.tau0 < 1.0 || params.tau1 < 1.0)
        throw std::invalid_argument("bounds_bounded_risk: tau must be >= 1");
    const double du0 = params.delta_u0, du1 = params.delta_u1;
    const double t0 = params.tau0, t1 = params.tau1;
    auto b = detail::make_interval(
        rows,
        [=](const InfluenceRow& r) {
            return r.phi1[1] - r.phi1[0] + du1 * (1.0 / t1 - 1.0) * r.phi3[1] -
                   du0 * (t0 - 1.0) * r.phi3[0];
        },
        [=](const InfluenceRow& r) {
            return r.phi1[1] - r.phi1[0] + du1 * (t1 - 1.0) * r.phi3[1] -
                   du0 * (1.0 / t0 - 1.0) * r.phi3[0];
        },
        alpha_level);
    b.coefficients_used["lower"] = {-1, 1, 0, 0, -du0 * (t0 - 1.0), du1 * (1.0 / t1 - 1.0)};
    b.coefficients_used["upper"] = {-1, 1, 0, 0, -du0 * (1.0 / t0 - 1.0), du1 * (t1 - 1.0)};
    return b;
}

/// Point identification of the ATE under known risk ratio and known
/// informative proportions.
inline BoundEstimate point_ate(const std::vector<InfluenceRow>& rows,
                               const SensitivityParams& params, double alpha_level = 0.05) {
    if (!(params.tau0 > 0.0 && params.tau1 > 0.0))
        throw std::invalid_argument("point_ate: tau must be > 0");
    const std::array<double, kBasicColumns> a = {
        -1, 1, 0, 0, (1.0 - params.tau0) * params.delta0, (params.tau1 - 1.0) * params.delta1};
    return estimate_functional(rows, a, alpha_level);
}

/// Bounds and point estimate for the composite ATE.
inline BoundEstimate bounds_psi1(const std::vector<InfluenceRow>& rows,
                                 const SensitivityParams& params, double alpha_level = 0.05) {
    params.require_delta_bounds();
    const double dl0 = params.delta_l0, du0 = params.delta_u0;
    const double dl1 = params.delta_l1, du1 = params.delta_u1;
    auto b = detail::make_interval(
        rows,
        [=](const InfluenceRow& r) {
            return r.phi1[1] - r.phi1[0] + dl1 * (r.phi2[1] - r.phi3[1]) -
                   du0 * (r.phi2[0] - r.phi3[0]);
        },
        [=](const InfluenceRow& r) {
            return r.phi1[1] - r.phi1[0] + du1 * (r.phi2[1] - r.phi3[1]) -
                   dl0 * (r.phi2[0] - r.phi3[0]);
        },
        alpha_level);
    b.coefficients_used["lower"] = {-1, 1, -du0, dl1, du0, -dl1};
    b.coefficients_used["upper"] = {-1, 1, -dl0, du1, dl0, -du1};
    return b;
}

inline BoundEstimate point_psi1(const std::vector<InfluenceRow>& rows,
                                const SensitivityParams& params, double alpha_level = 0.05) {
    const double d0 = params.delta0, d1 = params.delta1;
    const std::array<double, kBasicColumns> a = {-1, 1, -d0, d1, d0, -d1};
    return estimate_functional(rows, a, alpha_level);
}

/// Smooth bounds for the separable direct effect. The lower endpoint
/// subtracts the positive-part correction (sde_plus); the upper subtracts
/// the negative-part correction (sde_minus).
inline BoundEstimate bounds_psi2_smooth(const std::vector<InfluenceRow>& rows,
                                        const SensitivityParams& params,
                                        double alpha_level = 0.05) {
    params.require_delta_bounds();
    if (!(params.epsilon > 0.0))
        throw std::invalid_argument("bounds_psi2_smooth: epsilon must be > 0");
    const double du0 = params.delta_u0;
    return detail::make_interval(
        rows,
        [du0](const InfluenceRow& r) { return r.phi1[1] - r.phi1[0] - du0 * r.sde_plus; },
        [du0](const InfluenceRow& r) { return r.phi1[1] - r.phi1[0] - du0 * r.sde_minus; },
        alpha_level);
}

inline BoundEstimate point_psi2(const std::vector<InfluenceRow>& rows,
                                const SensitivityParams& params, double alpha_level = 0.05) {
    const double d0 = params.delta0;
    return detail::make_point(
        rows,
        [d0](const InfluenceRow& r) {
            return r.phi1[1] - r.phi1[0] - d0 * (r.phi3_01 - r.phi3[0]);
        },
        alpha_level);
}

enum class UnconfoundedTarget { psi0, psi1 };

/// Bounds that relax the no-unmeasured-confounding assumption; these use the
/// extended influence columns phi4-phi7 (functionals scaled by e_a).
inline BoundEstimate bounds_unconfounded(const std::vector<InfluenceRow>& rows,
                                         UnconfoundedTarget target,
                                         const SensitivityParams& params,
                                         double alpha_level = 0.05) {
    if (target == UnconfoundedTarget::psi0) {
        // lbar0 = -omega + E[mu1(1-pi1)e - {mu0 + pi0(1-mu0)}(1-e)]
        // ubar0 =  omega + E[{mu1 + pi1(1-mu1)}e - mu0(1-pi0)(1-e)]
        return detail::make_interval(
            rows,
            [](const InfluenceRow& r) {
                return -r.phi7[1] + r.phi4[1] - r.phi6[1] -
                       (r.phi4[0] + r.phi5[0] - r.phi6[0]);
            },
            [](const InfluenceRow& r) {
                return r.phi7[1] + r.phi4[1] + r.phi5[1] - r.phi6[1] -
                       (r.phi4[0] - r.phi6[0]);
            },
            alpha_level);
    }
    params.require_delta_bounds();
    const double du0 = params.delta_u0, du1 = params.delta_u1, dl0 = params.delta_l0;
    // lbar1 = E[e {du1 pi1 (1-mu1) + mu1}] - E[1 - (1-mu0)(1-du0 pi0)(1-e)]
    // ubar1 = E[1 - (1-mu1)(1-du1 pi1) e] - E[(1-e){dl0 pi0 (1-mu0) + mu0}]
    return detail::make_interval(
        rows,
        [=](const InfluenceRow& r) {
            const double first = du1 * (r.phi5[1] - r.phi6[1]) + r.phi4[1];
            // E[(1-mu0)(1-du0 pi0) e_0]
            const double shrunk =
                r.phi7[0] - r.phi4[0] - du0 * (r.phi5[0] - r.phi6[0]);
            return first - (1.0 - shrunk);
        },
        [=](const InfluenceRow& r) {
            // E[(1-mu1)(1-du1 pi1) e_1]
            const double shrunk =
                r.phi7[1] - r.phi4[1] - du1 * (r.phi5[1] - r.phi6[1]);
            const double second = dl0 * (r.phi5[0] - r.phi6[0]) + r.phi4[0];
            return 1.0 - shrunk - second;
        },
        alpha_level);
}

/// Multi-seed aggregate: median estimate per endpoint and a seed-adjusted SE,
/// median_s sqrt(se_s^2 + (theta_s - theta_median)^2).
struct SeedAggregate {
    std::vector<BoundEstimate> per_seed;
    BoundEstimate aggregate;
};

namespace detail {

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline Endpoint aggregate_endpoint(const std::vector<const Endpoint*>& eps, double alpha_level) {
    std::vector<double> values;
    for (const auto* e : eps) values.push_back(e->value);
    Endpoint out;
    out.value = median(values);
    std::vector<double> adj;
    for (const auto* e : eps) {
        const double d = e->value - out.value;
        adj.push_back(std::sqrt(e->se * e->se + d * d));
    }
    out.se = median(adj);
    const double z = norm_quantile(1.0 - alpha_level / 2.0);
    out.ci_lower = out.value - z * out.se;
    out.ci_upper = out.value + z * out.se;
    return out;
}

}  // namespace detail

inline SeedAggregate aggregate_seeds(const std::vector<BoundEstimate>& per_seed) {
    if (per_seed.empty()) throw std::invalid_argument("aggregate_seeds: need at least one seed");
    const EstimateKind kind = per_seed.front().kind;
    for (const auto& b : per_seed)
        if (b.kind != kind)
            throw std::invalid_argument("aggregate_seeds: mixed estimate kinds");

    SeedAggregate agg;
    agg.per_seed = per_seed;
    agg.aggregate.kind = kind;
    agg.aggregate.alpha_level = per_seed.front().alpha_level;
    std::vector<const Endpoint*> lows, highs;
    for (const auto& b : per_seed) {
        lows.push_back(&b.lower);
        highs.push_back(&b.upper);
    }
    agg.aggregate.lower = detail::aggregate_endpoint(lows, agg.aggregate.alpha_level);
    agg.aggregate.upper = kind == EstimateKind::point
                              ? agg.aggregate.lower
                              : detail::aggregate_endpoint(highs, agg.aggregate.alpha_level);
    agg.aggregate.crossed = agg.aggregate.lower.value > agg.aggregate.upper.value;
    return agg;
}

}  // namespace mixcens

#endif  // MIXCENS_ESTIMATORS_HPP
