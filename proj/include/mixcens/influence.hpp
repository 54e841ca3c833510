#ifndef MIXCENS_INFLUENCE_HPP
#define MIXCENS_INFLUENCE_HPP

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixcens/common.hpp"
#include "mixcens/data.hpp"
#include "mixcens/nuisance.hpp"

namespace mixcens {

/// Standard deviation of the normal-CDF smoother that replaces the indicator
/// in the separable-direct-effect bounds.
struct SmoothingSpec {
    double epsilon = 0.05;
};

/// Nuisance vector evaluated at a single unit.
struct NuisanceAt {
    double e, pi0, pi1, mu0, mu1;

    double e_arm(int a) const { return a == 1 ? e : 1.0 - e; }
    double pi(int a) const { return a == 1 ? pi1 : pi0; }
    double mu(int a) const { return a == 1 ? mu1 : mu0; }
};

/// Per-unit uncentered influence-function values. Empirical means of these
/// columns are one-step estimators of the corresponding functionals:
///   phi1_a  -> E[mu_a]            phi2_a -> E[pi_a]
///   phi3_a  -> E[mu_a pi_a]       phi3_01 -> E[mu_1 pi_0]
///   phi4_a  -> E[mu_a e_a]        phi5_a -> E[pi_a e_a]
///   phi6_a  -> E[mu_a pi_a e_a]   phi7_a -> E[e_a]
///   sde_plus/sde_minus -> E[pi_0 (mu_1-mu_0) Phi_eps(+/-(mu_1-mu_0))]
struct InfluenceRow {
    double phi1[2], phi2[2], phi3[2];
    double phi3_01;
    double phi4[2], phi5[2], phi6[2], phi7[2];
    double sde_plus, sde_minus;
};

namespace detail {

inline void check_finite_nuisance(const NuisanceAt& eta) {
    if (!std::isfinite(eta.e) || !std::isfinite(eta.pi0) || !std::isfinite(eta.pi1) ||
        !std::isfinite(eta.mu0) || !std::isfinite(eta.mu1))
        throw std::domain_error("influence_row: non-finite nuisance value");
}

}  // namespace detail

/// Influence value for the smooth SDE-bound correction E[pi_0 dmu Phi_eps(s*dmu)],
/// where dmu = mu_1 - mu_0 and s = +1 (side used by the lower SDE bound) or
/// s = -1 (upper). Four-term expression: two inverse-probability residual
/// terms, one chain-rule density term, one plug-in term.
inline double phi_smooth_sde(const Observation& o, const NuisanceAt& eta,
                             const SmoothingSpec& smooth, int sign) {
    if (!(smooth.epsilon > 0.0))
        throw std::invalid_argument("phi_smooth_sde: epsilon must be > 0");
    detail::check_finite_nuisance(eta);
    const double dmu = eta.mu1 - eta.mu0;
    const double s = sign >= 0 ? 1.0 : -1.0;
    const double Phi = norm_cdf(s * dmu / smooth.epsilon);
    const double dens = norm_pdf(s * dmu / smooth.epsilon) / smooth.epsilon;

    double ipw_diff = 0.0;  // weighted outcome residual, treated minus control
    double resid1 = 0.0, resid0 = 0.0;
    if (o.c == 0) {
        const double r = *o.y - eta.mu(o.a);
        const double w = 1.0 / ((1.0 - eta.pi(o.a)) * eta.e_arm(o.a));
        if (o.a == 1) {
            ipw_diff = w * r;
            resid1 = w * r;
        } else {
            ipw_diff = -w * r;
            resid0 = w * r;
        }
    }
    const double cens0 =
        (o.a == 0) ? (static_cast<double>(o.c) - eta.pi0) / eta.e_arm(0) : 0.0;

    const double t1 = ipw_diff * eta.pi0 * Phi;
    const double t2 = cens0 * dmu * Phi;
    const double t3 = dmu * eta.pi0 * dens * s * (resid1 - resid0);
    const double t4 = dmu * eta.pi0 * Phi;
    return t1 + t2 + t3 + t4;
}

/// All uncentered influence values for one unit.
inline InfluenceRow influence_row(const Observation& o, const NuisanceAt& eta,
                                  const SmoothingSpec& smooth = {}) {
    detail::check_finite_nuisance(eta);
    InfluenceRow r{};
    for (int a = 0; a < 2; ++a) {
        const double mu = eta.mu(a);
        const double pi = eta.pi(a);
        const double ea = eta.e_arm(a);
        const int on_arm = (o.a == a) ? 1 : 0;

        double phi1 = mu;
        if (on_arm && o.c == 0) phi1 += (*o.y - mu) / ((1.0 - pi) * ea);
        double phi2 = pi;
        if (on_arm) phi2 += (static_cast<double>(o.c) - pi) / ea;
        const double phi3 = phi1 * pi + phi2 * mu - mu * pi;

        const double phi7 = static_cast<double>(on_arm);
        r.phi1[a] = phi1;
        r.phi2[a] = phi2;
        r.phi3[a] = phi3;
        r.phi7[a] = phi7;
        // product rule against E[e_a]
        r.phi4[a] = phi1 * ea + phi7 * mu - mu * ea;
        r.phi5[a] = phi2 * ea + phi7 * pi - pi * ea;
        r.phi6[a] = phi3 * ea + phi7 * mu * pi - mu * pi * ea;
    }
    // cross term for E[mu_1 pi_0]
    r.phi3_01 = r.phi1[1] * eta.pi0 + r.phi2[0] * eta.mu1 - eta.mu1 * eta.pi0;
    r.sde_plus = phi_smooth_sde(o, eta, smooth, +1);
    r.sde_minus = phi_smooth_sde(o, eta, smooth, -1);
    return r;
}

inline NuisanceAt nuisance_at(const NuisanceValues& eta, std::size_t i) {
    return NuisanceAt{eta.e[i], eta.pi0[i], eta.pi1[i], eta.mu0[i], eta.mu1[i]};
}

inline std::vector<InfluenceRow> influence_matrix(const Dataset& d, const NuisanceValues& eta,
                                                  const SmoothingSpec& smooth = {}) {
    if (d.size() == 0) throw std::invalid_argument("influence_matrix: empty dataset");
    if (eta.size() != d.size())
        throw std::invalid_argument("influence_matrix: nuisance/dataset length mismatch");
    std::vector<InfluenceRow> rows;
    rows.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        rows.push_back(influence_row(d.observations[i], nuisance_at(eta, i), smooth));
    return rows;
}

/// Audit export, one column per influence component.
inline void write_influence_csv(const std::vector<InfluenceRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "phi1_0,phi1_1,phi2_0,phi2_1,phi3_0,phi3_1,phi3_01,"
           "phi4_0,phi4_1,phi5_0,phi5_1,phi6_0,phi6_1,phi7_0,phi7_1,"
           "sde_plus,sde_minus\n";
    for (const auto& r : rows) {
        out << detail::format_double(r.phi1[0]) << ',' << detail::format_double(r.phi1[1]) << ','
            << detail::format_double(r.phi2[0]) << ',' << detail::format_double(r.phi2[1]) << ','
            << detail::format_double(r.phi3[0]) << ',' << detail::format_double(r.phi3[1]) << ','
            << detail::format_double(r.phi3_01) << ',' << detail::format_double(r.phi4[0]) << ','
            << detail::format_double(r.phi4[1]) << ',' << detail::format_double(r.phi5[0]) << ','
            << detail::format_double(r.phi5[1]) << ',' << detail::format_double(r.phi6[0]) << ','
            << detail::format_double(r.phi6[1]) << ',' << detail::format_double(r.phi7[0]) << ','
            << detail::format_double(r.phi7[1]) << ',' << detail::format_double(r.sde_plus) << ','
            << detail::format_double(r.sde_minus) << '\n';
    }
}

}  // namespace mixcens

#endif  // MIXCENS_INFLUENCE_HPP
