#ifndef MIXCENS_SENSITIVITY_HPP
#define MIXCENS_SENSITIVITY_HPP

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixcens/common.hpp"
#include "mixcens/data.hpp"
#include "mixcens/estimators.hpp"
#include "mixcens/influence.hpp"

namespace mixcens {

/// One straight-line boundary of the explain-away region at a fixed tau:
/// delta0 = intercept + slope * delta1.
struct RegionCurve {
    double tau0 = 1.0;
    double tau1 = 1.0;
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<double> delta1;
    std::vector<double> delta0_min;
    std::vector<bool> feasible;  // delta0_min <= 1
};

struct TippingResult {
    double naive = 0.0;      // Psi-tilde
    double grave_mu0 = 0.0;  // E[pi_0 mu_0]
    double grave_mu1 = 0.0;  // E[pi_1 mu_1]
    double tau_threshold = 1.0;
    std::vector<RegionCurve> region_curves;
};

/// Smallest risk ratio tau able to explain away the naive association.
inline double tipping_tau(double naive, double grave_mu0, double grave_mu1) {
    if (!(grave_mu0 > 0.0 && grave_mu1 > 0.0))
        throw std::invalid_argument("tipping_tau: grave means must be > 0");
    if (naive > 0.0) return 1.0 + naive / grave_mu0;
    if (naive < 0.0) return 1.0 - naive / grave_mu1;
    return 1.0;
}

/// Zero set of the point-identified ATE at fixed (tau0, tau1), as the minimal
/// delta0 per delta1 grid point. With a common tau the curve is
/// delta0 = (delta1 grave_mu1 + naive/(tau-1)) / grave_mu0.
inline RegionCurve delta_region(double tau0, double tau1, double naive, double grave_mu0,
                                double grave_mu1, const std::vector<double>& delta1_grid) {
    if (!(tau0 > 1.0 && tau1 > 1.0))
        throw std::invalid_argument("delta_region: tau must be > 1");
    if (!(grave_mu0 > 0.0 && grave_mu1 > 0.0))
        throw std::invalid_argument("delta_region: grave means must be > 0");
    RegionCurve c;
    c.tau0 = tau0;
    c.tau1 = tau1;
    c.slope = grave_mu1 * (tau1 - 1.0) / (grave_mu0 * (tau0 - 1.0));
    c.intercept = naive / ((tau0 - 1.0) * grave_mu0);
    c.delta1 = delta1_grid;
    for (double d1 : delta1_grid) {
        const double d0 = c.intercept + c.slope * d1;
        c.delta0_min.push_back(d0);
        c.feasible.push_back(d0 <= 1.0);
    }
    return c;
}

inline RegionCurve delta_region(double tau, double naive, double grave_mu0, double grave_mu1,
                                const std::vector<double>& delta1_grid) {
    return delta_region(tau, tau, naive, grave_mu0, grave_mu1, delta1_grid);
}

/// Estimates the tipping summary from an influence matrix; region curves are
/// appended for each requested tau.
inline TippingResult tipping_from_rows(const std::vector<InfluenceRow>& rows,
                                       const std::vector<double>& taus = {},
                                       const std::vector<double>& delta1_grid = {0.0, 0.25, 0.5,
                                                                                 0.75, 1.0}) {
    if (rows.size() < 2)
        throw std::invalid_argument("tipping_from_rows: need at least two rows");
    TippingResult t;
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows) {
        t.naive += r.phi1[1] - r.phi1[0];
        t.grave_mu0 += r.phi3[0];
        t.grave_mu1 += r.phi3[1];
    }
    t.naive /= n;
    t.grave_mu0 /= n;
    t.grave_mu1 /= n;
    t.tau_threshold = tipping_tau(t.naive, t.grave_mu0, t.grave_mu1);
    for (double tau : taus)
        t.region_curves.push_back(
            delta_region(tau, t.naive, t.grave_mu0, t.grave_mu1, delta1_grid));
    return t;
}

enum class BoundFamily { mono_positive, mono_negative };

struct DeltaThreshold {
    double value = 0.0;           // delta at which the endpoint crosses zero
    bool robust_at_any_delta = false;  // value > 1: no admissible delta flips the sign
};

/// Solves the linear-in-delta bound endpoint for its zero. The monotone-bound
/// endpoint containing delta_{u,arm} is naive -/+ delta * denominator; the
/// threshold is naive / denominator (lower endpoints) or -naive / denominator
/// (upper endpoints).
inline DeltaThreshold max_delta_for_sign(const std::vector<InfluenceRow>& rows,
                                         BoundFamily family, int arm) {
    if (arm != 0 && arm != 1)
        throw std::invalid_argument("max_delta_for_sign: arm must be 0 or 1");
    if (rows.empty()) throw std::invalid_argument("max_delta_for_sign: empty influence matrix");
    double naive = 0.0, den = 0.0;
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows) {
        naive += r.phi1[1] - r.phi1[0];
        if (family == BoundFamily::mono_positive)
            den += r.phi2[arm] - r.phi3[arm];  // E[pi_a (1 - mu_a)]
        else
            den += r.phi3[arm];  // E[pi_a mu_a]
    }
    naive /= n;
    den /= n;
    if (!(den > 0.0))
        throw std::invalid_argument("max_delta_for_sign: degenerate denominator");
    // mono-positive: arm 0 enters the lower endpoint, arm 1 the upper;
    // mono-negative swaps the arms.
    const bool lower_endpoint = (family == BoundFamily::mono_positive) == (arm == 0);
    DeltaThreshold out;
    out.value = (lower_endpoint ? naive : -naive) / den;
    out.robust_at_any_delta = out.value > 1.0;
    return out;
}

/// Plot-ready export of the feasibility region.
inline void write_region_csv(const std::vector<RegionCurve>& curves, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "tau,delta1,delta0_min,feasible\n";
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.delta1.size(); ++i) {
            out << detail::format_double(c.tau0) << ',' << detail::format_double(c.delta1[i])
                << ',' << detail::format_double(c.delta0_min[i]) << ','
                << (c.feasible[i] ? 1 : 0) << '\n';
        }
    }
}

}  // namespace mixcens

#endif  // MIXCENS_SENSITIVITY_HPP
