#ifndef MIXCENS_REPORT_JSON_HPP
#define MIXCENS_REPORT_JSON_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "mixcens/common.hpp"
#include "mixcens/estimators.hpp"
#include "mixcens/oracle.hpp"
#include "mixcens/sensitivity.hpp"
#include "mixcens/simulation.hpp"

namespace mixcens {

using nlohmann::json;

inline void to_json(json& j, const Endpoint& e) {
    j = json{{"value", e.value}, {"se", e.se}, {"ci_lower", e.ci_lower},
             {"ci_upper", e.ci_upper}};
}

inline void to_json(json& j, const BoundEstimate& b) {
    j = json{{"kind", b.kind == EstimateKind::point ? "point" : "interval"},
             {"lower", b.lower},
             {"upper", b.upper},
             {"alpha_level", b.alpha_level},
             {"crossed", b.crossed}};
    if (!b.coefficients_used.empty()) j["coefficients_used"] = b.coefficients_used;
}

inline void to_json(json& j, const SeedAggregate& s) {
    j = json{{"aggregate", s.aggregate}, {"per_seed", s.per_seed}};
}

inline void to_json(json& j, const RegionCurve& c) {
    j = json{{"tau0", c.tau0},          {"tau1", c.tau1},
             {"slope", c.slope},        {"intercept", c.intercept},
             {"delta1", c.delta1},      {"delta0_min", c.delta0_min}};
    std::vector<int> feas;
    for (bool f : c.feasible) feas.push_back(f ? 1 : 0);
    j["feasible"] = feas;
}

inline void to_json(json& j, const TippingResult& t) {
    j = json{{"naive", t.naive},
             {"grave_mu0", t.grave_mu0},
             {"grave_mu1", t.grave_mu1},
             {"tau_threshold", t.tau_threshold},
             {"region_curves", t.region_curves}};
}

inline void to_json(json& j, const BoundPair& b) {
    j = json{{"lower", b.lower}, {"upper", b.upper}};
}

inline void to_json(json& j, const FunctionalValues& f) {
    j = json{{"mu0", f.mu[0]},           {"mu1", f.mu[1]},
             {"pi0", f.pi[0]},           {"pi1", f.pi[1]},
             {"mu_pi0", f.mu_pi[0]},     {"mu_pi1", f.mu_pi[1]},
             {"mu1_pi0", f.mu1_pi0},     {"mu_e0", f.mu_e[0]},
             {"mu_e1", f.mu_e[1]},       {"pi_e0", f.pi_e[0]},
             {"pi_e1", f.pi_e[1]},       {"mu_pi_e0", f.mu_pi_e[0]},
             {"mu_pi_e1", f.mu_pi_e[1]}, {"e_arm0", f.e_arm[0]},
             {"e_arm1", f.e_arm[1]},     {"sde_plus", f.sde_plus},
             {"sde_minus", f.sde_minus}};
}

inline void to_json(json& j, const PopulationReport& r) {
    j = json{{"functionals", r.f},
             {"psi_tilde", r.psi_tilde},
             {"psi0", r.psi0},
             {"psi1", r.psi1},
             {"psi2", r.psi2},
             {"grave_mu0", r.grave_mu0},
             {"grave_mu1", r.grave_mu1},
             {"general", r.general},
             {"mono_positive", r.mono_positive},
             {"mono_negative", r.mono_negative},
             {"bounded_risk", r.bounded_risk},
             {"psi1_bounds", r.psi1_bounds},
             {"psi2_bounds", r.psi2_bounds},
             {"psi2_bounds_smooth", r.psi2_bounds_smooth},
             {"unconfounded_psi0", r.unconfounded_psi0},
             {"unconfounded_psi1", r.unconfounded_psi1},
             {"point_ate", r.point_ate},
             {"point_psi1", r.point_psi1},
             {"point_psi2", r.point_psi2}};
}

inline void to_json(json& j, const DgpTruth& t) {
    j = json{{"psi_tilde", t.psi_tilde}, {"omega1", t.omega1}, {"omega2", t.omega2},
             {"omega3", t.omega3},       {"omega4", t.omega4}, {"omega5", t.omega5},
             {"psi0", t.psi0},           {"psi1", t.psi1},     {"psi2", t.psi2},
             {"epsilon", t.epsilon}};
}

inline void to_json(json& j, const EstimandSummary& s) {
    j = json{{"name", s.name},         {"truth", s.truth},
             {"bias", s.bias},         {"rmse", s.rmse},
             {"coverage", s.coverage}, {"mean_se", s.mean_se}};
}

inline void to_json(json& j, const StudyReport& r) {
    j = json{{"estimands", r.estimands},
             {"reps_requested", r.reps_requested},
             {"reps_completed", r.reps_completed},
             {"failures", r.failures},
             {"failure_messages", r.failure_messages},
             {"seed", r.seed},
             {"generator", r.generator}};
}

inline void to_json(json& j, const SensitivityParams& p) {
    j = json{{"tau0", p.tau0},         {"tau1", p.tau1},
             {"delta0", p.delta0},     {"delta1", p.delta1},
             {"delta_l0", p.delta_l0}, {"delta_u0", p.delta_u0},
             {"delta_l1", p.delta_l1}, {"delta_u1", p.delta_u1},
             {"epsilon", p.epsilon}};
}

/// Wraps a payload with the reproducibility envelope every report carries.
inline json report_envelope(const std::string& command, const json& resolved_config,
                            const std::vector<std::uint64_t>& seeds, const json& payload) {
    return json{{"tool", "mixcens"},
                {"version", kVersion},
                {"command", command},
                {"generator", kGeneratorName},
                {"seeds", seeds},
                {"config", resolved_config},
                {"report", payload}};
}

}  // namespace mixcens

#endif  // MIXCENS_REPORT_JSON_HPP
