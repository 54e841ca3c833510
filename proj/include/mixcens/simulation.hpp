#ifndef MIXCENS_SIMULATION_HPP
#define MIXCENS_SIMULATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixcens/common.hpp"
#include "mixcens/data.hpp"
#include "mixcens/dgp.hpp"
#include "mixcens/estimators.hpp"
#include "mixcens/influence.hpp"
#include "mixcens/nuisance.hpp"
#include "mixcens/oracle.hpp"

namespace mixcens {

/// One finite-population unit with its latent censoring components and latent
/// outcome retained for truth checks. The observed outcome is y_latent only
/// when c == 0.
struct PopulationUnit {
    double x = 0.0;
    int a = 0;
    int u_informative = 0;
    int u_noninformative = 0;
    int c = 0;
    double y_latent = 0.0;
};

struct PopulationTable {
    DGPParams params;
    std::vector<PopulationUnit> units;

    std::size_t size() const { return units.size(); }
};

/// Draws the finite population: X ~ U(-3,3), A ~ Bernoulli(e(X)), the two
/// censoring sources independently, and the outcome from the mean model
/// matching the informative-censoring status.
inline PopulationTable generate_population(const DGPParams& params) {
    params.validate();
    PopulationTable pop;
    pop.params = params;
    pop.units.reserve(params.population_size);
    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < params.population_size; ++i) {
        PopulationUnit u;
        u.x = dgp::kXLow + (dgp::kXHigh - dgp::kXLow) * unif(rng);
        u.a = unif(rng) < dgp::propensity(u.x) ? 1 : 0;
        u.u_informative = unif(rng) < dgp::pi_informative(params, u.a, u.x) ? 1 : 0;
        u.u_noninformative = unif(rng) < dgp::pi_noninformative(params, u.a, u.x) ? 1 : 0;
        u.c = (u.u_informative || u.u_noninformative) ? 1 : 0;
        const double mean = u.u_informative ? dgp::mu_informative(params, u.a, u.x)
                                            : dgp::mu_uncensored(params, u.a, u.x);
        u.y_latent = unif(rng) < mean ? 1.0 : 0.0;
        pop.units.push_back(u);
    }
    return pop;
}

/// Uniform without-replacement sample of n units as an observed Dataset
/// (latent columns stripped); deterministic per seed via Floyd's algorithm.
inline Dataset sample_dataset(const PopulationTable& pop, std::size_t n, std::uint64_t seed) {
    const std::size_t N = pop.size();
    if (n == 0 || n > N)
        throw std::invalid_argument("sample_dataset: need 0 < n <= population size");
    std::mt19937_64 rng(seed);
    std::set<std::size_t> chosen;
    for (std::size_t j = N - n; j < N; ++j) {
        std::uniform_int_distribution<std::size_t> pick(0, j);
        const std::size_t t = pick(rng);
        if (!chosen.insert(t).second) chosen.insert(j);
    }
    Dataset d;
    d.covariate_names = {"x1"};
    for (std::size_t i : chosen) {
        const auto& u = pop.units[i];
        Observation o;
        o.x = {u.x};
        o.a = u.a;
        o.c = u.c;
        if (u.c == 0) o.y = u.y_latent;
        d.observations.push_back(std::move(o));
    }
    return d;
}

/// True nuisance values evaluated analytically at the sampled covariates.
inline NuisanceValues true_nuisances(const Dataset& d, const DGPParams& params) {
    NuisanceValues out;
    for (const auto& o : d.observations) {
        const double x = o.x.at(0);
        out.e.push_back(dgp::propensity(x));
        out.pi0.push_back(dgp::pi_total(0, x));
        out.pi1.push_back(dgp::pi_total(1, x));
        out.mu0.push_back(dgp::mu_uncensored(params, 0, x));
        out.mu1.push_back(dgp::mu_uncensored(params, 1, x));
    }
    return out;
}

enum class StudyMode { perturb, learner };

struct StudyConfig {
    std::size_t n = 1000;
    std::size_t reps = 1000;
    StudyMode mode = StudyMode::perturb;
    double alpha = 0.3;       // perturbation rate exponent
    double c1 = 1.0, c2 = 1.0;
    std::array<double, 5> c1_weights = {1.0, 1.0, 1.0, 1.0, 1.0};  // e, pi0, pi1, mu0, mu1
    std::array<double, 5> c2_weights = {1.0, 1.0, 1.0, 1.0, 1.0};
    LearnerSpec learner;
    int folds = 2;
    double epsilon = 0.05;
    double alpha_level = 0.05;
    std::uint64_t seed = 1;
    bool keep_replicates = false;

    void validate() const {
        if (reps < 1) throw std::invalid_argument("StudyConfig: reps must be >= 1");
        if (n < 50) throw std::invalid_argument("StudyConfig: n must be >= 50");
    }
};

inline constexpr std::size_t kStudyEstimands = 6;
inline constexpr const char* kEstimandNames[kStudyEstimands] = {
    "psi_tilde", "omega1", "omega2", "omega3", "omega4", "omega5"};

struct EstimandSummary {
    std::string name;
    double truth = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
    double coverage = 0.0;
    double mean_se = 0.0;
};

struct StudyReport {
    std::vector<EstimandSummary> estimands;
    std::size_t reps_requested = 0;
    std::size_t reps_completed = 0;
    std::size_t failures = 0;
    std::vector<std::string> failure_messages;
    std::uint64_t seed = 0;
    std::string generator = kGeneratorName;
    // per replication x estimand, only when keep_replicates
    std::vector<std::array<Endpoint, kStudyEstimands>> replicates;
};

namespace detail {

inline std::array<Endpoint, kStudyEstimands> estimate_all(const std::vector<InfluenceRow>& rows,
                                                          double alpha_level) {
    static const std::array<std::array<double, kBasicColumns>, 5> coeffs = {{
        {-1, 1, 0, 0, 0, 0},  // psi_tilde
        {0, 0, 0, 1, 0, 0},   // omega1 = E[pi_1]
        {0, 0, 1, 0, 0, 0},   // omega2 = E[pi_0]
        {0, 0, 0, 0, 0, 1},   // omega3 = E[pi_1 mu_1]
        {0, 0, 0, 0, 1, 0},   // omega4 = E[pi_0 mu_0]
    }};
    std::array<Endpoint, kStudyEstimands> out;
    for (std::size_t j = 0; j < coeffs.size(); ++j)
        out[j] = estimate_functional(rows, coeffs[j], alpha_level).point();
    out[5] = make_point(rows, [](const InfluenceRow& r) { return r.sde_plus; }, alpha_level)
                 .point();
    return out;
}

}  // namespace detail

/// Monte-Carlo study over repeated samples from the finite population:
/// bias, RMSE, and CI coverage of the six study estimands against the
/// quadrature truth. Replications derive independent RNG streams from
/// (config.seed, replication index); failed replications are excluded and
/// counted, erroring past 1%.
inline StudyReport run_study(const PopulationTable& pop, const DgpTruth& truth,
                             const StudyConfig& config) {
    config.validate();
    const auto truths = truth.as_array();

    StudyReport report;
    report.reps_requested = config.reps;
    report.seed = config.seed;

    std::array<double, kStudyEstimands> sum_est{}, sum_sq_err{}, sum_se{};
    std::array<std::size_t, kStudyEstimands> covered{};

    const SmoothingSpec smooth{config.epsilon};
    for (std::size_t r = 0; r < config.reps; ++r) {
        const std::uint64_t seed_r = mix_seed(config.seed, r);
        try {
            Dataset d = sample_dataset(pop, config.n, mix_seed(seed_r, 0));
            d.require_estimable();
            NuisanceValues eta;
            if (config.mode == StudyMode::perturb) {
                PerturbationSpec ps;
                ps.alpha = config.alpha;
                ps.c1 = config.c1;
                ps.c2 = config.c2;
                ps.c1_weights = config.c1_weights;
                ps.c2_weights = config.c2_weights;
                ps.n = config.n;
                ps.seed = mix_seed(seed_r, 1);
                eta = perturb_nuisance(true_nuisances(d, pop.params), ps);
            } else {
                const auto folds = split_folds(d.size(), config.folds, mix_seed(seed_r, 1));
                eta = cross_fit_nuisances(d, folds, config.learner);
            }
            const auto rows = influence_matrix(d, eta, smooth);
            const auto est = detail::estimate_all(rows, config.alpha_level);
            for (std::size_t j = 0; j < kStudyEstimands; ++j) {
                sum_est[j] += est[j].value;
                const double err = est[j].value - truths[j];
                sum_sq_err[j] += err * err;
                sum_se[j] += est[j].se;
                if (est[j].ci_lower <= truths[j] && truths[j] <= est[j].ci_upper)
                    ++covered[j];
            }
            if (config.keep_replicates) report.replicates.push_back(est);
            ++report.reps_completed;
        } catch (const std::exception& ex) {
            ++report.failures;
            if (report.failure_messages.size() < 20)
                report.failure_messages.push_back("replication " + std::to_string(r) + ": " +
                                                  ex.what());
        }
    }

    if (report.reps_completed == 0 ||
        report.failures * 100 > config.reps)  // more than 1% failed
        throw std::runtime_error("run_study: " + std::to_string(report.failures) + " of " +
                                 std::to_string(config.reps) + " replications failed" +
                                 (report.failure_messages.empty()
                                      ? ""
                                      : "; first: " + report.failure_messages.front()));

    const double m = static_cast<double>(report.reps_completed);
    for (std::size_t j = 0; j < kStudyEstimands; ++j) {
        EstimandSummary s;
        s.name = kEstimandNames[j];
        s.truth = truths[j];
        s.bias = sum_est[j] / m - truths[j];
        s.rmse = std::sqrt(sum_sq_err[j] / m);
        s.coverage = static_cast<double>(covered[j]) / m;
        s.mean_se = sum_se[j] / m;
        report.estimands.push_back(std::move(s));
    }
    return report;
}

/// Study-summary CSV: one row per estimand.
inline void write_study_csv(const StudyReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "estimand,truth,bias,rmse,coverage\n";
    for (const auto& s : report.estimands) {
        out << s.name << ',' << detail::format_double(s.truth) << ','
            << detail::format_double(s.bias) << ',' << detail::format_double(s.rmse) << ','
            << detail::format_double(s.coverage) << '\n';
    }
}

}  // namespace mixcens

#endif  // MIXCENS_SIMULATION_HPP
