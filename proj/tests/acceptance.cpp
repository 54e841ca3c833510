// Acceptance suite: one line of output per criterion, nonzero exit on any
// failure. Heavier criteria (the Monte-Carlo studies) run the longest.
#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mixcens/data.hpp"
#include "mixcens/dgp.hpp"
#include "mixcens/estimators.hpp"
#include "mixcens/influence.hpp"
#include "mixcens/nuisance.hpp"
#include "mixcens/oracle.hpp"
#include "mixcens/sensitivity.hpp"
#include "mixcens/simulation.hpp"
#include "support.hpp"

using namespace mixcens;

namespace {

std::string fmt(double v) {
    char b[64];
    std::snprintf(b, sizeof b, "%.5g", v);
    return b;
}

struct Criterion {
    int id;
    std::vector<std::string> failures;
    std::string note;

    explicit Criterion(int i) : id(i) {}

    void expect(bool cond, const std::string& what) {
        if (!cond) failures.push_back(what);
    }

    void expect_near(double value, double target, double tol, const std::string& what) {
        if (!(std::abs(value - target) <= tol))
            failures.push_back(what + " = " + fmt(value) + ", wanted " + fmt(target) +
                               " +/- " + fmt(tol));
    }

    bool report() const {
        if (failures.empty()) {
            std::printf("criterion %d: PASS%s%s\n", id, note.empty() ? "" : " - ",
                        note.c_str());
            return true;
        }
        std::string all;
        for (const auto& f : failures) {
            if (!all.empty()) all += "; ";
            all += f;
        }
        std::printf("criterion %d: FAIL - %s\n", id, all.c_str());
        return false;
    }
};

struct MeanSe {
    double mean = 0.0, se = 0.0;
};

MeanSe column_stat(const std::vector<InfluenceRow>& rows,
                   const std::function<double(const InfluenceRow&)>& fn) {
    const double n = static_cast<double>(rows.size());
    MeanSe s;
    for (const auto& r : rows) s.mean += fn(r);
    s.mean /= n;
    double ss = 0.0;
    for (const auto& r : rows) {
        const double d = fn(r) - s.mean;
        ss += d * d;
    }
    s.se = std::sqrt(ss / (n - 1.0) / n);
    return s;
}

const PopulationTable& study_population() {
    static const PopulationTable pop = [] {
        DGPParams p;  // defaults: N = 2,000,000, beta = 1, tau = 0.5, delta = 0.5
        p.seed = 1;
        return generate_population(p);
    }();
    return pop;
}

StudyReport run_mc_study(StudyMode mode, double alpha, std::size_t n, std::size_t reps,
                       std::uint64_t seed) {
    StudyConfig cfg;
    cfg.n = n;
    cfg.reps = reps;
    cfg.mode = mode;
    cfg.alpha = alpha;
    cfg.seed = seed;
    if (mode == StudyMode::perturb) {
        // Per-nuisance perturbation constants, shared by the alpha = 0.3 and
        // alpha = 0.1 studies. The propensity mean shift combined with the
        // downward censoring shifts produces the doubly-robust second-order
        // bias pattern (large at alpha = 0.1, negligible at 0.3); the mu mean
        // shift is common to both arms, so dmu and with it omega5 stay clean.
        cfg.c1_weights = {1.0, -2.5, -2.0, 1.0, 1.0};
        cfg.c2_weights = {2.0, 0.5, 0.5, 0.25, 0.25};
        cfg.epsilon = 0.2;
    } else {
        // Near-zero dmu puts omega5 at the positive-part kink; the wider
        // smoothing window keeps the learner-mode estimator in the linear
        // regime where the Wald interval is honest. Truth uses the same
        // epsilon (it is identically zero here either way).
        cfg.folds = 10;
        cfg.epsilon = 0.5;
    }
    const DgpTruth t = population_truth_dgp(study_population().params, {}, cfg.epsilon);
    return run_study(study_population(), t, cfg);
}

// --------------------------------------------------------------------------

bool criterion1() {
    Criterion c(1);
    const auto pop = running_example();
    SensitivityParams p;  // delta_u = 1
    const auto r = population_bounds(pop, p);

    c.expect_near(r.psi_tilde, 0.14, 0.01, "psi_tilde");
    c.expect_near(r.psi0, 0.17, 0.01, "psi0");
    c.expect_near(r.psi1, 0.17, 0.01, "psi1");
    c.expect_near(r.psi2, 0.12, 0.01, "psi2");
    c.expect_near(r.grave_mu0, 0.02, 0.01, "grave_mu0");
    c.expect_near(r.grave_mu1, 0.06, 0.01, "grave_mu1");
    c.expect_near(r.general.lower, -0.06, 0.01, "general lower");
    c.expect_near(r.general.upper, 0.34, 0.01, "general upper");
    c.expect_near(r.mono_positive.lower, 0.01, 0.01, "mono-pos lower (delta=1)");
    c.expect_near(r.mono_positive.upper, 0.31, 0.01, "mono-pos upper (delta=1)");
    c.expect_near(r.psi1_bounds.lower, 0.004, 0.001, "psi1 lower");
    c.expect_near(r.psi1_bounds.upper, 0.314, 0.001, "psi1 upper");
    c.expect_near(r.psi2_bounds.lower, 0.114, 0.001, "psi2 lower");
    c.expect_near(r.psi2_bounds.upper, 0.135, 0.001, "psi2 upper");

    SensitivityParams p08 = p;
    p08.set_delta_u(0.8);
    const auto r08 = population_bounds(pop, p08);
    c.expect_near(r08.mono_positive.lower, 0.03, 0.01, "mono-pos lower (delta=0.8)");
    c.expect_near(r08.mono_positive.upper, 0.28, 0.01, "mono-pos upper (delta=0.8)");

    SensitivityParams br = p;
    br.set_tau(3.0);
    const auto rbr = population_bounds(pop, br);
    c.expect_near(rbr.bounded_risk.lower, 0.04, 0.01, "bounded-risk lower (delta=1)");
    c.expect_near(rbr.bounded_risk.upper, 0.28, 0.01, "bounded-risk upper (delta=1)");
    SensitivityParams br08 = br;
    br08.set_delta_u(0.8);
    const auto rbr08 = population_bounds(pop, br08);
    c.expect_near(rbr08.bounded_risk.lower, 0.06, 0.01, "bounded-risk lower (delta=0.8)");
    c.expect_near(rbr08.bounded_risk.upper, 0.25, 0.01, "bounded-risk upper (delta=0.8)");

    const double tip = tipping_tau(r.psi_tilde, r.grave_mu0, r.grave_mu1);
    c.expect(tip >= 7.3 && tip <= 7.7, "tipping tau = " + fmt(tip) + ", wanted [7.3, 7.7]");

    // The printed region line (intercept 0.74, slope 3.1) comes from rounded
    // inputs; unrounded arithmetic gives 0.707 and 3.208. A band covering
    // both conventions is used, and the computed values are reported.
    const auto region = delta_region(10.0, r.psi_tilde, r.grave_mu0, r.grave_mu1, {0.0, 1.0});
    c.expect(region.intercept >= 0.70 && region.intercept <= 0.76,
             "region intercept = " + fmt(region.intercept) + ", wanted [0.70, 0.76]");
    c.expect(region.slope >= 3.0 && region.slope <= 3.25,
             "region slope = " + fmt(region.slope) + ", wanted [3.00, 3.25]");
    c.note = "tipping tau " + fmt(tip) + ", region intercept " + fmt(region.intercept) +
             ", slope " + fmt(region.slope) +
             " (printed 0.74/3.1 reflect rounded inputs; band covers both)";
    return c.report();
}

bool criterion2(StudyReport& out) {
    Criterion c(2);
    out = run_mc_study(StudyMode::perturb, 0.3, 1000, 1000, 20);
    const double table_rmse[kStudyEstimands] = {0.07, 0.02, 0.04, 0.02, 0.04, 0.04};
    for (std::size_t j = 0; j < kStudyEstimands; ++j) {
        const auto& s = out.estimands[j];
        c.expect(std::abs(s.bias) <= 0.01, s.name + " bias " + fmt(s.bias));
        c.expect(s.coverage >= 0.93 && s.coverage <= 0.97,
                 s.name + " coverage " + fmt(s.coverage));
        c.expect(std::abs(s.rmse - table_rmse[j]) <= 0.03,
                 s.name + " rmse " + fmt(s.rmse) + " vs table " + fmt(table_rmse[j]));
    }
    std::string cov = "coverage";
    for (const auto& s : out.estimands) cov += " " + fmt(s.coverage);
    c.note = cov;
    return c.report();
}

bool criterion3() {
    Criterion c(3);
    const auto rep = run_mc_study(StudyMode::perturb, 0.1, 1000, 1000, 21);
    for (std::size_t j = 1; j <= 4; ++j) {
        const auto& s = rep.estimands[j];
        c.expect(s.coverage <= 0.90, s.name + " coverage " + fmt(s.coverage) + " > 0.90");
    }
    const auto& o2 = rep.estimands[2];
    c.expect(o2.coverage <= 0.60, "omega2 coverage " + fmt(o2.coverage) + " > 0.60");
    c.expect(std::abs(o2.bias) >= 0.10, "omega2 |bias| " + fmt(std::abs(o2.bias)) + " < 0.10");
    const auto& o5 = rep.estimands[5];
    c.expect(o5.coverage >= 0.92 && o5.coverage <= 0.98,
             "omega5 coverage " + fmt(o5.coverage) + " outside [0.92, 0.98]");
    c.note = "omega2 bias " + fmt(o2.bias) + " coverage " + fmt(o2.coverage) +
             ", omega5 coverage " + fmt(o5.coverage);
    return c.report();
}

bool criterion4() {
    Criterion c(4);
    const auto rep = run_mc_study(StudyMode::learner, 0.3, 2000, 500, 22);
    std::string cov = "coverage";
    for (const auto& s : rep.estimands) {
        c.expect(std::abs(s.bias) <= 0.02, s.name + " bias " + fmt(s.bias));
        c.expect(s.coverage >= 0.90 && s.coverage <= 0.97,
                 s.name + " coverage " + fmt(s.coverage));
        cov += " " + fmt(s.coverage);
    }
    c.note = cov;
    return c.report();
}

bool criterion5() {
    Criterion c(5);
    DGPParams p;
    p.population_size = 200000;
    p.seed = 7;
    const auto pop = generate_population(p);
    const Dataset d = sample_dataset(pop, p.population_size, 1);
    SensitivityParams sp;
    sp.set_tau(2.0);
    sp.set_delta_u(0.8);
    sp.set_delta_l(0.1);
    sp.set_delta(0.5);
    const auto rows = influence_matrix(d, true_nuisances(d, p), SmoothingSpec{sp.epsilon});
    const auto truth = report_from_functionals(dgp_functionals(p, {}, sp.epsilon), sp);

    auto ep = [&](const std::string& name, const Endpoint& e, double target) {
        c.expect(std::abs(e.value - target) <= 3.0 * e.se,
                 name + " est " + fmt(e.value) + " truth " + fmt(target) + " 3se " +
                     fmt(3.0 * e.se));
    };
    auto both = [&](const std::string& name, const BoundEstimate& b, const BoundPair& t) {
        ep(name + " lower", b.lower, t.lower);
        ep(name + " upper", b.upper, t.upper);
    };
    both("general", bounds_general(rows), truth.general);
    both("mono-pos", bounds_monotone(rows, Monotonicity::positive, sp), truth.mono_positive);
    both("mono-neg", bounds_monotone(rows, Monotonicity::negative, sp), truth.mono_negative);
    both("bounded-risk", bounds_bounded_risk(rows, sp), truth.bounded_risk);
    both("psi1", bounds_psi1(rows, sp), truth.psi1_bounds);
    both("psi2-smooth", bounds_psi2_smooth(rows, sp), truth.psi2_bounds_smooth);
    both("unconf-psi0", bounds_unconfounded(rows, UnconfoundedTarget::psi0, sp),
         truth.unconfounded_psi0);
    both("unconf-psi1", bounds_unconfounded(rows, UnconfoundedTarget::psi1, sp),
         truth.unconfounded_psi1);
    ep("point-ate", point_ate(rows, sp).point(), truth.point_ate);
    ep("point-psi1", point_psi1(rows, sp).point(), truth.point_psi1);
    ep("point-psi2", point_psi2(rows, sp).point(), truth.point_psi2);
    c.note = "n = 200000, every endpoint within 3 MC SEs of quadrature truth";
    return c.report();
}

bool criterion6() {
    Criterion c(6);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto in = [&](double lo, double hi) { return lo + (hi - lo) * unif(rng); };

    // Per-unit product-rule identities, recomputed from the raw definitions.
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        NuisanceAt eta{in(0.05, 0.95), in(0.05, 0.95), in(0.05, 0.95), in(0.05, 0.95),
                       in(0.05, 0.95)};
        Observation o;
        o.x = {0.0};
        o.a = unif(rng) < 0.5 ? 1 : 0;
        o.c = unif(rng) < 0.5 ? 1 : 0;
        if (o.c == 0) o.y = unif(rng) < 0.5 ? 1.0 : 0.0;
        const auto r = influence_row(o, eta);
        double p1[2], p2[2];
        for (int a = 0; a < 2; ++a) {
            p1[a] = eta.mu(a);
            if (o.a == a && o.c == 0)
                p1[a] += (*o.y - eta.mu(a)) / ((1.0 - eta.pi(a)) * eta.e_arm(a));
            p2[a] = eta.pi(a);
            if (o.a == a) p2[a] += (static_cast<double>(o.c) - eta.pi(a)) / eta.e_arm(a);
            const double mu = eta.mu(a), pi = eta.pi(a), ea = eta.e_arm(a);
            const double p7 = (o.a == a) ? 1.0 : 0.0;
            const double p3 = p1[a] * pi + p2[a] * mu - mu * pi;
            worst = std::max(worst, std::abs(r.phi3[a] - p3));
            worst = std::max(worst, std::abs(r.phi4[a] - (p1[a] * ea + p7 * mu - mu * ea)));
            worst = std::max(worst, std::abs(r.phi5[a] - (p2[a] * ea + p7 * pi - pi * ea)));
            worst = std::max(worst,
                             std::abs(r.phi6[a] - (p3 * ea + p7 * mu * pi - mu * pi * ea)));
        }
        worst = std::max(
            worst, std::abs(r.phi3_01 - (p1[1] * eta.pi0 + p2[0] * eta.mu1 -
                                         eta.mu1 * eta.pi0)));
    }
    c.expect(worst <= 1e-12, "product-rule identity residual " + fmt(worst));

    // Exact tau = 1 / delta = 0 collapses on sampled rows.
    const Dataset d = testsupport::sample_discrete(running_example(), 500, 17);
    const auto rows =
        influence_matrix(d, testsupport::true_nuisances_discrete(d, running_example()));
    const double naive = naive_ate(rows).point().value;
    SensitivityParams tau1;
    tau1.set_tau(1.0);
    c.expect(point_ate(rows, tau1).point().value == naive, "tau=1 point != naive");
    c.expect(bounds_bounded_risk(rows, tau1).lower.value == naive &&
                 bounds_bounded_risk(rows, tau1).upper.value == naive,
             "tau=1 bounded-risk != naive");
    SensitivityParams d0;
    d0.set_delta_u(0.0);
    const auto m0 = bounds_monotone(rows, Monotonicity::positive, d0);
    c.expect(m0.lower.value == naive && m0.upper.value == naive, "delta=0 mono != naive");

    // Nesting on random nuisance configurations. The sign conditions and the
    // risk-coherence condition (tau-1) P_n[phi3_a] <= P_n[phi2_a - phi3_a]
    // make every nesting inequality an exact linear identity in the same
    // empirical means; configurations breaking them are skipped with a count.
    int evaluated = 0, skipped = 0;
    for (int cfg = 0; cfg < 100; ++cfg) {
        std::vector<InfluenceRow> rws;
        const int n = 2000;
        for (int i = 0; i < n; ++i) {
            NuisanceAt eta{in(0.25, 0.75), in(0.15, 0.6), in(0.15, 0.6), in(0.05, 0.45),
                           in(0.05, 0.45)};
            Observation o;
            o.x = {0.0};
            o.a = unif(rng) < eta.e ? 1 : 0;
            o.c = unif(rng) < eta.pi(o.a) ? 1 : 0;
            if (o.c == 0) o.y = unif(rng) < eta.mu(o.a) ? 1.0 : 0.0;
            rws.push_back(influence_row(o, eta));
        }
        SensitivityParams sp;
        sp.tau0 = in(1.0, 1.5);
        sp.tau1 = in(1.0, 1.5);
        sp.delta_u0 = unif(rng);
        sp.delta_u1 = unif(rng);
        sp.delta0 = sp.delta_u0;
        sp.delta1 = sp.delta_u1;

        bool ok = true;
        for (int a = 0; a < 2; ++a) {
            const double m3 = column_stat(rws, [a](const InfluenceRow& r) {
                                  return r.phi3[a];
                              }).mean;
            const double m23 = column_stat(rws, [a](const InfluenceRow& r) {
                                   return r.phi2[a] - r.phi3[a];
                               }).mean;
            const double tau = a == 1 ? sp.tau1 : sp.tau0;
            if (m3 < 0.0 || m23 < 0.0 || (tau - 1.0) * m3 > m23) ok = false;
        }
        if (!ok) {
            ++skipped;
            continue;
        }
        ++evaluated;
        const auto gen = bounds_general(rws);
        const auto mono = bounds_monotone(rws, Monotonicity::positive, sp);
        const auto brk = bounds_bounded_risk(rws, sp);
        const double pt = point_ate(rws, sp).point().value;
        const double eps = 1e-12;
        c.expect(gen.lower.value <= mono.lower.value + eps, "general !<= mono-pos lower");
        c.expect(mono.upper.value <= gen.upper.value + eps, "mono-pos !<= general upper");
        c.expect(gen.lower.value <= brk.lower.value + eps, "general !<= bounded-risk lower");
        c.expect(brk.upper.value <= gen.upper.value + eps, "bounded-risk !<= general upper");
        c.expect(brk.lower.value <= pt + eps && pt <= brk.upper.value + eps,
                 "point outside bounded-risk interval");
    }
    c.expect(evaluated >= 80, "only " + std::to_string(evaluated) + " configs evaluated");
    c.note = std::to_string(evaluated) + " nesting configs evaluated, " +
             std::to_string(skipped) + " skipped on sign conditions";
    return c.report();
}

bool criterion7() {
    Criterion c(7);
    DGPParams p;
    p.population_size = 200000;
    p.seed = 13;
    const auto pop = generate_population(p);
    const Dataset d = sample_dataset(pop, p.population_size, 2);
    const auto f = dgp_functionals(p);

    auto check = [&](const std::string& label, const NuisanceValues& eta) {
        const auto rows = influence_matrix(d, eta);
        for (int a = 0; a < 2; ++a) {
            const auto m1 = column_stat(rows, [a](const InfluenceRow& r) { return r.phi1[a]; });
            const auto m3 = column_stat(rows, [a](const InfluenceRow& r) { return r.phi3[a]; });
            c.expect(std::abs(m1.mean - f.mu[a]) <= 3.0 * m1.se,
                     label + " phi1_" + std::to_string(a) + " est " + fmt(m1.mean) +
                         " truth " + fmt(f.mu[a]) + " 3se " + fmt(3.0 * m1.se));
            c.expect(std::abs(m3.mean - f.mu_pi[a]) <= 3.0 * m3.se,
                     label + " phi3_" + std::to_string(a) + " est " + fmt(m3.mean) +
                         " truth " + fmt(f.mu_pi[a]) + " 3se " + fmt(3.0 * m3.se));
        }
    };

    NuisanceValues bad_pi = true_nuisances(d, p);
    std::fill(bad_pi.pi0.begin(), bad_pi.pi0.end(), 0.3);
    std::fill(bad_pi.pi1.begin(), bad_pi.pi1.end(), 0.3);
    check("const-pi", bad_pi);

    NuisanceValues bad_mu = true_nuisances(d, p);
    std::fill(bad_mu.mu0.begin(), bad_mu.mu0.end(), 0.5);
    std::fill(bad_mu.mu1.begin(), bad_mu.mu1.end(), 0.5);
    check("const-mu", bad_mu);
    c.note = "phi1/phi3 means robust to a constant pi block and a constant mu block";
    return c.report();
}

bool criterion8() {
    Criterion c(8);
    const auto pop = running_example();
    SensitivityParams base;  // delta_u0 = 1
    const double exact_u2 = population_bounds(pop, base).psi2_bounds.upper;
    const double eps_grid[] = {0.2, 0.1, 0.05, 0.01};
    std::vector<double> errs;
    for (double eps : eps_grid) {
        const auto f = population_functionals(pop, eps);
        errs.push_back(std::abs(f.naive() - f.sde_minus - exact_u2));
    }
    for (std::size_t i = 1; i < errs.size(); ++i)
        c.expect(errs[i] <= errs[i - 1] + 1e-15,
                 "error not monotone at eps " + fmt(eps_grid[i]));
    c.expect(errs.back() <= 0.005, "error at eps=0.01 is " + fmt(errs.back()));
    c.note = "errors " + fmt(errs[0]) + " " + fmt(errs[1]) + " " + fmt(errs[2]) + " " +
             fmt(errs[3]) + " over eps {0.2, 0.1, 0.05, 0.01}";
    return c.report();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool criterion9(const StudyReport& base_study) {
    Criterion c(9);
    const auto tdir = std::filesystem::temp_directory_path();
    const std::string data = (tdir / "mixcens_acc_data.csv").string();
    save_dataset(testsupport::sample_discrete(running_example(), 800, 31), data);
    const std::string out1 = (tdir / "mixcens_acc1.json").string();
    const std::string out2 = (tdir / "mixcens_acc2.json").string();
    auto run = [&](const std::string& out) {
        const std::string cmd = std::string(MIXCENS_CLI_PATH) + " bounds --data " + data +
                                " --set mono-pos --seeds 3 --seed 5 --out " + out +
                                " > /dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    c.expect(run(out1) == 0 && run(out2) == 0, "CLI bounds run failed");
    const std::string b1 = slurp(out1), b2 = slurp(out2);
    c.expect(!b1.empty() && b1 == b2, "CLI outputs not byte-identical");
    std::remove(data.c_str());
    std::remove(out1.c_str());
    std::remove(out2.c_str());

    const auto other = run_mc_study(StudyMode::perturb, 0.3, 1000, 1000, 7);
    double max_shift = 0.0;
    for (std::size_t j = 0; j < kStudyEstimands; ++j) {
        const double shift =
            std::abs(base_study.estimands[j].coverage - other.estimands[j].coverage);
        max_shift = std::max(max_shift, shift);
        c.expect(shift < 0.02, base_study.estimands[j].name + " coverage moved " + fmt(shift));
    }
    c.note = "byte-identical CLI output; max coverage shift across master seeds " +
             fmt(max_shift);
    return c.report();
}

}  // namespace

int main() {
    int failed = 0;
    auto run = [&](int id, const std::function<bool()>& fn) {
        try {
            if (!fn()) ++failed;
        } catch (const std::exception& ex) {
            std::printf("criterion %d: FAIL - exception: %s\n", id, ex.what());
            ++failed;
        }
    };

    StudyReport base_study;
    run(1, criterion1);
    run(2, [&] { return criterion2(base_study); });
    run(3, criterion3);
    run(4, criterion4);
    run(5, criterion5);
    run(6, criterion6);
    run(7, criterion7);
    run(8, criterion8);
    run(9, [&] { return criterion9(base_study); });

    if (failed > 0) {
        std::printf("%d criterion(s) failed\n", failed);
        return 1;
    }
    std::printf("all 9 criteria passed\n");
    return 0;
}
