// mixcens: bounds, sensitivity analyses, and simulation studies for causal
// effects under mixed informative/non-informative outcome censoring.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mixcens/data.hpp"
#include "mixcens/estimators.hpp"
#include "mixcens/influence.hpp"
#include "mixcens/nuisance.hpp"
#include "mixcens/oracle.hpp"
#include "mixcens/report_json.hpp"
#include "mixcens/sensitivity.hpp"
#include "mixcens/simulation.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Never leaves partial files: write to a temp sibling, then rename.
void write_text(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        return;
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write file: " + tmp);
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

void write_json_report(const std::string& path, const mixcens::json& j) {
    write_text(path, j.dump(2) + "\n");
}

struct CommonOpts {
    std::string out = "-";
    double alpha_level = 0.05;
    mixcens::SensitivityParams params;
    bool tau_given = false;
    double tau = 1.0, tau0 = 0.0, tau1 = 0.0;
    double delta_u = -1.0, delta_l = -1.0, delta = -1.0;

    void resolve() {
        if (tau_given) params.set_tau(tau);
        if (tau0 > 0.0) params.tau0 = tau0;
        if (tau1 > 0.0) params.tau1 = tau1;
        if (delta_u >= 0.0) params.set_delta_u(delta_u);
        if (delta_l >= 0.0) params.set_delta_l(delta_l);
        if (delta >= 0.0) params.set_delta(delta);
    }
};

void add_sensitivity_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--tau", o.tau, "Outcome risk ratio (both arms)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--tau0", o.tau0, "Arm-0 risk ratio (overrides --tau)");
    cmd->add_option("--tau1", o.tau1, "Arm-1 risk ratio (overrides --tau)");
    cmd->add_option("--delta0", o.params.delta0, "Known informative fraction, arm 0");
    cmd->add_option("--delta1", o.params.delta1, "Known informative fraction, arm 1");
    cmd->add_option("--delta-u", o.delta_u, "Upper bound on informative fraction, both arms");
    cmd->add_option("--delta-l", o.delta_l, "Lower bound on informative fraction, both arms");
    cmd->add_option("--delta-u0", o.params.delta_u0, "Upper informative-fraction bound, arm 0");
    cmd->add_option("--delta-u1", o.params.delta_u1, "Upper informative-fraction bound, arm 1");
    cmd->add_option("--delta-l0", o.params.delta_l0, "Lower informative-fraction bound, arm 0");
    cmd->add_option("--delta-l1", o.params.delta_l1, "Lower informative-fraction bound, arm 1");
    cmd->add_option("--epsilon", o.params.epsilon, "SDE smoothing bandwidth")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--alpha-level", o.alpha_level, "CI level alpha")
        ->check(CLI::Range(1e-6, 0.5));
    cmd->add_option("--out", o.out, "Output path for the JSON report, '-' for stdout");
}

mixcens::json params_json(const CommonOpts& o) {
    mixcens::json j = o.params;
    j["alpha_level"] = o.alpha_level;
    return j;
}

// ---------------------------------------------------------------------------
// bounds

struct BoundsOpts {
    CommonOpts common;
    std::string data;
    std::string set = "general";
    int folds = 2;
    int seeds = 11;
    std::uint64_t seed = 1;
    std::string learner = "logistic";
};

mixcens::LearnerSpec learner_from_name(const std::string& name) {
    mixcens::LearnerSpec spec;
    if (name == "logistic")
        spec.kind = mixcens::LearnerKind::logistic;
    else if (name == "kernel")
        spec.kind = mixcens::LearnerKind::kernel;
    else
        throw ConfigError("unknown learner '" + name + "' (expected logistic or kernel)");
    return spec;
}

mixcens::BoundEstimate estimate_set(const std::string& set,
                                    const std::vector<mixcens::InfluenceRow>& rows,
                                    const mixcens::SensitivityParams& params,
                                    double alpha_level) {
    using namespace mixcens;
    if (set == "general") return bounds_general(rows, alpha_level);
    if (set == "mono-pos") return bounds_monotone(rows, Monotonicity::positive, params, alpha_level);
    if (set == "mono-neg") return bounds_monotone(rows, Monotonicity::negative, params, alpha_level);
    if (set == "bounded-risk") return bounds_bounded_risk(rows, params, alpha_level);
    if (set == "psi1") return bounds_psi1(rows, params, alpha_level);
    if (set == "psi2") return bounds_psi2_smooth(rows, params, alpha_level);
    if (set == "point") return point_ate(rows, params, alpha_level);
    if (set == "unconfounded-psi0")
        return bounds_unconfounded(rows, UnconfoundedTarget::psi0, params, alpha_level);
    if (set == "unconfounded-psi1")
        return bounds_unconfounded(rows, UnconfoundedTarget::psi1, params, alpha_level);
    throw ConfigError("unknown assumption set '" + set + "'");
}

int cmd_bounds(BoundsOpts& o) {
    o.common.resolve();
    if ((o.set == "bounded-risk" || o.set == "point") && !o.common.tau_given)
        throw ConfigError("assumption set '" + o.set + "' requires --tau");
    if (o.seeds < 1) throw ConfigError("--seeds must be >= 1");
    const mixcens::LearnerSpec learner = learner_from_name(o.learner);

    mixcens::Dataset d = mixcens::load_dataset(o.data);
    d.require_estimable();
    const mixcens::SmoothingSpec smooth{o.common.params.epsilon};

    std::vector<std::uint64_t> seeds;
    std::vector<mixcens::BoundEstimate> per_seed;
    for (int s = 0; s < o.seeds; ++s) {
        const std::uint64_t seed_s = mixcens::mix_seed(o.seed, static_cast<std::uint64_t>(s));
        seeds.push_back(seed_s);
        const auto folds = mixcens::split_folds(d.size(), o.folds, seed_s);
        const auto eta = mixcens::cross_fit_nuisances(d, folds, learner);
        const auto rows = mixcens::influence_matrix(d, eta, smooth);
        per_seed.push_back(estimate_set(o.set, rows, o.common.params, o.common.alpha_level));
    }
    const auto agg = mixcens::aggregate_seeds(per_seed);

    mixcens::json cfg = params_json(o.common);
    cfg["data"] = o.data;
    cfg["set"] = o.set;
    cfg["folds"] = o.folds;
    cfg["learner"] = o.learner;
    cfg["n"] = d.size();
    write_json_report(o.common.out,
                      mixcens::report_envelope("bounds", cfg, seeds, mixcens::json(agg)));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// sensitivity

struct SensitivityOpts {
    CommonOpts common;
    std::string data;
    std::string example;
    std::vector<double> taus;
    std::string region_out = "region.csv";
    int grid_points = 101;
    int folds = 2;
    std::uint64_t seed = 1;
    std::string learner = "logistic";
};

int cmd_sensitivity(SensitivityOpts& o) {
    o.common.resolve();
    if (o.data.empty() == o.example.empty())
        throw ConfigError("sensitivity requires exactly one of --data or --example");
    if (!o.example.empty() && o.example != "running")
        throw ConfigError("unknown example '" + o.example + "' (expected running)");
    if (o.grid_points < 2) throw ConfigError("--grid-points must be >= 2");

    std::vector<double> grid;
    for (int i = 0; i < o.grid_points; ++i)
        grid.push_back(static_cast<double>(i) / (o.grid_points - 1));

    mixcens::TippingResult tip;
    std::vector<std::uint64_t> seeds;
    if (!o.example.empty()) {
        const auto f = mixcens::population_functionals(mixcens::running_example(),
                                                       o.common.params.epsilon);
        tip.naive = f.naive();
        tip.grave_mu0 = f.mu_pi[0];
        tip.grave_mu1 = f.mu_pi[1];
        tip.tau_threshold = mixcens::tipping_tau(tip.naive, tip.grave_mu0, tip.grave_mu1);
        for (double tau : o.taus)
            tip.region_curves.push_back(
                mixcens::delta_region(tau, tip.naive, tip.grave_mu0, tip.grave_mu1, grid));
    } else {
        mixcens::Dataset d = mixcens::load_dataset(o.data);
        d.require_estimable();
        seeds.push_back(o.seed);
        const auto folds = mixcens::split_folds(d.size(), o.folds, o.seed);
        const auto eta = mixcens::cross_fit_nuisances(d, folds, learner_from_name(o.learner));
        const auto rows =
            mixcens::influence_matrix(d, eta, mixcens::SmoothingSpec{o.common.params.epsilon});
        tip = mixcens::tipping_from_rows(rows, o.taus, grid);
    }

    mixcens::write_region_csv(tip.region_curves, o.region_out);
    mixcens::json cfg = params_json(o.common);
    cfg["data"] = o.data;
    cfg["example"] = o.example;
    cfg["taus"] = o.taus;
    cfg["region_out"] = o.region_out;
    write_json_report(o.common.out,
                      mixcens::report_envelope("sensitivity", cfg, seeds, mixcens::json(tip)));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
    CommonOpts common;
    std::string mode = "perturb";
    double alpha = 0.3, c1 = 1.0, c2 = 1.0;
    std::vector<double> c1_weights{1.0, 1.0, 1.0, 1.0, 1.0};
    std::vector<double> c2_weights{1.0, 1.0, 1.0, 1.0, 1.0};
    std::size_t n = 1000, reps = 1000;
    int folds = 2;
    std::uint64_t seed = 1;
    std::string learner = "logistic";
    std::string csv_out;
    mixcens::DGPParams dgp;
};

int cmd_simulate(SimulateOpts& o) {
    o.common.resolve();
    mixcens::StudyConfig cfg;
    cfg.n = o.n;
    cfg.reps = o.reps;
    if (o.mode == "perturb")
        cfg.mode = mixcens::StudyMode::perturb;
    else if (o.mode == "learner")
        cfg.mode = mixcens::StudyMode::learner;
    else
        throw ConfigError("unknown mode '" + o.mode + "' (expected perturb or learner)");
    cfg.alpha = o.alpha;
    cfg.c1 = o.c1;
    cfg.c2 = o.c2;
    if (o.c1_weights.size() != 5 || o.c2_weights.size() != 5)
        throw ConfigError("--c1-weights/--c2-weights need 5 values (e, pi0, pi1, mu0, mu1)");
    std::copy(o.c1_weights.begin(), o.c1_weights.end(), cfg.c1_weights.begin());
    std::copy(o.c2_weights.begin(), o.c2_weights.end(), cfg.c2_weights.begin());
    cfg.learner = learner_from_name(o.learner);
    cfg.folds = o.folds;
    cfg.epsilon = o.common.params.epsilon;
    cfg.alpha_level = o.common.alpha_level;
    cfg.seed = o.seed;
    cfg.validate();

    const auto truth = mixcens::population_truth_dgp(o.dgp, {}, cfg.epsilon);
    const auto pop = mixcens::generate_population(o.dgp);
    const auto report = mixcens::run_study(pop, truth, cfg);

    if (!o.csv_out.empty()) {
        std::string tmp = o.csv_out + ".tmp";
        mixcens::write_study_csv(report, tmp);
        std::filesystem::rename(tmp, o.csv_out);
    }
    mixcens::json jc = params_json(o.common);
    jc["mode"] = o.mode;
    jc["alpha"] = o.alpha;
    jc["c1"] = o.c1;
    jc["c2"] = o.c2;
    jc["c1_weights"] = o.c1_weights;
    jc["c2_weights"] = o.c2_weights;
    jc["n"] = o.n;
    jc["reps"] = o.reps;
    jc["folds"] = o.folds;
    jc["learner"] = o.learner;
    jc["population_size"] = o.dgp.population_size;
    jc["dgp_seed"] = o.dgp.seed;
    mixcens::json payload = report;
    payload["truth"] = truth;
    write_json_report(o.common.out,
                      mixcens::report_envelope("simulate", jc, {o.dgp.seed, o.seed}, payload));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// oracle

struct OracleOpts {
    CommonOpts common;
    std::string example;
    std::string dgp_name;
    std::vector<double> taus{10.0};
    mixcens::DGPParams dgp;
    std::size_t quad_nodes = 1024;
};

void print_pair(const char* name, const mixcens::BoundPair& b) {
    std::printf("  %-22s [%9.6f, %9.6f]\n", name, b.lower, b.upper);
}

int cmd_oracle(OracleOpts& o) {
    o.common.resolve();
    if (o.example.empty() == o.dgp_name.empty())
        throw ConfigError("oracle requires exactly one of --example or --dgp");

    mixcens::json payload;
    if (!o.example.empty()) {
        if (o.example != "running")
            throw ConfigError("unknown example '" + o.example + "' (expected running)");
        const auto pop = mixcens::running_example();
        const auto rep = mixcens::population_bounds(pop, o.common.params);

        // Default running-example parameter sweep used by the worked analysis.
        mixcens::SensitivityParams p1 = o.common.params;
        p1.set_delta_u(1.0);
        mixcens::SensitivityParams p08 = o.common.params;
        p08.set_delta_u(0.8);
        mixcens::SensitivityParams br = p1;
        br.set_tau(3.0);
        mixcens::SensitivityParams br08 = p08;
        br08.set_tau(3.0);

        const auto rep_d1 = mixcens::population_bounds(pop, p1);
        const auto rep_d08 = mixcens::population_bounds(pop, p08);
        const auto rep_br1 = mixcens::population_bounds(pop, br);
        const auto rep_br08 = mixcens::population_bounds(pop, br08);

        const double tau_threshold =
            mixcens::tipping_tau(rep.psi_tilde, rep.grave_mu0, rep.grave_mu1);
        std::vector<mixcens::RegionCurve> curves;
        for (double tau : o.taus)
            curves.push_back(mixcens::delta_region(tau, rep.psi_tilde, rep.grave_mu0,
                                                   rep.grave_mu1, {0.0, 0.25, 0.5, 0.75, 1.0}));

        payload = rep;
        payload["sweeps"] = {{"delta_u_1", mixcens::json(rep_d1)},
                             {"delta_u_0.8", mixcens::json(rep_d08)},
                             {"bounded_risk_tau3_delta1", mixcens::json(rep_br1)},
                             {"bounded_risk_tau3_delta0.8", mixcens::json(rep_br08)}};
        payload["tipping"] = {{"tau_threshold", tau_threshold}, {"region_curves", curves}};

        if (o.common.out != "-") {
            std::printf("running example, exact population values\n");
            std::printf("  %-22s %9.6f\n", "psi_tilde", rep.psi_tilde);
            std::printf("  %-22s %9.6f\n", "psi0", rep.psi0);
            std::printf("  %-22s %9.6f\n", "psi1", rep.psi1);
            std::printf("  %-22s %9.6f\n", "psi2", rep.psi2);
            std::printf("  %-22s %9.6f\n", "grave_mu0", rep.grave_mu0);
            std::printf("  %-22s %9.6f\n", "grave_mu1", rep.grave_mu1);
            print_pair("general", rep.general);
            print_pair("mono-pos (delta_u=1)", rep_d1.mono_positive);
            print_pair("mono-pos (delta_u=.8)", rep_d08.mono_positive);
            print_pair("bounded-risk (t3,d1)", rep_br1.bounded_risk);
            print_pair("bounded-risk (t3,d.8)", rep_br08.bounded_risk);
            print_pair("psi1 bounds", rep_d1.psi1_bounds);
            print_pair("psi2 bounds", rep_d1.psi2_bounds);
            std::printf("  %-22s %9.6f\n", "tipping tau", tau_threshold);
            for (const auto& c : curves)
                std::printf("  region tau=%-10.4g delta0 >= %.6f + %.6f * delta1\n", c.tau0,
                            c.intercept, c.slope);
        }
    } else {
        if (o.dgp_name != "default" && o.dgp_name != "custom")
            throw ConfigError("unknown DGP '" + o.dgp_name + "' (expected default or custom)");
        mixcens::QuadratureSpec quad;
        quad.nodes = o.quad_nodes;
        const auto truth =
            mixcens::population_truth_dgp(o.dgp, quad, o.common.params.epsilon);
        payload = truth;
        if (o.common.out != "-") {
            std::printf("DGP quadrature truth\n");
            const char* names[] = {"psi_tilde", "omega1", "omega2",
                                   "omega3",    "omega4", "omega5"};
            const auto vals = truth.as_array();
            for (int i = 0; i < 6; ++i) std::printf("  %-10s %12.9f\n", names[i], vals[i]);
            std::printf("  %-10s %12.9f\n", "psi0", truth.psi0);
            std::printf("  %-10s %12.9f\n", "psi1", truth.psi1);
            std::printf("  %-10s %12.9f\n", "psi2", truth.psi2);
        }
    }

    mixcens::json cfg = params_json(o.common);
    cfg["example"] = o.example;
    cfg["dgp"] = o.dgp_name;
    cfg["taus"] = o.taus;
    write_json_report(o.common.out, mixcens::report_envelope("oracle", cfg, {}, payload));
    return kExitOk;
}

void add_dgp_flags(CLI::App* cmd, mixcens::DGPParams& dgp) {
    cmd->add_option("--beta0", dgp.beta0, "Outcome model coefficient, arm 0");
    cmd->add_option("--beta1", dgp.beta1, "Outcome model coefficient, arm 1");
    cmd->add_option("--dgp-tau0", dgp.tau0, "DGP risk ratio, arm 0");
    cmd->add_option("--dgp-tau1", dgp.tau1, "DGP risk ratio, arm 1");
    cmd->add_option("--dgp-delta0", dgp.delta0, "DGP informative fraction, arm 0");
    cmd->add_option("--dgp-delta1", dgp.delta1, "DGP informative fraction, arm 1");
    cmd->add_option("--pop-size", dgp.population_size, "Finite population size");
    cmd->add_option("--dgp-seed", dgp.seed, "Population generation seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bounds and sensitivity analysis for causal effects under mixed "
                 "informative/non-informative censoring"};
    app.set_version_flag("--version", std::string("mixcens ") + mixcens::kVersion);
    app.set_config("--config", "", "Key-value config file merged under flags");
    app.require_subcommand(1);

    BoundsOpts bo;
    auto* bounds = app.add_subcommand("bounds", "Estimate bounds or points from a CSV dataset");
    bounds->add_option("--data", bo.data, "Input CSV (y,a,c,x1,...,xp)")->required();
    bounds->add_option("--set", bo.set,
                       "Assumption set: general, mono-pos, mono-neg, bounded-risk, psi1, psi2, "
                       "point, unconfounded-psi0, unconfounded-psi1");
    bounds->add_option("--folds", bo.folds, "Cross-fitting folds")->check(CLI::Range(2, 100));
    bounds->add_option("--seeds", bo.seeds, "Number of sample-splitting seeds");
    bounds->add_option("--seed", bo.seed, "Master seed");
    bounds->add_option("--learner", bo.learner, "Nuisance learner: logistic or kernel");
    add_sensitivity_flags(bounds, bo.common);
    auto* bt = bounds->get_option("--tau");
    bounds->callback([&bo, bt] { bo.common.tau_given = bt->count() > 0; });

    SensitivityOpts so;
    auto* sens = app.add_subcommand("sensitivity", "Tipping-point analysis and feasibility region");
    sens->add_option("--data", so.data, "Input CSV");
    sens->add_option("--example", so.example, "Built-in example population (running)");
    sens->add_option("--tau", so.taus, "Risk ratio(s) for region curves")->expected(-1);
    sens->add_option("--region-out", so.region_out, "Region CSV path");
    sens->add_option("--grid-points", so.grid_points, "delta1 grid resolution");
    sens->add_option("--folds", so.folds, "Cross-fitting folds")->check(CLI::Range(2, 100));
    sens->add_option("--seed", so.seed, "Fold-split seed");
    sens->add_option("--learner", so.learner, "Nuisance learner: logistic or kernel");
    sens->add_option("--out", so.common.out, "Output path for the JSON report");
    sens->add_option("--epsilon", so.common.params.epsilon, "SDE smoothing bandwidth");
    sens->add_option("--alpha-level", so.common.alpha_level, "CI level alpha");

    SimulateOpts mo;
    auto* sim = app.add_subcommand("simulate", "Monte-Carlo study against quadrature truth");
    sim->add_option("--mode", mo.mode, "perturb or learner");
    sim->add_option("--alpha", mo.alpha, "Perturbation rate exponent");
    sim->add_option("--c1", mo.c1, "Perturbation mean constant");
    sim->add_option("--c2", mo.c2, "Perturbation variance constant");
    sim->add_option("--c1-weights", mo.c1_weights,
                    "Per-nuisance mean-constant weights: e pi0 pi1 mu0 mu1")
        ->expected(5);
    sim->add_option("--c2-weights", mo.c2_weights,
                    "Per-nuisance variance-constant weights: e pi0 pi1 mu0 mu1")
        ->expected(5);
    sim->add_option("--n", mo.n, "Sample size per replication");
    sim->add_option("--reps", mo.reps, "Replication count");
    sim->add_option("--folds", mo.folds, "Cross-fitting folds (learner mode)");
    sim->add_option("--seed", mo.seed, "Study master seed");
    sim->add_option("--learner", mo.learner, "Nuisance learner (learner mode)");
    sim->add_option("--csv-out", mo.csv_out, "Study-summary CSV path");
    add_dgp_flags(sim, mo.dgp);
    sim->add_option("--out", mo.common.out, "Output path for the JSON report");
    sim->add_option("--epsilon", mo.common.params.epsilon, "Omega5 smoothing bandwidth");
    sim->add_option("--alpha-level", mo.common.alpha_level, "CI level alpha");

    OracleOpts oo;
    auto* orc = app.add_subcommand("oracle", "Exact truth reports");
    orc->add_option("--example", oo.example, "Discrete example population (running)");
    orc->add_option("--dgp", oo.dgp_name, "Quadrature truth for the simulation DGP (default)");
    orc->add_option("--region-tau", oo.taus, "Risk ratio(s) for the reported region curves")
        ->expected(-1);
    orc->add_option("--quad-nodes", oo.quad_nodes, "Quadrature node count");
    add_dgp_flags(orc, oo.dgp);
    add_sensitivity_flags(orc, oo.common);
    auto* ot = orc->get_option("--tau");
    orc->callback([&oo, ot] { oo.common.tau_given = ot->count() > 0; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*bounds) return cmd_bounds(bo);
        if (*sens) return cmd_sensitivity(so);
        if (*sim) return cmd_simulate(mo);
        if (*orc) return cmd_oracle(oo);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const mixcens::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
