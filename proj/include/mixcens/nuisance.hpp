#ifndef MIXCENS_NUISANCE_HPP
#define MIXCENS_NUISANCE_HPP

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixcens/common.hpp"
#include "mixcens/data.hpp"

namespace mixcens {

/// Cross-fitted per-unit evaluations of the nuisance vector
/// {e, pi0, pi1, mu0, mu1}.
struct NuisanceValues {
    std::vector<double> e;
    std::vector<double> pi0, pi1;
    std::vector<double> mu0, mu1;

    std::size_t size() const { return e.size(); }

    const std::vector<double>& pi(int a) const { return a == 1 ? pi1 : pi0; }
    const std::vector<double>& mu(int a) const { return a == 1 ? mu1 : mu0; }
    std::vector<double>& pi(int a) { return a == 1 ? pi1 : pi0; }
    std::vector<double>& mu(int a) { return a == 1 ? mu1 : mu0; }
};

enum class LearnerKind { logistic, kernel };

struct LearnerSpec {
    LearnerKind kind = LearnerKind::logistic;
    int max_iterations = 100;
    double tolerance = 1e-9;
    double bandwidth = 0.0;    // 0 -> Silverman's rule per covariate
    double eps_clip = 0.01;
};

struct PerturbationSpec {
    double alpha = 0.3;
    double c1 = 1.0;
    double c2 = 1.0;
    // Per-nuisance multipliers on (c1, c2) in the order e, pi0, pi1, mu0,
    // mu1; the constants are specific to each nuisance function.
    std::array<double, 5> c1_weights = {1.0, 1.0, 1.0, 1.0, 1.0};
    std::array<double, 5> c2_weights = {1.0, 1.0, 1.0, 1.0, 1.0};
    std::size_t n = 1000;      // nominal sample size setting the rate
    std::uint64_t seed = 0;
};

struct FitError : std::runtime_error {
    explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

// min(max(p, eps), 1-eps); used for the propensity score, whose positivity
// assumption is two-sided.
inline double clip_probability(double p, double eps_clip) {
    if (!(eps_clip > 0.0 && eps_clip < 0.5))
        throw std::invalid_argument("clip_probability: eps_clip must lie in (0, 0.5)");
    return std::min(std::max(p, eps_clip), 1.0 - eps_clip);
}

// Censoring probabilities only need to stay away from 1.
inline double clip_censoring(double p, double eps_clip) {
    if (!(eps_clip > 0.0 && eps_clip < 0.5))
        throw std::invalid_argument("clip_censoring: eps_clip must lie in (0, 0.5)");
    return std::min(std::max(p, 0.0), 1.0 - eps_clip);
}

/// Logit-linear model fit by iteratively reweighted least squares.
class LogisticModel {
public:
    Eigen::VectorXd beta;       // intercept first
    std::vector<double> offset; // training offsets, empty if none
    int iterations = 0;
    double final_grad_norm = 0.0;

    double predict(const std::vector<double>& x, double off = 0.0) const {
        double z = beta[0] + off;
        for (std::size_t j = 0; j < x.size(); ++j) z += beta[j + 1] * x[j];
        return expit(z);
    }
};

inline LogisticModel fit_logistic(const std::vector<std::vector<double>>& features,
                                  const std::vector<double>& labels,
                                  const LearnerSpec& spec = {},
                                  const std::vector<double>* offset = nullptr) {
    const std::size_t n = features.size();
    if (n == 0 || labels.size() != n)
        throw std::invalid_argument("fit_logistic: empty or mismatched inputs");
    const std::size_t p = features[0].size();

    double ymean = 0.0;
    for (double y : labels) {
        if (!(y >= 0.0 && y <= 1.0)) throw FitError("fit_logistic: labels must lie in [0,1]");
        ymean += y;
    }
    ymean /= static_cast<double>(n);
    if (!(ymean > 0.0 && ymean < 1.0))
        throw FitError("fit_logistic: labels are constant; need both classes present");

    Eigen::MatrixXd X(n, p + 1);
    Eigen::VectorXd y(n), off = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (!std::isfinite(features[i][j]))
                throw FitError("fit_logistic: non-finite feature value");
            X(i, j + 1) = features[i][j];
        }
        y[i] = labels[i];
        if (offset) off[i] = (*offset)[i];
    }

    auto log_lik = [&](const Eigen::VectorXd& b) {
        double ll = 0.0;
        Eigen::VectorXd z = X * b + off;
        for (std::size_t i = 0; i < n; ++i) {
            // y*z - log(1+exp(z)), stable form
            ll += y[i] * z[i] - (z[i] > 0 ? z[i] + std::log1p(std::exp(-z[i]))
                                          : std::log1p(std::exp(z[i])));
        }
        return ll;
    };

    LogisticModel m;
    m.beta = Eigen::VectorXd::Zero(p + 1);
    m.beta[0] = logit(ymean);
    double ll = log_lik(m.beta);

    const double divergence_bound = 30.0;
    for (int it = 0; it < spec.max_iterations; ++it) {
        Eigen::VectorXd z = X * m.beta + off;
        Eigen::VectorXd mu(n), w(n);
        for (std::size_t i = 0; i < n; ++i) {
            mu[i] = expit(z[i]);
            w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-10);
        }
        Eigen::VectorXd grad = X.transpose() * (y - mu);
        m.final_grad_norm = grad.norm();
        m.iterations = it;
        if (m.final_grad_norm < spec.tolerance * static_cast<double>(n)) return m;

        Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X;
        Eigen::VectorXd step = H.ldlt().solve(grad);
        if (!step.allFinite()) throw FitError("fit_logistic: singular IRLS system");

        // Step-halving keeps the log-likelihood non-decreasing; the slack is
        // relative because round-off in a summed likelihood scales with |ll|.
        const double slack = 1e-10 * (1.0 + std::abs(ll));
        double scale = 1.0;
        Eigen::VectorXd cand;
        double ll_new;
        for (int h = 0; h < 40; ++h) {
            cand = m.beta + scale * step;
            ll_new = log_lik(cand);
            if (ll_new >= ll - slack) break;
            scale *= 0.5;
        }
        if (ll_new < ll - 1e-6 * (1.0 + std::abs(ll)))
            throw FitError("fit_logistic: log-likelihood decreased");
        m.beta = cand;
        ll = ll_new;
        if (m.beta.cwiseAbs().maxCoeff() > divergence_bound)
            throw FitError(
                "fit_logistic: coefficients diverging, data appear perfectly separated; "
                "consider the kernel learner");
    }
    throw FitError("fit_logistic: no convergence after " + std::to_string(spec.max_iterations) +
                   " iterations (gradient norm " + std::to_string(m.final_grad_norm) + ")");
}

/// Nadaraya-Watson local average with a Gaussian product kernel. Queries with
/// vanishing total kernel weight fall back to the training mean and are
/// counted in `fallbacks`.
class KernelModel {
public:
    std::vector<std::vector<double>> train_x;
    std::vector<double> train_y;
    std::vector<double> bandwidths;
    double global_mean = 0.0;
    mutable std::size_t fallbacks = 0;

    double predict(const std::vector<double>& x) const {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < train_x.size(); ++i) {
            double logk = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                const double u = (x[j] - train_x[i][j]) / bandwidths[j];
                logk -= 0.5 * u * u;
            }
            const double k = std::exp(logk);
            num += k * train_y[i];
            den += k;
        }
        if (den < 1e-300) {
            ++fallbacks;
            return global_mean;
        }
        return std::min(std::max(num / den, 0.0), 1.0);
    }
};

inline KernelModel fit_kernel(const std::vector<std::vector<double>>& features,
                              const std::vector<double>& labels,
                              const LearnerSpec& spec = {}) {
    const std::size_t n = features.size();
    if (n < 2 || labels.size() != n)
        throw std::invalid_argument("fit_kernel: need n >= 2 matched rows");
    const std::size_t p = features[0].size();
    KernelModel m;
    m.train_x = features;
    m.train_y = labels;
    m.global_mean = 0.0;
    for (double y : labels) m.global_mean += y;
    m.global_mean /= static_cast<double>(n);

    m.bandwidths.assign(p, spec.bandwidth);
    if (spec.bandwidth <= 0.0) {
        // Silverman's rule per covariate
        for (std::size_t j = 0; j < p; ++j) {
            double mean = 0.0, ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += features[i][j];
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double d = features[i][j] - mean;
                ss += d * d;
            }
            const double sd = std::sqrt(ss / static_cast<double>(n - 1));
            m.bandwidths[j] =
                std::max(1.06 * sd * std::pow(static_cast<double>(n), -0.2), 1e-6);
        }
    }
    return m;
}

namespace detail {

// Fits one nuisance on the given training rows and predicts on query rows.
inline std::vector<double> fit_and_predict(const std::vector<std::vector<double>>& train_x,
                                           const std::vector<double>& train_y,
                                           const std::vector<std::vector<double>>& query_x,
                                           const LearnerSpec& spec) {
    std::vector<double> out;
    out.reserve(query_x.size());
    if (spec.kind == LearnerKind::logistic) {
        double mean = 0.0;
        for (double y : train_y) mean += y;
        mean /= static_cast<double>(train_y.size());
        if (mean <= 0.0 || mean >= 1.0) {
            // Degenerate labels: intercept-only prediction at the label mean.
            for (std::size_t i = 0; i < query_x.size(); ++i) out.push_back(mean);
            return out;
        }
        const LogisticModel m = fit_logistic(train_x, train_y, spec);
        for (const auto& x : query_x) out.push_back(m.predict(x));
    } else {
        const KernelModel m = fit_kernel(train_x, train_y, spec);
        for (const auto& x : query_x) out.push_back(m.predict(x));
    }
    return out;
}

}  // namespace detail

/// Cross-fitted nuisance estimates: the predictions for unit i come from
/// models trained on folds other than fold(i). mu_a is fit on uncensored
/// units of arm a, pi_a on arm a, e on all units.
inline NuisanceValues cross_fit_nuisances(const Dataset& d, const FoldAssignment& folds,
                                          const LearnerSpec& spec) {
    const std::size_t n = d.size();
    if (folds.fold_of.size() != n)
        throw std::invalid_argument("cross_fit_nuisances: fold assignment size mismatch");
    d.require_estimable();

    NuisanceValues out;
    out.e.assign(n, 0.0);
    out.pi0.assign(n, 0.0);
    out.pi1.assign(n, 0.0);
    out.mu0.assign(n, 0.0);
    out.mu1.assign(n, 0.0);

    // Precondition, checked for every fold before any fitting: each training
    // complement has both arms and uncensored units in both arms.
    for (int k = 0; k < folds.k; ++k) {
        bool arm[2] = {false, false}, unc[2] = {false, false};
        for (std::size_t i = 0; i < n; ++i) {
            if (folds.fold_of[i] == k) continue;
            const auto& o = d.observations[i];
            arm[o.a] = true;
            if (o.c == 0) unc[o.a] = true;
        }
        for (int a = 0; a < 2; ++a) {
            if (!arm[a])
                throw DataError("cross_fit_nuisances: training complement of fold " +
                                std::to_string(k) + " lacks arm " + std::to_string(a));
            if (!unc[a])
                throw DataError("cross_fit_nuisances: training complement of fold " +
                                std::to_string(k) + " has no uncensored units in arm " +
                                std::to_string(a));
        }
    }

    for (int k = 0; k < folds.k; ++k) {
        std::vector<std::size_t> hold, train;
        for (std::size_t i = 0; i < n; ++i) {
            (folds.fold_of[i] == k ? hold : train).push_back(i);
        }
        if (hold.empty()) continue;

        std::vector<std::vector<double>> qx;
        qx.reserve(hold.size());
        for (std::size_t i : hold) qx.push_back(d.observations[i].x);

        // e: all training units, label A
        {
            std::vector<std::vector<double>> tx;
            std::vector<double> ty;
            for (std::size_t i : train) {
                tx.push_back(d.observations[i].x);
                ty.push_back(static_cast<double>(d.observations[i].a));
            }
            auto pred = detail::fit_and_predict(tx, ty, qx, spec);
            for (std::size_t j = 0; j < hold.size(); ++j)
                out.e[hold[j]] = clip_probability(pred[j], spec.eps_clip);
        }
        // pi_a: arm a, label C; mu_a: arm a uncensored, label Y
        for (int a = 0; a < 2; ++a) {
            std::vector<std::vector<double>> tx_pi, tx_mu;
            std::vector<double> ty_pi, ty_mu;
            for (std::size_t i : train) {
                const auto& o = d.observations[i];
                if (o.a != a) continue;
                tx_pi.push_back(o.x);
                ty_pi.push_back(static_cast<double>(o.c));
                if (o.c == 0) {
                    tx_mu.push_back(o.x);
                    ty_mu.push_back(*o.y);
                }
            }
            auto pred_pi = detail::fit_and_predict(tx_pi, ty_pi, qx, spec);
            auto pred_mu = detail::fit_and_predict(tx_mu, ty_mu, qx, spec);
            for (std::size_t j = 0; j < hold.size(); ++j) {
                out.pi(a)[hold[j]] = clip_censoring(pred_pi[j], spec.eps_clip);
                out.mu(a)[hold[j]] = std::min(std::max(pred_mu[j], 0.0), 1.0);
            }
        }
    }
    return out;
}

/// Stochastic perturbation of true nuisance values at rate n^-alpha:
/// each value is replaced by expit(logit(v) + G) with
/// G ~ N(c1 * n^-alpha, c2 * n^-2alpha), drawn once per (unit, nuisance).
inline NuisanceValues perturb_nuisance(const NuisanceValues& truth,
                                       const PerturbationSpec& spec,
                                       double eps_clip = 0.01) {
    if (!(spec.alpha > 0.0)) throw std::invalid_argument("perturb_nuisance: alpha must be > 0");
    if (spec.c2 < 0.0) throw std::invalid_argument("perturb_nuisance: c2 must be >= 0");
    for (double w : spec.c1_weights)
        if (!std::isfinite(w)) throw std::invalid_argument("perturb_nuisance: bad c1 weight");
    for (double w : spec.c2_weights)
        if (w < 0.0) throw std::invalid_argument("perturb_nuisance: c2 weights must be >= 0");
    const double rate = std::pow(static_cast<double>(spec.n), -spec.alpha);

    std::mt19937_64 rng(spec.seed);
    enum class ClipMode { propensity, censoring, none };
    auto perturb_vec = [&](const std::vector<double>& v, std::size_t j, ClipMode mode) {
        const double mean = spec.c1 * spec.c1_weights[j] * rate;
        const double sd = std::sqrt(spec.c2 * spec.c2_weights[j]) * rate;
        std::normal_distribution<double> gauss(mean, sd > 0.0 ? sd : 1.0);
        std::vector<double> out;
        out.reserve(v.size());
        for (double p : v) {
            const double z = logit(p);
            if (!std::isfinite(z)) throw std::domain_error("perturb_nuisance: non-finite logit");
            double q = expit(z + (sd > 0.0 ? gauss(rng) : mean));
            if (mode == ClipMode::propensity) q = clip_probability(q, eps_clip);
            if (mode == ClipMode::censoring) q = clip_censoring(q, eps_clip);
            out.push_back(q);
        }
        return out;
    };

    NuisanceValues out;
    // Fixed nuisance order keeps draws reproducible: e, pi0, pi1, mu0, mu1.
    out.e = perturb_vec(truth.e, 0, ClipMode::propensity);
    out.pi0 = perturb_vec(truth.pi0, 1, ClipMode::censoring);
    out.pi1 = perturb_vec(truth.pi1, 2, ClipMode::censoring);
    out.mu0 = perturb_vec(truth.mu0, 3, ClipMode::none);
    out.mu1 = perturb_vec(truth.mu1, 4, ClipMode::none);
    return out;
}

}  // namespace mixcens

#endif  // MIXCENS_NUISANCE_HPP
