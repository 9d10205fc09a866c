#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dream/linalg.hpp"

namespace dream {

// One time step of a trajectory. Predictions are frozen at decision time,
// i.e. they come from the models fitted on steps 1..t-1. `alt_mu*` carry
// the raw-linear estimator model used by the misspecified-mean variant and
// are NaN when that model is not tracked. `final_mu*` are backfilled at
// dump time from the end-of-run coefficients.
struct InteractionRecord {
    long t = 0;
    Vec context;   // raw, leading 1
    Vec feature;   // mapped
    int action = 0;
    double reward = 0.0;
    int greedy_action = 0;
    bool exploited = false;
    double kappa_hat = 0.0;
    double mu_hat0 = 0.0;
    double mu_hat1 = 0.0;
    double alt_mu0 = 0.0;
    double alt_mu1 = 0.0;
    bool has_alt = false;
    double final_mu0 = 0.0;
    double final_mu1 = 0.0;
    bool forced_by_clipping = false;
    bool forced_by_burn_in = false;

    double mu_at_greedy() const { return greedy_action == 1 ? mu_hat1 : mu_hat0; }
    double alt_mu_at_greedy() const { return greedy_action == 1 ? alt_mu1 : alt_mu0; }
    // Propensity of the chosen action implied by kappa_hat.
    double propensity() const { return exploited ? 1.0 - kappa_hat : kappa_hat; }
};

using Records = std::span<const InteractionRecord>;

struct EstimatorOptions {
    bool use_alt_mu = false;                 // plug in the raw-linear model's means
    std::optional<double> kappa_override;    // e.g. the constant-0.5 misspecification
};

// Upper alpha-quantile of the standard normal (rational approximation plus
// one Newton correction; absolute error < 1e-8).
double normal_upper_quantile(double alpha);

// The doubly robust value estimate over the given records.
double dream_value(Records records, const EstimatorOptions& opts = {});

// Variance estimate matching dream_value. `sigma2_res` are the per-arm
// residual variances evaluated with end-of-window coefficients, and
// `final_mu_at_final_policy` returns the end-of-window model's prediction
// at its own greedy action for a record's context.
double dream_variance(Records records, double sigma2_res0, double sigma2_res1,
                      const std::function<double(const InteractionRecord&)>& final_mu_at_final_policy,
                      const EstimatorOptions& opts = {});

// Symmetric Wald interval v_hat +/- z_{alpha/2} sqrt(sigma2 / t_effective).
std::pair<double, double> wald_ci(double v_hat, double sigma2_hat, long t_effective,
                                  double alpha);

struct MeanCi {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// Sample mean of rewards with a naive Wald interval (SD with denominator n).
MeanCi averaged_reward(Records records, double alpha);

struct ValueReport {
    double v_hat = 0.0;
    double sigma2_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double alpha = 0.05;
    long t_effective = 0;
    double baseline_avg = 0.0;
    double baseline_lo = 0.0;
    double baseline_hi = 0.0;
    double regret = std::numeric_limits<double>::quiet_NaN();
    bool covers(double v) const { return ci_low <= v && v <= ci_high; }
};

// Doubly robust evaluation of a known policy from logged records. `policy`
// maps a record to the target action; `final_mu` returns the end-of-window
// prediction for (record, action); per-step propensities of the target
// action are derived from kappa_hat and the recorded greedy action, clamped
// to [propensity_floor, 1].
ValueReport known_policy_value(Records records,
                               const std::function<int(const InteractionRecord&)>& policy,
                               double sigma2_res0, double sigma2_res1,
                               const std::function<double(const InteractionRecord&, int)>& final_mu,
                               double alpha, double propensity_floor = 1e-3);

// Sum over records of mu(x, best action) - mu(x, action taken), given the
// true conditional mean. Synthetic environments only.
double cumulative_regret(Records records,
                         const std::function<double(const Vec&, int)>& true_mean);

} // namespace dream
