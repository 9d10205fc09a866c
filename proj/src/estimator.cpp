#include "dream/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dream {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

// Acklam's rational approximation to the normal quantile.
double acklam_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - plow) {
        q = p - 0.5;
        r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

double record_kappa(const InteractionRecord& r, const EstimatorOptions& opts) {
    return opts.kappa_override ? *opts.kappa_override : r.kappa_hat;
}

double record_mu_at_greedy(const InteractionRecord& r, const EstimatorOptions& opts) {
    return opts.use_alt_mu ? r.alt_mu_at_greedy() : r.mu_at_greedy();
}

} // namespace

double normal_upper_quantile(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw std::invalid_argument("normal_upper_quantile: alpha must be in (0,1)");
    const double p = 1.0 - alpha;
    double x = acklam_quantile(p);
    // One Newton step against the exact CDF.
    const double err = normal_cdf(x) - p;
    x -= err / normal_pdf(x);
    return x;
}

double dream_value(Records records, const EstimatorOptions& opts) {
    if (records.empty()) throw std::invalid_argument("dream_value: empty record list");
    double s = 0.0;
    for (const auto& r : records) {
        const double kappa = record_kappa(r, opts);
        const double mu = record_mu_at_greedy(r, opts);
        const double w = (r.exploited ? 1.0 : 0.0) / (1.0 - kappa);
        s += w * (r.reward - mu) + mu;
    }
    return s / static_cast<double>(records.size());
}

double dream_variance(Records records, double sigma2_res0, double sigma2_res1,
                      const std::function<double(const InteractionRecord&)>& final_mu_at_final_policy,
                      const EstimatorOptions& opts) {
    if (records.empty()) throw std::invalid_argument("dream_variance: empty record list");
    const std::size_t n = records.size();
    std::vector<double> mt(n);
    double mbar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mt[i] = final_mu_at_final_policy(records[i]);
        mbar += mt[i];
    }
    mbar /= static_cast<double>(n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = records[i];
        const double kappa = record_kappa(r, opts);
        const double noise = r.greedy_action == 1 ? sigma2_res1 : sigma2_res0;
        const double dev = mt[i] - mbar;
        s += noise / (1.0 - kappa) + dev * dev;
    }
    return s / static_cast<double>(n);
}

std::pair<double, double> wald_ci(double v_hat, double sigma2_hat, long t_effective,
                                  double alpha) {
    if (sigma2_hat < 0.0) throw std::invalid_argument("wald_ci: negative variance");
    if (t_effective < 1) throw std::invalid_argument("wald_ci: t_effective must be >= 1");
    const double z = normal_upper_quantile(alpha / 2.0);
    const double half = z * std::sqrt(sigma2_hat / static_cast<double>(t_effective));
    return {v_hat - half, v_hat + half};
}

MeanCi averaged_reward(Records records, double alpha) {
    if (records.empty()) throw std::invalid_argument("averaged_reward: empty record list");
    const double n = static_cast<double>(records.size());
    double m = 0.0;
    for (const auto& r : records) m += r.reward;
    m /= n;
    double ss = 0.0;
    for (const auto& r : records) ss += (r.reward - m) * (r.reward - m);
    const double sd = std::sqrt(ss / n);
    const double z = normal_upper_quantile(alpha / 2.0);
    const double half = z * sd / std::sqrt(n);
    return {m, m - half, m + half};
}

ValueReport known_policy_value(Records records,
                               const std::function<int(const InteractionRecord&)>& policy,
                               double sigma2_res0, double sigma2_res1,
                               const std::function<double(const InteractionRecord&, int)>& final_mu,
                               double alpha, double propensity_floor) {
    if (records.empty()) throw std::invalid_argument("known_policy_value: empty record list");
    const std::size_t n = records.size();
    std::vector<int> target(n);
    std::vector<double> mt(n);
    double v = 0.0, mbar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = records[i];
        target[i] = policy(r);
        const double mu = target[i] == 1 ? r.mu_hat1 : r.mu_hat0;
        const double p_target =
            std::clamp(target[i] == r.greedy_action ? 1.0 - r.kappa_hat : r.kappa_hat,
                       propensity_floor, 1.0);
        const double w = (r.action == target[i] ? 1.0 : 0.0) / p_target;
        v += w * (r.reward - mu) + mu;
        mt[i] = final_mu(r, target[i]);
        mbar += mt[i];
    }
    v /= static_cast<double>(n);
    mbar /= static_cast<double>(n);
    double s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = records[i];
        const double noise = target[i] == 1 ? sigma2_res1 : sigma2_res0;
        const double p_target =
            std::clamp(target[i] == r.greedy_action ? 1.0 - r.kappa_hat : r.kappa_hat,
                       propensity_floor, 1.0);
        const double dev = mt[i] - mbar;
        s2 += noise / p_target + dev * dev;
    }
    s2 /= static_cast<double>(n);
    ValueReport rep;
    rep.v_hat = v;
    rep.sigma2_hat = s2;
    rep.alpha = alpha;
    rep.t_effective = static_cast<long>(n);
    std::tie(rep.ci_low, rep.ci_high) = wald_ci(v, s2, rep.t_effective, alpha);
    return rep;
}

double cumulative_regret(Records records,
                         const std::function<double(const Vec&, int)>& true_mean) {
    double s = 0.0;
    for (const auto& r : records) {
        const double m0 = true_mean(r.context, 0);
        const double m1 = true_mean(r.context, 1);
        s += std::max(m0, m1) - (r.action == 1 ? m1 : m0);
    }
    return s;
}

} // namespace dream
