#include "dream/policies.hpp"

#include <cmath>
#include <stdexcept>

namespace dream {

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::Ucb: return "ucb";
        case Algorithm::Ts: return "ts";
        case Algorithm::Eg: return "eg";
    }
    return "?";
}

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "ucb") return Algorithm::Ucb;
    if (name == "ts") return Algorithm::Ts;
    if (name == "eg") return Algorithm::Eg;
    throw std::invalid_argument("algo: unknown algorithm '" + name + "'");
}

double ClippingSchedule::at(long t) const {
    switch (kind) {
        case Kind::Constant: return value;
        case Kind::SqrtLogOverT:
            return t <= 1 ? 0.0 : std::sqrt(value * std::log(static_cast<double>(t)) / t);
    }
    return 0.0;
}

double EgSchedule::at(long t) const { return scale * std::pow(static_cast<double>(t), -power); }

void PolicySpec::validate(long horizon) const {
    if (burn_in < 0) throw std::invalid_argument("T0: burn-in must be nonnegative");
    if (algorithm == Algorithm::Ucb && !(ucb_c >= 0.0))
        throw std::invalid_argument("ucb-c: must be nonnegative");
    if (algorithm == Algorithm::Ts && !(ts_rho >= 0.0))
        throw std::invalid_argument("rho: must be nonnegative");
    if (algorithm == Algorithm::Eg) {
        if (!(eg_eps.scale > 0.0)) throw std::invalid_argument("eg-scale: must be positive");
        if (eg_eps.power < 0.0) throw std::invalid_argument("eg-power: must be nonnegative");
        const long t0 = std::max<long>(burn_in + 1, 1);
        const double e = eg_eps.at(t0);
        if (!(e > 0.0) || e > 1.0)
            throw std::invalid_argument("eg-scale: eps_t outside (0,1] at first post-burn-in step");
    }
    if (clipping.kind == ClippingSchedule::Kind::Constant) {
        if (clipping.value < 0.0 || clipping.value >= 1.0)
            throw std::invalid_argument("p: clipping constant must be in [0,1)");
    } else {
        if (!(clipping.value > 0.0) || clipping.value >= 1.0)
            throw std::invalid_argument("p-alpha: must be in (0,1)");
    }
    (void)horizon;
}

int greedy_action(const ArmState& arm0, const ArmState& arm1, const Vec& feature) {
    if (arm0.dim() != arm1.dim())
        throw std::invalid_argument("greedy_action: arms disagree on dimension");
    return arm1.predict_mean(feature) > arm0.predict_mean(feature) ? 1 : 0;
}

Decision select_ucb(ArmState& arm0, ArmState& arm1, const Vec& feature, long t,
                    const PolicySpec& spec) {
    if (t < 1) throw std::invalid_argument("select_ucb: t must be >= 1");
    Decision d;
    d.greedy_action = greedy_action(arm0, arm1, feature);
    const double c = spec.ucb_c;
    const double s0 = arm0.predict_mean(feature) + c * arm0.predict_sd(feature);
    const double s1 = arm1.predict_mean(feature) + c * arm1.predict_sd(feature);
    d.action = s1 > s0 ? 1 : 0;
    return d;
}

namespace {

// One draw from N(beta, rho^2 * gram_inv); a Cholesky failure means the
// tracked inverse drifted, so refactorize and retry once.
double posterior_dot(ArmState& arm, const Vec& feature, double rho, Rng& rng) {
    Vec beta = arm.coefficients();
    if (rho == 0.0) return dot(feature, beta);
    std::vector<double> l;
    try {
        l = cholesky_lower(arm.gram_reg_inv());
    } catch (const std::runtime_error&) {
        arm.refactorize();
        l = cholesky_lower(arm.gram_reg_inv());
    }
    const std::size_t d = arm.dim();
    Vec z(d);
    for (auto& v : z) v = rng.normal();
    double s = dot(feature, beta);
    for (std::size_t i = 0; i < d; ++i) {
        double li = 0.0;
        for (std::size_t j = 0; j <= i; ++j) li += l[i * d + j] * z[j];
        s += rho * feature[i] * li;
    }
    return s;
}

} // namespace

Decision select_ts(ArmState& arm0, ArmState& arm1, const Vec& feature,
                   const PolicySpec& spec, Rng& rng) {
    Decision d;
    d.greedy_action = greedy_action(arm0, arm1, feature);
    const double v0 = posterior_dot(arm0, feature, spec.ts_rho, rng);
    const double v1 = posterior_dot(arm1, feature, spec.ts_rho, rng);
    d.action = v1 > v0 ? 1 : 0;
    return d;
}

Decision select_eg(const ArmState& arm0, const ArmState& arm1, const Vec& feature, long t,
                   const PolicySpec& spec, Rng& rng) {
    const double eps = spec.eg_eps.at(t);
    if (!(eps > 0.0) || eps > 1.0)
        throw std::invalid_argument("select_eg: eps_t outside (0,1]");
    Decision d;
    d.greedy_action = greedy_action(arm0, arm1, feature);
    if (rng.uniform() < 1.0 - eps) {
        d.action = d.greedy_action;
    } else {
        d.action = rng.bernoulli(0.5) ? 1 : 0;
    }
    return d;
}

Decision clipping_guard(const DesignGrams& grams, Decision proposed, long t,
                        const PolicySpec& spec) {
    const double p_t = spec.clipping.at(t);
    if (p_t <= 0.0) return proposed;
    const double td = static_cast<double>(t);
    const double lam_unchosen = min_eigenvalue(grams.per_action[1 - proposed.action]) / td;
    const double lam_total = min_eigenvalue(grams.total) / td;
    if (lam_unchosen < p_t * lam_total) {
        proposed.action = 1 - proposed.action;
        proposed.forced_by_clipping = true;
    }
    return proposed;
}

} // namespace dream
