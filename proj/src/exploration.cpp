#include "dream/exploration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dream {

namespace {
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-std::clamp(z, -40.0, 40.0))); }
} // namespace

ExplorationModel ExplorationModel::logistic(std::size_t context_dim, double step_scale) {
    if (context_dim < 1) throw std::invalid_argument("ExplorationModel: empty context");
    ExplorationModel m;
    m.kind_ = Kind::Logistic;
    m.weights_.assign(2 + (context_dim - 1), 0.0);
    m.step_scale_ = step_scale;
    return m;
}

ExplorationModel ExplorationModel::eg_closed_form(EgSchedule eps) {
    ExplorationModel m;
    m.kind_ = Kind::EgClosedForm;
    m.eg_eps_ = eps;
    return m;
}

ExplorationModel ExplorationModel::constant(double value) {
    ExplorationModel m;
    m.kind_ = Kind::Constant;
    m.constant_value_ = value;
    return m;
}

Vec ExplorationModel::features(long t, const Vec& context) const {
    Vec phi(weights_.size(), 0.0);
    phi[0] = 1.0;
    phi[1] = std::log(static_cast<double>(t));
    // non-intercept context coordinates
    for (std::size_t i = 1; i < context.size() && i + 1 < weights_.size(); ++i)
        phi[i + 1] = context[i];
    return phi;
}

void ExplorationModel::fit_update(long t, const Vec& context, bool exploited) {
    if (t < 1) throw std::invalid_argument("ExplorationModel::fit_update: t must be >= 1");
    if (kind_ != Kind::Logistic) return;
    const Vec phi = features(t, context);
    ++n_updates_;
    const double pred = sigmoid(dot(weights_, phi));
    const double label = exploited ? 0.0 : 1.0; // 1 = exploration event
    const double step = step_scale_ / std::sqrt(static_cast<double>(n_updates_));
    for (std::size_t i = 0; i < weights_.size(); ++i)
        weights_[i] -= step * (pred - label) * phi[i];
}

double ExplorationModel::predict(long t, const Vec& context) const {
    if (t < 1) throw std::invalid_argument("ExplorationModel::predict: t must be >= 1");
    double v = 0.0;
    switch (kind_) {
        case Kind::Logistic: v = sigmoid(dot(weights_, features(t, context))); break;
        case Kind::EgClosedForm: v = 0.5 * eg_eps_.at(t); break;
        case Kind::Constant: v = constant_value_; break;
    }
    return std::clamp(v, kappa_min, kappa_max);
}

double ridge_tail_bound(const TheoryParams& p, long t, double p_t, double h, int arm) {
    const double bnorm = p.beta_norms[arm];
    const double d = static_cast<double>(p.d);
    if (h <= std::sqrt(d) * bnorm) return 1.0;
    const double gap = h - std::sqrt(d) * bnorm;
    const double expo = static_cast<double>(t) * p_t * p_t * p.lambda * p.lambda * gap * gap /
                        (8.0 * d * d * p.sigma_sg * p.sigma_sg * p.l_x * p.l_x);
    return std::min(1.0, 2.0 * d * std::exp(-expo));
}

namespace {

double c_xi(const TheoryParams& p, double xi) {
    const double d = static_cast<double>(p.d);
    const double g1 = xi / 2.0 - std::sqrt(d) * p.l_x * p.beta_norms[1];
    const double g0 = xi / 2.0 - std::sqrt(d) * p.l_x * p.beta_norms[0];
    if (g1 <= 0.0 || g0 <= 0.0) return -1.0; // vacuous
    const double num = p.lambda * p.lambda * std::min(g1 * g1, g0 * g0);
    return num / (8.0 * d * d * p.sigma_sg * p.sigma_sg * std::pow(p.l_x, 4.0));
}

} // namespace

double mean_tail_bound(const TheoryParams& p, long t, double p_t, double xi) {
    if (!(xi > 0.0)) throw std::invalid_argument("mean_tail_bound: xi must be positive");
    const double c = c_xi(p, xi);
    if (c < 0.0) return 1.0;
    const double d = static_cast<double>(p.d);
    return std::min(1.0, 4.0 * d * std::exp(-static_cast<double>(t) * p_t * p_t * c));
}

double kappa_upper_bound(const TheoryParams& p, Algorithm algo, long t, double p_prev,
                         double c_t_or_rho, double delta_x, double xi) {
    if (algo == Algorithm::Eg) return std::min(1.0, c_t_or_rho / 2.0);
    if (!(xi > 0.0) || !(xi < std::abs(delta_x) / 2.0))
        throw std::invalid_argument("kappa_upper_bound: need 0 < xi < |delta_x|/2");
    const double tm1 = static_cast<double>(t - 1);
    const double d = static_cast<double>(p.d);
    const double c = c_xi(p, xi);
    const double tail = c < 0.0 ? 1.0 : 4.0 * d * std::exp(-tm1 * p_prev * p_prev * c);
    double head = 0.0;
    if (algo == Algorithm::Ucb) {
        const double denom = std::sqrt(tm1 * p_prev * p.lambda);
        const double arg = (denom > 0.0 ? 2.0 * c_t_or_rho * p.l_x / denom
                                        : std::numeric_limits<double>::infinity()) +
                           xi;
        head = p.margin_m * std::pow(arg, p.gamma);
    } else {
        const double gap = std::abs(delta_x) - xi;
        head = std::exp(-gap * gap * tm1 * p_prev * p.lambda /
                        (4.0 * c_t_or_rho * c_t_or_rho * p.l_x * p.l_x));
    }
    return std::min(1.0, head + tail);
}

} // namespace dream
