#pragma once

#include <array>
#include <cstddef>

#include "dream/linalg.hpp"
#include "dream/policies.hpp"

namespace dream {

// Online estimate of kappa_t(x) = Pr{a_t != greedy_t(x)}.
//
// The logistic kind runs streaming SGD on features (1, log t, x_1..x_{d-1})
// against the exploration indicator; the leading intercept of the raw
// context is dropped to avoid duplicating the constant column. Predictions
// are clamped to [kappa_min, kappa_max] so the DREAM weight 1/(1-kappa)
// stays bounded.
class ExplorationModel {
public:
    enum class Kind { Logistic, EgClosedForm, Constant };

    static ExplorationModel logistic(std::size_t context_dim, double step_scale = 0.5);
    static ExplorationModel eg_closed_form(EgSchedule eps);
    static ExplorationModel constant(double value);

    void fit_update(long t, const Vec& context, bool exploited);
    double predict(long t, const Vec& context) const;

    Kind kind() const { return kind_; }
    const Vec& weights() const { return weights_; }
    long updates() const { return n_updates_; }

    double kappa_min = 1e-3;
    double kappa_max = 0.5;

private:
    ExplorationModel() = default;
    Vec features(long t, const Vec& context) const;

    Kind kind_ = Kind::Constant;
    Vec weights_;
    double step_scale_ = 0.5;
    long n_updates_ = 0;
    EgSchedule eg_eps_;
    double constant_value_ = 0.5;
};

// Assumption constants for the computable tail bounds. These have no role
// in estimation; they only feed the bound calculators below.
struct TheoryParams {
    double lambda = 1.0;       // lower bound on lambda_min(E[x x^T])
    double l_x = 1.0;          // sup-norm bound on contexts
    std::size_t d = 1;         // context dimension
    double sigma_sg = 1.0;     // subgaussian scale of the reward noise
    std::array<double, 2> beta_norms = {0.0, 0.0}; // ||beta(a)||_2
    double gamma = 1.0;        // margin exponent
    double margin_m = 1.0;     // margin constant M
    double margin_delta = 1.0;
    double u_bound = 1.0;      // |mu| <= U
};

// Pr(||beta_hat_t(a) - beta(a)||_1 > h) bound; returns 1 when vacuous
// (h <= sqrt(d) * ||beta(a)||_2 or t = 0 makes the cap bind).
double ridge_tail_bound(const TheoryParams& p, long t, double p_t, double h, int arm);

// Pr(|mean difference error| > xi) bound, capped at 1.
double mean_tail_bound(const TheoryParams& p, long t, double p_t, double xi);

// Per-algorithm upper bound on kappa_t(x). `c_t_or_rho` carries c_t for
// UCB, rho for TS, and eps_t for EG. Requires 0 < xi < |delta_x|/2 for
// UCB/TS.
double kappa_upper_bound(const TheoryParams& p, Algorithm algo, long t, double p_prev,
                         double c_t_or_rho, double delta_x, double xi);

} // namespace dream
