#pragma once

#include <string>

#include "dream/arm_model.hpp"
#include "dream/linalg.hpp"
#include "dream/rng.hpp"

namespace dream {

enum class Algorithm { Ucb, Ts, Eg };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

enum class BurnInRule { Alternate, Uniform };

// Clipping rate schedule p_t. "Constant" keeps p_t fixed; "SqrtLogOverT"
// is p_t = sqrt(alpha * log(t) / t). Both keep p_t * sqrt(t) nondecreasing,
// which is what the downstream theory needs from the schedule shape.
struct ClippingSchedule {
    enum class Kind { Constant, SqrtLogOverT } kind = Kind::Constant;
    double value = 0.01; // constant p, or alpha for the sqrt-log schedule
    double at(long t) const;
};

struct EgSchedule {
    double scale = 0.1;  // eps_t = scale * t^{-power}
    double power = 0.4;
    double at(long t) const;
};

struct PolicySpec {
    Algorithm algorithm = Algorithm::Ucb;
    double ucb_c = 1.0;     // constant exploration bonus multiplier c_t
    double ts_rho = 2.0;    // posterior scale rho
    EgSchedule eg_eps;
    ClippingSchedule clipping;
    long burn_in = 50;      // T0
    BurnInRule burn_in_rule = BurnInRule::Alternate;

    // Throws std::invalid_argument naming the offending field.
    void validate(long horizon) const;
};

struct Decision {
    int action = 0;
    int greedy_action = 0;
    bool forced_by_clipping = false;
    bool forced_by_burn_in = false;
};

// 1 iff arm 1's predicted mean strictly exceeds arm 0's; ties go to 0.
int greedy_action(const ArmState& arm0, const ArmState& arm1, const Vec& feature);

Decision select_ucb(ArmState& arm0, ArmState& arm1, const Vec& feature, long t,
                    const PolicySpec& spec);
Decision select_ts(ArmState& arm0, ArmState& arm1, const Vec& feature,
                   const PolicySpec& spec, Rng& rng);
Decision select_eg(const ArmState& arm0, const ArmState& arm1, const Vec& feature, long t,
                   const PolicySpec& spec, Rng& rng);

// Raw-context design accumulators backing the clipping rule: unnormalized
// sums of x x^T over all steps and per action. The step-t context enters
// `total` before the guard runs (the guard's sums run over i = 1..t) and
// its per-action share is committed once the action is final.
struct DesignGrams {
    SymMat total;
    SymMat per_action[2];
    explicit DesignGrams(std::size_t dim) : total(dim), per_action{SymMat(dim), SymMat(dim)} {}
    void add_context(const Vec& x) { total = rank1_update(total, x); }
    void commit_action(const Vec& x, int action) {
        per_action[action] = rank1_update(per_action[action], x);
    }
};

// Forces the unchosen action when its scaled design eigenvalue falls below
// p_t times the total's. `grams` must already include step t's context in
// `total` (the unchosen arm cannot have a contribution from step t).
Decision clipping_guard(const DesignGrams& grams, Decision proposed, long t,
                        const PolicySpec& spec);

} // namespace dream
