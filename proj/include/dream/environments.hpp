#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dream/arm_model.hpp"
#include "dream/linalg.hpp"
#include "dream/rng.hpp"

namespace dream {

// One sampled interaction opportunity. `label` is only meaningful for
// dataset environments.
struct EnvStep {
    Vec context; // raw, leading 1
    int label = -1;
};

class Environment {
public:
    virtual ~Environment() = default;

    virtual std::size_t context_dim() const = 0;
    // The model features a correctly specified learner would use.
    virtual const FeatureMap& model_feature_map() const = 0;

    virtual EnvStep sample_step(Rng& rng) = 0;
    virtual double draw_reward(const EnvStep& step, int action, Rng& rng) const = 0;

    virtual bool has_oracle() const { return false; }
    virtual double true_mean(const Vec& /*context*/, int /*action*/) const {
        throw std::logic_error("true_mean: oracle unavailable for this environment");
    }

    // Fresh per-trajectory instance (resets any sampling state). Shared
    // read-only data (dataset rows) is shared between copies.
    virtual std::unique_ptr<Environment> fresh_copy() const = 0;
    virtual std::string name() const = 0;
};

// Two-arm bandit with contexts (1, x1, x2), x_i ~ U(0, 2*pi), conditional
// mean 2 - a + (5a - 1) cos(x1) + (1.5 - 3a) cos(x2), and per-arm normal
// reward noise.
class SyntheticEnv final : public Environment {
public:
    explicit SyntheticEnv(double noise_sd0 = 0.1, double noise_sd1 = 0.1);

    std::size_t context_dim() const override { return 3; }
    const FeatureMap& model_feature_map() const override { return fmap_; }
    EnvStep sample_step(Rng& rng) override;
    double draw_reward(const EnvStep& step, int action, Rng& rng) const override;
    bool has_oracle() const override { return true; }
    double true_mean(const Vec& context, int action) const override;
    std::unique_ptr<Environment> fresh_copy() const override;
    std::string name() const override { return "synthetic"; }

    int oracle_policy(const Vec& context) const;
    double noise_sd(int action) const { return action == 1 ? noise_sd1_ : noise_sd0_; }

    // Midpoint-rule integral of max_a mu(x, a) over the context law.
    double oracle_value(int grid_n) const;
    // Limiting variance of the doubly robust estimate: the
    // exploration-weighted noise term plus the dispersion of mu(x, pi*(x)).
    double oracle_sigma_dr(const std::function<double(const Vec&)>& kappa_inf,
                           int grid_n) const;
    // Integral of mu(x, pi(x)) for a fixed policy over the context law.
    double oracle_policy_value(const std::function<int(const Vec&)>& policy,
                               int grid_n) const;

private:
    double noise_sd0_;
    double noise_sd1_;
    FeatureMap fmap_;
};

struct DatasetRow {
    Vec features; // leading 1 prepended
    int label = 0;
};

// Classification rows turned into a two-armed bandit: a uniformly sampled
// row (without replacement) reveals its features; the reward for action a
// is N(I(a == label), reward_sd^2).
class DatasetEnv final : public Environment {
public:
    DatasetEnv(std::shared_ptr<const std::vector<DatasetRow>> rows, double reward_sd = 0.5);

    std::size_t context_dim() const override;
    const FeatureMap& model_feature_map() const override { return fmap_; }
    EnvStep sample_step(Rng& rng) override;
    double draw_reward(const EnvStep& step, int action, Rng& rng) const override;
    std::unique_ptr<Environment> fresh_copy() const override;
    std::string name() const override { return "dataset"; }

    std::size_t rows_total() const { return rows_->size(); }
    std::size_t rows_remaining() const { return rows_->size() - drawn_; }
    double reward_sd() const { return reward_sd_; }

private:
    std::shared_ptr<const std::vector<DatasetRow>> rows_;
    double reward_sd_;
    FeatureMap fmap_;
    std::vector<std::uint32_t> order_; // lazily shuffled indices
    std::size_t drawn_ = 0;
};

// Parses a CSV of numeric feature columns with a trailing binary label
// column (optional header). Prepends the intercept 1 to every feature
// vector. Malformed rows are reported with their line number.
std::vector<DatasetRow> load_dataset(const std::string& path);

// Bundled stand-in for the SEA-family benchmarks: 4 features iid
// U(0, scale), label = I{f1 + f2 <= threshold}, with rows resampled until
// they clear the margin band around the boundary, plus optional label-flip
// noise.
std::vector<DatasetRow> make_sea_like_rows(std::size_t n, std::uint64_t seed,
                                           double margin = 0.2, double threshold = 1.0,
                                           double label_noise = 0.0, double scale = 1.0);

} // namespace dream
