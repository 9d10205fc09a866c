#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dream/environments.hpp"
#include "dream/estimator.hpp"
#include "dream/exploration.hpp"
#include "dream/policies.hpp"

namespace dream {

enum class KappaKind { Auto, Logistic, EgClosedForm, Constant };
enum class VarianceMode { FinalCoefficients, PerStep };
enum class EstimatorKind { Dream, Average };

std::string kappa_kind_name(KappaKind k);
KappaKind kappa_kind_from_name(const std::string& s);

struct EnvConfig {
    enum class Kind { Synthetic, SeaLike, DatasetFile } kind = Kind::Synthetic;
    double noise_sd0 = 0.1;
    double noise_sd1 = 0.1;
    std::size_t sea_rows = 20000;
    std::uint64_t sea_seed = 7;
    double sea_margin = 0.2;
    double sea_threshold = 1.0;
    double sea_label_noise = 0.0;
    double sea_scale = 1.0;
    double reward_sd = 0.5;
    std::string dataset_path;

    // Builds the prototype environment (dataset rows are loaded once here
    // and shared read-only across trajectory copies).
    std::unique_ptr<Environment> make() const;
    std::string name() const;
};

struct ExperimentConfig {
    EnvConfig env;
    PolicySpec policy;
    KappaKind kappa = KappaKind::Auto;
    double kappa_constant = 0.5;
    EstimatorKind estimator = EstimatorKind::Dream;
    bool estimator_raw_features = false; // plug the raw-linear model into the DR estimator
    bool bandit_raw_features = false;    // run the bandit itself on raw contexts
    long T = 2000;
    long R = 200;
    double alpha = 0.05;
    std::uint64_t base_seed = 20240601;
    std::vector<long> checkpoints = {100, 250, 500, 1000, 2000};
    bool include_burn_in = false;
    VarianceMode variance_mode = VarianceMode::FinalCoefficients;
    int workers = 1;
    std::optional<Vec> eval_policy_coefs; // threshold policy on model features

    // Kappa kind actually used after resolving Auto.
    KappaKind resolved_kappa() const;
    void validate() const; // throws std::invalid_argument naming the offending key
};

enum class Method { Dream, DreamMuMis, DreamKappaMis, AvgReward, KnownPolicy };
std::string method_name(Method m);

struct CheckpointReport {
    long t = 0;
    Method method = Method::Dream;
    ValueReport report;
};

struct TrajectoryResult {
    std::vector<InteractionRecord> records;
    std::vector<CheckpointReport> checkpoints;
    double sigma2_res0 = 1.0; // end-of-run residual variances (trace columns)
    double sigma2_res1 = 1.0;
};

// One full pass of the online loop: sample context, act (burn-in /
// algorithm / clipping override), observe, refit the exploration model,
// and emit per-checkpoint reports. Deterministic given (config, seed).
TrajectoryResult run_trajectory(const ExperimentConfig& config, std::uint64_t seed);

struct MetricsRow {
    double p = std::numeric_limits<double>::quiet_NaN(); // set by sweeps
    long t = 0;
    std::string method;
    double coverage = 0.0;
    double mean_bias = 0.0;
    double se_mc_ratio = 0.0;
};

struct MonteCarloResult {
    double v_star = 0.0;
    std::vector<MetricsRow> rows;
    // (checkpoint, method) -> per-replication reports, ordered by replication
    std::map<std::pair<long, Method>, std::vector<ValueReport>> reports;
};

MonteCarloResult monte_carlo(const ExperimentConfig& config);

std::vector<MetricsRow> sensitivity_sweep(const ExperimentConfig& config,
                                          const std::vector<double>& p_values);

// Reference value the coverage metrics target: quadrature V* for the
// synthetic environment, 1 for label-matching dataset environments.
double reference_value(const ExperimentConfig& config);

// Fraction of steps with a_t != greedy_t over t in [t_lo, t_hi].
double exploration_frequency(Records records, long t_lo, long t_hi);

// Aggregation over per-replication reports, exposed for reuse and tests.
// MC-SD of zero (or a single replication) yields an infinite se_mc_ratio.
MetricsRow aggregate_metrics(long t, Method method, const std::vector<ValueReport>& reps,
                             double v_star);

} // namespace dream
