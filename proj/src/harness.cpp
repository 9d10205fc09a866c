#include "dream/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace dream {

std::string kappa_kind_name(KappaKind k) {
    switch (k) {
        case KappaKind::Auto: return "auto";
        case KappaKind::Logistic: return "logistic";
        case KappaKind::EgClosedForm: return "eg";
        case KappaKind::Constant: return "constant";
    }
    return "?";
}

KappaKind kappa_kind_from_name(const std::string& s) {
    if (s == "auto") return KappaKind::Auto;
    if (s == "logistic") return KappaKind::Logistic;
    if (s == "eg") return KappaKind::EgClosedForm;
    if (s == "constant") return KappaKind::Constant;
    throw std::invalid_argument("kappa: unknown kind '" + s + "'");
}

std::unique_ptr<Environment> EnvConfig::make() const {
    switch (kind) {
        case Kind::Synthetic: return std::make_unique<SyntheticEnv>(noise_sd0, noise_sd1);
        case Kind::SeaLike: {
            auto rows = std::make_shared<const std::vector<DatasetRow>>(
                make_sea_like_rows(sea_rows, sea_seed, sea_margin, sea_threshold,
                                   sea_label_noise, sea_scale));
            return std::make_unique<DatasetEnv>(std::move(rows), reward_sd);
        }
        case Kind::DatasetFile: {
            auto rows =
                std::make_shared<const std::vector<DatasetRow>>(load_dataset(dataset_path));
            return std::make_unique<DatasetEnv>(std::move(rows), reward_sd);
        }
    }
    throw std::logic_error("EnvConfig::make: bad kind");
}

std::string EnvConfig::name() const {
    switch (kind) {
        case Kind::Synthetic: return "synthetic";
        case Kind::SeaLike: return "sea";
        case Kind::DatasetFile: return "dataset";
    }
    return "?";
}

KappaKind ExperimentConfig::resolved_kappa() const {
    if (kappa != KappaKind::Auto) return kappa;
    return policy.algorithm == Algorithm::Eg ? KappaKind::EgClosedForm : KappaKind::Logistic;
}

void ExperimentConfig::validate() const {
    if (T < 1) throw std::invalid_argument("T: must be >= 1");
    if (policy.burn_in >= T) throw std::invalid_argument("T0: burn-in must be smaller than T");
    if (R < 1) throw std::invalid_argument("reps: must be >= 1");
    if (!(alpha > 0.0) || !(alpha < 1.0)) throw std::invalid_argument("alpha: must be in (0,1)");
    if (workers < 0) throw std::invalid_argument("workers: must be >= 0");
    if (checkpoints.empty()) throw std::invalid_argument("checkpoints: none given");
    for (long c : checkpoints) {
        if (c < 1 || c > T) throw std::invalid_argument("checkpoints: values must be in [1, T]");
        if (!include_burn_in && c <= policy.burn_in)
            throw std::invalid_argument("checkpoints: values must exceed T0");
    }
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end()))
        throw std::invalid_argument("checkpoints: must be ascending");
    if (env.kind == EnvConfig::Kind::DatasetFile && env.dataset_path.empty())
        throw std::invalid_argument("data: dataset path required for dataset environment");
    if (env.kind != EnvConfig::Kind::Synthetic && env.reward_sd < 0.0)
        throw std::invalid_argument("reward-sd: must be nonnegative");
    if (kappa == KappaKind::Constant &&
        (!(kappa_constant > 0.0) || kappa_constant > 0.5))
        throw std::invalid_argument("kappa-const: must be in (0, 0.5]");
    if (kappa == KappaKind::EgClosedForm && policy.algorithm != Algorithm::Eg)
        throw std::invalid_argument("kappa: eg closed form requires the eg algorithm");
    policy.validate(T);
}

std::string method_name(Method m) {
    switch (m) {
        case Method::Dream: return "dream";
        case Method::DreamMuMis: return "dream_mu_misspec";
        case Method::DreamKappaMis: return "dream_kappa_misspec";
        case Method::AvgReward: return "avg_reward";
        case Method::KnownPolicy: return "known_policy";
    }
    return "?";
}

namespace {

struct PerStepSnapshots {
    std::vector<Vec> beta0; // beta after steps 0..t
    std::vector<Vec> beta1;
    std::vector<long> pulls0;
    std::vector<long> pulls1;
};

// sigma2_{a,t-1} evaluated per record from coefficient snapshots and the
// chronological observation log. O(T^2) per checkpoint; opt-in.
double per_step_sigma2(const ArmState& arm, const std::vector<Vec>& betas,
                       const std::vector<long>& pulls, long t, std::size_t dim) {
    const long k = pulls[static_cast<std::size_t>(t - 1)]; // arm pulls among steps 1..t-1
    if (k <= static_cast<long>(dim)) return 1.0;
    const Vec& beta = betas[static_cast<std::size_t>(t - 1)];
    double ss = 0.0;
    const auto& obs = arm.observations();
    for (long i = 0; i < k; ++i) {
        const auto& [f, r] = obs[static_cast<std::size_t>(i)];
        const double e = dot(f, beta) - r;
        ss += e * e;
    }
    return ss / static_cast<double>(k - static_cast<long>(dim));
}

} // namespace

TrajectoryResult run_trajectory(const ExperimentConfig& config, std::uint64_t seed) {
    config.validate();
    auto env = config.env.make();
    Rng rng(seed);

    const std::size_t raw_dim = env->context_dim();
    const FeatureMap correct_map = env->model_feature_map();
    const FeatureMap bandit_map =
        config.bandit_raw_features ? identity_feature_map(raw_dim) : correct_map;
    const bool track_alt = bandit_map.name != "identity";

    const double omega = 1.0;
    ArmState arms[2] = {ArmState(bandit_map.dim_out, omega), ArmState(bandit_map.dim_out, omega)};
    std::optional<ArmState> alt_storage[2];
    if (track_alt) {
        alt_storage[0].emplace(raw_dim, omega);
        alt_storage[1].emplace(raw_dim, omega);
    }

    const KappaKind kkind = config.resolved_kappa();
    ExplorationModel kmodel = [&] {
        switch (kkind) {
            case KappaKind::Logistic: return ExplorationModel::logistic(raw_dim);
            case KappaKind::EgClosedForm:
                return ExplorationModel::eg_closed_form(config.policy.eg_eps);
            case KappaKind::Constant: return ExplorationModel::constant(config.kappa_constant);
            case KappaKind::Auto: break;
        }
        throw std::logic_error("unresolved kappa kind");
    }();

    DesignGrams grams(raw_dim);
    const long t0 = config.policy.burn_in;

    PerStepSnapshots snaps;
    const bool per_step = config.variance_mode == VarianceMode::PerStep;
    if (per_step) {
        snaps.beta0.push_back(arms[0].coefficients());
        snaps.beta1.push_back(arms[1].coefficients());
        snaps.pulls0.push_back(0);
        snaps.pulls1.push_back(0);
    }

    TrajectoryResult out;
    out.records.reserve(static_cast<std::size_t>(config.T));

    auto checkpoint_it = config.checkpoints.begin();

    auto final_greedy = [&](const InteractionRecord& rec) {
        return arms[1].predict_mean(rec.feature) > arms[0].predict_mean(rec.feature) ? 1 : 0;
    };

    auto emit_checkpoint = [&](long t) {
        const std::size_t skip =
            config.include_burn_in ? 0 : static_cast<std::size_t>(std::min(t0, t));
        Records all(out.records.data(), static_cast<std::size_t>(t));
        Records window(out.records.data() + skip, static_cast<std::size_t>(t) - skip);
        if (window.empty()) return;

        const MeanCi base = averaged_reward(all, config.alpha);
        double regret = std::numeric_limits<double>::quiet_NaN();
        if (env->has_oracle()) {
            regret = cumulative_regret(
                all, [&](const Vec& x, int a) { return env->true_mean(x, a); });
        }

        const double s2_main0 = arms[0].residual_variance();
        const double s2_main1 = arms[1].residual_variance();

        auto final_mu_main = [&](const InteractionRecord& rec) {
            const int g = final_greedy(rec);
            return g == 1 ? arms[1].predict_mean(rec.feature) : arms[0].predict_mean(rec.feature);
        };

        auto make_report = [&](double v, double s2) {
            ValueReport rep;
            rep.v_hat = v;
            rep.sigma2_hat = s2;
            rep.alpha = config.alpha;
            rep.t_effective = static_cast<long>(window.size());
            std::tie(rep.ci_low, rep.ci_high) =
                wald_ci(v, s2, rep.t_effective, config.alpha);
            rep.baseline_avg = base.mean;
            rep.baseline_lo = base.lo;
            rep.baseline_hi = base.hi;
            rep.regret = regret;
            return rep;
        };

        auto variance_of = [&](const EstimatorOptions& opts, double s0, double s1,
                               const std::function<double(const InteractionRecord&)>& fmu) {
            if (!per_step) return dream_variance(window, s0, s1, fmu, opts);
            // per-step mode: replace the noise term's constants record by record
            double mbar = 0.0;
            std::vector<double> mt(window.size());
            for (std::size_t i = 0; i < window.size(); ++i) {
                mt[i] = fmu(window[i]);
                mbar += mt[i];
            }
            mbar /= static_cast<double>(window.size());
            double s = 0.0;
            for (std::size_t i = 0; i < window.size(); ++i) {
                const auto& r = window[i];
                const double kap = opts.kappa_override ? *opts.kappa_override : r.kappa_hat;
                const double n1 = per_step_sigma2(arms[1], snaps.beta1, snaps.pulls1, r.t,
                                                  arms[1].dim());
                const double n0 = per_step_sigma2(arms[0], snaps.beta0, snaps.pulls0, r.t,
                                                  arms[0].dim());
                const double noise = r.greedy_action == 1 ? n1 : n0;
                const double dev = mt[i] - mbar;
                s += noise / (1.0 - kap) + dev * dev;
            }
            return s / static_cast<double>(window.size());
        };

        // Correct-specification DREAM.
        {
            EstimatorOptions opts;
            const double v = dream_value(window, opts);
            const double s2 = variance_of(opts, s2_main0, s2_main1, final_mu_main);
            out.checkpoints.push_back({t, Method::Dream, make_report(v, s2)});
        }
        // Mean model misspecified (raw-linear plug-in), when distinguishable.
        if (track_alt) {
            EstimatorOptions opts;
            opts.use_alt_mu = true;
            auto final_mu_alt = [&](const InteractionRecord& rec) {
                const int g = final_greedy(rec);
                return alt_storage[g]->predict_mean(rec.context);
            };
            const double v = dream_value(window, opts);
            const double s2 = dream_variance(window, alt_storage[0]->residual_variance(),
                                             alt_storage[1]->residual_variance(), final_mu_alt,
                                             opts);
            out.checkpoints.push_back({t, Method::DreamMuMis, make_report(v, s2)});
        }
        // Exploration probability misspecified by a constant 0.5.
        {
            EstimatorOptions opts;
            opts.kappa_override = 0.5;
            const double v = dream_value(window, opts);
            const double s2 = variance_of(opts, s2_main0, s2_main1, final_mu_main);
            out.checkpoints.push_back({t, Method::DreamKappaMis, make_report(v, s2)});
        }
        // Averaged-reward baseline (its own CI as the report interval).
        {
            ValueReport rep = make_report(base.mean, 0.0);
            rep.v_hat = base.mean;
            rep.ci_low = base.lo;
            rep.ci_high = base.hi;
            const double z = normal_upper_quantile(config.alpha / 2.0);
            const double se = (base.hi - base.lo) / (2.0 * z);
            rep.sigma2_hat = se * se * static_cast<double>(all.size());
            rep.t_effective = static_cast<long>(all.size());
            out.checkpoints.push_back({t, Method::AvgReward, rep});
        }
        // Known-policy evaluation, when a target policy is configured.
        if (config.eval_policy_coefs) {
            const Vec& theta = *config.eval_policy_coefs;
            auto policy = [&](const InteractionRecord& rec) {
                return dot(theta, rec.feature) > 0.0 ? 1 : 0;
            };
            auto final_mu = [&](const InteractionRecord& rec, int a) {
                return arms[a].predict_mean(rec.feature);
            };
            // The clipping rate is the design's guaranteed exploration mass,
            // so it is the defensible lower clamp for target propensities.
            const double floor = std::max(1e-3, config.policy.clipping.at(t));
            ValueReport rep = known_policy_value(window, policy, s2_main0, s2_main1, final_mu,
                                                 config.alpha, floor);
            rep.baseline_avg = base.mean;
            rep.baseline_lo = base.lo;
            rep.baseline_hi = base.hi;
            rep.regret = regret;
            out.checkpoints.push_back({t, Method::KnownPolicy, rep});
        }
    };

    for (long t = 1; t <= config.T; ++t) {
        const EnvStep step = env->sample_step(rng);
        const Vec& x = step.context;
        const Vec f = bandit_map.apply(x);

        const double mu0 = arms[0].predict_mean(f);
        const double mu1 = arms[1].predict_mean(f);
        const int greedy = mu1 > mu0 ? 1 : 0;

        Decision dec;
        if (t <= t0) {
            dec.greedy_action = greedy;
            dec.forced_by_burn_in = true;
            dec.action = config.policy.burn_in_rule == BurnInRule::Alternate
                             ? static_cast<int>((t - 1) % 2)
                             : (rng.bernoulli(0.5) ? 1 : 0);
        } else {
            switch (config.policy.algorithm) {
                case Algorithm::Ucb: dec = select_ucb(arms[0], arms[1], f, t, config.policy); break;
                case Algorithm::Ts: dec = select_ts(arms[0], arms[1], f, config.policy, rng); break;
                case Algorithm::Eg:
                    dec = select_eg(arms[0], arms[1], f, t, config.policy, rng);
                    break;
            }
        }

        grams.add_context(x);
        if (t > t0) dec = clipping_guard(grams, dec, t, config.policy);

        const double reward = env->draw_reward(step, dec.action, rng);
        const bool exploited = dec.action == dec.greedy_action;

        kmodel.fit_update(t, x, exploited);

        InteractionRecord rec;
        rec.t = t;
        rec.context = x;
        rec.feature = f;
        rec.action = dec.action;
        rec.reward = reward;
        rec.greedy_action = dec.greedy_action;
        rec.exploited = exploited;
        rec.kappa_hat = kmodel.predict(t, x);
        rec.mu_hat0 = mu0;
        rec.mu_hat1 = mu1;
        if (track_alt) {
            rec.alt_mu0 = alt_storage[0]->predict_mean(x);
            rec.alt_mu1 = alt_storage[1]->predict_mean(x);
            rec.has_alt = true;
        }
        rec.forced_by_clipping = dec.forced_by_clipping;
        rec.forced_by_burn_in = dec.forced_by_burn_in;
        out.records.push_back(std::move(rec));

        arms[dec.action].update(f, reward);
        if (track_alt) alt_storage[dec.action]->update(x, reward);
        grams.commit_action(x, dec.action);

        if (per_step) {
            snaps.beta0.push_back(arms[0].coefficients());
            snaps.beta1.push_back(arms[1].coefficients());
            snaps.pulls0.push_back(arms[0].pull_count());
            snaps.pulls1.push_back(arms[1].pull_count());
        }

        while (checkpoint_it != config.checkpoints.end() && *checkpoint_it == t) {
            emit_checkpoint(t);
            ++checkpoint_it;
        }
    }

    out.sigma2_res0 = arms[0].residual_variance();
    out.sigma2_res1 = arms[1].residual_variance();
    for (auto& rec : out.records) {
        rec.final_mu0 = arms[0].predict_mean(rec.feature);
        rec.final_mu1 = arms[1].predict_mean(rec.feature);
    }
    return out;
}

double reference_value(const ExperimentConfig& config) {
    if (config.env.kind == EnvConfig::Kind::Synthetic) {
        SyntheticEnv env(config.env.noise_sd0, config.env.noise_sd1);
        return env.oracle_value(2000);
    }
    return 1.0; // label-matching policies earn mean reward 1
}

MetricsRow aggregate_metrics(long t, Method method, const std::vector<ValueReport>& reps,
                             double v_star) {
    MetricsRow row;
    row.t = t;
    row.method = method_name(method);
    const double n = static_cast<double>(reps.size());
    double covered = 0.0, vsum = 0.0, sesum = 0.0;
    for (const auto& r : reps) {
        covered += r.covers(v_star) ? 1.0 : 0.0;
        vsum += r.v_hat;
        sesum += std::sqrt(r.sigma2_hat / static_cast<double>(r.t_effective));
    }
    row.coverage = covered / n;
    const double vbar = vsum / n;
    row.mean_bias = vbar - v_star;
    double ss = 0.0;
    for (const auto& r : reps) ss += (r.v_hat - vbar) * (r.v_hat - vbar);
    const double mc_sd = reps.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    row.se_mc_ratio = mc_sd > 0.0 ? (sesum / n) / mc_sd
                                  : std::numeric_limits<double>::infinity();
    return row;
}

MonteCarloResult monte_carlo(const ExperimentConfig& config) {
    config.validate();
    if (config.R < 2) throw std::invalid_argument("reps: monte_carlo needs R >= 2");
    MonteCarloResult result;
    result.v_star = reference_value(config);

    std::vector<std::vector<CheckpointReport>> per_rep(static_cast<std::size_t>(config.R));
    const int workers = config.workers > 0
                            ? config.workers
                            : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    auto work = [&](int w) {
        for (long i = w; i < config.R; i += workers) {
            TrajectoryResult tr =
                run_trajectory(config, derive_seed(config.base_seed, static_cast<std::uint64_t>(i)));
            per_rep[static_cast<std::size_t>(i)] = std::move(tr.checkpoints);
        }
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }

    for (long i = 0; i < config.R; ++i)
        for (const auto& cp : per_rep[static_cast<std::size_t>(i)])
            result.reports[{cp.t, cp.method}].push_back(cp.report);

    for (const auto& [key, reps] : result.reports)
        result.rows.push_back(aggregate_metrics(key.first, key.second, reps, result.v_star));
    return result;
}

std::vector<MetricsRow> sensitivity_sweep(const ExperimentConfig& config,
                                          const std::vector<double>& p_values) {
    std::vector<MetricsRow> rows;
    for (double p : p_values) {
        if (!(p > 0.0) || p >= 1.0)
            throw std::invalid_argument("sweep-p: values must be in (0,1)");
        ExperimentConfig c = config;
        c.policy.clipping = {ClippingSchedule::Kind::Constant, p};
        MonteCarloResult r = monte_carlo(c);
        for (auto row : r.rows) {
            row.p = p;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

double exploration_frequency(Records records, long t_lo, long t_hi) {
    long n = 0, x = 0;
    for (const auto& r : records) {
        if (r.t < t_lo || r.t > t_hi) continue;
        ++n;
        if (!r.exploited) ++x;
    }
    if (n == 0) throw std::invalid_argument("exploration_frequency: empty window");
    return static_cast<double>(x) / static_cast<double>(n);
}

} // namespace dream
