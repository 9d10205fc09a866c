#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dream/harness.hpp"
#include "dream/io.hpp"

namespace {

using dream::ExperimentConfig;

// All run options are carried as strings and parsed by the same code path
// as the key=value config file, so flag and file values behave identically.
struct FlagSet {
    std::map<std::string, std::string> values;
    std::vector<std::pair<std::string, CLI::Option*>> opts;
    std::string config_path;

    void add(CLI::App* cmd, const std::string& key, const std::string& desc) {
        auto* opt = cmd->add_option("--" + key, values[key], desc);
        opts.emplace_back(key, opt);
    }

    std::vector<std::pair<std::string, std::string>> given() const {
        std::vector<std::pair<std::string, std::string>> kv;
        for (const auto& [key, opt] : opts)
            if (opt->count() > 0) kv.emplace_back(key, values.at(key));
        return kv;
    }

    bool was_given(const std::string& key) const {
        for (const auto& [k, opt] : opts)
            if (k == key && opt->count() > 0) return true;
        return false;
    }
};

void add_run_options(CLI::App* cmd, FlagSet& fs) {
    cmd->add_option("--config", fs.config_path, "key=value config file; flags override");
    fs.add(cmd, "env", "environment: synthetic | sea | dataset");
    fs.add(cmd, "data", "dataset CSV path (features then binary label)");
    fs.add(cmd, "noise-sd0", "synthetic arm-0 reward noise SD");
    fs.add(cmd, "noise-sd1", "synthetic arm-1 reward noise SD");
    fs.add(cmd, "reward-sd", "dataset reward noise SD");
    fs.add(cmd, "sea-rows", "bundled generator: number of rows");
    fs.add(cmd, "sea-seed", "bundled generator: seed");
    fs.add(cmd, "sea-margin", "bundled generator: boundary margin");
    fs.add(cmd, "sea-threshold", "bundled generator: label threshold");
    fs.add(cmd, "sea-label-noise", "bundled generator: label flip probability");
    fs.add(cmd, "sea-scale", "bundled generator: feature range upper bound");
    fs.add(cmd, "algo", "bandit algorithm: ucb | ts | eg");
    fs.add(cmd, "ucb-c", "UCB exploration bonus multiplier");
    fs.add(cmd, "rho", "TS posterior scale");
    fs.add(cmd, "eg-scale", "EG: eps_t = scale * t^-power");
    fs.add(cmd, "eg-power", "EG schedule exponent");
    fs.add(cmd, "p", "clipping rate (constant schedule)");
    fs.add(cmd, "p-schedule", "clipping schedule: constant | sqrt-log");
    fs.add(cmd, "T", "number of time steps");
    fs.add(cmd, "T0", "burn-in length");
    fs.add(cmd, "burn-in-rule", "burn-in actions: alternate | uniform");
    fs.add(cmd, "kappa", "exploration-probability model: auto | logistic | eg | constant");
    fs.add(cmd, "kappa-const", "constant kappa value");
    fs.add(cmd, "estimator", "reported estimator: dream | average");
    fs.add(cmd, "estimator-features", "DR plug-in model: model | raw");
    fs.add(cmd, "bandit-features", "bandit's own model: model | raw");
    fs.add(cmd, "reps", "Monte Carlo replications");
    fs.add(cmd, "alpha", "CI level alpha");
    fs.add(cmd, "seed", "base seed (DREAM_SEED env overrides)");
    fs.add(cmd, "checkpoints", "comma list of report times");
    fs.add(cmd, "include-burn-in", "include burn-in steps in the estimator sums (0|1)");
    fs.add(cmd, "variance-mode", "noise-variance recomputation: final | per-step");
    fs.add(cmd, "workers", "parallel workers (0 = hardware)");
    fs.add(cmd, "eval-policy", "comma coefficients of a threshold policy on features");
}

ExperimentConfig build_config(const FlagSet& fs, bool require_t) {
    std::vector<std::pair<std::string, std::string>> kv;
    bool t_given = fs.was_given("T");
    bool checkpoints_given = fs.was_given("checkpoints");
    if (!fs.config_path.empty()) {
        for (auto& [k, v] : dream::parse_config_file(fs.config_path)) {
            if (k == "T") t_given = true;
            if (k == "checkpoints") checkpoints_given = true;
            kv.emplace_back(k, v);
        }
    }
    for (auto& [k, v] : fs.given()) kv.emplace_back(k, v);
    if (require_t && !t_given)
        throw std::invalid_argument("T: required option missing (pass --T or set it in --config)");
    ExperimentConfig c = dream::config_from_kv(kv);
    if (!checkpoints_given) {
        std::vector<long> cps;
        for (long t : {100L, 250L, 500L, 1000L, 2000L})
            if (t > c.policy.burn_in && t < c.T) cps.push_back(t);
        cps.push_back(c.T);
        c.checkpoints = std::move(cps);
    }
    if (const char* env_seed = std::getenv("DREAM_SEED")) {
        try {
            c.base_seed = std::stoull(env_seed);
        } catch (const std::exception&) {
            throw std::invalid_argument("DREAM_SEED: cannot parse '" + std::string(env_seed) + "'");
        }
    }
    c.validate();
    return c;
}

std::string out_path(const std::string& dir, const std::string& stem, const std::string& hash,
                     const std::string& ext) {
    namespace fs = std::filesystem;
    return (fs::path(dir) / (stem + "_" + hash + ext)).string();
}

int cmd_simulate(const FlagSet& fs, const std::string& out_dir) {
    ExperimentConfig config = build_config(fs, /*require_t=*/true);
    dream::RunManifest manifest;
    manifest.base_seed = config.base_seed;
    manifest.config = dream::config_to_kv(config);
    manifest.started_utc = dream::utc_timestamp();

    const std::uint64_t seed = dream::derive_seed(config.base_seed, 0);
    dream::TrajectoryResult result = dream::run_trajectory(config, seed);

    const dream::Method wanted = config.estimator == dream::EstimatorKind::Average
                                     ? dream::Method::AvgReward
                                     : (config.estimator_raw_features
                                            ? dream::Method::DreamMuMis
                                            : dream::Method::Dream);
    std::vector<dream::ValueCsvRow> rows;
    for (const auto& cp : result.checkpoints) {
        if (cp.method != wanted) continue;
        rows.push_back({std::to_string(seed), algorithm_name(config.policy.algorithm), cp.t,
                        cp.report});
    }

    const std::string hash = dream::config_hash(config);
    const std::string trace_path = out_path(out_dir, "trace", hash, ".csv");
    const std::string values_path = out_path(out_dir, "values", hash, ".csv");
    const std::string manifest_path = out_path(out_dir, "manifest", hash, ".json");
    dream::write_trace_csv(trace_path, result);
    dream::write_values_csv(values_path, rows);
    manifest.outputs = {trace_path, values_path};
    manifest.finished_utc = dream::utc_timestamp();
    dream::write_manifest(manifest_path, manifest);
    std::cout << trace_path << "\n" << values_path << "\n" << manifest_path << "\n";
    return 0;
}

int cmd_coverage(const FlagSet& fs, const std::string& out_dir, const std::string& sweep_p) {
    ExperimentConfig config = build_config(fs, /*require_t=*/true);
    dream::RunManifest manifest;
    manifest.base_seed = config.base_seed;
    manifest.config = dream::config_to_kv(config);
    manifest.started_utc = dream::utc_timestamp();

    std::vector<dream::MetricsRow> rows;
    bool with_p = false;
    if (!sweep_p.empty()) {
        std::vector<double> ps;
        std::stringstream ss(sweep_p);
        std::string cell;
        while (std::getline(ss, cell, ',')) ps.push_back(std::stod(cell));
        rows = dream::sensitivity_sweep(config, ps);
        with_p = true;
    } else {
        rows = dream::monte_carlo(config).rows;
    }

    const std::string hash = dream::config_hash(config);
    const std::string metrics_path = out_path(out_dir, "metrics", hash, ".csv");
    const std::string manifest_path = out_path(out_dir, "manifest", hash, ".json");
    dream::write_metrics_csv(metrics_path, rows, with_p);
    manifest.outputs = {metrics_path};
    manifest.finished_utc = dream::utc_timestamp();
    dream::write_manifest(manifest_path, manifest);
    std::cout << metrics_path << "\n" << manifest_path << "\n";
    return 0;
}

int cmd_evaluate(const std::string& trace_path, const std::string& policy_coefs,
                 int policy_constant, bool policy_greedy, double alpha, bool include_burn_in) {
    const dream::LoadedTrace trace = dream::load_trace_csv(trace_path);
    if (!trace.has_propensity)
        throw std::invalid_argument("trace: missing propensity column");
    if (!trace.has_final_mu)
        throw std::invalid_argument("trace: missing final_mu columns");
    std::vector<dream::InteractionRecord> window;
    for (const auto& r : trace.records)
        if (include_burn_in || !r.forced_by_burn_in) window.push_back(r);
    if (window.empty()) throw std::invalid_argument("trace: no post-burn-in records");

    auto final_mu = [](const dream::InteractionRecord& r, int a) {
        return a == 1 ? r.final_mu1 : r.final_mu0;
    };
    dream::ValueReport report;
    std::string label;
    if (policy_greedy) {
        // re-derive the run's own doubly robust report from the trace
        label = "greedy";
        report.v_hat = dream::dream_value(window);
        auto fmu = [](const dream::InteractionRecord& r) {
            return r.final_mu1 > r.final_mu0 ? r.final_mu1 : r.final_mu0;
        };
        report.sigma2_hat =
            dream::dream_variance(window, trace.sigma2_res0, trace.sigma2_res1, fmu);
        report.alpha = alpha;
        report.t_effective = static_cast<long>(window.size());
        std::tie(report.ci_low, report.ci_high) =
            dream::wald_ci(report.v_hat, report.sigma2_hat, report.t_effective, alpha);
    } else {
        std::function<int(const dream::InteractionRecord&)> policy;
        if (policy_constant >= 0) {
            label = "constant" + std::to_string(policy_constant);
            policy = [policy_constant](const dream::InteractionRecord&) { return policy_constant; };
        } else {
            dream::Vec theta;
            std::stringstream ss(policy_coefs);
            std::string cell;
            while (std::getline(ss, cell, ',')) theta.push_back(std::stod(cell));
            if (theta.size() != window.front().feature.size())
                throw std::invalid_argument(
                    "policy-coefs: dimension does not match the trace's feature columns");
            label = "threshold";
            policy = [theta](const dream::InteractionRecord& r) {
                return dream::dot(theta, r.feature) > 0.0 ? 1 : 0;
            };
        }
        report = dream::known_policy_value(window, policy, trace.sigma2_res0, trace.sigma2_res1,
                                           final_mu, alpha);
    }
    const dream::MeanCi base = dream::averaged_reward(
        dream::Records(trace.records.data(), trace.records.size()), alpha);
    report.baseline_avg = base.mean;
    report.baseline_lo = base.lo;
    report.baseline_hi = base.hi;
    std::cout << dream::values_csv_header() << "\n"
              << dream::value_csv_line(
                     {trace_path, "policy_" + label, window.back().t, report})
              << "\n";
    return 0;
}

int cmd_dataset_check(const std::string& path) {
    const std::vector<dream::DatasetRow> rows = dream::load_dataset(path);
    std::size_t n1 = 0;
    for (const auto& r : rows) n1 += static_cast<std::size_t>(r.label);
    std::cout << "rows=" << rows.size() << " feature_dim=" << rows.front().features.size()
              << " label0=" << rows.size() - n1 << " label1=" << n1 << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"doubly robust interval estimation for optimal-policy value in "
                 "contextual bandits"};
    app.require_subcommand(1);

    FlagSet sim_flags, cov_flags;
    std::string sim_out = "out", cov_out = "out", sweep_p;
    CLI::App* sim = app.add_subcommand("simulate", "run one trajectory and write trace/report CSVs");
    add_run_options(sim, sim_flags);
    sim->add_option("--out-dir", sim_out, "output directory");

    CLI::App* cov = app.add_subcommand("coverage", "Monte Carlo coverage/bias/ratio metrics");
    add_run_options(cov, cov_flags);
    cov->add_option("--out-dir", cov_out, "output directory");
    cov->add_option("--sweep-p", sweep_p, "comma list of clipping rates to sweep");

    std::string trace_path, policy_coefs;
    int policy_constant = -1;
    bool policy_greedy = false, eval_include_burn_in = false;
    double eval_alpha = 0.05;
    CLI::App* ev = app.add_subcommand("evaluate", "doubly robust evaluation of a known policy "
                                                  "from a trace CSV");
    ev->add_option("--trace", trace_path, "trace CSV written by simulate")->required();
    ev->add_option("--policy-coefs", policy_coefs,
                   "threshold policy I{theta . f(x) > 0}, comma coefficients");
    ev->add_option("--policy-constant", policy_constant, "constant policy (0 or 1)");
    ev->add_flag("--policy-greedy", policy_greedy, "evaluate the run's own greedy policy");
    ev->add_option("--alpha", eval_alpha, "CI level alpha");
    ev->add_flag("--include-burn-in", eval_include_burn_in, "keep burn-in records");

    std::string ds_path;
    CLI::App* ds = app.add_subcommand("dataset-check", "validate a dataset CSV");
    ds->add_option("--data", ds_path, "dataset CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_flags, sim_out);
        if (cov->parsed()) return cmd_coverage(cov_flags, cov_out, sweep_p);
        if (ev->parsed()) {
            const int modes = (policy_coefs.empty() ? 0 : 1) + (policy_constant >= 0 ? 1 : 0) +
                              (policy_greedy ? 1 : 0);
            if (modes != 1)
                throw std::invalid_argument(
                    "policy: pass exactly one of --policy-coefs, --policy-constant, "
                    "--policy-greedy");
            if (policy_constant > 1)
                throw std::invalid_argument("policy-constant: must be 0 or 1");
            return cmd_evaluate(trace_path, policy_coefs, policy_constant, policy_greedy,
                                eval_alpha, eval_include_burn_in);
        }
        if (ds->parsed()) {
            try {
                return cmd_dataset_check(ds_path);
            } catch (const std::runtime_error& e) {
                // malformed input files are usage errors for this subcommand
                throw std::invalid_argument(e.what());
            }
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
