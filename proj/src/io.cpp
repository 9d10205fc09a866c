#include "dream/io.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dream {

std::string fmt_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
    }
    fs::rename(tmp, target);
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

std::string join_longs(const std::vector<long>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

std::vector<long> split_longs(const std::string& s) {
    std::vector<long> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stol(cell));
    return out;
}

std::string join_doubles(const Vec& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += fmt_double(v[i]);
    }
    return s;
}

Vec split_doubles(const std::string& s) {
    Vec out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
    return out;
}

} // namespace

std::vector<std::pair<std::string, std::string>> config_to_kv(const ExperimentConfig& c) {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("env", c.env.name());
    kv.emplace_back("noise-sd0", fmt_double(c.env.noise_sd0));
    kv.emplace_back("noise-sd1", fmt_double(c.env.noise_sd1));
    kv.emplace_back("reward-sd", fmt_double(c.env.reward_sd));
    kv.emplace_back("sea-rows", std::to_string(c.env.sea_rows));
    kv.emplace_back("sea-seed", std::to_string(c.env.sea_seed));
    kv.emplace_back("sea-margin", fmt_double(c.env.sea_margin));
    kv.emplace_back("sea-threshold", fmt_double(c.env.sea_threshold));
    kv.emplace_back("sea-label-noise", fmt_double(c.env.sea_label_noise));
    kv.emplace_back("sea-scale", fmt_double(c.env.sea_scale));
    kv.emplace_back("data", c.env.dataset_path);
    kv.emplace_back("algo", algorithm_name(c.policy.algorithm));
    kv.emplace_back("ucb-c", fmt_double(c.policy.ucb_c));
    kv.emplace_back("rho", fmt_double(c.policy.ts_rho));
    kv.emplace_back("eg-scale", fmt_double(c.policy.eg_eps.scale));
    kv.emplace_back("eg-power", fmt_double(c.policy.eg_eps.power));
    kv.emplace_back("p-schedule", c.policy.clipping.kind == ClippingSchedule::Kind::Constant
                                      ? "constant"
                                      : "sqrt-log");
    kv.emplace_back("p", fmt_double(c.policy.clipping.value));
    kv.emplace_back("T", std::to_string(c.T));
    kv.emplace_back("T0", std::to_string(c.policy.burn_in));
    kv.emplace_back("burn-in-rule",
                    c.policy.burn_in_rule == BurnInRule::Alternate ? "alternate" : "uniform");
    kv.emplace_back("kappa", kappa_kind_name(c.kappa));
    kv.emplace_back("kappa-const", fmt_double(c.kappa_constant));
    kv.emplace_back("estimator", c.estimator == EstimatorKind::Dream ? "dream" : "average");
    kv.emplace_back("estimator-features", c.estimator_raw_features ? "raw" : "model");
    kv.emplace_back("bandit-features", c.bandit_raw_features ? "raw" : "model");
    kv.emplace_back("reps", std::to_string(c.R));
    kv.emplace_back("alpha", fmt_double(c.alpha));
    kv.emplace_back("seed", std::to_string(c.base_seed));
    kv.emplace_back("checkpoints", join_longs(c.checkpoints));
    kv.emplace_back("include-burn-in", c.include_burn_in ? "1" : "0");
    kv.emplace_back("variance-mode",
                    c.variance_mode == VarianceMode::FinalCoefficients ? "final" : "per-step");
    kv.emplace_back("workers", std::to_string(c.workers));
    kv.emplace_back("eval-policy",
                    c.eval_policy_coefs ? join_doubles(*c.eval_policy_coefs) : "");
    return kv;
}

ExperimentConfig config_from_kv(const std::vector<std::pair<std::string, std::string>>& kv) {
    ExperimentConfig c;
    for (const auto& [key, value] : kv) {
        try {
            if (key == "env") {
                if (value == "synthetic") c.env.kind = EnvConfig::Kind::Synthetic;
                else if (value == "sea") c.env.kind = EnvConfig::Kind::SeaLike;
                else if (value == "dataset") c.env.kind = EnvConfig::Kind::DatasetFile;
                else throw std::invalid_argument("unknown environment '" + value + "'");
            } else if (key == "noise-sd0") c.env.noise_sd0 = std::stod(value);
            else if (key == "noise-sd1") c.env.noise_sd1 = std::stod(value);
            else if (key == "reward-sd") c.env.reward_sd = std::stod(value);
            else if (key == "sea-rows") c.env.sea_rows = std::stoul(value);
            else if (key == "sea-seed") c.env.sea_seed = std::stoull(value);
            else if (key == "sea-margin") c.env.sea_margin = std::stod(value);
            else if (key == "sea-threshold") c.env.sea_threshold = std::stod(value);
            else if (key == "sea-label-noise") c.env.sea_label_noise = std::stod(value);
            else if (key == "sea-scale") c.env.sea_scale = std::stod(value);
            else if (key == "data") c.env.dataset_path = value;
            else if (key == "algo") c.policy.algorithm = algorithm_from_name(value);
            else if (key == "ucb-c") c.policy.ucb_c = std::stod(value);
            else if (key == "rho") c.policy.ts_rho = std::stod(value);
            else if (key == "eg-scale") c.policy.eg_eps.scale = std::stod(value);
            else if (key == "eg-power") c.policy.eg_eps.power = std::stod(value);
            else if (key == "p-schedule") {
                if (value == "constant") c.policy.clipping.kind = ClippingSchedule::Kind::Constant;
                else if (value == "sqrt-log")
                    c.policy.clipping.kind = ClippingSchedule::Kind::SqrtLogOverT;
                else throw std::invalid_argument("unknown schedule '" + value + "'");
            } else if (key == "p") c.policy.clipping.value = std::stod(value);
            else if (key == "T") c.T = std::stol(value);
            else if (key == "T0") c.policy.burn_in = std::stol(value);
            else if (key == "burn-in-rule") {
                if (value == "alternate") c.policy.burn_in_rule = BurnInRule::Alternate;
                else if (value == "uniform") c.policy.burn_in_rule = BurnInRule::Uniform;
                else throw std::invalid_argument("unknown rule '" + value + "'");
            } else if (key == "kappa") c.kappa = kappa_kind_from_name(value);
            else if (key == "kappa-const") c.kappa_constant = std::stod(value);
            else if (key == "estimator") {
                if (value == "dream") c.estimator = EstimatorKind::Dream;
                else if (value == "average") c.estimator = EstimatorKind::Average;
                else throw std::invalid_argument("unknown estimator '" + value + "'");
            } else if (key == "estimator-features") c.estimator_raw_features = value == "raw";
            else if (key == "bandit-features") c.bandit_raw_features = value == "raw";
            else if (key == "reps") c.R = std::stol(value);
            else if (key == "alpha") c.alpha = std::stod(value);
            else if (key == "seed") c.base_seed = std::stoull(value);
            else if (key == "checkpoints") c.checkpoints = split_longs(value);
            else if (key == "include-burn-in") c.include_burn_in = value == "1" || value == "true";
            else if (key == "variance-mode") {
                if (value == "final") c.variance_mode = VarianceMode::FinalCoefficients;
                else if (value == "per-step") c.variance_mode = VarianceMode::PerStep;
                else throw std::invalid_argument("unknown mode '" + value + "'");
            } else if (key == "workers") c.workers = std::stoi(value);
            else if (key == "eval-policy") {
                if (!value.empty()) c.eval_policy_coefs = split_doubles(value);
            } else {
                throw std::invalid_argument("unknown config key");
            }
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(key + ": " + e.what());
        } catch (const std::exception&) {
            throw std::invalid_argument(key + ": cannot parse value '" + value + "'");
        }
    }
    return c;
}

std::string config_hash(const ExperimentConfig& c) {
    std::string canon;
    for (const auto& [k, v] : config_to_kv(c)) {
        canon += k;
        canon += '=';
        canon += v;
        canon += '\n';
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(canon));
    return buf;
}

std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    std::vector<std::pair<std::string, std::string>> kv;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: missing '=' at line " + std::to_string(line_no));
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto kend = key.find_last_not_of(" \t");
        key = key.substr(0, kend == std::string::npos ? 0 : kend + 1);
        const auto vstart = value.find_first_not_of(" \t");
        value = vstart == std::string::npos ? "" : value.substr(vstart);
        kv.emplace_back(key, value);
    }
    return kv;
}

std::string values_csv_header() {
    return "run_id,algorithm,T,v_hat,sigma2_hat,ci_low,ci_high,baseline_avg,baseline_lo,"
           "baseline_hi,regret";
}

std::string value_csv_line(const ValueCsvRow& row) {
    const ValueReport& r = row.report;
    std::string s;
    s += row.run_id;
    s += ',';
    s += row.algorithm;
    s += ',';
    s += std::to_string(row.t);
    for (double v : {r.v_hat, r.sigma2_hat, r.ci_low, r.ci_high, r.baseline_avg, r.baseline_lo,
                     r.baseline_hi, r.regret}) {
        s += ',';
        s += fmt_double(v);
    }
    return s;
}

void write_values_csv(const std::string& path, const std::vector<ValueCsvRow>& rows) {
    std::string out = values_csv_header();
    out += '\n';
    for (const auto& row : rows) {
        out += value_csv_line(row);
        out += '\n';
    }
    atomic_write_file(path, out);
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows,
                       bool with_p_column) {
    std::string out = with_p_column ? "p,t,method,coverage,bias,se_mc_ratio"
                                    : "t,method,coverage,bias,se_mc_ratio";
    out += '\n';
    for (const auto& r : rows) {
        if (with_p_column) {
            out += fmt_double(r.p);
            out += ',';
        }
        out += std::to_string(r.t);
        out += ',';
        out += r.method;
        out += ',';
        out += fmt_double(r.coverage);
        out += ',';
        out += fmt_double(r.mean_bias);
        out += ',';
        out += fmt_double(r.se_mc_ratio);
        out += '\n';
    }
    atomic_write_file(path, out);
}

void write_trace_csv(const std::string& path, const TrajectoryResult& result) {
    if (result.records.empty()) throw std::invalid_argument("write_trace_csv: no records");
    const std::size_t dx = result.records.front().context.size();
    const std::size_t df = result.records.front().feature.size();
    std::string out = "t";
    for (std::size_t i = 0; i < dx; ++i) out += ",x" + std::to_string(i);
    for (std::size_t i = 0; i < df; ++i) out += ",f" + std::to_string(i);
    out += ",action,reward,greedy_action,exploited,kappa_hat,propensity,mu_hat0,mu_hat1,"
           "final_mu0,final_mu1,sigma2_res0,sigma2_res1,forced_clipping,forced_burn_in\n";
    for (const auto& r : result.records) {
        out += std::to_string(r.t);
        for (double v : r.context) out += ',' + fmt_double(v);
        for (double v : r.feature) out += ',' + fmt_double(v);
        out += ',' + std::to_string(r.action);
        out += ',' + fmt_double(r.reward);
        out += ',' + std::to_string(r.greedy_action);
        out += ',' + std::to_string(r.exploited ? 1 : 0);
        out += ',' + fmt_double(r.kappa_hat);
        out += ',' + fmt_double(r.propensity());
        out += ',' + fmt_double(r.mu_hat0);
        out += ',' + fmt_double(r.mu_hat1);
        out += ',' + fmt_double(r.final_mu0);
        out += ',' + fmt_double(r.final_mu1);
        out += ',' + fmt_double(result.sigma2_res0);
        out += ',' + fmt_double(result.sigma2_res1);
        out += ',' + std::to_string(r.forced_by_clipping ? 1 : 0);
        out += ',' + std::to_string(r.forced_by_burn_in ? 1 : 0);
        out += '\n';
    }
    atomic_write_file(path, out);
}

LoadedTrace load_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("trace: cannot open '" + path + "'");
    std::string header;
    if (!std::getline(in, header)) throw std::invalid_argument("trace: empty file");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    std::vector<std::string> cols;
    {
        std::stringstream ss(header);
        std::string cell;
        while (std::getline(ss, cell, ',')) cols.push_back(cell);
    }
    auto col_index = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < cols.size(); ++i)
            if (cols[i] == name) return static_cast<int>(i);
        return -1;
    };
    std::size_t dx = 0, df = 0;
    while (col_index("x" + std::to_string(dx)) >= 0) ++dx;
    while (col_index("f" + std::to_string(df)) >= 0) ++df;
    LoadedTrace out;
    out.has_propensity = col_index("propensity") >= 0;
    out.has_final_mu = col_index("final_mu0") >= 0 && col_index("final_mu1") >= 0;

    const int it = col_index("t");
    if (it < 0 || dx == 0 || df == 0 || col_index("action") < 0 || col_index("reward") < 0 ||
        col_index("greedy_action") < 0 || col_index("exploited") < 0 ||
        col_index("kappa_hat") < 0)
        throw std::invalid_argument("trace: missing required columns");

    std::string line;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != cols.size())
            throw std::invalid_argument("trace: wrong column count at line " +
                                        std::to_string(line_no));
        auto fetch = [&](const std::string& name) { return cells[col_index(name)]; };
        try {
            InteractionRecord r;
            r.t = std::stol(fetch("t"));
            for (std::size_t i = 0; i < dx; ++i)
                r.context.push_back(std::stod(fetch("x" + std::to_string(i))));
            for (std::size_t i = 0; i < df; ++i)
                r.feature.push_back(std::stod(fetch("f" + std::to_string(i))));
            r.action = std::stoi(fetch("action"));
            r.reward = std::stod(fetch("reward"));
            r.greedy_action = std::stoi(fetch("greedy_action"));
            r.exploited = fetch("exploited") == "1";
            r.kappa_hat = std::stod(fetch("kappa_hat"));
            r.mu_hat0 = std::stod(fetch("mu_hat0"));
            r.mu_hat1 = std::stod(fetch("mu_hat1"));
            if (out.has_final_mu) {
                r.final_mu0 = std::stod(fetch("final_mu0"));
                r.final_mu1 = std::stod(fetch("final_mu1"));
            }
            if (col_index("sigma2_res0") >= 0) out.sigma2_res0 = std::stod(fetch("sigma2_res0"));
            if (col_index("sigma2_res1") >= 0) out.sigma2_res1 = std::stod(fetch("sigma2_res1"));
            if (col_index("forced_clipping") >= 0)
                r.forced_by_clipping = fetch("forced_clipping") == "1";
            if (col_index("forced_burn_in") >= 0)
                r.forced_by_burn_in = fetch("forced_burn_in") == "1";
            out.records.push_back(std::move(r));
        } catch (const std::exception&) {
            throw std::invalid_argument("trace: malformed row at line " + std::to_string(line_no));
        }
    }
    return out;
}

void write_manifest(const std::string& path, const RunManifest& m) {
    nlohmann::ordered_json j;
    j["artifact_version"] = m.artifact_version;
    j["base_seed"] = m.base_seed;
    j["started_utc"] = m.started_utc;
    j["finished_utc"] = m.finished_utc;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m.config) cfg[k] = v;
    j["config"] = cfg;
    j["outputs"] = m.outputs;
    atomic_write_file(path, j.dump(2) + "\n");
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace dream
