#include "dream/environments.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dream {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

FeatureMap cosine_feature_map() {
    return FeatureMap{"cosine", 3, [](const Vec& x) {
                          return Vec{1.0, std::cos(x[1]), std::cos(x[2])};
                      }};
}
} // namespace

SyntheticEnv::SyntheticEnv(double noise_sd0, double noise_sd1)
    : noise_sd0_(noise_sd0), noise_sd1_(noise_sd1), fmap_(cosine_feature_map()) {}

EnvStep SyntheticEnv::sample_step(Rng& rng) {
    return EnvStep{Vec{1.0, rng.uniform(0.0, kTwoPi), rng.uniform(0.0, kTwoPi)}, -1};
}

double SyntheticEnv::true_mean(const Vec& x, int a) const {
    const double ad = static_cast<double>(a);
    return 2.0 - ad + (5.0 * ad - 1.0) * std::cos(x[1]) + (1.5 - 3.0 * ad) * std::cos(x[2]);
}

double SyntheticEnv::draw_reward(const EnvStep& step, int action, Rng& rng) const {
    return true_mean(step.context, action) + noise_sd(action) * rng.normal();
}

std::unique_ptr<Environment> SyntheticEnv::fresh_copy() const {
    return std::make_unique<SyntheticEnv>(noise_sd0_, noise_sd1_);
}

int SyntheticEnv::oracle_policy(const Vec& x) const {
    return -1.0 + 5.0 * std::cos(x[1]) - 3.0 * std::cos(x[2]) > 0.0 ? 1 : 0;
}

double SyntheticEnv::oracle_value(int grid_n) const {
    if (grid_n < 100) throw std::invalid_argument("oracle_value: grid_n must be >= 100");
    const double h = kTwoPi / grid_n;
    double s = 0.0;
    for (int i = 0; i < grid_n; ++i) {
        const double u = (i + 0.5) * h;
        for (int j = 0; j < grid_n; ++j) {
            const double v = (j + 0.5) * h;
            const Vec x{1.0, u, v};
            s += std::max(true_mean(x, 0), true_mean(x, 1));
        }
    }
    return s / (static_cast<double>(grid_n) * grid_n);
}

double SyntheticEnv::oracle_sigma_dr(const std::function<double(const Vec&)>& kappa_inf,
                                     int grid_n) const {
    const double h = kTwoPi / grid_n;
    const double n2 = static_cast<double>(grid_n) * grid_n;
    double noise_term = 0.0, m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < grid_n; ++i) {
        const double u = (i + 0.5) * h;
        for (int j = 0; j < grid_n; ++j) {
            const double v = (j + 0.5) * h;
            const Vec x{1.0, u, v};
            const int pi_star = oracle_policy(x);
            const double s2 = pi_star == 1 ? noise_sd1_ * noise_sd1_ : noise_sd0_ * noise_sd0_;
            noise_term += s2 / (1.0 - kappa_inf(x));
            const double m = true_mean(x, pi_star);
            m1 += m;
            m2 += m * m;
        }
    }
    noise_term /= n2;
    m1 /= n2;
    m2 /= n2;
    return noise_term + (m2 - m1 * m1);
}

double SyntheticEnv::oracle_policy_value(const std::function<int(const Vec&)>& policy,
                                         int grid_n) const {
    const double h = kTwoPi / grid_n;
    double s = 0.0;
    for (int i = 0; i < grid_n; ++i) {
        const double u = (i + 0.5) * h;
        for (int j = 0; j < grid_n; ++j) {
            const double v = (j + 0.5) * h;
            const Vec x{1.0, u, v};
            s += true_mean(x, policy(x));
        }
    }
    return s / (static_cast<double>(grid_n) * grid_n);
}

DatasetEnv::DatasetEnv(std::shared_ptr<const std::vector<DatasetRow>> rows, double reward_sd)
    : rows_(std::move(rows)), reward_sd_(reward_sd) {
    if (!rows_ || rows_->empty()) throw std::invalid_argument("DatasetEnv: no rows");
    fmap_ = identity_feature_map(rows_->front().features.size());
}

std::size_t DatasetEnv::context_dim() const { return rows_->front().features.size(); }

EnvStep DatasetEnv::sample_step(Rng& rng) {
    if (drawn_ >= rows_->size()) throw std::runtime_error("DatasetEnv: rows exhausted");
    if (order_.empty()) {
        order_.resize(rows_->size());
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::uint32_t>(i);
    }
    // incremental Fisher-Yates: pick uniformly among the not-yet-drawn rows
    const std::size_t j = drawn_ + rng.uniform_index(order_.size() - drawn_);
    std::swap(order_[drawn_], order_[j]);
    const DatasetRow& row = (*rows_)[order_[drawn_]];
    ++drawn_;
    return EnvStep{row.features, row.label};
}

double DatasetEnv::draw_reward(const EnvStep& step, int action, Rng& rng) const {
    return (action == step.label ? 1.0 : 0.0) + reward_sd_ * rng.normal();
}

std::unique_ptr<Environment> DatasetEnv::fresh_copy() const {
    return std::make_unique<DatasetEnv>(rows_, reward_sd_);
}

std::vector<DatasetRow> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset: cannot open '" + path + "'");
    std::vector<DatasetRow> rows;
    std::string line;
    long line_no = 0;
    std::size_t ncols = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        std::vector<double> vals;
        vals.reserve(cells.size());
        bool numeric = true;
        for (const auto& c : cells) {
            try {
                std::size_t used = 0;
                const double v = std::stod(c, &used);
                while (used < c.size() && std::isspace(static_cast<unsigned char>(c[used]))) ++used;
                if (used != c.size()) { numeric = false; break; }
                vals.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (line_no == 1) continue; // header row
            throw std::runtime_error("load_dataset: malformed row at line " +
                                     std::to_string(line_no));
        }
        if (vals.size() < 2)
            throw std::runtime_error("load_dataset: too few columns at line " +
                                     std::to_string(line_no));
        if (ncols == 0) ncols = vals.size();
        if (vals.size() != ncols)
            throw std::runtime_error("load_dataset: inconsistent column count at line " +
                                     std::to_string(line_no));
        const double lab = vals.back();
        if (lab != 0.0 && lab != 1.0)
            throw std::runtime_error("load_dataset: non-binary label at line " +
                                     std::to_string(line_no));
        for (double v : vals)
            if (!std::isfinite(v))
                throw std::runtime_error("load_dataset: non-finite value at line " +
                                         std::to_string(line_no));
        DatasetRow row;
        row.features.reserve(vals.size());
        row.features.push_back(1.0);
        row.features.insert(row.features.end(), vals.begin(), vals.end() - 1);
        row.label = static_cast<int>(lab);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("load_dataset: no data rows in '" + path + "'");
    return rows;
}

std::vector<DatasetRow> make_sea_like_rows(std::size_t n, std::uint64_t seed, double margin,
                                           double threshold, double label_noise, double scale) {
    Rng rng(derive_seed(seed, 0x5ea));
    std::vector<DatasetRow> rows;
    rows.reserve(n);
    while (rows.size() < n) {
        Vec f(4);
        for (auto& v : f) v = rng.uniform(0.0, scale);
        const double score = f[0] + f[1] - threshold;
        if (std::abs(score) < margin) continue;
        int label = score <= 0.0 ? 1 : 0;
        if (label_noise > 0.0 && rng.bernoulli(label_noise)) label = 1 - label;
        DatasetRow row;
        row.features = Vec{1.0, f[0], f[1], f[2], f[3]};
        row.label = label;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace dream
