#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dream/linalg.hpp"

namespace dream {

// Maps a raw context (leading 1 for the intercept) to model features. The
// output also starts with a 1.
struct FeatureMap {
    std::string name;
    std::size_t dim_out = 0;
    std::function<Vec(const Vec&)> apply;
};

FeatureMap identity_feature_map(std::size_t dim);

// Online ridge regression for one arm: tracks D^T D + omega*I, its inverse,
// D^T R, the pull count, and the raw (feature, reward) log used for
// residual-variance recomputation. The tracked inverse is rebuilt from
// scratch every 512 updates to bound floating-point drift on long runs.
class ArmState {
public:
    static constexpr int kRefactorInterval = 512;

    ArmState(std::size_t dim, double omega = 1.0);

    void update(const Vec& feature, double reward);

    Vec coefficients() const;
    double predict_mean(const Vec& feature) const;
    // sqrt(f^T (D^T D + omega I)^{-1} f); refactorizes and retries once if
    // the tracked inverse has drifted to a negative quadratic form.
    double predict_sd(const Vec& feature);

    // Mean squared residual of the stored observations against the given
    // coefficients, normalized by (pull_count - dim). Returns the documented
    // fallback of 1.0 while pull_count <= dim.
    double residual_variance(const Vec& coeffs) const;
    double residual_variance() const { return residual_variance(coefficients()); }

    std::size_t dim() const { return dim_; }
    double omega() const { return omega_; }
    long pull_count() const { return pull_count_; }
    const SymMat& gram_reg() const { return gram_reg_; }
    const SymMat& gram_reg_inv() const { return gram_reg_inv_; }
    const Vec& xty() const { return xty_; }
    const std::vector<std::pair<Vec, double>>& observations() const { return observations_; }

    void refactorize();

private:
    std::size_t dim_;
    double omega_;
    SymMat gram_reg_;
    SymMat gram_reg_inv_;
    Vec xty_;
    long pull_count_ = 0;
    int updates_since_refactor_ = 0;
    std::vector<std::pair<Vec, double>> observations_;
};

} // namespace dream
