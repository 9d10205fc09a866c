#include "dream/arm_model.hpp"

#include <cmath>
#include <stdexcept>

namespace dream {

FeatureMap identity_feature_map(std::size_t dim) {
    return FeatureMap{"identity", dim, [](const Vec& x) { return x; }};
}

ArmState::ArmState(std::size_t dim, double omega)
    : dim_(dim), omega_(omega), gram_reg_(dim, omega), gram_reg_inv_(dim, 1.0 / omega),
      xty_(dim, 0.0) {
    if (dim == 0) throw std::invalid_argument("ArmState: dimension must be positive");
    if (!(omega > 0.0)) throw std::invalid_argument("ArmState: omega must be positive");
}

void ArmState::update(const Vec& feature, double reward) {
    if (feature.size() != dim_) throw std::invalid_argument("ArmState::update: dimension mismatch");
    if (!std::isfinite(reward)) throw std::invalid_argument("ArmState::update: non-finite reward");
    for (double v : feature)
        if (!std::isfinite(v)) throw std::invalid_argument("ArmState::update: non-finite feature");

    gram_reg_ = rank1_update(gram_reg_, feature);
    if (++updates_since_refactor_ >= kRefactorInterval) {
        refactorize();
    } else {
        gram_reg_inv_ = sherman_morrison_inverse_update(gram_reg_inv_, feature);
    }
    for (std::size_t i = 0; i < dim_; ++i) xty_[i] += feature[i] * reward;
    ++pull_count_;
    observations_.emplace_back(feature, reward);
}

void ArmState::refactorize() {
    gram_reg_inv_ = invert_spd(gram_reg_);
    updates_since_refactor_ = 0;
}

Vec ArmState::coefficients() const { return gram_reg_inv_.matvec(xty_); }

double ArmState::predict_mean(const Vec& feature) const {
    if (feature.size() != dim_)
        throw std::invalid_argument("ArmState::predict_mean: dimension mismatch");
    return dot(feature, coefficients());
}

double ArmState::predict_sd(const Vec& feature) {
    double q = quadratic_form(gram_reg_inv_, feature);
    if (q < 0.0) {
        refactorize();
        q = quadratic_form(gram_reg_inv_, feature);
        if (q < 0.0)
            throw std::runtime_error("ArmState::predict_sd: negative quadratic form after refactorization");
    }
    return std::sqrt(q);
}

double ArmState::residual_variance(const Vec& coeffs) const {
    if (pull_count_ <= static_cast<long>(dim_)) return 1.0;
    double ss = 0.0;
    for (const auto& [f, r] : observations_) {
        const double e = dot(f, coeffs) - r;
        ss += e * e;
    }
    return ss / static_cast<double>(pull_count_ - static_cast<long>(dim_));
}

} // namespace dream
