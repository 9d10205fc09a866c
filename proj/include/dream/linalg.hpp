#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dream {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b);

// Dense symmetric matrix, small dimension (d <= ~10). Stored as a full
// row-major d*d block; all mutating operations keep the two triangles
// identical bit-for-bit.
class SymMat {
public:
    SymMat() = default;
    explicit SymMat(std::size_t dim, double diag = 0.0);
    // Validates symmetry of the given full matrix to 1e-12 (relative to
    // the largest entry).
    static SymMat from_rows(const std::vector<Vec>& rows);

    std::size_t dim() const { return dim_; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }
    double& at(std::size_t i, std::size_t j) { return data_[i * dim_ + j]; }

    void add_scaled_identity(double w);
    Vec matvec(const Vec& x) const;

    bool operator==(const SymMat& other) const = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

// m + x x^T
SymMat rank1_update(const SymMat& m, const Vec& x);

// Given minv = m^{-1} with m positive definite, returns (m + x x^T)^{-1}.
// Throws std::runtime_error if 1 + x^T minv x <= 0, which signals that the
// tracked inverse has drifted off a positive definite matrix.
SymMat sherman_morrison_inverse_update(const SymMat& minv, const Vec& x);

// x^T m x
double quadratic_form(const SymMat& m, const Vec& x);

// Smallest eigenvalue via cyclic Jacobi sweeps over the full spectrum.
// Absolute accuracy ~1e-10 for the dimensions used here.
double min_eigenvalue(const SymMat& m);

// All eigenvalues, ascending.
std::vector<double> eigenvalues(const SymMat& m);

// Inverse of a symmetric positive definite matrix (Gauss-Jordan with
// partial pivoting). Used for periodic refactorization of tracked inverses.
SymMat invert_spd(const SymMat& m);

// Lower-triangular L with L L^T = m. Throws std::runtime_error if m is not
// positive definite.
std::vector<double> cholesky_lower(const SymMat& m);

} // namespace dream
