#include "dream/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace dream {

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

SymMat::SymMat(std::size_t dim, double diag) : dim_(dim), data_(dim * dim, 0.0) {
    for (std::size_t i = 0; i < dim_; ++i) data_[i * dim_ + i] = diag;
}

SymMat SymMat::from_rows(const std::vector<Vec>& rows) {
    const std::size_t d = rows.size();
    double scale = 0.0;
    for (const auto& r : rows) {
        if (r.size() != d) throw std::invalid_argument("SymMat: ragged rows");
        for (double v : r) scale = std::max(scale, std::abs(v));
    }
    const double tol = 1e-12 * std::max(1.0, scale);
    SymMat m(d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            if (std::abs(rows[i][j] - rows[j][i]) > tol)
                throw std::invalid_argument("SymMat: input is not symmetric");
            m.at(i, j) = 0.5 * (rows[i][j] + rows[j][i]);
        }
    }
    return m;
}

void SymMat::add_scaled_identity(double w) {
    for (std::size_t i = 0; i < dim_; ++i) data_[i * dim_ + i] += w;
}

Vec SymMat::matvec(const Vec& x) const {
    if (x.size() != dim_) throw std::invalid_argument("matvec: dimension mismatch");
    Vec y(dim_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) s += data_[i * dim_ + j] * x[j];
        y[i] = s;
    }
    return y;
}

SymMat rank1_update(const SymMat& m, const Vec& x) {
    if (x.size() != m.dim()) throw std::invalid_argument("rank1_update: dimension mismatch");
    SymMat out = m;
    for (std::size_t i = 0; i < m.dim(); ++i)
        for (std::size_t j = 0; j < m.dim(); ++j) out.at(i, j) += x[i] * x[j];
    return out;
}

SymMat sherman_morrison_inverse_update(const SymMat& minv, const Vec& x) {
    if (x.size() != minv.dim())
        throw std::invalid_argument("sherman_morrison_inverse_update: dimension mismatch");
    const Vec mx = minv.matvec(x);
    const double denom = 1.0 + dot(x, mx);
    if (denom <= 0.0)
        throw std::runtime_error("sherman_morrison_inverse_update: lost positive definiteness");
    SymMat out = minv;
    for (std::size_t i = 0; i < minv.dim(); ++i)
        for (std::size_t j = 0; j < minv.dim(); ++j) out.at(i, j) -= mx[i] * mx[j] / denom;
    return out;
}

double quadratic_form(const SymMat& m, const Vec& x) {
    if (x.size() != m.dim()) throw std::invalid_argument("quadratic_form: dimension mismatch");
    return dot(x, m.matvec(x));
}

namespace {

// One full cyclic Jacobi pass; returns remaining off-diagonal magnitude.
double jacobi_sweep(std::vector<double>& a, std::size_t d) {
    for (std::size_t p = 0; p + 1 < d; ++p) {
        for (std::size_t q = p + 1; q < d; ++q) {
            const double apq = a[p * d + q];
            if (apq == 0.0) continue;
            const double app = a[p * d + p];
            const double aqq = a[q * d + q];
            const double theta = (aqq - app) / (2.0 * apq);
            const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                             (std::abs(theta) + std::sqrt(theta * theta + 1.0));
            const double c = 1.0 / std::sqrt(t * t + 1.0);
            const double s = t * c;
            for (std::size_t k = 0; k < d; ++k) {
                const double akp = a[k * d + p];
                const double akq = a[k * d + q];
                a[k * d + p] = c * akp - s * akq;
                a[k * d + q] = s * akp + c * akq;
            }
            for (std::size_t k = 0; k < d; ++k) {
                const double apk = a[p * d + k];
                const double aqk = a[q * d + k];
                a[p * d + k] = c * apk - s * aqk;
                a[q * d + k] = s * apk + c * aqk;
            }
        }
    }
    double off = 0.0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) off += std::abs(a[i * d + j]);
    return off;
}

} // namespace

std::vector<double> eigenvalues(const SymMat& m) {
    const std::size_t d = m.dim();
    std::vector<double> a(d * d);
    double scale = 0.0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            a[i * d + j] = m(i, j);
            scale = std::max(scale, std::abs(m(i, j)));
        }
    const double tol = std::max(1e-30, 1e-15 * scale);
    for (int sweep = 0; sweep < 50; ++sweep) {
        if (jacobi_sweep(a, d) <= tol) break;
    }
    std::vector<double> ev(d);
    for (std::size_t i = 0; i < d; ++i) ev[i] = a[i * d + i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

double min_eigenvalue(const SymMat& m) {
    if (m.dim() == 0) throw std::invalid_argument("min_eigenvalue: empty matrix");
    return eigenvalues(m).front();
}

SymMat invert_spd(const SymMat& m) {
    const std::size_t d = m.dim();
    std::vector<double> a(d * 2 * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) a[i * 2 * d + j] = m(i, j);
        a[i * 2 * d + d + i] = 1.0;
    }
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < d; ++r)
            if (std::abs(a[r * 2 * d + col]) > std::abs(a[piv * 2 * d + col])) piv = r;
        if (a[piv * 2 * d + col] == 0.0)
            throw std::runtime_error("invert_spd: singular matrix");
        if (piv != col)
            for (std::size_t k = 0; k < 2 * d; ++k)
                std::swap(a[piv * 2 * d + k], a[col * 2 * d + k]);
        const double pv = a[col * 2 * d + col];
        for (std::size_t k = 0; k < 2 * d; ++k) a[col * 2 * d + k] /= pv;
        for (std::size_t r = 0; r < d; ++r) {
            if (r == col) continue;
            const double f = a[r * 2 * d + col];
            if (f == 0.0) continue;
            for (std::size_t k = 0; k < 2 * d; ++k) a[r * 2 * d + k] -= f * a[col * 2 * d + k];
        }
    }
    SymMat out(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            out.at(i, j) = 0.5 * (a[i * 2 * d + d + j] + a[j * 2 * d + d + i]);
    return out;
}

std::vector<double> cholesky_lower(const SymMat& m) {
    const std::size_t d = m.dim();
    std::vector<double> l(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l[i * d + k] * l[j * d + k];
            if (i == j) {
                if (s <= 0.0) throw std::runtime_error("cholesky_lower: not positive definite");
                l[i * d + i] = std::sqrt(s);
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    return l;
}

} // namespace dream
