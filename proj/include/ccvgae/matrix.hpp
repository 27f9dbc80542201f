#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <sstream>
#include <vector>

#include "ccvgae/errors.hpp"

namespace ccvgae {

// Dense row-major matrix of doubles. The value type for everything in this
// library; small enough sizes that no sparsity or blocking is attempted.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw DimensionError("Matrix: data length does not match rows*cols");
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix ones(std::size_t rows, std::size_t cols) {
        return Matrix(rows, cols, 1.0);
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(),
                           [](double v) { return std::isfinite(v); });
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    double sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

    double trace() const {
        require_square("trace");
        double t = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
        return t;
    }

    Matrix transposed() const {
        Matrix out(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
        return out;
    }

    Matrix map(const std::function<double(double)>& f) const {
        Matrix out(rows_, cols_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = f(data_[i]);
        return out;
    }

    void require_square(const char* who) const {
        if (rows_ != cols_) {
            std::ostringstream os;
            os << who << ": matrix is " << rows_ << "x" << cols_ << ", expected square";
            throw DimensionError(os.str());
        }
    }

    void require_same_shape(const Matrix& other, const char* who) const {
        if (!same_shape(other)) {
            std::ostringstream os;
            os << who << ": shapes " << rows_ << "x" << cols_ << " and " << other.rows_
               << "x" << other.cols_ << " differ";
            throw DimensionError(os.str());
        }
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix operator+(const Matrix& a, const Matrix& b) {
    a.require_same_shape(b, "operator+");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
    a.require_same_shape(b, "operator-");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

inline Matrix operator*(const Matrix& a, double s) {
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
    return out;
}

inline Matrix operator*(double s, const Matrix& a) { return a * s; }

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
    a.require_same_shape(b, "hadamard");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}

// ikj ordering keeps the inner loop contiguous in both b and out.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        std::ostringstream os;
        os << "matmul: inner dimensions " << a.cols() << " and " << b.rows() << " differ";
        throw DimensionError(os.str());
    }
    Matrix out(a.rows(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = a(i, kk);
            if (aik == 0.0) continue;
            const double* brow = &b.data()[kk * m];
            double* orow = &out.data()[i * m];
            for (std::size_t j = 0; j < m; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

// LU factorization with partial pivoting, kept for reuse by inverse() and
// determinant-style queries. Throws SingularMatrixError when a pivot falls
// below tol relative to the largest entry of the input.
struct LuFactors {
    Matrix lu;                     // combined L (unit diag, below) and U (on/above)
    std::vector<std::size_t> perm; // row permutation applied to the input
};

inline LuFactors lu_factor(const Matrix& m, double rel_tol = 1e-12) {
    m.require_square("lu_factor");
    const std::size_t n = m.rows();
    LuFactors f{m, std::vector<std::size_t>(n)};
    for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;

    const double scale = std::max(m.max_abs(), 1e-300);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot_row = col;
        double pivot_mag = std::abs(f.lu(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double mag = std::abs(f.lu(r, col));
            if (mag > pivot_mag) {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if (pivot_mag <= rel_tol * scale) {
            throw SingularMatrixError("lu_factor: pivot below tolerance, matrix singular");
        }
        if (pivot_row != col) {
            for (std::size_t c = 0; c < n; ++c)
                std::swap(f.lu(col, c), f.lu(pivot_row, c));
            std::swap(f.perm[col], f.perm[pivot_row]);
        }
        const double pivot = f.lu(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = f.lu(r, col) / pivot;
            f.lu(r, col) = factor;
            for (std::size_t c = col + 1; c < n; ++c)
                f.lu(r, c) -= factor * f.lu(col, c);
        }
    }
    return f;
}

inline Matrix inverse(const Matrix& m, double rel_tol = 1e-12) {
    const LuFactors f = lu_factor(m, rel_tol);
    const std::size_t n = m.rows();
    Matrix inv(n, n);
    std::vector<double> col(n), y(n);
    for (std::size_t e = 0; e < n; ++e) {
        // forward substitution on the permuted unit vector
        for (std::size_t i = 0; i < n; ++i) {
            double v = (f.perm[i] == e) ? 1.0 : 0.0;
            for (std::size_t j = 0; j < i; ++j) v -= f.lu(i, j) * y[j];
            y[i] = v;
        }
        // back substitution
        for (std::size_t ii = n; ii-- > 0;) {
            double v = y[ii];
            for (std::size_t j = ii + 1; j < n; ++j) v -= f.lu(ii, j) * col[j];
            col[ii] = v / f.lu(ii, ii);
        }
        for (std::size_t i = 0; i < n; ++i) inv(i, e) = col[i];
    }
    return inv;
}

// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations. Input is not
// checked for symmetry beyond use; sizes here stay small (k <= a few hundred).
inline std::vector<double> symmetric_eigenvalues(const Matrix& sym, int max_sweeps = 64) {
    sym.require_square("symmetric_eigenvalues");
    Matrix a = sym;
    const std::size_t n = a.rows();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a(p, i), aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    std::sort(eig.begin(), eig.end(), std::greater<double>());
    return eig;
}

// Singular values of an arbitrary matrix, descending. Computed from the Gram
// matrix of the thinner side; adequate accuracy for spectrum reporting.
inline std::vector<double> singular_values(const Matrix& m) {
    const bool tall = m.rows() >= m.cols();
    const Matrix g = tall ? matmul(m.transposed(), m) : matmul(m, m.transposed());
    std::vector<double> eig = symmetric_eigenvalues(g);
    for (double& v : eig) v = std::sqrt(std::max(v, 0.0));
    return eig;
}

} // namespace ccvgae
