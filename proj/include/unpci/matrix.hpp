#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "unpci/error.hpp"

namespace unpci {

/// Dense row-major matrix of doubles. Rows are observations, columns are
/// features throughout the library.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
        return out;
    }

    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// C = A * B
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw Error("matmul: dimension mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

/// Mean of each column.
inline std::vector<double> column_means(const Matrix& x) {
    std::vector<double> m(x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* row = x.row_ptr(i);
        for (std::size_t j = 0; j < x.cols(); ++j) m[j] += row[j];
    }
    for (double& v : m) v /= static_cast<double>(x.rows());
    return m;
}

/// Sample variance (denominator n-1) of each column.
inline std::vector<double> column_variances(const Matrix& x) {
    if (x.rows() < 2) throw Error("column_variances: need at least 2 rows");
    const std::vector<double> means = column_means(x);
    std::vector<double> v(x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* row = x.row_ptr(i);
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double d = row[j] - means[j];
            v[j] += d * d;
        }
    }
    for (double& vv : v) vv /= static_cast<double>(x.rows() - 1);
    return v;
}

}
