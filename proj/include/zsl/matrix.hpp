#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace zsl {

/// Dense row-major matrix of doubles; the single numeric currency of the
/// library. Values are immutable once returned from an operation and safe
/// to share across threads.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows*cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    static Matrix identity(std::size_t n);

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    std::string shape_str() const;
};

/// a * b. Throws std::invalid_argument naming both shapes on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

/// Symmetric n x n matrix of squared Euclidean distances between rows of x,
/// computed via the Gram expansion |a|^2 + |b|^2 - 2 a.b with the result
/// clamped at 0. The diagonal is exactly 0.
Matrix pairwise_sq_dists(const Matrix& x);

/// [a | b] column concatenation; row counts must agree.
Matrix hcat(const Matrix& a, const Matrix& b);

/// Columns [c0, c1) of a.
Matrix col_slice(const Matrix& a, std::size_t c0, std::size_t c1);

/// Rows of a selected by idx, in idx order.
Matrix gather_rows(const Matrix& a, const std::vector<std::size_t>& idx);

bool all_finite(const Matrix& a);

}  // namespace zsl
