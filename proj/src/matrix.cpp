#include "zsl/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace zsl {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

std::string Matrix::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: dimension mismatch " + a.shape_str() +
                                    " * " + b.shape_str());
    }
    Matrix c(a.rows, b.cols, 0.0);
    // ikj order: accumulation over k stays in ascending-k order for every
    // output cell, so results match a per-cell scalar loop bit for bit.
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) {
                crow[j] += aik * brow[j];
            }
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) {
            t(j, i) = a(i, j);
        }
    }
    return t;
}

Matrix pairwise_sq_dists(const Matrix& x) {
    if (x.rows == 0) {
        throw std::invalid_argument("pairwise_sq_dists: need at least one row");
    }
    const std::size_t n = x.rows;
    Matrix gram = matmul(x, transpose(x));
    Matrix d(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double v = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
            d(i, j) = v > 0.0 ? v : 0.0;
        }
    }
    return d;
}

Matrix hcat(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) {
        throw std::invalid_argument("hcat: row mismatch " + a.shape_str() + " | " +
                                    b.shape_str());
    }
    Matrix c(a.rows, a.cols + b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* crow = c.row(i);
        const double* arow = a.row(i);
        const double* brow = b.row(i);
        for (std::size_t j = 0; j < a.cols; ++j) crow[j] = arow[j];
        for (std::size_t j = 0; j < b.cols; ++j) crow[a.cols + j] = brow[j];
    }
    return c;
}

Matrix col_slice(const Matrix& a, std::size_t c0, std::size_t c1) {
    if (c0 > c1 || c1 > a.cols) {
        throw std::invalid_argument("col_slice: bad range [" + std::to_string(c0) +
                                    ", " + std::to_string(c1) + ") of " + a.shape_str());
    }
    Matrix c(a.rows, c1 - c0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t j = c0; j < c1; ++j) crow[j - c0] = arow[j];
    }
    return c;
}

Matrix gather_rows(const Matrix& a, const std::vector<std::size_t>& idx) {
    Matrix c(idx.size(), a.cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= a.rows) {
            throw std::invalid_argument("gather_rows: index " + std::to_string(idx[i]) +
                                        " out of " + std::to_string(a.rows) + " rows");
        }
        const double* src = a.row(idx[i]);
        double* dst = c.row(i);
        for (std::size_t j = 0; j < a.cols; ++j) dst[j] = src[j];
    }
    return c;
}

bool all_finite(const Matrix& a) {
    for (double v : a.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace zsl
