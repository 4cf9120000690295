#include "forgetprobe/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "forgetprobe/errors.hpp"

namespace fp {

Matrix::Matrix(int r, int c, float fill)
    : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

std::string Matrix::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

// Row-panel blocked ikj: within a panel the k loop is outermost, so each row
// of b is loaded once per panel instead of once per row of a, while every
// c(i,j) still accumulates over k in ascending order — the inner loop is a
// contiguous axpy with no reduction reordering, so results are deterministic
// for a given build and independent of the panel size.
Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw DimensionError("matmul: " + a.shape_str() + " * " + b.shape_str());
    constexpr int kPanel = 32;
    Matrix c(a.rows, b.cols, 0.0f);
    for (int i0 = 0; i0 < a.rows; i0 += kPanel) {
        const int i1 = std::min(i0 + kPanel, a.rows);
        for (int k = 0; k < a.cols; ++k) {
            const float* brow = b.row(k);
            for (int i = i0; i < i1; ++i) {
                const float aik = a.row(i)[k];
                float* crow = c.row(i);
                for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
            }
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows)
        throw DimensionError("matmul_tn: " + a.shape_str() + "^T * " + b.shape_str());
    Matrix c(a.cols, b.cols, 0.0f);
    for (int k = 0; k < a.rows; ++k) {
        const float* arow = a.row(k);
        const float* brow = b.row(k);
        for (int i = 0; i < a.cols; ++i) {
            const float aki = arow[i];
            float* crow = c.row(i);
            for (int j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols)
        throw DimensionError("matmul_nt: " + a.shape_str() + " * " + b.shape_str() + "^T");
    // Transposing b up front costs O(rows*cols) against the O(M*N*K) product
    // and lets the contraction reuse the same axpy kernel as matmul: the inner
    // loop runs over independent output columns, not a serial dot product, so
    // it vectorizes without reordering any per-element accumulation — each
    // c(i,j) still sums a(i,k)*b(j,k) over k in ascending order.
    const Matrix bt = transpose(b);
    constexpr int kPanel = 32;
    Matrix c(a.rows, bt.cols, 0.0f);
    for (int i0 = 0; i0 < a.rows; i0 += kPanel) {
        const int i1 = std::min(i0 + kPanel, a.rows);
        for (int k = 0; k < a.cols; ++k) {
            const float* brow = bt.row(k);
            for (int i = i0; i < i1; ++i) {
                const float aik = a.row(i)[k];
                float* crow = c.row(i);
                for (int j = 0; j < bt.cols; ++j) crow[j] += aik * brow[j];
            }
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

void add_row_inplace(Matrix& out, const Matrix& v) {
    if (v.rows != 1 || v.cols != out.cols)
        throw DimensionError("add_row_inplace: " + out.shape_str() + " += " + v.shape_str());
    for (int i = 0; i < out.rows; ++i) {
        float* row = out.row(i);
        for (int j = 0; j < out.cols; ++j) row[j] += v(0, j);
    }
}

void scale_inplace(Matrix& m, float s) {
    for (float& x : m.data) x *= s;
}

void add_inplace(Matrix& out, const Matrix& a) {
    if (!out.same_shape(a))
        throw DimensionError("add_inplace: " + out.shape_str() + " += " + a.shape_str());
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += a.data[i];
}

Matrix column_sums(const Matrix& a) {
    Matrix s(1, a.cols, 0.0f);
    for (int i = 0; i < a.rows; ++i) {
        const float* row = a.row(i);
        for (int j = 0; j < a.cols; ++j) s.data[j] += row[j];
    }
    return s;
}

bool all_finite(const Matrix& m) {
    for (float x : m.data)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace fp
