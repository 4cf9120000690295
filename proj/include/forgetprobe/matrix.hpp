#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fp {

// Dense row-major float matrix. Small fixed surface; everything heavier
// (broadcasts, reductions) lives with its user.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(int r, int c, float fill = 0.0f);

    float& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    const float& operator()(int i, int j) const {
        return data[static_cast<std::size_t>(i) * cols + j];
    }

    float* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
    const float* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
    std::string shape_str() const;
};

// c = a * b. Throws DimensionError on mismatched inner dims.
Matrix matmul(const Matrix& a, const Matrix& b);

// c = a^T * b without materialising a^T (a: k x m, b: k x n -> m x n).
Matrix matmul_tn(const Matrix& a, const Matrix& b);

// c = a * b^T (a: m x k, b: n x k -> m x n).
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

// out(i, :) += v(0, :) for each row.
void add_row_inplace(Matrix& out, const Matrix& v);

void scale_inplace(Matrix& m, float s);
void add_inplace(Matrix& out, const Matrix& a);

// Sum over rows -> 1 x cols.
Matrix column_sums(const Matrix& a);

bool all_finite(const Matrix& m);

}  // namespace fp
