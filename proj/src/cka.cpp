#include "forgetprobe/cka.hpp"

#include <cmath>
#include <cstring>

#include "forgetprobe/errors.hpp"

namespace fp {

namespace {

// Column-centered copy in double precision.
std::vector<double> center_columns(const Matrix& m) {
    std::vector<double> out(static_cast<std::size_t>(m.rows) * m.cols);
    std::vector<double> mean(static_cast<std::size_t>(m.cols), 0.0);
    for (int i = 0; i < m.rows; ++i) {
        const float* row = m.row(i);
        for (int j = 0; j < m.cols; ++j) mean[static_cast<std::size_t>(j)] += row[j];
    }
    for (double& v : mean) v /= m.rows;
    for (int i = 0; i < m.rows; ++i) {
        const float* row = m.row(i);
        double* orow = out.data() + static_cast<std::size_t>(i) * m.cols;
        for (int j = 0; j < m.cols; ++j)
            orow[j] = static_cast<double>(row[j]) - mean[static_cast<std::size_t>(j)];
    }
    return out;
}

// ||A^T B||_F^2 for two n x p / n x q double matrices, computed via the p x q
// cross product (ikj order, contiguous inner loop).
double cross_product_sq_norm(const std::vector<double>& a, int p, const std::vector<double>& b,
                             int q, int n) {
    std::vector<double> cross(static_cast<std::size_t>(p) * q, 0.0);
    for (int k = 0; k < n; ++k) {
        const double* arow = a.data() + static_cast<std::size_t>(k) * p;
        const double* brow = b.data() + static_cast<std::size_t>(k) * q;
        for (int i = 0; i < p; ++i) {
            const double aki = arow[i];
            double* crow = cross.data() + static_cast<std::size_t>(i) * q;
            for (int j = 0; j < q; ++j) crow[j] += aki * brow[j];
        }
    }
    double sq = 0.0;
    for (double v : cross) sq += v * v;
    return sq;
}

}  // namespace

double linear_cka(const Matrix& x, const Matrix& y) {
    if (x.rows != y.rows)
        throw DimensionError("linear_cka: " + x.shape_str() + " vs " + y.shape_str() +
                             " (rows must match)");
    if (x.rows < 2) throw DimensionError("linear_cka: need at least 2 rows");
    if (!all_finite(x) || !all_finite(y)) throw NumericError("linear_cka: non-finite input");

    std::vector<double> xc = center_columns(x);
    std::vector<double> yc = center_columns(y);

    double cross = cross_product_sq_norm(xc, x.cols, yc, y.cols, x.rows);
    double xx = cross_product_sq_norm(xc, x.cols, xc, x.cols, x.rows);
    double yy = cross_product_sq_norm(yc, y.cols, yc, y.cols, x.rows);
    // xx, yy are ||Xc^T Xc||_F^2; the definition divides by the norms.
    double denom = std::sqrt(xx) * std::sqrt(yy);
    if (denom == 0.0)
        throw DegenerateInputError("linear_cka: zero-variance representation matrix");
    double value = cross / denom;
    if (!std::isfinite(value)) throw NumericError("linear_cka: non-finite result");
    return value;
}

DriftProtocol::DriftProtocol(int n_tasks, int max_samples) : max_samples_(max_samples) {
    if (n_tasks <= 0) throw ConfigError("DriftProtocol: n_tasks must be positive");
    if (max_samples < 2) throw ConfigError("DriftProtocol: max_samples must be at least 2");
    references_.resize(static_cast<std::size_t>(n_tasks));
}

void DriftProtocol::set_reference(int task_k, const Matrix& reps) {
    if (task_k < 1 || task_k > n_tasks())
        throw ConfigError("DriftProtocol: task " + std::to_string(task_k) + " out of range");
    if (has_reference(task_k))
        throw ProtocolError("DriftProtocol: reference for task " + std::to_string(task_k) +
                            " is already set");
    int take = std::min(max_samples_, reps.rows);
    if (take < 2)
        throw DimensionError("DriftProtocol: need at least 2 rows for a reference");
    Matrix& ref = references_[static_cast<std::size_t>(task_k - 1)];
    ref = Matrix(take, reps.cols);
    std::memcpy(ref.data.data(), reps.data.data(),
                static_cast<std::size_t>(take) * reps.cols * sizeof(float));
}

bool DriftProtocol::has_reference(int task_k) const {
    return references_[static_cast<std::size_t>(task_k - 1)].rows > 0;
}

int DriftProtocol::reference_rows(int task_k) const {
    return references_[static_cast<std::size_t>(task_k - 1)].rows;
}

std::vector<std::pair<int, double>> DriftProtocol::compare(
    const std::vector<const Matrix*>& current) const {
    if (static_cast<int>(current.size()) != n_tasks())
        throw DimensionError("DriftProtocol: need one current matrix per task");
    std::vector<std::pair<int, double>> out;
    for (int j = 1; j <= n_tasks(); ++j) {
        const Matrix& ref = references_[static_cast<std::size_t>(j - 1)];
        if (ref.rows == 0) continue;
        const Matrix* cur = current[static_cast<std::size_t>(j - 1)];
        if (!cur || cur->rows < ref.rows)
            throw DimensionError("DriftProtocol: current representations for task " +
                                 std::to_string(j) + " have too few rows");
        Matrix slice(ref.rows, cur->cols);
        std::memcpy(slice.data.data(), cur->data.data(),
                    static_cast<std::size_t>(ref.rows) * cur->cols * sizeof(float));
        out.emplace_back(j, linear_cka(ref, slice));
    }
    return out;
}

}  // namespace fp
