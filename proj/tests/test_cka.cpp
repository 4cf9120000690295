#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "forgetprobe/cka.hpp"
#include "forgetprobe/errors.hpp"
#include "forgetprobe/rng.hpp"

using namespace fp;

namespace {

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (float& v : m.data) v = rng.normal();
    return m;
}

// Gram-Schmidt in double precision -> a cols x cols orthogonal matrix.
Matrix random_orthogonal(int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> q(static_cast<std::size_t>(n),
                                       std::vector<double>(static_cast<std::size_t>(n)));
    for (auto& row : q)
        for (double& v : row) v = rng.normal();
    for (int i = 0; i < n; ++i) {
        for (int pass = 0; pass < 2; ++pass) {  // re-orthogonalise for stability
            for (int j = 0; j < i; ++j) {
                double dot = 0.0;
                for (int k = 0; k < n; ++k) dot += q[i][k] * q[j][k];
                for (int k = 0; k < n; ++k) q[i][k] -= dot * q[j][k];
            }
        }
        double norm = 0.0;
        for (int k = 0; k < n; ++k) norm += q[i][k] * q[i][k];
        norm = std::sqrt(norm);
        for (int k = 0; k < n; ++k) q[i][k] /= norm;
    }
    Matrix out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = static_cast<float>(q[i][j]);
    return out;
}

// Independent oracle: the Gram/HSIC formulation tr(Kc Lc) over norms, with
// K = X X^T, L = Y Y^T and double-centered kernels, all in double.
double cka_gram_oracle(const Matrix& x, const Matrix& y) {
    const int n = x.rows;
    auto gram = [n](const Matrix& a) {
        std::vector<double> k(static_cast<std::size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double dot = 0.0;
                for (int c = 0; c < a.cols; ++c)
                    dot += static_cast<double>(a(i, c)) * static_cast<double>(a(j, c));
                k[static_cast<std::size_t>(i) * n + j] = dot;
            }
        return k;
    };
    auto center = [n](std::vector<double>& k) {
        std::vector<double> row_mean(static_cast<std::size_t>(n), 0.0);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) row_mean[static_cast<std::size_t>(i)] +=
                k[static_cast<std::size_t>(i) * n + j];
            row_mean[static_cast<std::size_t>(i)] /= n;
            total += row_mean[static_cast<std::size_t>(i)];
        }
        total /= n;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                k[static_cast<std::size_t>(i) * n + j] +=
                    total - row_mean[static_cast<std::size_t>(i)] -
                    row_mean[static_cast<std::size_t>(j)];
    };
    std::vector<double> k = gram(x), l = gram(y);
    center(k);
    center(l);
    double kl = 0.0, kk = 0.0, ll = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        kl += k[i] * l[i];
        kk += k[i] * k[i];
        ll += l[i] * l[i];
    }
    return kl / std::sqrt(kk * ll);
}

}  // namespace

TEST_CASE("cka of a matrix with itself is 1") {
    Matrix x = random_matrix(40, 7, 1);
    CHECK(linear_cka(x, x) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cka is symmetric") {
    Matrix x = random_matrix(30, 5, 2);
    Matrix y = random_matrix(30, 9, 3);
    double a = linear_cka(x, y);
    double b = linear_cka(y, x);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    CHECK(a > 0.0);
    CHECK(a < 1.0);
}

TEST_CASE("cka is invariant to per-column translation") {
    Matrix x = random_matrix(25, 6, 4);
    Matrix y = random_matrix(25, 4, 5);
    double base = linear_cka(x, y);
    Matrix shifted = y;
    for (int i = 0; i < shifted.rows; ++i)
        for (int j = 0; j < shifted.cols; ++j) shifted(i, j) += 3.0f * (j + 1);
    // The shifted copy is re-quantised to float32, so invariance holds to the
    // input rounding scale (~1e-7 per entry), not to double precision.
    CHECK(linear_cka(x, shifted) == doctest::Approx(base).epsilon(1e-5));
}

TEST_CASE("cka is invariant to isotropic scaling") {
    Matrix x = random_matrix(25, 6, 6);
    Matrix y = random_matrix(25, 4, 7);
    double base = linear_cka(x, y);
    Matrix scaled = y;
    scale_inplace(scaled, 4.0f);  // power of two: exact in float
    CHECK(linear_cka(x, scaled) == doctest::Approx(base).epsilon(1e-9));
    Matrix xs = x;
    scale_inplace(xs, 0.25f);
    CHECK(linear_cka(xs, y) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("cka is invariant to orthogonal maps") {
    Matrix x = random_matrix(30, 8, 8);
    Matrix y = random_matrix(30, 8, 9);
    double base = linear_cka(x, y);
    Matrix q = random_orthogonal(8, 10);
    Matrix yq = matmul(y, q);
    CHECK(linear_cka(x, yq) == doctest::Approx(base).epsilon(1e-5));
    Matrix xq = matmul(x, random_orthogonal(8, 11));
    CHECK(linear_cka(xq, y) == doctest::Approx(base).epsilon(1e-5));
}

TEST_CASE("cka matches the gram-form hsic oracle") {
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
        Matrix x = random_matrix(22, 6, seed);
        Matrix y = random_matrix(22, 9, seed + 100);
        CHECK(linear_cka(x, y) == doctest::Approx(cka_gram_oracle(x, y)).epsilon(1e-9));
    }
    // Wide matrices (cols > rows) exercise the feature-form shortcut.
    Matrix x = random_matrix(12, 40, 30);
    Matrix y = random_matrix(12, 33, 31);
    CHECK(linear_cka(x, y) == doctest::Approx(cka_gram_oracle(x, y)).epsilon(1e-9));
}

TEST_CASE("cka detects identical-up-to-rotation representations") {
    Matrix x = random_matrix(40, 6, 12);
    Matrix y = matmul(x, random_orthogonal(6, 13));
    for (int i = 0; i < y.rows; ++i)
        for (int j = 0; j < y.cols; ++j) y(i, j) = y(i, j) * 2.0f + 1.5f;
    CHECK(linear_cka(x, y) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("cka error taxonomy") {
    Matrix x = random_matrix(10, 3, 1);
    CHECK_THROWS_AS(linear_cka(x, random_matrix(11, 3, 2)), DimensionError);
    CHECK_THROWS_AS(linear_cka(Matrix(1, 3), Matrix(1, 3)), DimensionError);

    Matrix with_nan = random_matrix(10, 3, 3);
    with_nan(4, 1) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(linear_cka(x, with_nan), NumericError);
    with_nan(4, 1) = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(linear_cka(with_nan, x), NumericError);

    Matrix constant(10, 3, 2.5f);  // zero variance after centering
    CHECK_THROWS_AS(linear_cka(x, constant), DegenerateInputError);
    CHECK_THROWS_AS(linear_cka(constant, x), DegenerateInputError);
}

TEST_CASE("drift protocol stores capped references and compares prefixes") {
    DriftProtocol drift(3, /*max_samples=*/8);
    CHECK(drift.n_tasks() == 3);
    CHECK(!drift.has_reference(1));

    Matrix r1 = random_matrix(20, 5, 40);  // capped to 8 rows
    Matrix r2 = random_matrix(6, 5, 41);   // under the cap, kept whole
    drift.set_reference(1, r1);
    drift.set_reference(2, r2);
    CHECK(drift.has_reference(1));
    CHECK(drift.reference_rows(1) == 8);
    CHECK(drift.reference_rows(2) == 6);
    CHECK(!drift.has_reference(3));

    // Same representations -> cka 1 for every referenced task; task 3 absent.
    std::vector<const Matrix*> current{&r1, &r2, nullptr};
    auto scores = drift.compare(current);
    REQUIRE(scores.size() == 2);
    CHECK(scores[0].first == 1);
    CHECK(scores[0].second == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(scores[1].first == 2);
    CHECK(scores[1].second == doctest::Approx(1.0).epsilon(1e-12));

    // Drifted second representation scores below 1 but the first stays 1.
    Matrix moved = random_matrix(6, 5, 99);
    std::vector<const Matrix*> after{&r1, &moved, nullptr};
    scores = drift.compare(after);
    CHECK(scores[0].second == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(scores[1].second < 0.98);  // independent random reps score well below 1

    // References are write-once.
    CHECK_THROWS_AS(drift.set_reference(1, r1), ProtocolError);
    CHECK_THROWS_AS(drift.set_reference(0, r1), ConfigError);
    CHECK_THROWS_AS(drift.set_reference(4, r1), ConfigError);

    // Current reps must cover the reference rows.
    Matrix tiny = random_matrix(3, 5, 50);
    std::vector<const Matrix*> short_rows{&r1, &tiny, nullptr};
    CHECK_THROWS_AS(drift.compare(short_rows), DimensionError);
    std::vector<const Matrix*> missing{&r1, nullptr, nullptr};
    CHECK_THROWS_AS(drift.compare(missing), DimensionError);
    std::vector<const Matrix*> wrong_count{&r1, &r2};
    CHECK_THROWS_AS(drift.compare(wrong_count), DimensionError);

    CHECK_THROWS_AS(DriftProtocol(0), ConfigError);
    CHECK_THROWS_AS(DriftProtocol(3, 1), ConfigError);
}

TEST_CASE("drift compare slices exactly the reference prefix") {
    DriftProtocol drift(1, 5);
    Matrix ref = random_matrix(9, 4, 60);
    drift.set_reference(1, ref);  // keeps rows 0..4

    // Current matrix agrees on the first 5 rows and diverges after: compare
    // must ignore the tail.
    Matrix cur = random_matrix(9, 4, 61);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 4; ++j) cur(i, j) = ref(i, j);
    std::vector<const Matrix*> current{&cur};
    auto scores = drift.compare(current);
    REQUIRE(scores.size() == 1);
    CHECK(scores[0].second == doctest::Approx(1.0).epsilon(1e-12));
}
