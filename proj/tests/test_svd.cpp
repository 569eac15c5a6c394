#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "seqmem/svd.hpp"
#include "test_util.hpp"

using namespace seqmem;
using testutil::random_matrix;

namespace {

// Independent full-rank factorization through the Gram matrix: eigenpairs of
// M^T M give v and s, then u = M v / s.
Matrix gram_reconstruct(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m.transpose() * m);
    Matrix recon = Matrix::Zero(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        const double lambda = eig.eigenvalues()(i);
        if (lambda <= 1e-24) continue;
        const double s = std::sqrt(lambda);
        const Vector v = eig.eigenvectors().col(i);
        const Vector u = m * v / s;
        recon += s * u * v.transpose();
    }
    return recon;
}

std::vector<Matrix> split_columns(const Matrix& m, int n_slices) {
    std::vector<Matrix> slices;
    Eigen::Index start = 0;
    for (int i = 0; i < n_slices; ++i) {
        const Eigen::Index width =
            m.cols() / n_slices + (i < m.cols() % n_slices ? 1 : 0);
        slices.push_back(m.middleCols(start, width));
        start += width;
    }
    return slices;
}

}  // namespace

TEST_CASE("identity 2x2 full rank") {
    const SvdResult r = svd_truncated(Matrix::Identity(2, 2), 2);
    CHECK(r.s(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.s(1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((r.u * r.v.transpose() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("diagonal rank-1 case") {
    Matrix m(2, 2);
    m << 3, 0, 0, 0;
    const SvdResult r = svd_truncated(m, 1);
    CHECK(r.s.size() == 1);
    CHECK(r.s(0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK((r.reconstruct() - m).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("random 6x4 full factorization matches Gram-matrix oracle") {
    std::mt19937_64 rng(42);
    const Matrix m = random_matrix(6, 4, rng);
    const SvdResult r = svd_truncated(m, 4);
    CHECK((r.reconstruct() - m).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((gram_reconstruct(m) - m).cwiseAbs().maxCoeff() < 1e-9);
    // Singular values agree with the Gram-matrix spectrum.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m.transpose() * m);
    for (Eigen::Index i = 0; i < 4; ++i)
        CHECK(r.s(i) ==
              doctest::Approx(std::sqrt(eig.eigenvalues()(3 - i))).epsilon(1e-9));
}

TEST_CASE("factor orthonormality and ordering") {
    std::mt19937_64 rng(7);
    const Matrix m = random_matrix(9, 5, rng);
    const SvdResult r = svd_truncated(m, 5);
    CHECK((r.u.transpose() * r.u - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((r.v.transpose() * r.v - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);
    for (Eigen::Index i = 0; i + 1 < r.s.size(); ++i) CHECK(r.s(i) >= r.s(i + 1));
    CHECK(r.s.minCoeff() >= 0.0);
}

TEST_CASE("singular values of rank p are a prefix of rank p+1") {
    std::mt19937_64 rng(11);
    const Matrix m = random_matrix(8, 6, rng);
    const SvdResult a = svd_truncated(m, 3);
    const SvdResult b = svd_truncated(m, 4);
    for (Eigen::Index i = 0; i < 3; ++i)
        CHECK(std::abs(a.s(i) - b.s(i)) < 1e-10);
}

TEST_CASE("sign convention: dominant entry of each u-column is positive") {
    std::mt19937_64 rng(13);
    const Matrix m = random_matrix(7, 4, rng);
    const SvdResult r = svd_truncated(m, 4);
    for (Eigen::Index c = 0; c < r.u.cols(); ++c) {
        Eigen::Index idx = 0;
        r.u.col(c).cwiseAbs().maxCoeff(&idx);
        CHECK(r.u(idx, c) > 0.0);
    }
}

TEST_CASE("exact-rank reconstruction bound") {
    std::mt19937_64 rng(17);
    const Matrix low = random_matrix(10, 3, rng) * random_matrix(3, 8, rng);
    const SvdResult r = svd_truncated(low, 3);
    CHECK((r.reconstruct() - low).norm() <= 1e-8 * low.norm());
}

TEST_CASE("p out of range is an error") {
    const Matrix m = Matrix::Identity(3, 3);
    CHECK_THROWS(svd_truncated(m, 0));
    CHECK_THROWS(svd_truncated(m, 4));
}

TEST_CASE("incremental: single slice agrees with svd_truncated") {
    std::mt19937_64 rng(19);
    const Matrix m = random_matrix(10, 6, rng);
    const SvdResult inc = svd_incremental({m}, 4);
    const SvdResult ref = svd_truncated(m, 4);
    CHECK((inc.reconstruct() - ref.reconstruct()).cwiseAbs().maxCoeff() < 1e-9);
    for (Eigen::Index i = 0; i < 4; ++i)
        CHECK(inc.s(i) == doctest::Approx(ref.s(i)).epsilon(1e-9));
}

TEST_CASE("incremental: exact rank-p matrix in 3 slices reconstructs exactly") {
    std::mt19937_64 rng(23);
    const Matrix m = random_matrix(12, 4, rng) * random_matrix(4, 9, rng);
    const SvdResult inc = svd_incremental(split_columns(m, 3), 4);
    CHECK((inc.reconstruct() - m).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("incremental: truncated error within 10% of the oracle") {
    std::mt19937_64 rng(29);
    const Matrix m = random_matrix(20, 12, rng);
    const SvdResult inc = svd_incremental(split_columns(m, 4), 6);
    const SvdResult ref = svd_truncated(m, 6);
    const double err_inc = (inc.reconstruct() - m).norm();
    const double err_ref = (ref.reconstruct() - m).norm();
    CHECK(err_inc <= 1.1 * err_ref);
}

TEST_CASE("incremental: input validation") {
    CHECK_THROWS(svd_incremental({}, 2));
    std::mt19937_64 rng(31);
    const Matrix a = random_matrix(4, 2, rng);
    const Matrix b = random_matrix(5, 2, rng);
    CHECK_THROWS(svd_incremental({a, b}, 2));
}
