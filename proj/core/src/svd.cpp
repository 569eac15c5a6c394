#include "seqmem/svd.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

namespace seqmem {

namespace {

// Flip paired singular vectors so the largest-magnitude entry of each
// u-column is positive.
void fix_signs(Matrix& u, Matrix& v) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        Eigen::Index imax = 0;
        u.col(j).cwiseAbs().maxCoeff(&imax);
        if (u(imax, j) < 0.0) {
            u.col(j) = -u.col(j);
            v.col(j) = -v.col(j);
        }
    }
}

}  // namespace

SvdResult svd_truncated(const Matrix& m, int p) {
    require_finite(m, "svd_truncated input");
    require(p >= 1, "svd_truncated: p must be >= 1");
    require(p <= std::min(m.rows(), m.cols()),
            "svd_truncated: p exceeds min(rows, cols)");

    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdResult r;
    r.u = svd.matrixU().leftCols(p);
    r.s = svd.singularValues().head(p);
    r.v = svd.matrixV().leftCols(p);
    fix_signs(r.u, r.v);
    return r;
}

SvdResult svd_incremental(const std::vector<Matrix>& slices, int p) {
    require(!slices.empty(), "svd_incremental: empty slice list");
    const Eigen::Index n = slices.front().rows();
    Eigen::Index total_cols = 0;
    for (const auto& s : slices) {
        require(s.rows() == n, "svd_incremental: inconsistent row counts");
        require_finite(s, "svd_incremental slice");
        total_cols += s.cols();
    }
    require(p >= 1, "svd_incremental: p must be >= 1");
    require(p <= total_cols, "svd_incremental: p exceeds total column count");

    // Running factors of the columns seen so far: U (n x r), s (r), V (c x r).
    // Folding truncates to p_work > p triplets and only the final result is
    // cut to p: the oversampled buffer absorbs most of the error that
    // repeated hard truncation at p would accumulate.
    Eigen::Index max_slice = 0;
    for (const auto& sl : slices) max_slice = std::max(max_slice, sl.cols());
    const Eigen::Index p_work =
        std::min(total_cols, std::min<Eigen::Index>(n, p + max_slice + 8));

    Matrix u;
    Vector s;
    Matrix v;
    bool first = true;
    for (const auto& slice : slices) {
        if (slice.cols() == 0) continue;
        if (first) {
            const int r0 = static_cast<int>(
                std::min<Eigen::Index>(p_work, std::min(n, slice.cols())));
            SvdResult init = svd_truncated(slice, r0);
            u = init.u;
            s = init.s;
            v = init.v;
            first = false;
            continue;
        }
        const Eigen::Index r = s.size();
        const Eigen::Index a = slice.cols();

        // Split the slice into the part spanned by u and the residual. Only
        // the residual's numerical rank enters the augmented basis: padding
        // with arbitrary QR columns would break orthogonality against u.
        Matrix proj = u.transpose() * slice;              // r x a
        Matrix resid = slice - u * proj;                  // n x a
        resid -= u * (u.transpose() * resid);             // re-orthogonalize
        Eigen::ColPivHouseholderQR<Matrix> qr(resid);
        const Eigen::Index rq = qr.rank();
        Matrix q = qr.householderQ() * Matrix::Identity(n, rq);
        Matrix rr = q.transpose() * resid;                // rq x a
        Matrix k = Matrix::Zero(r + rq, r + a);
        k.topLeftCorner(r, r) = Matrix(s.asDiagonal());
        k.topRightCorner(r, a) = proj;
        k.bottomRightCorner(rq, a) = rr;

        Eigen::BDCSVD<Matrix> ks(k, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::Index keep =
            std::min<Eigen::Index>(p_work, ks.singularValues().size());

        Matrix ub(n, r + rq);
        ub << u, q;
        Matrix vb = Matrix::Zero(v.rows() + a, r + a);
        vb.topLeftCorner(v.rows(), r) = v;
        vb.bottomRightCorner(a, a) = Matrix::Identity(a, a);

        u = ub * ks.matrixU().leftCols(keep);
        s = ks.singularValues().head(keep);
        v = vb * ks.matrixV().leftCols(keep);
    }
    require(!first, "svd_incremental: all slices empty");

    const Eigen::Index keep = std::min<Eigen::Index>(p, s.size());
    SvdResult out{u.leftCols(keep), s.head(keep), v.leftCols(keep)};
    fix_signs(out.u, out.v);
    return out;
}

}  // namespace seqmem
