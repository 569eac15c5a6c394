#pragma once

#include <vector>

#include "seqmem/matrix.hpp"

namespace seqmem {

/// Rank-r factorization with input = u * diag(s) * v^T.
/// Columns of u and v are orthonormal, s is non-increasing and non-negative.
struct SvdResult {
    Matrix u;  // n x r
    Vector s;  // r
    Matrix v;  // m x r

    Matrix reconstruct() const { return u * s.asDiagonal() * v.transpose(); }
};

/// Top-p singular triplets of m. Signs are fixed so the largest-magnitude
/// entry of each u-column is positive, which makes results deterministic
/// for distinct singular values.
SvdResult svd_truncated(const Matrix& m, int p);

/// Approximate rank-p factorization of the horizontal concatenation of the
/// slices. Holds one slice plus the running rank-p factors in memory: each
/// slice is folded into the factorization via a QR update of the augmented
/// column basis followed by a small dense SVD.
SvdResult svd_incremental(const std::vector<Matrix>& slices, int p);

}  // namespace seqmem
