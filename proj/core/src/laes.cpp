#include "seqmem/laes.hpp"

#include <algorithm>

namespace seqmem {

DecoderUnroll make_decoder_unroll(const LaesParams& params, int k) {
    require(k >= 1, "make_decoder_unroll: k must be >= 1");
    const int a_in = params.a_in;
    DecoderUnroll out;
    out.k = k;
    out.u_k.resize(static_cast<Eigen::Index>(k) * a_in, params.p);
    Matrix block = params.a.transpose();  // a_in x p
    for (int j = 0; j < k; ++j) {
        out.u_k.middleRows(static_cast<Eigen::Index>(j) * a_in, a_in) = block;
        if (j + 1 < k) block = block * params.b.transpose();
    }
    return out;
}

std::vector<Vector> encode(const LaesParams& params, const Matrix& seq) {
    require(seq.cols() == params.a_in, "encode: element size mismatch");
    std::vector<Vector> states;
    states.reserve(seq.rows());
    Vector m = Vector::Zero(params.p);
    for (Eigen::Index t = 0; t < seq.rows(); ++t) {
        m = params.a * seq.row(t).transpose() + params.b * m;
        states.push_back(m);
    }
    return states;
}

std::pair<Vector, Vector> decode_step(const LaesParams& params, const Vector& m) {
    require(m.size() == params.p, "decode_step: memory size mismatch");
    return {params.a.transpose() * m, params.b.transpose() * m};
}

Matrix decode_sequence(const LaesParams& params, const Vector& m, int k) {
    require(k >= 1, "decode_sequence: k must be >= 1");
    require(m.size() == params.p, "decode_sequence: memory size mismatch");
    Matrix out(k, params.a_in);
    Vector cur = m;
    for (int j = 0; j < k; ++j) {
        out.row(j) = (params.a.transpose() * cur).transpose();
        cur = params.b.transpose() * cur;
    }
    return out;
}

Matrix build_data_matrix(const std::vector<Matrix>& sequences) {
    require(!sequences.empty(), "build_data_matrix: empty dataset");
    const Eigen::Index a = sequences.front().cols();
    Eigen::Index l_max = 0, total_rows = 0;
    for (const auto& s : sequences) {
        require(s.cols() == a, "build_data_matrix: inconsistent element sizes");
        l_max = std::max(l_max, s.rows());
        total_rows += s.rows();
    }
    Matrix xi = Matrix::Zero(total_rows, l_max * a);
    Eigen::Index row = 0;
    for (const auto& s : sequences) {
        for (Eigen::Index t = 0; t < s.rows(); ++t) {
            // Row t holds the reversed prefix x^t, x^(t-1), ..., x^1.
            for (Eigen::Index j = 0; j <= t; ++j)
                xi.block(row, j * a, 1, a) = s.row(t - j);
            ++row;
        }
    }
    return xi;
}

namespace {

// Column slice j of the data matrix (the x^(t-j) column block), built
// without materializing the full matrix.
Matrix data_matrix_slice(const std::vector<Matrix>& sequences,
                         Eigen::Index total_rows, Eigen::Index j) {
    const Eigen::Index a = sequences.front().cols();
    Matrix slice = Matrix::Zero(total_rows, a);
    Eigen::Index row = 0;
    for (const auto& s : sequences) {
        for (Eigen::Index t = 0; t < s.rows(); ++t) {
            if (t - j >= 0) slice.row(row) = s.row(t - j);
            ++row;
        }
    }
    return slice;
}

}  // namespace

LaesParams fit(const std::vector<Matrix>& sequences, int p, bool streaming) {
    require(!sequences.empty(), "fit: empty dataset");
    require(p >= 1, "fit: p must be >= 1");
    const Eigen::Index a = sequences.front().cols();
    Eigen::Index l_max = 0, total_rows = 0;
    double total_energy = 0.0;
    for (const auto& s : sequences) {
        require(s.cols() == a, "fit: inconsistent element sizes");
        require_finite(s, "fit input sequence");
        l_max = std::max(l_max, s.rows());
        total_rows += s.rows();
    }
    const Eigen::Index cols = l_max * a;
    require(p <= std::min(total_rows, cols), "fit: p exceeds data matrix dimension");

    SvdResult svd;
    if (streaming) {
        std::vector<Matrix> slices;
        slices.reserve(l_max);
        for (Eigen::Index j = 0; j < l_max; ++j)
            slices.push_back(data_matrix_slice(sequences, total_rows, j));
        for (const auto& s : slices) total_energy += s.squaredNorm();
        svd = svd_incremental(slices, p);
    } else {
        Matrix xi = build_data_matrix(sequences);
        total_energy = xi.squaredNorm();
        svd = svd_truncated(xi, p);
    }

    // The row-space factor of the data matrix plays the role of the paper's
    // U (data = V Sigma U^T there); here it is svd.v.
    const Matrix& u = svd.v;  // (l_max * a) x p
    LaesParams params;
    params.p = p;
    params.a_in = static_cast<int>(a);
    params.a = u.topRows(a).transpose();  // U^T P with P = [I_a; 0]
    // U^T R U with R shifting row blocks down by one element.
    params.b = u.middleRows(a, cols - a).transpose() * u.topRows(cols - a);
    params.singular_values = svd.s;
    params.discarded_energy = std::max(0.0, total_energy - svd.s.squaredNorm());
    return params;
}

std::vector<double> reconstruction_error_profile(
    const LaesParams& params, const std::vector<Matrix>& sequences) {
    Eigen::Index l_max = 0;
    for (const auto& s : sequences) l_max = std::max(l_max, s.rows());
    std::vector<double> sum(l_max, 0.0);
    std::vector<long> count(l_max, 0);
    for (const auto& s : sequences) {
        const auto states = encode(params, s);
        if (states.empty()) continue;
        const Matrix decoded = decode_sequence(params, states.back(),
                                               static_cast<int>(s.rows()));
        for (Eigen::Index j = 0; j < s.rows(); ++j) {
            // decoded row j is the element j steps back from the end
            const auto diff = decoded.row(j) - s.row(s.rows() - 1 - j);
            sum[j] += diff.squaredNorm();
            count[j] += s.cols();
        }
    }
    for (Eigen::Index j = 0; j < l_max; ++j)
        if (count[j] > 0) sum[j] /= static_cast<double>(count[j]);
    return sum;
}

double corpus_reconstruction_error(const LaesParams& params,
                                   const std::vector<Matrix>& sequences) {
    double sum = 0.0;
    long count = 0;
    for (const auto& s : sequences) {
        const auto states = encode(params, s);
        if (states.empty()) continue;
        const Matrix decoded = decode_sequence(params, states.back(),
                                               static_cast<int>(s.rows()));
        for (Eigen::Index j = 0; j < s.rows(); ++j) {
            sum += (decoded.row(j) - s.row(s.rows() - 1 - j)).squaredNorm();
            count += s.cols();
        }
    }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace seqmem
