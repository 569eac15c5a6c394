#pragma once

#include <utility>
#include <vector>

#include "seqmem/matrix.hpp"
#include "seqmem/svd.hpp"

namespace seqmem {

/// Linear autoencoder for sequences. The encoder is
///   m^t = a x^t + b m^(t-1),  m^0 = 0,
/// and the decoder is the stacked transposes: decoding m^t yields
/// (x^t, m^(t-1)) as (a^T m^t, b^T m^t).
struct LaesParams {
    Matrix a;   // p x a_in
    Matrix b;   // p x p
    int p = 0;
    int a_in = 0;

    // Fit diagnostics: retained spectrum and the squared Frobenius energy
    // of the discarded tail, useful for sizing p.
    Vector singular_values;
    double discarded_energy = 0.0;
};

/// Stacked decoder [a^T; a^T b^T; ...; a^T (b^(k-1))^T] reconstructing the
/// last k encoded elements from one memory state.
struct DecoderUnroll {
    Matrix u_k;  // (k * a_in) x p
    int k = 0;
};

DecoderUnroll make_decoder_unroll(const LaesParams& params, int k);

/// Memory states m^1..m^l for one sequence (rows of seq are the elements).
std::vector<Vector> encode(const LaesParams& params, const Matrix& seq);

/// One decoding step: (x~, m~_prev) = (a^T m, b^T m).
std::pair<Vector, Vector> decode_step(const LaesParams& params, const Vector& m);

/// Last k elements decoded from m, most recent first; row j is x~^(t-j).
Matrix decode_sequence(const LaesParams& params, const Vector& m, int k);

/// Data matrix of reversed prefixes: row t of a length-l sequence is
/// [x^t, x^(t-1), ..., x^1, 0...]. Multiple sequences stack rows, with
/// columns zero-padded to l_max * a_in.
Matrix build_data_matrix(const std::vector<Matrix>& sequences);

/// Closed-form fit: SVD of the data matrix, then a = U^T P and b = U^T R U
/// where U spans the row space. With p = rank of the data matrix the fit
/// round-trips the corpus exactly. The streaming variant folds the data
/// matrix in column slices of one element each and never materializes it.
LaesParams fit(const std::vector<Matrix>& sequences, int p, bool streaming = false);

/// Mean squared element error of decoding each full sequence from its final
/// memory state, bucketed by how far back the decoded element lies
/// (bucket 0 = most recent element).
std::vector<double> reconstruction_error_profile(const LaesParams& params,
                                                 const std::vector<Matrix>& sequences);

/// Mean squared element error over the whole corpus (decode-from-final-state).
double corpus_reconstruction_error(const LaesParams& params,
                                   const std::vector<Matrix>& sequences);

}  // namespace seqmem
