#pragma once

#include <variant>
#include <vector>

#include "seqmem/matrix.hpp"

namespace seqmem {

enum class Readout { FromMemory, FromHidden };
enum class OutputAct { Identity, Sigmoid };

/// Per-timestep states recorded during a forward pass. For memory-less
/// architectures m is empty; for the multiscale model m holds the
/// concatenated module states.
struct ForwardTrace {
    std::vector<Vector> h;
    std::vector<Vector> m;
    std::vector<Vector> y;
};

struct RnnParams {
    Matrix w_xh;  // N_h x N_x
    Matrix w_hh;  // N_h x N_h
    Matrix w_hy;  // N_y x N_h
    Vector b_h, b_y;
    OutputAct out_act = OutputAct::Identity;

    Eigen::Index n_h() const { return w_hh.rows(); }
};

struct LmnParams {
    Matrix w_xh;  // N_h x N_x
    Matrix w_mh;  // N_h x N_m
    Matrix w_hm;  // N_m x N_h
    Matrix w_mm;  // N_m x N_m
    Matrix w_out; // N_y x N_m (FromMemory) or N_y x N_h (FromHidden)
    Vector b_h, b_m, b_y;
    Readout readout = Readout::FromMemory;
    OutputAct out_act = OutputAct::Identity;

    Eigen::Index n_h() const { return w_xh.rows(); }
    Eigen::Index n_m() const { return w_mm.rows(); }
};

/// RNN with a tape of direct connections to the last k hidden states.
struct UrnnParams {
    Matrix w_xh;               // N_h x N_x
    std::vector<Matrix> w_hh;  // k matrices, N_h x N_h
    std::vector<Matrix> w_hy;  // k + 1 matrices, N_y x N_h
    Vector b_h, b_y;
    OutputAct out_act = OutputAct::Identity;

    int k() const { return static_cast<int>(w_hh.size()); }
    Eigen::Index n_h() const { return w_xh.rows(); }
};

/// LMN with the memory split into g modules of equal size, updating at clock
/// rates 2^(k-1). The concatenated w_mm is block-upper-triangular: module k
/// reads only modules i >= k, so blocks below the diagonal are structural
/// zeros and stay zero through construction and every update.
struct MslmnParams {
    int g = 1;
    int module_size = 0;  // N_m per module
    Matrix w_xh;  // N_h x N_x
    Matrix w_mh;  // N_h x (g N_m)
    Matrix w_hm;  // (g N_m) x N_h
    Matrix w_mm;  // (g N_m) x (g N_m), block upper triangular
    Matrix w_my;  // N_y x (g N_m)
    Vector b_h, b_m, b_y;
    OutputAct out_act = OutputAct::Identity;

    Eigen::Index n_h() const { return w_xh.rows(); }
    Eigen::Index memory_size() const { return static_cast<Eigen::Index>(g) * module_size; }

    void enforce_structure() { mask_structure(w_mm, g, module_size); }
    bool structure_ok(double tol = 0.0) const;

    /// Zero the below-diagonal blocks of a (g N_m) x (g N_m) matrix.
    static void mask_structure(Matrix& w, int g, int module_size);
};

using Model = std::variant<RnnParams, LmnParams, UrnnParams, MslmnParams>;

// --- forward passes (pure; initial states are zero) ---

ForwardTrace rnn_forward(const RnnParams& params, const Matrix& seq);
ForwardTrace lmn_forward(const LmnParams& params, const Matrix& seq);
ForwardTrace urnn_forward(const UrnnParams& params, const Matrix& seq);

/// Per-module loop straight from the update equations; the oracle route.
ForwardTrace mslmn_forward_reference(const MslmnParams& params, const Matrix& seq);
/// Row-sliced block-matrix route; produces the identical trace.
ForwardTrace mslmn_forward_block(const MslmnParams& params, const Matrix& seq);

ForwardTrace forward(const Model& model, const Matrix& seq);

/// Largest active module index at timestep t (1-based): the largest i <= g
/// with t divisible by 2^(i-1).
int active_modules(long t, int g);

/// Exact embedding of an RNN into an LMN (w_hm = I, w_mm = 0): the hidden
/// state sequences coincide on every input, and the FromHidden readout with
/// w_out = w_hy reproduces the RNN outputs.
LmnParams rnn_to_lmn(const RnnParams& rnn);

// --- parameter counting ---

enum class ArchKind { Rnn, Lmn, Urnn, Mslmn };

struct ArchDesc {
    ArchKind kind = ArchKind::Rnn;
    int n_x = 0, n_h = 0, n_m = 0, n_y = 0;
    int g = 1;   // modules (Mslmn); n_m is the per-module size
    int k = 1;   // tape depth (Urnn)
    Readout readout = Readout::FromMemory;
};

/// Trainable scalars including biases (one per h, per memory block, per y).
/// MS-LMN structural zeros are not counted.
long count_params(const ArchDesc& desc);
long count_params(const Model& model);

Eigen::Index output_size(const Model& model);
ArchKind arch_kind(const Model& model);

}  // namespace seqmem
