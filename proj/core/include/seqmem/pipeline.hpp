#pragma once

#include <vector>

#include "seqmem/laes.hpp"
#include "seqmem/train.hpp"

namespace seqmem {

/// Diagnostics from the memory initialization step.
struct LmnInitReport {
    double laes_reconstruction_error = 0.0;  // on the hidden traces
    double urnn_train_loss = 0.0;
    double urnn_val_loss = 0.0;
    double init_train_loss = 0.0;  // initialized LMN, before finetuning
    double init_val_loss = 0.0;
};

/// Hidden-state sequences of the model over the given inputs.
std::vector<Matrix> collect_hidden_traces(const Model& model,
                                          const std::vector<const Sequence*>& data);

/// Builds an LMN approximating a trained tape-delay model: fits a memory-
/// size-n_m linear autoencoder on the hidden traces, then wires the decoder
/// into the cross-component weights (w_hm = A, w_mm = B, w_mh and the
/// memory readout through the stacked decoder).
LmnParams init_from_urnn(const UrnnParams& urnn,
                         const std::vector<const Sequence*>& data, int n_m);

struct LmnTrainResult {
    LmnParams model;
    LmnInitReport report;
    std::vector<EpochRecord> urnn_history;
    std::vector<EpochRecord> finetune_history;
};

/// Three-phase training: fit a tape-delay model, build the initialized LMN
/// from it, then finetune end-to-end.
LmnTrainResult lmn_train(const std::vector<const Sequence*>& train_set,
                         const std::vector<const Sequence*>& val_set,
                         int n_x, int n_y, int n_h, int n_m, int k,
                         const TrainConfig& config, OutputAct out_act);

/// Least-squares readout (with bias) from per-step memory states, via
/// normal equations with Tikhonov damping 1e-8. Rows of traces/targets are
/// aligned timesteps.
std::pair<Matrix, Vector> fit_linear_readout(const Matrix& memory_traces,
                                             const Matrix& targets);

/// Grows the model by one module at clock rate 2^g: fits a linear
/// autoencoder on the hidden traces subsampled at t mod 2^g = 0, installs
/// its parameters as the new w_hm / diagonal w_mm blocks, zeroes the other
/// new connections, and refits the full readout by least squares.
/// Pre-existing parameter blocks are copied unchanged.
MslmnParams add_module(const MslmnParams& model,
                       const std::vector<const Sequence*>& data);

struct MslmnTrainResult {
    MslmnParams model;
    std::vector<std::vector<EpochRecord>> stage_histories;  // one per stage
};

struct IncrementalSchedule {
    int target_modules = 1;   // g
    int module_size = 0;      // N_m per module
    int epochs_per_stage = 0; // fixed finetune budget for intermediate stages
};

/// Incremental training: a single-module model is trained, then module
/// addition and finetuning alternate until g modules exist; intermediate
/// stages use a fixed epoch budget, the final stage early-stops.
MslmnTrainResult mslmn_train(const std::vector<const Sequence*>& train_set,
                             const std::vector<const Sequence*>& val_set,
                             int n_x, int n_y, int n_h,
                             const IncrementalSchedule& schedule,
                             const TrainConfig& config, OutputAct out_act);

}  // namespace seqmem
