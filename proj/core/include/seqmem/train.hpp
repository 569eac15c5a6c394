#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "seqmem/dataset.hpp"
#include "seqmem/loss.hpp"
#include "seqmem/model.hpp"

namespace seqmem {

struct TrainConfig {
    double learning_rate = 1e-3;
    double l2_decay = 0.0;
    int max_epochs = 100;
    int patience = 10;
    int batch_size = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    LossKind loss_kind = LossKind::Mse;
    double input_noise_std = 0.0;

    void validate() const;
};

/// Flat view over one parameter tensor.
struct TensorView {
    double* data = nullptr;
    Eigen::Index size = 0;
};

/// Stable enumeration of every trainable tensor of a model. Gradients,
/// optimizer state and checkpoints all use this order.
std::vector<TensorView> param_tensors(Model& model);
Eigen::Index param_scalar_count(const Model& model);

/// A model-shaped bundle of gradients: same variant, same tensor shapes.
using GradientSet = Model;

Model zeros_like(const Model& model);
/// 1 at trainable positions, 0 at MS-LMN structural zeros.
Model structure_mask(const Model& model);

struct AdamState {
    Vector m, v;  // first/second moment, flat over param_tensors order
    long step = 0;

    static AdamState init(const Model& model);
};

/// Batch loss (mean over sequences) and exact full-unroll reverse-mode
/// gradients. Gradients through held MS-LMN states flow as identity and
/// structural zeros receive zero gradient. Throws on non-finite loss.
std::pair<double, GradientSet> bptt_gradients(const Model& model,
                                              const std::vector<const Sequence*>& batch,
                                              LossKind kind);

/// Forward-only batch loss (the finite-difference side of the grad check).
double batch_loss(const Model& model, const std::vector<const Sequence*>& batch,
                  LossKind kind);

/// Standard Adam with bias correction; L2 decay is added to the gradients
/// before the update and MS-LMN structural zeros are re-zeroed after it.
void adam_step(AdamState& state, Model& model, const GradientSet& grads,
               const TrainConfig& config);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    Model model;  // best-validation snapshot
    std::vector<EpochRecord> history;
    double best_val = 0.0;
    int best_epoch = -1;
    bool diverged = false;
};

/// Shuffled minibatch Adam with early stopping: stops once the validation
/// loss has failed to improve for more than `patience` consecutive epochs
/// and returns the best-validation snapshot. Gaussian input noise, when
/// configured, perturbs training inputs only. Deterministic per seed.
TrainResult train(Model model, const std::vector<const Sequence*>& train_set,
                  const std::vector<const Sequence*>& val_set, const TrainConfig& config);

/// Central finite differences over every trainable scalar; returns the max
/// relative error |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).
double grad_check(const Model& model, const std::vector<const Sequence*>& batch,
                  LossKind kind, double epsilon = 1e-5);

/// Random initialization, uniform in +-1/sqrt(fan_in) per tensor.
Model random_model(const ArchDesc& desc, std::mt19937_64& rng,
                   OutputAct out_act = OutputAct::Identity);

// --- evaluation helpers ---

/// Predictions for one sequence stacked as l x N_y.
Matrix predict(const Model& model, const Matrix& inputs);
/// MSE over all steps of all sequences divided by target variance.
double dataset_nmse(const Model& model, const std::vector<const Sequence*>& data);
/// Frame accuracy of thresholded (0.5) predictions over all sequences.
double dataset_frame_accuracy(const Model& model, const std::vector<const Sequence*>& data);

}  // namespace seqmem
