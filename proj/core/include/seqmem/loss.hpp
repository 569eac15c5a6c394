#pragma once

#include <vector>

#include "seqmem/dataset.hpp"
#include "seqmem/matrix.hpp"

namespace seqmem {

enum class LossKind { Mse, Nmse, Bce, CrossEntropy };

/// Per-step losses over one sequence: predictions and targets are l x N_y.
/// Nmse divides mean squared error by the population variance of the
/// targets; Bce expects predictions in (0,1). CrossEntropy is evaluated at
/// the final timestep against a class label and uses the label overload.
double loss(LossKind kind, const Matrix& predictions, const Matrix& targets);

/// Cross-entropy of the final-step logits against a class label.
double loss(LossKind kind, const Vector& final_logits, int label);

/// Mean over frames of TP / (TP + FP + FN), with empty frames
/// (TP = FP = FN = 0) scoring 1. Rows are frames, columns notes.
double frame_accuracy(const Matrix& pred_binary, const Matrix& target_binary);

/// Population variance over every element of the per-step targets.
double target_variance(const std::vector<const Sequence*>& batch);

}  // namespace seqmem
