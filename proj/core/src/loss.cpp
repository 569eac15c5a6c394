#include "seqmem/loss.hpp"

#include <cmath>

namespace seqmem {

namespace {
constexpr double kProbClamp = 1e-12;
}

double loss(LossKind kind, const Matrix& predictions, const Matrix& targets) {
    require(predictions.rows() == targets.rows() && predictions.cols() == targets.cols(),
            "loss: shape mismatch");
    const double n = static_cast<double>(predictions.size());
    switch (kind) {
        case LossKind::Mse:
            return (predictions - targets).squaredNorm() / n;
        case LossKind::Nmse: {
            const double mean = targets.mean();
            const double var = (targets.array() - mean).square().sum() / n;
            require(var > 0.0, "loss: zero target variance for nmse");
            return (predictions - targets).squaredNorm() / n / var;
        }
        case LossKind::Bce: {
            const auto p = predictions.array().min(1.0 - kProbClamp).max(kProbClamp);
            const auto t = targets.array();
            return -(t * p.log() + (1.0 - t) * (1.0 - p).log()).sum() / n;
        }
        case LossKind::CrossEntropy:
            throw std::invalid_argument("loss: cross_entropy needs a class label");
    }
    return 0.0;
}

double loss(LossKind kind, const Vector& final_logits, int label) {
    require(kind == LossKind::CrossEntropy, "loss: label overload is cross_entropy only");
    require(label >= 0 && label < final_logits.size(), "loss: label out of range");
    const double zmax = final_logits.maxCoeff();
    const double lse = zmax + std::log((final_logits.array() - zmax).exp().sum());
    return lse - final_logits(label);
}

double frame_accuracy(const Matrix& pred_binary, const Matrix& target_binary) {
    require(pred_binary.rows() == target_binary.rows() &&
                pred_binary.cols() == target_binary.cols(),
            "frame_accuracy: shape mismatch");
    if (pred_binary.rows() == 0) return 1.0;
    double acc = 0.0;
    for (Eigen::Index t = 0; t < pred_binary.rows(); ++t) {
        long tp = 0, fp = 0, fn = 0;
        for (Eigen::Index j = 0; j < pred_binary.cols(); ++j) {
            const bool p = pred_binary(t, j) > 0.5;
            const bool y = target_binary(t, j) > 0.5;
            tp += p && y;
            fp += p && !y;
            fn += !p && y;
        }
        acc += (tp + fp + fn == 0) ? 1.0
                                   : static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    }
    return acc / static_cast<double>(pred_binary.rows());
}

double target_variance(const std::vector<const Sequence*>& batch) {
    double sum = 0.0, sq = 0.0;
    long n = 0;
    for (const auto* s : batch) {
        sum += s->targets.sum();
        sq += s->targets.squaredNorm();
        n += s->targets.size();
    }
    if (n == 0) return 0.0;
    const double mean = sum / static_cast<double>(n);
    return sq / static_cast<double>(n) - mean * mean;
}

}  // namespace seqmem
