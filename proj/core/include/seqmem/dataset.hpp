#pragma once

#include <vector>

#include "seqmem/matrix.hpp"

namespace seqmem {

enum class Split { Train, Val, Test };

/// One variable-length sequence. Inputs are l x N_x (N_x may be zero for
/// input-free tasks). A sequence carries either per-step targets (l x N_y)
/// or a single class label, never both.
struct Sequence {
    Matrix inputs;
    Matrix targets;   // 0 x 0 when the sequence is labeled
    int label = -1;   // -1 when targets are per-step
    Split split = Split::Train;

    bool has_label() const { return label >= 0; }
    Eigen::Index length() const { return inputs.rows(); }
};

struct SequenceDataset {
    std::vector<Sequence> sequences;

    Eigen::Index input_size() const {
        return sequences.empty() ? 0 : sequences.front().inputs.cols();
    }
    Eigen::Index max_length() const {
        Eigen::Index l = 0;
        for (const auto& s : sequences) l = std::max(l, s.length());
        return l;
    }
    std::vector<const Sequence*> split(Split which) const {
        std::vector<const Sequence*> out;
        for (const auto& s : sequences)
            if (s.split == which) out.push_back(&s);
        return out;
    }
};

}  // namespace seqmem
