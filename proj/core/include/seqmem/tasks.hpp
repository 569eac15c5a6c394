#pragma once

#include <cstdint>

#include "seqmem/dataset.hpp"

namespace seqmem {

/// Input-free signal generation task: the target is a seeded sum of five
/// incommensurate sinusoids plus low-amplitude noise, rescaled to [-1, 1].
/// Inputs have zero width; the model runs on biases and recurrence alone.
SequenceDataset gen_sequence_task(std::uint64_t seed, int length = 300);

/// Synthetic piano-roll next-step prediction: binary sequences built from
/// repeated seeded motifs, targets are the inputs shifted one step ahead.
SequenceDataset gen_pianoroll_task(std::uint64_t seed, int n_sequences, int length,
                                   int n_notes = 88);

}  // namespace seqmem
