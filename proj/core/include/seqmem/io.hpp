#pragma once

#include <string>

#include "seqmem/dataset.hpp"
#include "seqmem/model.hpp"

namespace seqmem {

/// Line-delimited JSON, one sequence per line: {"x": [[...]], "y": [[...]]}
/// or {"x": [[...]], "label": n}. Exactly one of "y"/"label" per record.
/// Malformed lines raise errors naming the line number.
SequenceDataset load_sequences(const std::string& path);
void save_sequences(const SequenceDataset& dataset, const std::string& path);

/// JSON checkpoint with shape-tagged tensors. Doubles are serialized with a
/// shortest round-trip decimal form, so load(save(m)) is bit-exact. Loading
/// validates shapes and every parameter-type invariant, including the
/// MS-LMN structural zeros.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

std::string checkpoint_to_json(const Model& model);
Model checkpoint_from_json(const std::string& text);

}  // namespace seqmem
