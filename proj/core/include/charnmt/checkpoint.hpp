#pragma once

#include <string>

#include "charnmt/model.hpp"
#include "charnmt/training.hpp"

namespace charnmt {

// Versioned binary container: magic, format version, config echo,
// vocabulary dumps, named parameter tensors (shape + row-major doubles),
// Adam state, epoch/step counters. All integers and doubles are little
// endian; save -> load -> save is byte identical.
struct Checkpoint {
  Model model;
  AdamState adam;
  TrainConfig train;
  int epochs_done = 0;
};

void save_checkpoint(const std::string& path, const Model& model, const AdamState& adam,
                     const TrainConfig& train, int epochs_done);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace charnmt
