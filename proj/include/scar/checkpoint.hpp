#pragma once

#include <string>

#include "scar/model.hpp"

namespace scar {

// Checkpoint layout: magic line "SCARCKPT1", textual key=value header
// (layers, seed, epoch, method) terminated by "end", then little-endian f32
// parameter buffers in layer order (W0, b0, W1, b1, ...). Round-trips are
// bit-exact on the parameters.
struct Checkpoint {
  Classifier model;
  int epoch = 0;
  std::string method;
};

void save_checkpoint(const Classifier& model, const std::string& path, int epoch,
                     const std::string& method);

Checkpoint load_checkpoint(const std::string& path);

// Throws CheckpointError naming the first differing layer when the loaded
// model does not match the expected spec.
void require_spec(const Checkpoint& ckpt, const MlpSpec& expected);

}  // namespace scar
