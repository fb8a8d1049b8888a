#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scar/array.hpp"

namespace scar {

// Feature matrix in [0,1]^d with optional class labels.
struct Dataset {
  Array features;           // [n x d]
  std::vector<int> labels;  // empty when unlabeled
  int num_classes = 0;

  bool has_labels() const { return !labels.empty(); }
  size_t size() const { return static_cast<size_t>(features.rows()); }
  int64_t dim() const { return features.cols(); }
};

// Labeled/unlabeled partition. The unlabeled half keeps its true labels
// withheld here, visible only to the sensitivity/specificity evaluation —
// training code receives `unlabeled`, which carries no labels.
struct SemiSplit {
  Dataset labeled;
  Dataset unlabeled;
  std::vector<int> withheld_labels;
  std::vector<size_t> labeled_indices;
  std::vector<size_t> unlabeled_indices;
  uint64_t seed = 0;
};

struct AugmentationSpec {
  float weak_noise = 0.02f;
  float strong_noise = 0.10f;
  float strong_dropout = 0.10f;

  void validate() const;
};

enum class AugmentMode { Weak, Strong };

// Two interleaving half-circles with Gaussian noise, min-max normalized to
// [0,1]^2. Class 0: (cos t, sin t); class 1: (1 - cos t, 1 - sin t - 1/2),
// t evenly spaced over [0, pi] per class. Balanced labels, n/2 per class.
Dataset gen_two_moons(size_t n, float noise_sigma, uint64_t seed);

// Isotropic Gaussian blobs around `classes` centers on a circle.
Dataset gen_blobs(size_t n, int classes, float spread, uint64_t seed);

// Per-feature min-max scaling to [0,1]; constant features map to 0.
Array normalize_unit_interval(const Array& features);

// Stratified labeled subset of size n_l; the rest becomes unlabeled with
// labels withheld. Deterministic per seed.
SemiSplit split_semi(const Dataset& data, size_t n_l, uint64_t seed);

// Weak: additive uniform noise. Strong: larger noise plus per-coordinate
// dropout. Output clipped to [0,1]. Deterministic per (seed, mode, row).
Array augment(const Array& x, const AugmentationSpec& spec, AugmentMode mode, uint64_t seed);

// CSV with header "f0,...,f{d-1}[,label]". Features are normalized on load.
Dataset load_csv(const std::string& path);

}  // namespace scar
