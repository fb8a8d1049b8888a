#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace scar {

// Dense row-major f32 array. Rank 0 (scalar), 1, or 2 in practice.
struct Array {
  std::vector<int64_t> shape;
  std::vector<float> data;

  Array() = default;
  explicit Array(std::vector<int64_t> shape_, float fill = 0.0f);
  Array(std::vector<int64_t> shape_, std::vector<float> data_);

  static Array scalar(float v) { return Array({}, {v}); }

  size_t numel() const { return data.size(); }
  bool is_scalar() const { return shape.empty(); }
  int64_t rows() const;
  int64_t cols() const;

  float& at(int64_t r, int64_t c);
  float at(int64_t r, int64_t c) const;
  float scalar_value() const;

  std::string shape_str() const;
  bool same_shape(const Array& other) const { return shape == other.shape; }

  // Throws ValueError if any entry is NaN/Inf. Used on debug/validation paths.
  void check_finite(const char* context) const;
};

// Non-differentiable array helpers (forward-only paths, attacks, metrics).
Array add(const Array& a, const Array& b);
Array sub(const Array& a, const Array& b);
Array mul(const Array& a, const Array& b);
Array scale(const Array& a, float c);
Array relu(const Array& a);
Array sign(const Array& a);
Array clamp(const Array& a, float lo, float hi);
Array matmul(const Array& a, const Array& b);

// Rowwise softmax of an [n x C] matrix, stabilized by row-max subtraction.
Array softmax_rows(const Array& logits);

// Argmax per row, ties broken by lowest index.
std::vector<int> argmax_rows(const Array& m);

Array one_hot(std::span<const int> labels, int num_classes);

Array extract_row(const Array& m, int64_t row);
Array take_rows(const Array& m, std::span<const size_t> indices);
Array concat_rows(const Array& a, const Array& b);

}  // namespace scar
