#include "scar/array.hpp"

#include <cmath>
#include <sstream>

#include "scar/errors.hpp"
#include "scar/kernels.hpp"

namespace scar {

namespace {

size_t shape_numel(const std::vector<int64_t>& shape) {
  size_t n = 1;
  for (int64_t d : shape) {
    if (d <= 0) throw ShapeError("array dimensions must be positive, got " + std::to_string(d));
    n *= static_cast<size_t>(d);
  }
  return n;
}

}  // namespace

Array::Array(std::vector<int64_t> shape_, float fill)
    : shape(std::move(shape_)), data(shape_numel(shape), fill) {}

Array::Array(std::vector<int64_t> shape_, std::vector<float> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  if (shape_numel(shape) != data.size())
    throw ShapeError("shape " + shape_str() + " does not match buffer of " +
                     std::to_string(data.size()) + " floats");
}

int64_t Array::rows() const {
  if (shape.size() != 2) throw ShapeError("rows() on non-2D array " + shape_str());
  return shape[0];
}

int64_t Array::cols() const {
  if (shape.size() != 2) throw ShapeError("cols() on non-2D array " + shape_str());
  return shape[1];
}

float& Array::at(int64_t r, int64_t c) { return data[static_cast<size_t>(r * cols() + c)]; }
float Array::at(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * cols() + c)]; }

float Array::scalar_value() const {
  if (numel() != 1) throw ShapeError("scalar_value() on array " + shape_str());
  return data[0];
}

std::string Array::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

void Array::check_finite(const char* context) const {
  for (float v : data)
    if (!std::isfinite(v))
      throw ValueError(std::string("non-finite value in ") + context);
}

namespace {

Array binary_same_shape(const Array& a, const Array& b, const char* what,
                        void (*fn)(const float*, const float*, float*, size_t)) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  Array out(a.shape);
  fn(a.data.data(), b.data.data(), out.data.data(), a.numel());
  return out;
}

}  // namespace

Array add(const Array& a, const Array& b) { return binary_same_shape(a, b, "add", kernels::active().add); }
Array sub(const Array& a, const Array& b) { return binary_same_shape(a, b, "sub", kernels::active().sub); }
Array mul(const Array& a, const Array& b) { return binary_same_shape(a, b, "mul", kernels::active().mul); }

Array scale(const Array& a, float c) {
  Array out(a.shape);
  kernels::active().scale(a.data.data(), c, out.data.data(), a.numel());
  return out;
}

Array relu(const Array& a) {
  Array out(a.shape);
  kernels::active().relu(a.data.data(), out.data.data(), a.numel());
  return out;
}

Array sign(const Array& a) {
  Array out(a.shape);
  kernels::active().sign(a.data.data(), out.data.data(), a.numel());
  return out;
}

Array clamp(const Array& a, float lo, float hi) {
  Array out(a.shape);
  kernels::active().clamp(a.data.data(), lo, hi, out.data.data(), a.numel());
  return out;
}

Array matmul(const Array& a, const Array& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2)
    throw ShapeError("matmul expects 2D arrays, got " + a.shape_str() + " and " + b.shape_str());
  if (a.cols() != b.rows())
    throw ShapeError("matmul inner dimension mismatch: " + a.shape_str() + " * " + b.shape_str());
  Array out({a.rows(), b.cols()});
  kernels::active().matmul_nn(a.data.data(), b.data.data(), out.data.data(),
                              static_cast<size_t>(a.rows()), static_cast<size_t>(a.cols()),
                              static_cast<size_t>(b.cols()), false);
  return out;
}

Array softmax_rows(const Array& logits) {
  if (logits.shape.size() != 2)
    throw ShapeError("softmax expects a 2D array, got " + logits.shape_str());
  const int64_t n = logits.rows(), c = logits.cols();
  if (c < 2) throw ShapeError("softmax needs at least 2 classes, got " + std::to_string(c));
  Array out(logits.shape);
  for (int64_t i = 0; i < n; ++i) {
    const float* z = logits.data.data() + i * c;
    float* p = out.data.data() + i * c;
    float m = z[0];
    for (int64_t j = 1; j < c; ++j) m = std::max(m, z[j]);
    float s = 0.0f;
    for (int64_t j = 0; j < c; ++j) {
      p[j] = std::exp(z[j] - m);
      s += p[j];
    }
    const float inv = 1.0f / s;
    for (int64_t j = 0; j < c; ++j) p[j] *= inv;
  }
  return out;
}

std::vector<int> argmax_rows(const Array& m) {
  const int64_t n = m.rows(), c = m.cols();
  std::vector<int> out(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    const float* row = m.data.data() + i * c;
    int best = 0;
    for (int64_t j = 1; j < c; ++j)
      if (row[j] > row[best]) best = static_cast<int>(j);
    out[static_cast<size_t>(i)] = best;
  }
  return out;
}

Array one_hot(std::span<const int> labels, int num_classes) {
  Array out({static_cast<int64_t>(labels.size()), num_classes});
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw ValueError("label " + std::to_string(labels[i]) + " out of range for " +
                       std::to_string(num_classes) + " classes");
    out.data[i * static_cast<size_t>(num_classes) + static_cast<size_t>(labels[i])] = 1.0f;
  }
  return out;
}

Array extract_row(const Array& m, int64_t row) {
  const int64_t c = m.cols();
  Array out({1, c});
  for (int64_t j = 0; j < c; ++j) out.data[static_cast<size_t>(j)] = m.at(row, j);
  return out;
}

Array take_rows(const Array& m, std::span<const size_t> indices) {
  const int64_t c = m.cols();
  Array out({static_cast<int64_t>(indices.size()), c});
  for (size_t i = 0; i < indices.size(); ++i)
    for (int64_t j = 0; j < c; ++j)
      out.data[i * static_cast<size_t>(c) + static_cast<size_t>(j)] =
          m.at(static_cast<int64_t>(indices[i]), j);
  return out;
}

Array concat_rows(const Array& a, const Array& b) {
  if (a.cols() != b.cols())
    throw ShapeError("concat_rows: column mismatch " + a.shape_str() + " vs " + b.shape_str());
  Array out({a.rows() + b.rows(), a.cols()});
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
  return out;
}

}  // namespace scar
