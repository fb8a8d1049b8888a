#include "scar/kernels.hpp"

#include <algorithm>

namespace scar::kernels {
namespace {

void add_scalar(const float* a, const float* b, float* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_scalar(const float* a, const float* b, float* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_scalar(const float* a, const float* b, float* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc_scalar(const float* a, const float* b, float* acc, size_t n) {
  for (size_t i = 0; i < n; ++i) acc[i] += a[i] * b[i];
}

void scale_scalar(const float* a, float c, float* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = c * a[i];
}

void axpy_scalar(float a, const float* x, float* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void relu_scalar(const float* x, float* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_grad_acc_scalar(const float* x, const float* g, float* acc, size_t n) {
  for (size_t i = 0; i < n; ++i)
    if (x[i] > 0.0f) acc[i] += g[i];
}

void clamp_scalar(const float* x, float lo, float hi, float* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = std::min(std::max(x[i], lo), hi);
}

void clamp3_scalar(const float* x, const float* lo, const float* hi, float* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = std::min(std::max(x[i], lo[i]), hi[i]);
}

void sign_scalar(const float* x, float* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0f ? 1.0f : (x[i] < 0.0f ? -1.0f : 0.0f);
}

float reduce_sum_scalar(const float* x, size_t n) {
  float s = 0.0f;
  for (size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

float reduce_max_scalar(const float* x, size_t n) {
  float m = x[0];
  for (size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

float dot_scalar(const float* a, const float* b, size_t n) {
  float s = 0.0f;
  for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void matmul_nn_scalar(const float* a, const float* b, float* c, size_t n, size_t k, size_t m, bool acc) {
  for (size_t i = 0; i < n; ++i) {
    float* crow = c + i * m;
    if (!acc) std::fill(crow, crow + m, 0.0f);
    for (size_t p = 0; p < k; ++p) {
      const float av = a[i * k + p];
      const float* brow = b + p * m;
      for (size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt_scalar(const float* a, const float* b, float* c, size_t n, size_t k, size_t m, bool acc) {
  for (size_t i = 0; i < n; ++i) {
    const float* arow = a + i * k;
    for (size_t j = 0; j < m; ++j) {
      float s = 0.0f;
      const float* brow = b + j * k;
      for (size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      if (acc)
        c[i * m + j] += s;
      else
        c[i * m + j] = s;
    }
  }
}

void matmul_tn_scalar(const float* a, const float* b, float* c, size_t n, size_t k, size_t m, bool acc) {
  if (!acc) std::fill(c, c + n * m, 0.0f);
  for (size_t p = 0; p < k; ++p) {
    const float* brow = b + p * m;
    for (size_t i = 0; i < n; ++i) {
      const float av = a[p * n + i];
      float* crow = c + i * m;
      for (size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

const Table& scalar_table() {
  static const Table table = {
      "scalar",
      add_scalar,
      sub_scalar,
      mul_scalar,
      mul_acc_scalar,
      scale_scalar,
      axpy_scalar,
      relu_scalar,
      relu_grad_acc_scalar,
      clamp_scalar,
      clamp3_scalar,
      sign_scalar,
      reduce_sum_scalar,
      reduce_max_scalar,
      dot_scalar,
      matmul_nn_scalar,
      matmul_nt_scalar,
      matmul_tn_scalar,
  };
  return table;
}

}  // namespace scar::kernels
