#pragma once

#include <cstddef>

namespace scar::kernels {

// Flat-buffer f32 kernels behind every dense inner loop in the library.
// Two implementations exist: a scalar reference and an AVX2 variant compiled
// in its own translation unit. active() picks one at startup based on CPUID;
// SCAR_KERNELS=scalar|avx2 overrides the choice. The two variants are
// equivalence-tested against each other (see tests/test_kernels.cpp).
struct Table {
  const char* name;

  void (*add)(const float* a, const float* b, float* out, size_t n);
  void (*sub)(const float* a, const float* b, float* out, size_t n);
  void (*mul)(const float* a, const float* b, float* out, size_t n);
  // acc += a * b elementwise
  void (*mul_acc)(const float* a, const float* b, float* acc, size_t n);
  void (*scale)(const float* a, float c, float* out, size_t n);
  // y += a * x
  void (*axpy)(float a, const float* x, float* y, size_t n);
  void (*relu)(const float* x, float* out, size_t n);
  // acc += g where x > 0
  void (*relu_grad_acc)(const float* x, const float* g, float* acc, size_t n);
  void (*clamp)(const float* x, float lo, float hi, float* out, size_t n);
  // elementwise bounds
  void (*clamp3)(const float* x, const float* lo, const float* hi, float* out, size_t n);
  // sgn with sgn(0) = 0
  void (*sign)(const float* x, float* out, size_t n);

  float (*reduce_sum)(const float* x, size_t n);
  float (*reduce_max)(const float* x, size_t n);
  float (*dot)(const float* a, const float* b, size_t n);

  // C[n x m] = A[n x k] * B[k x m]         (acc: += instead of =)
  void (*matmul_nn)(const float* a, const float* b, float* c, size_t n, size_t k, size_t m, bool acc);
  // C[n x m] = A[n x k] * B[m x k]^T
  void (*matmul_nt)(const float* a, const float* b, float* c, size_t n, size_t k, size_t m, bool acc);
  // C[n x m] = A[k x n]^T * B[k x m]
  void (*matmul_tn)(const float* a, const float* b, float* c, size_t n, size_t k, size_t m, bool acc);
};

const Table& scalar_table();

// Only valid to call through when avx2_available() is true.
const Table& avx2_table();
bool avx2_available();

// Table selected once per process (CPUID + optional SCAR_KERNELS override).
const Table& active();

}  // namespace scar::kernels
