#include "scar/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#define SCAR_HAVE_AVX2_BUILD 1
#include <immintrin.h>
#else
#define SCAR_HAVE_AVX2_BUILD 0
#endif

#include <algorithm>

namespace scar::kernels {

#if SCAR_HAVE_AVX2_BUILD

namespace {

inline float hsum256(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 0x55));
  return _mm_cvtss_f32(lo);
}

inline float hmax256(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_max_ps(lo, hi);
  lo = _mm_max_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_max_ss(lo, _mm_shuffle_ps(lo, lo, 0x55));
  return _mm_cvtss_f32(lo);
}

void add_avx2(const float* a, const float* b, float* out, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_avx2(const float* a, const float* b, float* out, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_avx2(const float* a, const float* b, float* out, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc_avx2(const float* a, const float* b, float* acc, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 av = _mm256_loadu_ps(acc + i);
    av = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), av);
    _mm256_storeu_ps(acc + i, av);
  }
  for (; i < n; ++i) acc[i] += a[i] * b[i];
}

void scale_avx2(const float* a, float c, float* out, size_t n) {
  const __m256 cv = _mm256_set1_ps(c);
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_mul_ps(cv, _mm256_loadu_ps(a + i)));
  for (; i < n; ++i) out[i] = c * a[i];
}

void axpy_avx2(float a, const float* x, float* y, size_t n) {
  const __m256 av = _mm256_set1_ps(a);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 yv = _mm256_loadu_ps(y + i);
    yv = _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), yv);
    _mm256_storeu_ps(y + i, yv);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void relu_avx2(const float* x, float* out, size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_grad_acc_avx2(const float* x, const float* g, float* acc, size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
    __m256 gv = _mm256_and_ps(mask, _mm256_loadu_ps(g + i));
    _mm256_storeu_ps(acc + i, _mm256_add_ps(_mm256_loadu_ps(acc + i), gv));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0f) acc[i] += g[i];
}

void clamp_avx2(const float* x, float lo, float hi, float* out, size_t n) {
  const __m256 lov = _mm256_set1_ps(lo);
  const __m256 hiv = _mm256_set1_ps(hi);
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_min_ps(_mm256_max_ps(_mm256_loadu_ps(x + i), lov), hiv));
  for (; i < n; ++i) out[i] = std::min(std::max(x[i], lo), hi);
}

void clamp3_avx2(const float* x, const float* lo, const float* hi, float* out, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 v = _mm256_max_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(lo + i));
    v = _mm256_min_ps(v, _mm256_loadu_ps(hi + i));
    _mm256_storeu_ps(out + i, v);
  }
  for (; i < n; ++i) out[i] = std::min(std::max(x[i], lo[i]), hi[i]);
}

void sign_avx2(const float* x, float* out, size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  const __m256 one = _mm256_set1_ps(1.0f);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 v = _mm256_loadu_ps(x + i);
    __m256 pos = _mm256_and_ps(_mm256_cmp_ps(v, zero, _CMP_GT_OQ), one);
    __m256 neg = _mm256_and_ps(_mm256_cmp_ps(v, zero, _CMP_LT_OQ), one);
    _mm256_storeu_ps(out + i, _mm256_sub_ps(pos, neg));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0f ? 1.0f : (x[i] < 0.0f ? -1.0f : 0.0f);
}

float reduce_sum_avx2(const float* x, size_t n) {
  __m256 acc = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
  float s = hsum256(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

float reduce_max_avx2(const float* x, size_t n) {
  if (n < 8) {
    float m = x[0];
    for (size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
    return m;
  }
  __m256 acc = _mm256_loadu_ps(x);
  size_t i = 8;
  for (; i + 8 <= n; i += 8) acc = _mm256_max_ps(acc, _mm256_loadu_ps(x + i));
  float m = hmax256(acc);
  for (; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

float dot_avx2(const float* a, const float* b, size_t n) {
  __m256 acc = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
  float s = hsum256(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void matmul_nn_avx2(const float* a, const float* b, float* c, size_t n, size_t k, size_t m, bool acc) {
  for (size_t i = 0; i < n; ++i) {
    float* crow = c + i * m;
    if (!acc) std::fill(crow, crow + m, 0.0f);
    for (size_t p = 0; p < k; ++p) {
      const float av = a[i * k + p];
      const __m256 avv = _mm256_set1_ps(av);
      const float* brow = b + p * m;
      size_t j = 0;
      for (; j + 8 <= m; j += 8) {
        __m256 cv = _mm256_loadu_ps(crow + j);
        cv = _mm256_fmadd_ps(avv, _mm256_loadu_ps(brow + j), cv);
        _mm256_storeu_ps(crow + j, cv);
      }
      for (; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt_avx2(const float* a, const float* b, float* c, size_t n, size_t k, size_t m, bool acc) {
  for (size_t i = 0; i < n; ++i) {
    const float* arow = a + i * k;
    for (size_t j = 0; j < m; ++j) {
      const float s = dot_avx2(arow, b + j * k, k);
      if (acc)
        c[i * m + j] += s;
      else
        c[i * m + j] = s;
    }
  }
}

void matmul_tn_avx2(const float* a, const float* b, float* c, size_t n, size_t k, size_t m, bool acc) {
  if (!acc) std::fill(c, c + n * m, 0.0f);
  for (size_t p = 0; p < k; ++p) {
    const float* brow = b + p * m;
    for (size_t i = 0; i < n; ++i) {
      const float av = a[p * n + i];
      const __m256 avv = _mm256_set1_ps(av);
      float* crow = c + i * m;
      size_t j = 0;
      for (; j + 8 <= m; j += 8) {
        __m256 cv = _mm256_loadu_ps(crow + j);
        cv = _mm256_fmadd_ps(avv, _mm256_loadu_ps(brow + j), cv);
        _mm256_storeu_ps(crow + j, cv);
      }
      for (; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

const Table& avx2_table() {
  static const Table table = {
      "avx2",
      add_avx2,
      sub_avx2,
      mul_avx2,
      mul_acc_avx2,
      scale_avx2,
      axpy_avx2,
      relu_avx2,
      relu_grad_acc_avx2,
      clamp_avx2,
      clamp3_avx2,
      sign_avx2,
      reduce_sum_avx2,
      reduce_max_avx2,
      dot_avx2,
      matmul_nn_avx2,
      matmul_nt_avx2,
      matmul_tn_avx2,
  };
  return table;
}

#else  // !SCAR_HAVE_AVX2_BUILD

// Toolchain or target without AVX2: the dispatcher never routes here
// because avx2_available() is false.
const Table& avx2_table() { return scalar_table(); }

#endif

}  // namespace scar::kernels
