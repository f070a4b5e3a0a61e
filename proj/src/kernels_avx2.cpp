#include "pct/kernels.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))

#include <immintrin.h>

#include <cmath>

// Elementwise kernels use separate mul/add so they round exactly like the
// scalar table; only the reductions (dot, csr_spmv) use FMA and a different
// summation order.

#define PCT_AVX2 __attribute__((target("avx2,fma")))

namespace pct::kernels {
namespace {

PCT_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

PCT_AVX2 double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4),
                           _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

PCT_AVX2 void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), t));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

PCT_AVX2 void axpby_avx2(double a, const double* x, double b, double* y,
                         std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    const __m256d u = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(t, u));
  }
  for (; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

PCT_AVX2 void csr_spmv_avx2(const std::int64_t* row_ptr,
                            const std::int32_t* col, const double* val,
                            const double* x, double* y, std::size_t rows,
                            double scale) {
  for (std::size_t r = 0; r < rows; ++r) {
    std::int64_t k = row_ptr[r];
    const std::int64_t end = row_ptr[r + 1];
    __m256d acc = _mm256_setzero_pd();
    for (; k + 4 <= end; k += 4) {
      const __m128i idx =
          _mm_loadu_si128(reinterpret_cast<const __m128i*>(col + k));
      const __m256d xv = _mm256_i32gather_pd(x, idx, 8);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(val + k), xv, acc);
    }
    double s = hsum(acc);
    for (; k < end; ++k) s += val[k] * x[col[k]];
    y[r] = scale * s;
  }
}

PCT_AVX2 void cmul_real_avx2(const double* w, double* z, std::size_t n,
                             double scale) {
  const __m256d vs = _mm256_set1_pd(scale);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const __m256d wv =
        _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(w + k)),
                              0b01010000);
    const __m256d f = _mm256_mul_pd(vs, wv);
    _mm256_storeu_pd(z + 2 * k, _mm256_mul_pd(_mm256_loadu_pd(z + 2 * k), f));
  }
  for (; k < n; ++k) {
    const double f = scale * w[k];
    z[2 * k] *= f;
    z[2 * k + 1] *= f;
  }
}

PCT_AVX2 void ball_project_avx2(double* gx, double* gy, std::size_t n,
                                double radius) {
  const __m256d vr = _mm256_set1_pd(radius);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(gx + i);
    const __m256d y = _mm256_loadu_pd(gy + i);
    const __m256d mag =
        _mm256_sqrt_pd(_mm256_add_pd(_mm256_mul_pd(x, x), _mm256_mul_pd(y, y)));
    const __m256d over = _mm256_cmp_pd(mag, vr, _CMP_GT_OQ);
    const __m256d f = _mm256_blendv_pd(one, _mm256_div_pd(vr, mag), over);
    _mm256_storeu_pd(gx + i, _mm256_blendv_pd(x, _mm256_mul_pd(x, f), over));
    _mm256_storeu_pd(gy + i, _mm256_blendv_pd(y, _mm256_mul_pd(y, f), over));
  }
  for (; i < n; ++i) {
    const double mag = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
    if (mag > radius) {
      const double f = radius / mag;
      gx[i] *= f;
      gy[i] *= f;
    }
  }
}

PCT_AVX2 inline void sub_rows(const double* a, const double* b, double* out,
                              std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

PCT_AVX2 void gradient_avx2(const double* u, double* gx, double* gy,
                            std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double* row = u + j * n;
    double* ox = gx + j * n;
    sub_rows(row + 1, row, ox, n - 1);
    ox[n - 1] = 0.0;
    double* oy = gy + j * n;
    if (j + 1 < n) {
      sub_rows(row + n, row, oy, n);
    } else {
      for (std::size_t i = 0; i < n; ++i) oy[i] = 0.0;
    }
  }
}

PCT_AVX2 void gradient_adjoint_avx2(const double* gx, const double* gy,
                                    double* u, std::size_t n) {
  if (n == 1) {
    u[0] = 0.0;
    return;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double* rx = gx + j * n;
    double* out = u + j * n;
    out[0] = -rx[0];
    if (n > 2) sub_rows(rx, rx + 1, out + 1, n - 2);
    out[n - 1] = rx[n - 2];
    const double* ry = gy + j * n;
    std::size_t i = 0;
    if (j == 0) {
      for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(out + i),
                                                _mm256_loadu_pd(ry + i)));
      for (; i < n; ++i) out[i] -= ry[i];
    } else if (j + 1 < n) {
      const double* prev = ry - n;
      for (; i + 4 <= n; i += 4) {
        const __m256d d =
            _mm256_sub_pd(_mm256_loadu_pd(prev + i), _mm256_loadu_pd(ry + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), d));
      }
      for (; i < n; ++i) out[i] += prev[i] - ry[i];
    } else {
      const double* prev = ry - n;
      for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i),
                                                _mm256_loadu_pd(prev + i)));
      for (; i < n; ++i) out[i] += prev[i];
    }
  }
}

const KernelTable kAvx2{
    "avx2",         dot_avx2,          axpy_avx2,
    axpby_avx2,     csr_spmv_avx2,     cmul_real_avx2,
    ball_project_avx2, gradient_avx2,  gradient_adjoint_avx2,
};

}  // namespace

const KernelTable* avx2_table() {
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return &kAvx2;
  return nullptr;
}

}  // namespace pct::kernels

#else

namespace pct::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace pct::kernels

#endif
