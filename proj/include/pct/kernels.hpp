#pragma once

// Data-parallel inner loops used by the operators and the solver.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2/FMA variant. The active table is chosen once at startup from the
// CPU feature flags; PCT_SIMD=scalar in the environment forces the scalar
// table. Both tables are deterministic (fixed reduction order), but they
// do not round identically, so results are bit-reproducible only for a
// fixed table.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace pct::kernels {

struct KernelTable {
  std::string_view name;

  /// sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);

  /// y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);

  /// y = a * x + b * y
  void (*axpby)(double a, const double* x, double b, double* y, std::size_t n);

  /// CSR sparse matrix-vector product y[r] = scale * sum_k val[k] * x[col[k]].
  void (*csr_spmv)(const std::int64_t* row_ptr, const std::int32_t* col,
                   const double* val, const double* x, double* y,
                   std::size_t rows, double scale);

  /// Interleaved complex z[k] *= scale * w[k] for real weights w.
  void (*cmul_real)(const double* w, double* z, std::size_t n, double scale);

  /// Projects each 2-vector (gx[i], gy[i]) onto the disk of the given radius.
  void (*ball_project)(double* gx, double* gy, std::size_t n, double radius);

  /// Forward differences with Neumann boundary on an n x n row-major image.
  void (*gradient)(const double* u, double* gx, double* gy, std::size_t n);

  /// Adjoint of gradient (negative divergence); writes u.
  void (*gradient_adjoint)(const double* gx, const double* gy, double* u,
                           std::size_t n);
};

const KernelTable& scalar_table();

/// nullptr when the binary or CPU has no AVX2/FMA support.
const KernelTable* avx2_table();

/// Table selected at first use; stable for the life of the process.
const KernelTable& active();

// Span conveniences over the active table.

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}

inline double sq_norm(std::span<const double> x) {
  return active().dot(x.data(), x.data(), x.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}

inline void axpby(double a, std::span<const double> x, double b,
                  std::span<double> y) {
  active().axpby(a, x.data(), b, y.data(), x.size());
}

}  // namespace pct::kernels
