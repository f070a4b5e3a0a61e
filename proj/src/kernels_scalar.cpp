#include "pct/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <string_view>

namespace pct::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpby_scalar(double a, const double* x, double b, double* y,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void csr_spmv_scalar(const std::int64_t* row_ptr, const std::int32_t* col,
                     const double* val, const double* x, double* y,
                     std::size_t rows, double scale) {
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
      s += val[k] * x[col[k]];
    y[r] = scale * s;
  }
}

void cmul_real_scalar(const double* w, double* z, std::size_t n,
                      double scale) {
  for (std::size_t k = 0; k < n; ++k) {
    const double f = scale * w[k];
    z[2 * k] *= f;
    z[2 * k + 1] *= f;
  }
}

void ball_project_scalar(double* gx, double* gy, std::size_t n,
                         double radius) {
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
    if (mag > radius) {
      const double f = radius / mag;
      gx[i] *= f;
      gy[i] *= f;
    }
  }
}

void gradient_scalar(const double* u, double* gx, double* gy, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double* row = u + j * n;
    double* ox = gx + j * n;
    for (std::size_t i = 0; i + 1 < n; ++i) ox[i] = row[i + 1] - row[i];
    ox[n - 1] = 0.0;
    double* oy = gy + j * n;
    if (j + 1 < n) {
      const double* next = row + n;
      for (std::size_t i = 0; i < n; ++i) oy[i] = next[i] - row[i];
    } else {
      for (std::size_t i = 0; i < n; ++i) oy[i] = 0.0;
    }
  }
}

void gradient_adjoint_scalar(const double* gx, const double* gy, double* u,
                             std::size_t n) {
  if (n == 1) {
    u[0] = 0.0;
    return;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double* rx = gx + j * n;
    double* out = u + j * n;
    out[0] = -rx[0];
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = rx[i - 1] - rx[i];
    out[n - 1] = rx[n - 2];
    const double* ry = gy + j * n;
    if (j == 0) {
      for (std::size_t i = 0; i < n; ++i) out[i] -= ry[i];
    } else if (j + 1 < n) {
      const double* prev = ry - n;
      for (std::size_t i = 0; i < n; ++i) out[i] += prev[i] - ry[i];
    } else {
      const double* prev = ry - n;
      for (std::size_t i = 0; i < n; ++i) out[i] += prev[i];
    }
  }
}

const KernelTable kScalar{
    "scalar",       dot_scalar,          axpy_scalar,
    axpby_scalar,   csr_spmv_scalar,     cmul_real_scalar,
    ball_project_scalar, gradient_scalar, gradient_adjoint_scalar,
};

const KernelTable& select_table() {
  if (const char* env = std::getenv("PCT_SIMD");
      env && std::string_view(env) == "scalar")
    return kScalar;
  if (const KernelTable* t = avx2_table()) return *t;
  return kScalar;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable& active() {
  static const KernelTable& table = select_table();
  return table;
}

}  // namespace pct::kernels
