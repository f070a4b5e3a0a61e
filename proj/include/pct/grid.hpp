#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pct {

/// Dense row-major 2D grid.
template <class T>
struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> values;

  Grid() = default;
  Grid(std::size_t r, std::size_t c, T fill = T{})
      : rows(r), cols(c), values(r * c, fill) {}

  std::size_t size() const { return values.size(); }
  T& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return values[r * cols + c];
  }
  std::span<T> row(std::size_t r) { return {values.data() + r * cols, cols}; }
  std::span<const T> row(std::size_t r) const {
    return {values.data() + r * cols, cols};
  }
  std::span<T> flat() { return values; }
  std::span<const T> flat() const { return values; }

  bool operator==(const Grid&) const = default;
};

using Image = Grid<double>;
using LabelImage = Grid<int>;

/// What a real-valued detector-domain grid holds.
enum class SinogramKind : int {
  absorption = 1,  // B
  phase = 2,       // phi
  intensity = 3,   // I
  contrast = 4,    // g = I - 1
};

std::string to_string(SinogramKind kind);

/// One projection per row: rows = angles, cols = detector bins.
struct Sinogram {
  Grid<double> data;
  SinogramKind kind = SinogramKind::absorption;

  Sinogram() = default;
  Sinogram(std::size_t n_angles, std::size_t n_detector, SinogramKind k)
      : data(n_angles, n_detector), kind(k) {}

  std::size_t n_angles() const { return data.rows; }
  std::size_t n_detector() const { return data.cols; }
  std::span<double> projection(std::size_t a) { return data.row(a); }
  std::span<const double> projection(std::size_t a) const {
    return data.row(a);
  }
};

/// Per-projection DFT of a sinogram, native (unshifted) frequency order.
struct Spectrum {
  Grid<std::complex<double>> data;

  std::size_t n_angles() const { return data.rows; }
  std::size_t n_detector() const { return data.cols; }
};

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string(what) + ": size mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) +
                                ")");
}

}  // namespace pct
