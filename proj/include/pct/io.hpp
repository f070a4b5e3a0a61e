#pragma once

// Raw grid files: eight little-endian int64 header values
//   magic, version, rows, cols, kind, 0, 0, 0
// followed by rows * cols little-endian float64 values, row-major.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pct/grid.hpp"
#include "pct/pipelines.hpp"

namespace pct::io {

inline constexpr std::int64_t raw_magic = 0x3144495247544350;  // "PCTGRID1" on disk
inline constexpr std::int64_t raw_version = 1;

/// Kind tags beyond the sinogram kinds (1..4).
enum class GridKind : std::int64_t {
  absorption = 1,
  phase = 2,
  intensity = 3,
  contrast = 4,
  beta = 16,
  delta = 17,
  labels = 18,
  image = 19,
};

struct RawGrid {
  Grid<double> grid;
  GridKind kind = GridKind::image;
};

void write_raw(const std::filesystem::path& path, const Grid<double>& grid,
               GridKind kind);
void write_raw(const std::filesystem::path& path, const Sinogram& sinogram);
void write_raw(const std::filesystem::path& path, const LabelImage& labels);

/// Throws std::runtime_error on I/O failure or a malformed header.
RawGrid read_raw(const std::filesystem::path& path);
Sinogram read_sinogram(const std::filesystem::path& path);
LabelImage read_labels(const std::filesystem::path& path);

/// Linear map of [lo, hi] onto 0..65535; values outside are truncated.
Grid<std::uint16_t> render_gray16(const Image& u, double lo, double hi);

/// Display range [0.9 min(u*), 1.1 max(u*)].
std::pair<double, double> display_range(const Image& truth);

/// Tiles laid out row by row with `gap` black pixels between them. All tiles
/// must share one size.
Grid<std::uint16_t> montage(const std::vector<std::vector<Grid<std::uint16_t>>>& rows,
                            std::size_t gap = 2);

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples).
void write_pgm16(const std::filesystem::path& path, const Grid<std::uint16_t>& img);
Grid<std::uint16_t> read_pgm16(const std::filesystem::path& path);

/// Columns: experiment_id, method, n0, alpha, sigma, E, Es, iterations,
/// converged, seconds.
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<SweepRecord>& records);

/// Columns: iter, p_sq, d_sq, objective.
void write_residual_csv(const std::filesystem::path& path, const SolveReport& report);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace pct::io
