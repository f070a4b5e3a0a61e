#include "pct/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace pct::io {

namespace {

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto b = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(b.begin(), b.end());
    return std::bit_cast<T>(b);
  }
}

template <class T>
void put(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return to_little(v);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
  return is;
}

void finish(std::ostream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw std::runtime_error("write failed for '" + path.string() + "'");
}

bool sinogram_kind(GridKind k) {
  return static_cast<std::int64_t>(k) >= 1 && static_cast<std::int64_t>(k) <= 4;
}

}  // namespace

void write_raw(const std::filesystem::path& path, const Grid<double>& grid,
               GridKind kind) {
  std::ofstream os = open_out(path);
  put<std::int64_t>(os, raw_magic);
  put<std::int64_t>(os, raw_version);
  put<std::int64_t>(os, static_cast<std::int64_t>(grid.rows));
  put<std::int64_t>(os, static_cast<std::int64_t>(grid.cols));
  put<std::int64_t>(os, static_cast<std::int64_t>(kind));
  for (int i = 0; i < 3; ++i) put<std::int64_t>(os, 0);
  for (double v : grid.values) put<double>(os, v);
  finish(os, path);
}

void write_raw(const std::filesystem::path& path, const Sinogram& sinogram) {
  write_raw(path, sinogram.data, static_cast<GridKind>(sinogram.kind));
}

void write_raw(const std::filesystem::path& path, const LabelImage& labels) {
  Grid<double> g(labels.rows, labels.cols);
  for (std::size_t i = 0; i < g.size(); ++i) g.values[i] = labels.values[i];
  write_raw(path, g, GridKind::labels);
}

RawGrid read_raw(const std::filesystem::path& path) {
  std::ifstream is = open_in(path);
  std::array<std::int64_t, 8> h{};
  for (auto& v : h) v = get<std::int64_t>(is);
  if (!is) throw std::runtime_error("'" + path.string() + "': truncated header");
  if (h[0] != raw_magic) throw std::runtime_error("'" + path.string() + "': bad magic");
  if (h[1] != raw_version)
    throw std::runtime_error("'" + path.string() + "': unsupported version " +
                             std::to_string(h[1]));
  if (h[2] < 0 || h[3] < 0 || (h[3] > 0 && h[2] > (std::int64_t{1} << 40) / h[3]))
    throw std::runtime_error("'" + path.string() + "': bad dimensions");
  RawGrid out;
  out.kind = static_cast<GridKind>(h[4]);
  out.grid = Grid<double>(static_cast<std::size_t>(h[2]), static_cast<std::size_t>(h[3]));
  for (double& v : out.grid.values) v = get<double>(is);
  if (!is) throw std::runtime_error("'" + path.string() + "': truncated data");
  is.peek();
  if (!is.eof()) throw std::runtime_error("'" + path.string() + "': trailing bytes");
  return out;
}

Sinogram read_sinogram(const std::filesystem::path& path) {
  RawGrid r = read_raw(path);
  if (!sinogram_kind(r.kind))
    throw std::runtime_error("'" + path.string() + "' is not a sinogram (kind " +
                             std::to_string(static_cast<std::int64_t>(r.kind)) + ")");
  Sinogram s;
  s.data = std::move(r.grid);
  s.kind = static_cast<SinogramKind>(r.kind);
  return s;
}

LabelImage read_labels(const std::filesystem::path& path) {
  RawGrid r = read_raw(path);
  if (r.kind != GridKind::labels)
    throw std::runtime_error("'" + path.string() + "' is not a label grid");
  LabelImage l(r.grid.rows, r.grid.cols);
  for (std::size_t i = 0; i < l.size(); ++i)
    l.values[i] = static_cast<int>(std::lround(r.grid.values[i]));
  return l;
}

Grid<std::uint16_t> render_gray16(const Image& u, double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("render_gray16: empty display range");
  Grid<std::uint16_t> out(u.rows, u.cols);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double t = std::clamp((u.values[i] - lo) / (hi - lo), 0.0, 1.0);
    out.values[i] = static_cast<std::uint16_t>(std::lround(t * 65535.0));
  }
  return out;
}

std::pair<double, double> display_range(const Image& truth) {
  const auto [mn, mx] = std::ranges::minmax(truth.values);
  return {0.9 * mn, 1.1 * mx};
}

Grid<std::uint16_t> montage(const std::vector<std::vector<Grid<std::uint16_t>>>& rows,
                            std::size_t gap) {
  if (rows.empty() || rows.front().empty())
    throw std::invalid_argument("montage: no tiles");
  const std::size_t th = rows.front().front().rows;
  const std::size_t tw = rows.front().front().cols;
  std::size_t ncol = 0;
  for (const auto& r : rows) ncol = std::max(ncol, r.size());
  Grid<std::uint16_t> out(rows.size() * th + (rows.size() - 1) * gap,
                          ncol * tw + (ncol - 1) * gap, 0);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      const auto& t = rows[i][j];
      if (t.rows != th || t.cols != tw)
        throw std::invalid_argument("montage: tiles differ in size");
      for (std::size_t r = 0; r < th; ++r)
        std::ranges::copy(t.row(r), out.row(i * (th + gap) + r).begin() +
                                        static_cast<std::ptrdiff_t>(j * (tw + gap)));
    }
  return out;
}

void write_pgm16(const std::filesystem::path& path, const Grid<std::uint16_t>& img) {
  std::ofstream os = open_out(path);
  os << "P5\n" << img.cols << ' ' << img.rows << "\n65535\n";
  for (std::uint16_t v : img.values) {
    const char b[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    os.write(b, 2);
  }
  finish(os, path);
}

Grid<std::uint16_t> read_pgm16(const std::filesystem::path& path) {
  std::ifstream is = open_in(path);
  std::string magic;
  std::size_t w = 0, h = 0;
  int maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (!is || magic != "P5" || maxval != 65535)
    throw std::runtime_error("'" + path.string() + "': not a 16-bit PGM");
  is.get();
  Grid<std::uint16_t> img(h, w);
  for (auto& v : img.values) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    v = static_cast<std::uint16_t>((b[0] << 8) | b[1]);
  }
  if (!is) throw std::runtime_error("'" + path.string() + "': truncated PGM");
  return img;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), end);
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<SweepRecord>& records) {
  std::ofstream os = open_out(path);
  os << "experiment_id,method,n0,alpha,sigma,E,Es,iterations,converged,seconds\n";
  for (const SweepRecord& r : records) {
    os << r.experiment_id << ',' << to_string(r.method) << ',' << format_double(r.n0)
       << ',' << format_double(r.alpha) << ',' << format_double(r.sigma) << ','
       << format_double(r.E) << ',' << format_double(r.Es) << ',' << r.iterations
       << ',' << (r.converged ? "true" : "false") << ','
       << std::fixed << std::setprecision(3) << r.seconds << std::defaultfloat
       << '\n';
  }
  finish(os, path);
}

void write_residual_csv(const std::filesystem::path& path, const SolveReport& report) {
  std::ofstream os = open_out(path);
  os << "iter,p_sq,d_sq,objective\n";
  for (std::size_t k = 0; k < report.residual_history.size(); ++k) {
    const ResidualPair& r = report.residual_history[k];
    os << k + 1 << ',' << format_double(r.primal_sq) << ','
       << format_double(r.dual_sq) << ',' << format_double(report.objective_history[k])
       << '\n';
  }
  finish(os, path);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream is = open_in(path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest init failed");
  std::array<char, 1 << 16> buf{};
  while (is) {
    is.read(buf.data(), buf.size());
    if (is.gcount() > 0)
      EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

}  // namespace pct::io
