#pragma once

// Scalar fields on regular grids: storage, the Freudenthal stencil, the
// symbolic-perturbation vertex order, RSF/CSV I/O and fixture generators.

#include <rwass/errors.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace rwass {

using Vertex = std::size_t;
using Coord = std::array<int, 3>;

class ScalarGrid {
 public:
  ScalarGrid() = default;

  /// Validates the invariants: 1..3 axes, each extent >= 1, one finite value
  /// per vertex, positive spacing.
  ScalarGrid(std::vector<std::size_t> dims, std::vector<double> values,
             std::vector<double> spacing = {}, std::string name = {})
      : dims_(std::move(dims)),
        spacing_(std::move(spacing)),
        values_(std::move(values)),
        name_(std::move(name)) {
    if (dims_.empty() || dims_.size() > 3)
      throw InputError("dims must be >= 1 and at most 3 axes");
    for (auto d : dims_)
      if (d < 1) throw InputError("dims must be >= 1");
    if (spacing_.empty()) spacing_.assign(dims_.size(), 1.0);
    if (spacing_.size() != dims_.size())
      throw InputError("spacing count differs from dims count");
    for (double s : spacing_)
      if (!(s > 0.0) || !std::isfinite(s)) throw InputError("spacing must be positive");
    const auto n = std::accumulate(dims_.begin(), dims_.end(), std::size_t{1},
                                   std::multiplies<>());
    if (values_.size() != n)
      throw InputError("payload length mismatch: expected " + std::to_string(n) +
                       " values, got " + std::to_string(values_.size()));
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isfinite(values_[i]))
        throw InputError("non-finite value at vertex " + std::to_string(i));
    strides_.fill(0);
    std::size_t s = 1;
    for (std::size_t k = dims_.size(); k-- > 0;) {
      strides_[k] = s;
      s *= dims_[k];
    }
  }

  std::size_t dimension() const { return dims_.size(); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  const std::vector<double>& spacing() const { return spacing_; }
  const std::vector<double>& values() const { return values_; }
  const std::string& name() const { return name_; }
  std::size_t size() const { return values_.size(); }
  double operator[](Vertex v) const { return values_[v]; }

  std::size_t extent(std::size_t axis) const { return axis < dims_.size() ? dims_[axis] : 1; }
  std::size_t max_extent() const { return *std::max_element(dims_.begin(), dims_.end()); }

  /// Grid coordinates of a vertex; unused axes are 0.
  Coord coord(Vertex v) const {
    Coord c{0, 0, 0};
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      c[k] = static_cast<int>(v / strides_[k]);
      v %= strides_[k];
    }
    return c;
  }

  bool contains(const Coord& c) const {
    for (std::size_t k = 0; k < 3; ++k) {
      const auto e = static_cast<int>(extent(k));
      if (c[k] < 0 || c[k] >= e) return false;
    }
    return true;
  }

  Vertex index(const Coord& c) const {
    Vertex v = 0;
    for (std::size_t k = 0; k < dims_.size(); ++k)
      v += static_cast<std::size_t>(c[k]) * strides_[k];
    return v;
  }

  /// Value at c, or `fallback` when c lies outside the domain.
  double value_or(const Coord& c, double fallback) const {
    return contains(c) ? values_[index(c)] : fallback;
  }

  std::pair<double, double> value_range() const {
    auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
    return {*lo, *hi};
  }

  ScalarGrid with_values(std::vector<double> values) const {
    return ScalarGrid(dims_, std::move(values), spacing_, name_);
  }

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> spacing_;
  std::vector<double> values_;
  std::string name_;
  std::array<std::size_t, 3> strides_{};
};

/// Strict total order on vertices: (value, index) lexicographic. This is the
/// symbolic perturbation that makes every field injective on its vertices.
struct VertexOrder {
  const ScalarGrid* grid;
  bool operator()(Vertex a, Vertex b) const {
    const double fa = (*grid)[a], fb = (*grid)[b];
    return fa < fb || (fa == fb && a < b);
  }
};

/// Vertices sorted ascending under VertexOrder.
inline std::vector<Vertex> sorted_vertices(const ScalarGrid& grid) {
  std::vector<Vertex> order(grid.size());
  std::iota(order.begin(), order.end(), Vertex{0});
  std::sort(order.begin(), order.end(), VertexOrder{&grid});
  return order;
}

namespace detail {

// Freudenthal stencil: every non-zero vector of {0,1}^d and its negation.
inline const std::vector<Coord>& freudenthal_offsets(std::size_t d) {
  static const auto build = [](std::size_t dim) {
    std::vector<Coord> out;
    for (unsigned mask = 1; mask < (1u << dim); ++mask) {
      Coord c{0, 0, 0};
      for (std::size_t k = 0; k < dim; ++k) c[k] = (mask >> k) & 1u;
      out.push_back(c);
      out.push_back({-c[0], -c[1], -c[2]});
    }
    return out;
  };
  static const std::array<std::vector<Coord>, 4> table{
      std::vector<Coord>{}, build(1), build(2), build(3)};
  return table.at(d);
}

}  // namespace detail

/// Link of v under the Freudenthal triangulation, boundary clipped, in
/// ascending index order.
inline std::vector<Vertex> neighbors(const ScalarGrid& grid, Vertex v) {
  if (v >= grid.size()) throw InputError("vertex index out of range");
  const Coord c = grid.coord(v);
  std::vector<Vertex> out;
  out.reserve(14);
  for (const auto& o : detail::freudenthal_offsets(grid.dimension())) {
    const Coord n{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
    if (grid.contains(n)) out.push_back(grid.index(n));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// RSF: "RSF1" | u8 d | d x u32 extents | u8 dtype (0=f32, 1=f64) | values

enum class RsfType : std::uint8_t { F32 = 0, F64 = 1 };

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos, const char* what) {
  if (pos + sizeof(T) > in.size())
    throw InputError(std::string("truncated ") + what + " at byte offset " + std::to_string(pos));
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("cannot write " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw InputError("I/O failure writing " + path);
}

}  // namespace detail

inline std::string encode_rsf(const ScalarGrid& grid, RsfType type = RsfType::F64) {
  if (grid.dimension() == 0) throw InputError("dims must be >= 1");
  std::string out = "RSF1";
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(grid.dimension()));
  for (auto d : grid.dims()) detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(type));
  for (double v : grid.values()) {
    if (!std::isfinite(v)) throw InputError("refusing to write non-finite value");
    if (type == RsfType::F32)
      detail::put_le<float>(out, static_cast<float>(v));
    else
      detail::put_le<double>(out, v);
  }
  return out;
}

inline ScalarGrid decode_rsf(const std::string& bytes, std::string name = {}) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "RSF1") != 0)
    throw InputError("bad magic at byte offset 0");
  std::size_t pos = 4;
  const auto d = detail::get_le<std::uint8_t>(bytes, pos, "header");
  if (d < 1 || d > 3)
    throw InputError("dimension count " + std::to_string(d) + " not in {1,2,3} at byte offset 4");
  std::vector<std::size_t> dims;
  for (unsigned k = 0; k < d; ++k) {
    const auto at = pos;
    const auto e = detail::get_le<std::uint32_t>(bytes, pos, "extent");
    if (e == 0) throw InputError("dims must be >= 1 (byte offset " + std::to_string(at) + ")");
    dims.push_back(e);
  }
  const auto type_at = pos;
  const auto type = detail::get_le<std::uint8_t>(bytes, pos, "dtype");
  if (type > 1) throw InputError("unknown dtype at byte offset " + std::to_string(type_at));
  const std::size_t n = std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  const std::size_t width = type == 0 ? 4 : 8;
  if (bytes.size() - pos != n * width)
    throw InputError("payload length mismatch at byte offset " + std::to_string(pos) +
                     ": expected " + std::to_string(n * width) + " bytes, got " +
                     std::to_string(bytes.size() - pos));
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto at = pos;
    values[i] = type == 0 ? static_cast<double>(detail::get_le<float>(bytes, pos, "payload"))
                          : detail::get_le<double>(bytes, pos, "payload");
    if (!std::isfinite(values[i]))
      throw InputError("non-finite value at byte offset " + std::to_string(at));
  }
  return ScalarGrid(std::move(dims), std::move(values), {}, std::move(name));
}

inline ScalarGrid load_rsf(const std::string& path) {
  return decode_rsf(detail::read_file(path), path);
}

inline void save_rsf(const ScalarGrid& grid, const std::string& path, RsfType type = RsfType::F64) {
  detail::write_file(path, encode_rsf(grid, type));
}

/// 2D grid from CSV text; each line is one index of the first axis.
inline ScalarGrid parse_csv_2d(const std::string& text, std::string name = {}) {
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t count = 0;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InputError("bad CSV cell '" + cell + "' on row " + std::to_string(rows));
      }
      ++count;
    }
    if (rows == 0) cols = count;
    if (count != cols) throw InputError("ragged CSV row " + std::to_string(rows));
    ++rows;
  }
  if (rows == 0) throw InputError("empty CSV");
  return ScalarGrid({rows, cols}, std::move(values), {}, std::move(name));
}

inline ScalarGrid load_csv_2d(const std::string& path) {
  return parse_csv_2d(detail::read_file(path), path);
}

// ---------------------------------------------------------------------------
// Fixture generators

struct Hill {
  std::array<double, 3> center{0, 0, 0};  // grid coordinates
  double height = 1.0;
  double width = 1.0;  // Gaussian standard deviation, in vertices
};

/// Sum of isotropic Gaussian bumps evaluated at vertex coordinates.
inline ScalarGrid synth_hills(std::vector<std::size_t> dims, const std::vector<Hill>& hills) {
  const std::size_t n =
      std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  ScalarGrid shape(dims, std::vector<double>(n, 0.0));
  std::vector<double> values(n, 0.0);
  for (Vertex v = 0; v < n; ++v) {
    const Coord c = shape.coord(v);
    double sum = 0.0;
    for (const auto& h : hills) {
      double r2 = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        const double dx = c[k] - h.center[k];
        r2 += dx * dx;
      }
      sum += h.height * std::exp(-r2 / (2.0 * h.width * h.width));
    }
    values[v] = sum;
  }
  return ScalarGrid(std::move(dims), std::move(values));
}

/// `count` hills with centers, heights and widths drawn from `seed`.
inline std::vector<Hill> random_hills(const std::vector<std::size_t>& dims, std::size_t count,
                                      std::uint64_t seed, double min_height = 0.2,
                                      double max_height = 1.0, double min_width = 1.0,
                                      double max_width = 4.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Hill> hills(count);
  for (auto& h : hills) {
    for (std::size_t k = 0; k < dims.size(); ++k)
      h.center[k] = unit(rng) * static_cast<double>(dims[k] - 1);
    h.height = min_height + unit(rng) * (max_height - min_height);
    h.width = min_width + unit(rng) * (max_width - min_width);
  }
  return hills;
}

/// Adds uniform noise in [-amplitude, +amplitude]; deterministic per seed.
inline ScalarGrid add_noise(const ScalarGrid& grid, double amplitude, std::uint64_t seed) {
  if (!(amplitude >= 0.0)) throw InputError("noise amplitude must be >= 0");
  if (amplitude == 0.0) return grid;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> values = grid.values();
  for (double& v : values) {
    const double base = v;
    v += amplitude * unit(rng);
    // rounding of the sum must not push the perturbation past the bound
    while (std::abs(v - base) > amplitude) v = std::nextafter(v, base);
  }
  return grid.with_values(std::move(values));
}

}  // namespace rwass
