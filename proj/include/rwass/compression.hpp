#pragma once

// Size-budgeted compression of fields whose region membership is kept
// losslessly: parameter budgets, bit-rate and grid sizing, a block fixed-rate
// quantizer, a cubic B-spline least-squares fit and a container format.

#include <rwass/errors.hpp>
#include <rwass/field_io.hpp>
#include <rwass/region_metric.hpp>
#include <rwass/topology.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace rwass {

struct CompressionBudget {
  double tau = 0.0;
  std::size_t n = 0;
  std::size_t p = 0;
};

inline CompressionBudget budget(double tau, std::size_t n) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw InputError("tau must lie in [0, 1]");
  const double x = tau * static_cast<double>(n);
  const double nearest = std::round(x);
  // 0.29 * 100 evaluates to 28.999999999999996
  const double p = std::abs(x - nearest) <= 1e-9 * std::max(1.0, x) ? nearest : std::floor(x);
  return {tau, n, std::min(n, static_cast<std::size_t>(p))};
}

inline double zfp_rate(std::size_t p, std::size_t n) {
  if (n == 0) throw InputError("value count must be positive");
  return 32.0 * static_cast<double>(p) / static_cast<double>(n);
}

/// Hidden-layer width of an l-layer MLP with input dimension d whose
/// parameter count is closest to p.
inline std::size_t neural_width(std::size_t l, std::size_t d, std::size_t p) {
  if (l < 3) throw InputError("layer count must be >= 3");
  const double a = static_cast<double>(l) - 2.0;
  const double b = static_cast<double>(d + l);
  const double c = 1.0 - static_cast<double>(p);
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) throw InputError("negative discriminant in width sizing");
  const double k = std::round((-b + std::sqrt(disc)) / (2.0 * a));
  return k < 0.0 ? 0 : static_cast<std::size_t>(k);
}

inline std::size_t neural_param_count(std::size_t l, std::size_t d, std::size_t k) {
  return d * k + k + (l - 2) * (k * k + k) + k + 1;
}

// ---------------------------------------------------------------------------
// Byte helpers

namespace detail {

inline void put_f32(std::string& out, float v) { put_le<float>(out, v); }

class BitWriter {
 public:
  void put(std::uint64_t v, unsigned bits) {
    for (unsigned k = 0; k < bits; ++k) {
      if (fill_ == 0) bytes_.push_back(0);
      if ((v >> k) & 1u) bytes_.back() = static_cast<char>(bytes_.back() | (1 << fill_));
      fill_ = (fill_ + 1) % 8;
    }
  }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
  unsigned fill_ = 0;
};

class BitReader {
 public:
  BitReader(const std::string& s, std::size_t pos) : s_(s), bit_(pos * 8) {}
  std::uint64_t get(unsigned bits) {
    std::uint64_t v = 0;
    for (unsigned k = 0; k < bits; ++k, ++bit_) {
      if (bit_ / 8 >= s_.size()) throw InputError("truncated bit stream");
      if ((static_cast<unsigned char>(s_[bit_ / 8]) >> (bit_ % 8)) & 1u) v |= std::uint64_t{1} << k;
    }
    return v;
  }

 private:
  const std::string& s_;
  std::size_t bit_;
};

inline void put_dims(std::string& out, const std::vector<std::size_t>& dims) {
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dims.size()));
  for (auto d : dims) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
}

inline std::vector<std::size_t> get_dims(const std::string& in, std::size_t& pos) {
  const auto d = get_le<std::uint8_t>(in, pos, "dims");
  if (d < 1 || d > 3) throw InputError("dimension count not in {1,2,3}");
  std::vector<std::size_t> dims(d);
  for (auto& e : dims) e = get_le<std::uint32_t>(in, pos, "dims");
  return dims;
}

inline float f32_down(double x) {
  float f = static_cast<float>(x);
  if (static_cast<double>(f) > x) f = std::nextafter(f, -std::numeric_limits<float>::infinity());
  return f;
}

inline float f32_up(double x) {
  float f = static_cast<float>(x);
  if (static_cast<double>(f) < x) f = std::nextafter(f, std::numeric_limits<float>::infinity());
  return f;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Block fixed-rate quantizer

struct QuantizerLayout {
  std::size_t block = 0;  // block edge, 0 when no block header fits
  bool constant = false;  // no block fits but one f32 does: store the midrange
  std::size_t blocks = 0;
  unsigned bits = 0;  // per value
  std::size_t total_bits = 0;  // headers + codes
};

/// Chooses the smallest power-of-two block edge >= 4 whose 64-bit block
/// headers (f32 min and step) fit in floor(rate * n) bits, then spends the
/// remaining bits evenly on the values.
inline QuantizerLayout quantizer_layout(const std::vector<std::size_t>& dims, double rate) {
  if (!(rate >= 0.0 && rate <= 32.0)) throw InputError("rate must lie in [0, 32]");
  std::size_t n = 1, largest = 1;
  for (auto d : dims) {
    n *= d;
    largest = std::max(largest, d);
  }
  const auto budget_bits = static_cast<std::size_t>(std::floor(rate * static_cast<double>(n)));
  QuantizerLayout L;
  for (std::size_t s = 4;; s *= 2) {
    std::size_t k = 1;
    for (auto d : dims) k *= (d + s - 1) / s;
    if (64 * k <= budget_bits) {
      L.block = s;
      L.blocks = k;
      L.bits = static_cast<unsigned>(std::min<std::size_t>(32, (budget_bits - 64 * k) / n));
      L.total_bits = 64 * k + L.bits * n;
      return L;
    }
    if (s >= largest) {
      L.constant = budget_bits >= 32;
      L.total_bits = L.constant ? 32 : 0;
      return L;
    }
  }
}

namespace detail {

// visits blocks in row-major order, each block's vertices in row-major order
template <class F>
void for_each_block(const std::vector<std::size_t>& dims, std::size_t s, F&& f) {
  const std::size_t d = dims.size();
  std::array<std::size_t, 3> nb{1, 1, 1}, ext{1, 1, 1};
  for (std::size_t k = 0; k < d; ++k) {
    ext[k] = dims[k];
    nb[k] = (dims[k] + s - 1) / s;
  }
  std::vector<Vertex> members;
  for (std::size_t b0 = 0; b0 < nb[0]; ++b0)
    for (std::size_t b1 = 0; b1 < nb[1]; ++b1)
      for (std::size_t b2 = 0; b2 < nb[2]; ++b2) {
        members.clear();
        for (std::size_t i = b0 * s; i < std::min(ext[0], (b0 + 1) * s); ++i)
          for (std::size_t j = b1 * s; j < std::min(ext[1], (b1 + 1) * s); ++j)
            for (std::size_t k = b2 * s; k < std::min(ext[2], (b2 + 1) * s); ++k)
              members.push_back((i * ext[1] + j) * ext[2] + k);
        f(members);
      }
}

}  // namespace detail

/// Codec payload: dims, u8 bits, u32 block edge, per-block (f32 min, f32
/// step), then the packed codes block by block. Block edge 0 is followed by
/// an optional single f32 filling the whole field.
inline std::string quantize(const ScalarGrid& grid, double rate) {
  const auto L = quantizer_layout(grid.dims(), rate);
  std::string out;
  detail::put_dims(out, grid.dims());
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(L.bits));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(L.block));
  if (L.block == 0) {
    if (L.constant) {
      const auto [lo, hi] = grid.value_range();
      detail::put_f32(out, static_cast<float>(0.5 * (lo + hi)));
    }
    return out;
  }
  const double levels = L.bits == 0 ? 0.0 : std::ldexp(1.0, static_cast<int>(L.bits)) - 1.0;
  std::string headers;
  detail::BitWriter codes;
  detail::for_each_block(grid.dims(), L.block, [&](const std::vector<Vertex>& blk) {
    double lo = grid[blk.front()], hi = lo;
    for (auto v : blk) {
      lo = std::min(lo, grid[v]);
      hi = std::max(hi, grid[v]);
    }
    const float flo = detail::f32_down(lo);
    const float step = levels > 0.0 ? detail::f32_up((hi - flo) / levels) : 0.0f;
    detail::put_f32(headers, flo);
    detail::put_f32(headers, step);
    for (auto v : blk) {
      double code = step > 0.0f ? std::round((grid[v] - flo) / step) : 0.0;
      code = std::clamp(code, 0.0, levels);
      codes.put(static_cast<std::uint64_t>(code), L.bits);
    }
  });
  return out + headers + codes.bytes();
}

inline ScalarGrid dequantize(const std::string& payload) {
  std::size_t pos = 0;
  const auto dims = detail::get_dims(payload, pos);
  const auto bits = detail::get_le<std::uint8_t>(payload, pos, "bits");
  const auto block = detail::get_le<std::uint32_t>(payload, pos, "block");
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  std::vector<double> values(n, 0.0);
  if (block == 0 && pos < payload.size())
    values.assign(n, static_cast<double>(detail::get_le<float>(payload, pos, "constant")));
  if (block != 0) {
    std::size_t k = 1;
    for (auto d : dims) k *= (d + block - 1) / block;
    std::vector<std::pair<float, float>> headers(k);
    for (auto& h : headers) {
      h.first = detail::get_le<float>(payload, pos, "block header");
      h.second = detail::get_le<float>(payload, pos, "block header");
    }
    detail::BitReader codes(payload, pos);
    std::size_t b = 0;
    detail::for_each_block(dims, block, [&](const std::vector<Vertex>& blk) {
      const auto [lo, step] = headers[b++];
      for (auto v : blk)
        values[v] = static_cast<double>(lo) + static_cast<double>(codes.get(bits)) * static_cast<double>(step);
    });
  }
  return ScalarGrid(dims, std::move(values));
}

// ---------------------------------------------------------------------------
// Uniform cubic B-spline

inline constexpr std::size_t kSplineOrder = 4;

/// Control grid dims with the aspect ratio of the extents and a product
/// close to (never above) p.
inline std::vector<std::size_t> bspline_dims(const std::vector<std::size_t>& e, std::size_t p) {
  if (e.empty() || e.size() > 3) throw InputError("bspline_dims needs 1 to 3 extents");
  for (auto x : e)
    if (x == 0) throw InputError("extents must be positive");
  if (p == 0) throw InputError("parameter budget must be >= 1");
  std::vector<double> g(e.size());
  const auto E = [&](std::size_t k) { return static_cast<double>(e[k]); };
  const double P = static_cast<double>(p);
  if (e.size() == 1) {
    g[0] = P;
  } else if (e.size() == 2) {
    g[1] = std::round(std::sqrt(P * E(1) / E(0)));
    g[0] = std::round(E(0) / E(1) * g[1]);
  } else {
    g[2] = std::round(std::cbrt(P * E(2) * E(2) / (E(0) * E(1))));
    g[1] = std::round(E(1) / E(2) * g[2]);
    g[0] = std::round(E(0) / E(2) * g[2]);
  }
  std::vector<std::size_t> out(e.size());
  for (std::size_t k = 0; k < e.size(); ++k)
    out[k] = std::max<std::size_t>(kSplineOrder, static_cast<std::size_t>(std::max(0.0, g[k])));
  auto product = [&] {
    std::size_t s = 1;
    for (auto x : out) s *= x;
    return s;
  };
  while (product() > p) {
    auto it = std::max_element(out.begin(), out.end());
    if (*it <= kSplineOrder) break;
    --*it;
  }
  return out;
}

/// Basis matrix (L x g): row i holds the four cubic weights at parameter
/// t = i (g - 3) / (L - 1).
inline Eigen::MatrixXd bspline_basis(std::size_t samples, std::size_t g) {
  if (g < kSplineOrder) throw InputError("need at least 4 control points per axis");
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(g));
  const double span = static_cast<double>(g - 3);
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = samples > 1 ? static_cast<double>(i) * span / static_cast<double>(samples - 1) : 0.0;
    const auto seg = std::min(static_cast<std::size_t>(std::floor(t)), g - kSplineOrder);
    const double u = t - static_cast<double>(seg);
    const double w[4] = {(1 - u) * (1 - u) * (1 - u) / 6.0,
                         (3 * u * u * u - 6 * u * u + 4) / 6.0,
                         (-3 * u * u * u + 3 * u * u + 3 * u + 1) / 6.0,
                         u * u * u / 6.0};
    for (std::size_t k = 0; k < 4; ++k)
      B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(seg + k)) = w[k];
  }
  return B;
}

namespace detail {

// applies M (rows_out x rows_in) along `axis` of a row-major tensor
inline std::vector<double> apply_axis(const std::vector<double>& in, std::vector<std::size_t>& shape,
                                      std::size_t axis, const Eigen::MatrixXd& M) {
  std::size_t outer = 1, inner = 1;
  for (std::size_t k = 0; k < axis; ++k) outer *= shape[k];
  for (std::size_t k = axis + 1; k < shape.size(); ++k) inner *= shape[k];
  const auto rin = static_cast<std::size_t>(M.cols()), rout = static_cast<std::size_t>(M.rows());
  if (shape[axis] != rin) throw InvariantError("axis length mismatch in tensor product");
  std::vector<double> out(outer * rout * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t r = 0; r < rout; ++r)
      for (std::size_t c = 0; c < rin; ++c) {
        const double m = M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        if (m == 0.0) continue;
        const double* src = &in[(o * rin + c) * inner];
        double* dst = &out[(o * rout + r) * inner];
        for (std::size_t i = 0; i < inner; ++i) dst[i] += m * src[i];
      }
  shape[axis] = rout;
  return out;
}

}  // namespace detail

/// Least-squares control grid. With samples on the full tensor grid the
/// problem separates, so each axis is solved with its own pseudo-inverse.
inline std::vector<double> bspline_fit(const ScalarGrid& grid, const std::vector<std::size_t>& g) {
  if (g.size() != grid.dimension()) throw InputError("control grid rank differs from the field");
  std::vector<double> data = grid.values();
  std::vector<std::size_t> shape = grid.dims();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g[k] > shape[k])
      throw InputError("underdetermined fit: " + std::to_string(g[k]) + " control points for " +
                       std::to_string(shape[k]) + " samples");
    const Eigen::MatrixXd B = bspline_basis(shape[k], g[k]);
    const Eigen::MatrixXd pinv =
        B.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(B.rows(), B.rows()));
    data = detail::apply_axis(data, shape, k, pinv);
  }
  return data;
}

inline ScalarGrid bspline_eval(const std::vector<double>& control, const std::vector<std::size_t>& g,
                               const std::vector<std::size_t>& dims) {
  std::vector<double> data = control;
  std::vector<std::size_t> shape = g;
  for (std::size_t k = 0; k < g.size(); ++k)
    data = detail::apply_axis(data, shape, k, bspline_basis(dims[k], g[k]));
  return ScalarGrid(dims, std::move(data));
}

// ---------------------------------------------------------------------------
// Container

enum class Codec : std::uint8_t { Quantizer = 0, BSpline = 1 };

inline const char* to_string(Codec c) { return c == Codec::Quantizer ? "quantizer" : "bspline"; }

inline Codec parse_codec(const std::string& s) {
  if (s == "quantizer" || s == "zfp") return Codec::Quantizer;
  if (s == "bspline") return Codec::BSpline;
  throw InputError("unknown codec '" + s + "' (expected quantizer or bspline)");
}

struct CompressedField {
  Codec codec = Codec::Quantizer;
  CompressionBudget budget;
  std::vector<std::size_t> dims;
  std::string payload;
  std::vector<std::uint32_t> membership;
  std::size_t parameter_bits = 0;  // bits spent on codec parameters
};

/// B-spline payload: dims, control dims (u32 each), f32 control points.
inline CompressedField compress(const ScalarGrid& grid, double tau, Codec codec,
                                std::vector<std::uint32_t> membership) {
  if (membership.size() != grid.size()) throw ContractError("membership size differs from the field");
  CompressedField c;
  c.codec = codec;
  c.budget = budget(tau, grid.size());
  c.dims = grid.dims();
  c.membership = std::move(membership);
  if (codec == Codec::Quantizer) {
    const double rate = zfp_rate(c.budget.p, grid.size());
    c.payload = quantize(grid, rate);
    c.parameter_bits = quantizer_layout(grid.dims(), rate).total_bits;
    return c;
  }
  detail::put_dims(c.payload, grid.dims());
  if (c.budget.p == 0) {
    detail::put_le<std::uint8_t>(c.payload, 0);
    return c;
  }
  const auto g = bspline_dims(grid.dims(), c.budget.p);
  std::size_t count = 1;
  for (auto x : g) count *= x;
  if (count > c.budget.p) throw ContractError("budget too small for a cubic control grid");
  const auto control = bspline_fit(grid, g);
  detail::put_le<std::uint8_t>(c.payload, 1);
  for (auto x : g) detail::put_le<std::uint32_t>(c.payload, static_cast<std::uint32_t>(x));
  for (double v : control) detail::put_f32(c.payload, static_cast<float>(v));
  c.parameter_bits = 32 * count;
  return c;
}

inline ScalarGrid decompress(const CompressedField& c) {
  if (c.codec == Codec::Quantizer) return dequantize(c.payload);
  std::size_t pos = 0;
  const auto dims = detail::get_dims(c.payload, pos);
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  if (detail::get_le<std::uint8_t>(c.payload, pos, "spline flag") == 0)
    return ScalarGrid(dims, std::vector<double>(n, 0.0));
  std::vector<std::size_t> g(dims.size());
  std::size_t count = 1;
  for (auto& x : g) {
    x = detail::get_le<std::uint32_t>(c.payload, pos, "control dims");
    count *= x;
  }
  std::vector<double> control(count);
  for (auto& v : control) v = detail::get_le<float>(c.payload, pos, "control points");
  return bspline_eval(control, g, dims);
}

inline std::string encode_rwc(const CompressedField& c) {
  std::string out = "RWC1";
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(c.codec));
  detail::put_le<double>(out, c.budget.tau);
  detail::put_le<std::uint64_t>(out, c.budget.p);
  detail::put_le<std::uint64_t>(out, c.payload.size());
  out += c.payload;
  for (auto id : c.membership) detail::put_le<std::uint32_t>(out, id);
  return out;
}

inline CompressedField decode_rwc(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "RWC1") != 0) throw InputError("bad magic at byte offset 0");
  std::size_t pos = 4;
  CompressedField c;
  const auto codec = detail::get_le<std::uint8_t>(bytes, pos, "codec");
  if (codec > 1) throw InputError("unknown codec tag at byte offset 4");
  c.codec = static_cast<Codec>(codec);
  c.budget.tau = detail::get_le<double>(bytes, pos, "budget");
  c.budget.p = detail::get_le<std::uint64_t>(bytes, pos, "budget");
  const auto len = detail::get_le<std::uint64_t>(bytes, pos, "payload length");
  if (bytes.size() - pos < len)
    throw InputError("payload length mismatch at byte offset " + std::to_string(pos));
  c.payload = bytes.substr(pos, len);
  pos += len;
  std::size_t ppos = 0;
  c.dims = detail::get_dims(c.payload, ppos);
  std::size_t n = 1;
  for (auto d : c.dims) n *= d;
  c.budget.n = n;
  if (bytes.size() - pos != 4 * n)
    throw InputError("membership length mismatch at byte offset " + std::to_string(pos));
  c.membership.resize(n);
  for (auto& id : c.membership) id = detail::get_le<std::uint32_t>(bytes, pos, "membership");
  return c;
}

/// Region-aware pairs over decompressed values: membership, extremum value
/// and saddle value come from the originals, the other region values from
/// the decompressed field.
inline std::vector<RegionAwarePair> with_decompressed_values(
    const std::vector<RegionAwarePair>& original, std::shared_ptr<const ScalarGrid> decompressed) {
  std::vector<RegionAwarePair> out = original;
  for (auto& r : out) {
    if (!r.source || r.source->dims() != decompressed->dims())
      throw ContractError("decompressed field dims differ from the original");
    for (auto& m : r.members) {
      if (m.offset == Coord{0, 0, 0}) continue;
      Coord c{};
      for (std::size_t k = 0; k < 3; ++k) c[k] = r.extremum_coord[k] + m.offset[k];
      m.value = (*decompressed)[decompressed->index(c)];
    }
    r.source = decompressed;
  }
  return out;
}

}  // namespace rwass
