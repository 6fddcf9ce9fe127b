#pragma once

// Region-aware pairs: each persistence pair carries the values of its
// segmentation region, stored as offsets from the extremum so that two
// regions can be compared after aligning their extrema.

#include <rwass/errors.hpp>
#include <rwass/field_io.hpp>
#include <rwass/topology.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace rwass {

enum class Background { Null, Data };

inline const char* to_string(Background b) { return b == Background::Null ? "null" : "data"; }

inline Background parse_background(const std::string& s) {
  if (s == "null") return Background::Null;
  if (s == "data") return Background::Data;
  throw InputError("unknown background '" + s + "' (expected null or data)");
}

struct GroundParams {
  double q = 2.0;
  double lambda = 0.1;
  Background background = Background::Null;
  double w_lifting = 0.5;
  double w_volume = 0.2;

  void validate() const {
    if (!(q >= 1.0) || !std::isfinite(q)) throw InputError("q must be a finite real >= 1");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError("lambda must lie in [0, 1]");
    if (!(w_lifting >= 0.0) || !(w_volume >= 0.0)) throw InputError("weights must be >= 0");
  }
};

struct RegionMember {
  Coord offset{0, 0, 0};  // relative to the extremum
  double value = 0.0;

  bool operator==(const RegionMember&) const = default;
};

struct RegionAwarePair {
  std::size_t id = 0;
  PersistencePair pair;
  std::size_t dimension = 1;
  Coord extremum_coord{0, 0, 0};
  Coord bbox_lo{0, 0, 0};
  Coord bbox_hi{0, 0, 0};  // inclusive
  std::vector<RegionMember> members;  // sorted by offset
  double saddle_value = 0.0;
  int stride = 1;
  std::size_t max_extent = 1;  // of the full source grid
  std::size_t region_size = 0;  // before subsampling
  std::array<double, 3> normalized_coord{0, 0, 0};
  double normalized_volume = 0.0;
  std::shared_ptr<const ScalarGrid> source;

  double extremum_value() const { return pair.extremum_value(); }
};

inline double pow_q(double x, double q) {
  if (q == 2.0) return x * x;
  if (q == 1.0) return x;
  return std::pow(x, q);
}

inline double root_q(double x, double q) {
  if (q == 2.0) return std::sqrt(x);
  if (q == 1.0) return x;
  return std::pow(x, 1.0 / q);
}

/// One region-aware pair per pair id. Region membership comes from the
/// segmentation; the saddle value comes from the pair.
inline std::vector<RegionAwarePair> make_region_aware(const std::vector<PersistencePair>& pairs,
                                                      const Segmentation& seg,
                                                      std::shared_ptr<const ScalarGrid> grid) {
  if (!grid) throw ContractError("null source grid");
  if (seg.pair_of.size() != grid->size())
    throw ContractError("segmentation size does not match the grid");
  const std::size_t d = grid->dimension();
  std::vector<RegionAwarePair> out(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto& r = out[i];
    r.id = i;
    r.pair = pairs[i];
    r.dimension = d;
    r.extremum_coord = grid->coord(pairs[i].extremum_vertex);
    r.bbox_lo = r.bbox_hi = r.extremum_coord;
    r.saddle_value = pairs[i].saddle_value();
    r.max_extent = grid->max_extent();
    r.source = grid;
    for (std::size_t k = 0; k < d; ++k) {
      const auto e = grid->extent(k);
      r.normalized_coord[k] = e > 1 ? r.extremum_coord[k] / static_cast<double>(e - 1) : 0.0;
    }
  }
  for (Vertex v = 0; v < grid->size(); ++v) {
    const auto id = seg.pair_of[v];
    if (id >= pairs.size()) throw ContractError("segmentation refers to a missing pair");
    auto& r = out[id];
    const Coord c = grid->coord(v);
    RegionMember m;
    for (std::size_t k = 0; k < 3; ++k) {
      m.offset[k] = c[k] - r.extremum_coord[k];
      r.bbox_lo[k] = std::min(r.bbox_lo[k], c[k]);
      r.bbox_hi[k] = std::max(r.bbox_hi[k], c[k]);
    }
    m.value = (*grid)[v];
    r.members.push_back(m);
  }
  for (auto& r : out) {
    std::sort(r.members.begin(), r.members.end(),
              [](const RegionMember& a, const RegionMember& b) { return a.offset < b.offset; });
    r.region_size = r.members.size();
    r.normalized_volume = static_cast<double>(r.region_size) / static_cast<double>(grid->size());
    if (std::none_of(r.members.begin(), r.members.end(),
                     [](const RegionMember& m) { return m.offset == Coord{0, 0, 0}; }))
      throw ContractError("region of pair " + std::to_string(r.id) + " misses its extremum");
  }
  return out;
}

inline int stride_for(double lambda, std::size_t max_extent) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError("lambda must lie in [0, 1]");
  return static_cast<int>(std::lround(lambda * static_cast<double>(max_extent) + 1.0));
}

/// Keeps the region points whose offset from the extremum is a multiple of
/// the stride round(lambda * m + 1) on every axis, m being the largest
/// extent of the full grid.
inline RegionAwarePair subsample(const RegionAwarePair& in, double lambda) {
  const int n = stride_for(lambda, in.max_extent);
  if (n % in.stride != 0)
    throw ContractError("stride " + std::to_string(n) + " does not refine stride " +
                        std::to_string(in.stride));
  RegionAwarePair out = in;
  out.stride = n;
  if (n == in.stride) return out;
  out.members.clear();
  for (const auto& m : in.members)
    if (m.offset[0] % n == 0 && m.offset[1] % n == 0 && m.offset[2] % n == 0)
      out.members.push_back(m);
  return out;
}

namespace detail {

inline void check_comparable(const RegionAwarePair& a, const RegionAwarePair& b) {
  if (a.dimension != b.dimension) throw ContractError("region dimensionality mismatch");
  if (a.stride != b.stride)
    throw ContractError("stride mismatch (" + std::to_string(a.stride) + " vs " +
                        std::to_string(b.stride) + ")");
}

// value of `owner`'s source field at offset o from `owner`'s extremum
inline double background_at(const RegionAwarePair& owner, const Coord& o, Background bg) {
  if (bg == Background::Null) return 0.0;
  if (!owner.source) throw ContractError("data background needs the source grid");
  Coord c{};
  for (std::size_t k = 0; k < 3; ++k) c[k] = owner.extremum_coord[k] + o[k];
  return owner.source->value_or(c, 0.0);
}

}  // namespace detail

/// Regional discrepancy plus saddle term, in q-th power.
inline double ground_distance_q(const RegionAwarePair& a, const RegionAwarePair& b,
                                const GroundParams& p) {
  detail::check_comparable(a, b);
  const double q = p.q;
  double c = 0.0;
  auto ia = a.members.begin();
  auto ib = b.members.begin();
  while (ia != a.members.end() || ib != b.members.end()) {
    if (ib == b.members.end() || (ia != a.members.end() && ia->offset < ib->offset)) {
      c += pow_q(std::abs(ia->value - detail::background_at(b, ia->offset, p.background)), q);
      ++ia;
    } else if (ia == a.members.end() || ib->offset < ia->offset) {
      c += pow_q(std::abs(detail::background_at(a, ib->offset, p.background) - ib->value), q);
      ++ib;
    } else {
      c += pow_q(std::abs(ia->value - ib->value), q);
      ++ia;
      ++ib;
    }
  }
  return pow_q(std::abs(a.saddle_value - b.saddle_value), q) + c;
}

inline double ground_distance(const RegionAwarePair& a, const RegionAwarePair& b,
                              const GroundParams& p) {
  return root_q(ground_distance_q(a, b, p), p.q);
}

/// The diagonal stand-in: same region, constant at the midpoint of the
/// extremum and saddle values.
inline RegionAwarePair diagonal_projection(const RegionAwarePair& a) {
  RegionAwarePair d = a;
  const double mid = 0.5 * (a.extremum_value() + a.saddle_value);
  for (auto& m : d.members) m.value = mid;
  d.saddle_value = mid;
  return d;
}

inline double projection_cost_q(const RegionAwarePair& a, const GroundParams& p) {
  const double mid = 0.5 * (a.extremum_value() + a.saddle_value);
  double c = 0.0;
  for (const auto& m : a.members) c += pow_q(std::abs(m.value - mid), p.q);
  return pow_q(std::abs(a.saddle_value - mid), p.q) + c;
}

inline double projection_cost(const RegionAwarePair& a, const GroundParams& p) {
  return root_q(projection_cost_q(a, p), p.q);
}

// ---------------------------------------------------------------------------
// Baselines on (birth, death) points

inline double classical_ground_q(const PersistencePair& a, const PersistencePair& b, double q) {
  return pow_q(std::abs(b.birth - a.birth), q) + pow_q(std::abs(b.death - a.death), q);
}

inline double classical_diagonal_q(const PersistencePair& a, double q) {
  const double half = 0.5 * (a.death - a.birth);
  return pow_q(std::abs(half), q) + pow_q(std::abs(half), q);
}

inline double lifting_ground_q(const RegionAwarePair& a, const RegionAwarePair& b,
                               const GroundParams& p) {
  double geo = 0.0;
  for (std::size_t k = 0; k < 3; ++k)
    geo += pow_q(std::abs(b.normalized_coord[k] - a.normalized_coord[k]), p.q);
  return classical_ground_q(a.pair, b.pair, p.q) + p.w_lifting * geo;
}

inline double lifting_ground(const RegionAwarePair& a, const RegionAwarePair& b,
                             const GroundParams& p) {
  return root_q(lifting_ground_q(a, b, p), p.q);
}

inline double volume_ground_q(const RegionAwarePair& a, const RegionAwarePair& b,
                              const GroundParams& p) {
  return classical_ground_q(a.pair, b.pair, p.q) +
         p.w_volume * pow_q(std::abs(b.normalized_volume - a.normalized_volume), p.q);
}

inline double volume_ground(const RegionAwarePair& a, const RegionAwarePair& b,
                            const GroundParams& p) {
  return root_q(volume_ground_q(a, b, p), p.q);
}

}  // namespace rwass
