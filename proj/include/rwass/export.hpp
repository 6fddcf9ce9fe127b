#pragma once

// JSON exports for diagrams, region-aware BDTs and matchings.

#include <rwass/pipeline.hpp>
#include <rwass/region_metric.hpp>
#include <rwass/topology.hpp>
#include <rwass/wasserstein.hpp>

#include <nlohmann/json.hpp>

#include <vector>

namespace rwass {

inline nlohmann::json pair_json(std::size_t id, const PersistencePair& p, std::ptrdiff_t parent) {
  nlohmann::json j;
  j["id"] = id;
  j["kind"] = to_string(p.kind);
  j["birth"] = p.birth;
  j["death"] = p.death;
  j["extremum_vertex"] = p.extremum_vertex;
  j["saddle_vertex"] = p.saddle_vertex ? nlohmann::json(*p.saddle_vertex) : nlohmann::json(nullptr);
  j["parent_id"] = parent >= 0 ? nlohmann::json(parent) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json diagram_json(const std::vector<PersistencePair>& pairs,
                                   const BranchDecompositionTree& bdt) {
  auto out = nlohmann::json::array();
  for (std::size_t i = 0; i < pairs.size(); ++i) out.push_back(pair_json(i, pairs[i], bdt.parent[i]));
  return out;
}

/// Run lengths over the bbox in row-major order, alternating absent and
/// present runs and starting with an absent run (possibly 0).
inline std::vector<std::size_t> mask_rle(const RegionAwarePair& r) {
  std::size_t ext[3];
  for (std::size_t k = 0; k < 3; ++k) ext[k] = static_cast<std::size_t>(r.bbox_hi[k] - r.bbox_lo[k] + 1);
  std::vector<char> mask(ext[0] * ext[1] * ext[2], 0);
  for (const auto& m : r.members) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < 3; ++k)
      idx = idx * ext[k] + static_cast<std::size_t>(r.extremum_coord[k] + m.offset[k] - r.bbox_lo[k]);
    mask[idx] = 1;
  }
  std::vector<std::size_t> runs;
  char cur = 0;
  std::size_t len = 0;
  for (char c : mask) {
    if (c != cur) {
      runs.push_back(len);
      cur = c;
      len = 0;
    }
    ++len;
  }
  runs.push_back(len);
  return runs;
}

inline nlohmann::json regions_json(const RegionAwareBdt& t) {
  auto out = nlohmann::json::array();
  for (std::size_t i = 0; i < t.pairs.size(); ++i) {
    const auto& r = t.pairs[i];
    auto j = pair_json(i, r.pair, t.bdt.parent[i]);
    auto coords = [&](const Coord& c) {
      return std::vector<int>(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(r.dimension));
    };
    j["extremum_coord"] = coords(r.extremum_coord);
    j["bbox"] = {{"lo", coords(r.bbox_lo)}, {"hi", coords(r.bbox_hi)}};
    j["stride"] = r.stride;
    j["region_size"] = r.region_size;
    j["kept"] = r.members.size();
    j["mask_rle"] = mask_rle(r);
    out.push_back(std::move(j));
  }
  return out;
}

inline nlohmann::json matching_json(const Matching& m) {
  nlohmann::json j;
  j["total"] = m.total;
  auto edges = nlohmann::json::array();
  for (const auto& e : m.edges)
    edges.push_back({{"source", e.source == kDiagonal ? nlohmann::json("diagonal") : nlohmann::json(e.source)},
                     {"target", e.target == kDiagonal ? nlohmann::json("diagonal") : nlohmann::json(e.target)},
                     {"cost", e.cost}});
  j["edges"] = std::move(edges);
  return j;
}

inline ScalarGrid segmentation_grid(const Segmentation& seg, const ScalarGrid& like) {
  std::vector<double> ids(seg.pair_of.begin(), seg.pair_of.end());
  return ScalarGrid(like.dims(), std::move(ids), like.spacing(), "segmentation");
}

}  // namespace rwass
