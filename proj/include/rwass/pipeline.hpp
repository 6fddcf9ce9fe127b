#pragma once

// Field -> simplified pairs -> BDT -> region-aware BDT, and the distance
// dispatch over the two representations.

#include <rwass/field_io.hpp>
#include <rwass/region_metric.hpp>
#include <rwass/topology.hpp>
#include <rwass/wasserstein.hpp>

#include <memory>
#include <string>

namespace rwass {

enum class Representation { Diagram, MergeTree };

inline const char* to_string(Representation r) {
  return r == Representation::Diagram ? "diagram" : "mergetree";
}

inline Representation parse_representation(const std::string& s) {
  if (s == "diagram") return Representation::Diagram;
  if (s == "mergetree") return Representation::MergeTree;
  throw InputError("unknown representation '" + s + "' (expected diagram or mergetree)");
}

struct AnalysisParams {
  TreeVariant variant = TreeVariant::Split;
  double simplify = 0.005;
  double eps1 = 0.05;
  double lambda = 0.1;
};

struct Analysis {
  std::shared_ptr<const ScalarGrid> grid;
  SweepResult sweep;  // after simplification
  BranchDecompositionTree raw_bdt;  // before saddle merging
  RegionAwareBdt full;  // unsubsampled regions
  RegionAwareBdt rbdt;  // subsampled regions, saddle-merged BDT
};

/// Applies lambda subsampling to every pair of `full`.
inline RegionAwareBdt subsampled(const RegionAwareBdt& full, double lambda) {
  RegionAwareBdt out = full;
  for (auto& p : out.pairs) p = subsample(p, lambda);
  return out;
}

inline Analysis analyze(std::shared_ptr<const ScalarGrid> grid, const AnalysisParams& ap) {
  Analysis a;
  a.grid = grid;
  a.sweep = simplify(compute_merge_tree(*grid, ap.variant), ap.simplify);
  a.raw_bdt = build_bdt(a.sweep.tree, a.sweep.pairs);
  a.full.pairs = make_region_aware(a.sweep.pairs, a.sweep.segmentation, grid);
  a.full.bdt = saddle_merge(a.raw_bdt, a.sweep.tree, a.sweep.pairs, ap.eps1);
  a.full.kind = pair_kind(ap.variant);
  a.rbdt = subsampled(a.full, ap.lambda);
  return a;
}

inline Analysis analyze(const ScalarGrid& grid, const AnalysisParams& ap) {
  return analyze(std::make_shared<const ScalarGrid>(grid), ap);
}

inline Matching distance(const RegionAwareBdt& a, const RegionAwareBdt& b, Representation rep,
                         const DistanceParams& p) {
  if (rep == Representation::Diagram) {
    if (a.kind != b.kind) throw ContractError("pair kind mismatch (min-saddle vs saddle-max)");
    return wasserstein_diagrams(a.pairs, b.pairs, p);
  }
  return wasserstein_bdt(a, b, p);
}

}  // namespace rwass
