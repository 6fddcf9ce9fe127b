#pragma once

// Merge trees, extremum persistence pairs and the vertex -> pair segmentation
// from a single union-find sweep over a regular grid, plus persistence
// simplification, branch decomposition trees and saddle merging.

#include <rwass/errors.hpp>
#include <rwass/field_io.hpp>

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace rwass {

/// Join trees sweep sublevel sets (min-saddle pairs); split trees sweep
/// superlevel sets (saddle-max pairs).
enum class TreeVariant { Join, Split };
enum class PairKind { MinSaddle, SaddleMax };

inline PairKind pair_kind(TreeVariant v) {
  return v == TreeVariant::Join ? PairKind::MinSaddle : PairKind::SaddleMax;
}

inline const char* to_string(PairKind k) {
  return k == PairKind::MinSaddle ? "min-saddle" : "saddle-max";
}

struct PersistencePair {
  Vertex extremum_vertex = 0;
  std::optional<Vertex> saddle_vertex;  // empty for the global pair
  double birth = 0.0;
  double death = 0.0;
  PairKind kind = PairKind::SaddleMax;

  bool is_global() const { return !saddle_vertex.has_value(); }
  double persistence() const { return death - birth; }
  double extremum_value() const { return kind == PairKind::MinSaddle ? birth : death; }
  /// For the global pair this is the cropped value (the opposite global extremum).
  double saddle_value() const { return kind == PairKind::MinSaddle ? death : birth; }
};

enum class NodeKind { Extremum, Saddle, Regular };

struct TreeNode {
  Vertex vertex = 0;
  double value = 0.0;
  NodeKind kind = NodeKind::Regular;
  std::ptrdiff_t parent = -1;
};

struct MergeTree {
  TreeVariant variant = TreeVariant::Split;
  std::vector<TreeNode> nodes;
  std::size_t root = 0;
  double range = 0.0;  // global max - global min of the source field

  /// True when (va, a) is processed before (vb, b) by this tree's sweep.
  bool sweeps_before(double va, Vertex a, double vb, Vertex b) const {
    const bool ascending = va < vb || (va == vb && a < b);
    return variant == TreeVariant::Join ? ascending : !ascending && !(va == vb && a == b);
  }

  std::optional<std::size_t> node_of(Vertex v) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].vertex == v) return i;
    return std::nullopt;
  }
};

struct Segmentation {
  std::vector<std::size_t> pair_of;  // vertex -> pair id
};

struct BranchDecompositionTree {
  std::vector<std::ptrdiff_t> parent;  // -1 for the root
  std::size_t root = 0;
  double eps1 = 0.0;  // saddle-merge threshold applied, 0 if none

  std::size_t size() const { return parent.size(); }

  std::vector<std::vector<std::size_t>> children() const {
    std::vector<std::vector<std::size_t>> out(parent.size());
    for (std::size_t i = 0; i < parent.size(); ++i)
      if (parent[i] >= 0) out[static_cast<std::size_t>(parent[i])].push_back(i);
    return out;
  }

  std::size_t depth() const {
    std::size_t best = 0;
    for (std::size_t i = 0; i < parent.size(); ++i) {
      std::size_t d = 0;
      for (auto p = parent[i]; p >= 0; p = parent[static_cast<std::size_t>(p)]) ++d;
      best = std::max(best, d);
    }
    return best;
  }
};

/// Output of one sweep. `merged_into[i]` is the pair that survived at the
/// death of pair i (-1 for the global pair); pair 0 is always the global pair
/// and pair ids follow extremum creation order, so parents have smaller ids.
struct SweepResult {
  MergeTree tree;
  std::vector<PersistencePair> pairs;
  Segmentation segmentation;
  std::vector<std::ptrdiff_t> merged_into;
};

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  std::size_t unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return a;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned char> rank_;
};

inline PersistencePair make_pair_values(PairKind kind, Vertex extremum, double ext_value,
                                        std::optional<Vertex> saddle, double saddle_value) {
  PersistencePair p;
  p.kind = kind;
  p.extremum_vertex = extremum;
  p.saddle_vertex = saddle;
  if (kind == PairKind::MinSaddle) {
    p.birth = ext_value;
    p.death = saddle_value;
  } else {
    p.birth = saddle_value;
    p.death = ext_value;
  }
  return p;
}

// Nodes of `tree` owned by each pair's persistent branch: the nodes strictly
// after the extremum up to (excluding) the pair's own saddle; the global
// branch also owns the root.
inline std::vector<std::ptrdiff_t> branch_owners(const MergeTree& tree,
                                                 const std::vector<PersistencePair>& pairs,
                                                 const std::unordered_map<Vertex, std::size_t>& node_of) {
  std::vector<std::ptrdiff_t> owner(tree.nodes.size(), -1);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto it = node_of.find(pairs[i].extremum_vertex);
    if (it == node_of.end()) throw ContractError("pair extremum is not a tree node");
    std::size_t stop = tree.root;
    if (!pairs[i].is_global()) {
      const auto s = node_of.find(*pairs[i].saddle_vertex);
      if (s == node_of.end()) throw ContractError("pair saddle is not a tree node");
      stop = s->second;
    }
    std::size_t cur = it->second;
    while (cur != stop) {
      const auto up = tree.nodes[cur].parent;
      if (up < 0) throw ContractError("branch path of pair " + std::to_string(i) + " misses its saddle");
      cur = static_cast<std::size_t>(up);
      if (cur != stop || pairs[i].is_global()) {
        if (owner[cur] >= 0 && owner[cur] != static_cast<std::ptrdiff_t>(i))
          throw ContractError("tree node lies on two persistent branches");
        owner[cur] = static_cast<std::ptrdiff_t>(i);
      }
    }
  }
  return owner;
}

inline std::unordered_map<Vertex, std::size_t> index_nodes(const MergeTree& tree) {
  std::unordered_map<Vertex, std::size_t> out;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) out.emplace(tree.nodes[i].vertex, i);
  return out;
}

}  // namespace detail

/// Rebuilds the merge tree implied by a set of pairs and their survivor
/// links: each branch runs from its extremum through the saddles of the
/// pairs that died into it (in sweep order) to its own saddle.
inline MergeTree merge_tree_from_branches(TreeVariant variant,
                                          const std::vector<PersistencePair>& pairs,
                                          const std::vector<std::ptrdiff_t>& merged_into,
                                          Vertex root_vertex, double root_value, double range) {
  MergeTree tree;
  tree.variant = variant;
  tree.range = range;
  std::unordered_map<Vertex, std::size_t> node_of;
  auto add = [&](Vertex v, double value, NodeKind kind) {
    auto [it, fresh] = node_of.emplace(v, tree.nodes.size());
    if (fresh) tree.nodes.push_back({v, value, kind, -1});
    return it->second;
  };
  for (const auto& p : pairs) add(p.extremum_vertex, p.extremum_value(), NodeKind::Extremum);
  for (const auto& p : pairs)
    if (!p.is_global()) add(*p.saddle_vertex, p.saddle_value(), NodeKind::Saddle);
  tree.root = add(root_vertex, root_value, NodeKind::Regular);

  std::vector<std::vector<std::size_t>> dying(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (merged_into[i] >= 0) dying[static_cast<std::size_t>(merged_into[i])].push_back(i);

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::vector<std::size_t> path{node_of.at(pairs[i].extremum_vertex)};
    std::vector<std::size_t> inner;
    for (auto c : dying[i]) inner.push_back(node_of.at(*pairs[c].saddle_vertex));
    std::sort(inner.begin(), inner.end(), [&](std::size_t a, std::size_t b) {
      return tree.sweeps_before(tree.nodes[a].value, tree.nodes[a].vertex, tree.nodes[b].value,
                                tree.nodes[b].vertex);
    });
    inner.erase(std::unique(inner.begin(), inner.end()), inner.end());
    path.insert(path.end(), inner.begin(), inner.end());
    const std::size_t end = pairs[i].is_global() ? tree.root : node_of.at(*pairs[i].saddle_vertex);
    if (path.back() != end) path.push_back(end);
    for (std::size_t k = 0; k + 1 < path.size(); ++k)
      tree.nodes[path[k]].parent = static_cast<std::ptrdiff_t>(path[k + 1]);
  }
  return tree;
}

/// Union-find sweep in VertexOrder (ascending for join, descending for
/// split). A component is born at each extremum; when components meet at a
/// vertex every younger component dies there (elder rule) and the vertex is
/// assigned to the oldest one. Every other vertex is assigned to the pair of
/// the component it joins.
inline SweepResult compute_merge_tree(const ScalarGrid& grid, TreeVariant variant) {
  const std::size_t n = grid.size();
  std::vector<Vertex> order = sorted_vertices(grid);
  if (variant == TreeVariant::Split) std::reverse(order.begin(), order.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) rank[order[i]] = i;

  const PairKind kind = pair_kind(variant);
  SweepResult out;
  out.segmentation.pair_of.assign(n, 0);
  detail::UnionFind uf(n);
  std::vector<std::size_t> comp_pair(n, 0);
  std::vector<std::size_t> roots;

  for (std::size_t pos = 0; pos < n; ++pos) {
    const Vertex v = order[pos];
    roots.clear();
    for (Vertex u : neighbors(grid, v))
      if (rank[u] < pos) roots.push_back(uf.find(u));
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());

    if (roots.empty()) {
      const std::size_t id = out.pairs.size();
      out.pairs.push_back(detail::make_pair_values(kind, v, grid[v], std::nullopt, grid[v]));
      out.merged_into.push_back(-1);
      comp_pair[v] = id;
      out.segmentation.pair_of[v] = id;
      continue;
    }
    // pair ids follow creation order: the smallest id is the oldest component
    std::size_t survivor = comp_pair[roots.front()];
    for (auto r : roots) survivor = std::min(survivor, comp_pair[r]);
    for (auto r : roots) {
      const std::size_t id = comp_pair[r];
      if (id == survivor) continue;
      auto& p = out.pairs[id];
      p = detail::make_pair_values(kind, p.extremum_vertex, grid[p.extremum_vertex], v, grid[v]);
      out.merged_into[id] = static_cast<std::ptrdiff_t>(survivor);
    }
    std::size_t top = v;
    for (auto r : roots) top = uf.unite(top, r);
    comp_pair[top] = survivor;
    out.segmentation.pair_of[v] = survivor;
  }

  const Vertex last = order.back();
  auto& global = out.pairs.front();
  global = detail::make_pair_values(kind, global.extremum_vertex, grid[global.extremum_vertex],
                                    std::nullopt, grid[last]);
  const auto [lo, hi] = grid.value_range();
  out.tree = merge_tree_from_branches(variant, out.pairs, out.merged_into, last, grid[last], hi - lo);
  return out;
}

/// Removes pairs whose persistence is below threshold_ratio x range; their
/// vertices move to the nearest surviving ancestor (the branch they died
/// into). A ratio of 1 keeps only the global pair. Pair ids are compacted in
/// order, so the global pair stays 0.
inline SweepResult simplify(const SweepResult& in, double threshold_ratio) {
  if (!(threshold_ratio >= 0.0 && threshold_ratio <= 1.0))
    throw InputError("simplification threshold must lie in [0, 1]");
  const std::size_t m = in.pairs.size();
  const double cutoff = threshold_ratio * in.tree.range;
  std::vector<std::size_t> target(m);
  std::vector<std::ptrdiff_t> new_id(m, -1);
  SweepResult out;
  out.tree.variant = in.tree.variant;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& p = in.pairs[i];
    const bool keep = p.is_global() ||
                      (threshold_ratio < 1.0 && !(p.persistence() < cutoff));
    if (keep) {
      new_id[i] = static_cast<std::ptrdiff_t>(out.pairs.size());
      out.pairs.push_back(p);
      target[i] = i;
    } else {
      target[i] = target[static_cast<std::size_t>(in.merged_into[i])];
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (new_id[i] < 0) continue;
    const auto up = in.merged_into[i];
    if (up >= 0 && new_id[static_cast<std::size_t>(up)] < 0)
      throw InvariantError("kept pair died into a removed pair");
    out.merged_into.push_back(up < 0 ? -1 : new_id[static_cast<std::size_t>(up)]);
  }
  out.segmentation.pair_of.resize(in.segmentation.pair_of.size());
  for (std::size_t v = 0; v < in.segmentation.pair_of.size(); ++v)
    out.segmentation.pair_of[v] =
        static_cast<std::size_t>(new_id[target[in.segmentation.pair_of[v]]]);
  const auto& root = in.tree.nodes[in.tree.root];
  out.tree = merge_tree_from_branches(in.tree.variant, out.pairs, out.merged_into, root.vertex,
                                      root.value, in.tree.range);
  return out;
}

/// b_i is a child of b_j iff b_i's saddle lies on b_j's persistent branch.
inline BranchDecompositionTree build_bdt(const MergeTree& tree,
                                         const std::vector<PersistencePair>& pairs) {
  const auto node_of = detail::index_nodes(tree);
  const auto owner = detail::branch_owners(tree, pairs, node_of);
  BranchDecompositionTree bdt;
  bdt.parent.assign(pairs.size(), -1);
  std::size_t roots = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].is_global()) {
      bdt.root = i;
      ++roots;
      continue;
    }
    const auto o = owner[node_of.at(*pairs[i].saddle_vertex)];
    if (o < 0) throw ContractError("saddle of pair " + std::to_string(i) + " lies on no branch");
    bdt.parent[i] = o;
  }
  if (roots != 1) throw ContractError("expected exactly one global pair");
  return bdt;
}

/// Contracts merge-tree arcs between saddle nodes whose values differ by at
/// most eps1 x range, then re-derives BDT parents: a pair hangs from the
/// branch passing through the highest (last swept) node of its merged group.
/// Segmentation is untouched. eps1 = 0 is the identity; eps1 = 1 flattens.
inline BranchDecompositionTree saddle_merge(const BranchDecompositionTree& bdt,
                                            const MergeTree& tree,
                                            const std::vector<PersistencePair>& pairs,
                                            double eps1) {
  if (!(eps1 >= 0.0 && eps1 <= 1.0)) throw InputError("eps1 must lie in [0, 1]");
  if (bdt.size() != pairs.size()) throw ContractError("BDT and pair list differ in size");
  BranchDecompositionTree out = bdt;
  out.eps1 = eps1;
  if (eps1 == 0.0) return out;

  const auto node_of = detail::index_nodes(tree);
  const auto owner = detail::branch_owners(tree, pairs, node_of);
  const double threshold = eps1 * tree.range;
  detail::UnionFind groups(tree.nodes.size());
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& a = tree.nodes[i];
    if (a.parent < 0 || a.kind != NodeKind::Saddle) continue;
    const auto& b = tree.nodes[static_cast<std::size_t>(a.parent)];
    if (b.kind == NodeKind::Saddle && std::abs(a.value - b.value) <= threshold)
      groups.unite(i, static_cast<std::size_t>(a.parent));
  }
  std::vector<std::ptrdiff_t> top(tree.nodes.size(), -1);
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto g = groups.find(i);
    if (top[g] < 0) {
      top[g] = static_cast<std::ptrdiff_t>(i);
      continue;
    }
    const auto& cur = tree.nodes[static_cast<std::size_t>(top[g])];
    if (tree.sweeps_before(cur.value, cur.vertex, tree.nodes[i].value, tree.nodes[i].vertex))
      top[g] = static_cast<std::ptrdiff_t>(i);
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].is_global()) continue;
    const auto s = node_of.at(*pairs[i].saddle_vertex);
    const auto o = owner[static_cast<std::size_t>(top[groups.find(s)])];
    if (o < 0) throw InvariantError("merged saddle group lies on no branch");
    out.parent[i] = o;
  }
  return out;
}

}  // namespace rwass
