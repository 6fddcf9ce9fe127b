#pragma once

// Wasserstein distances between diagrams (unconstrained assignment) and
// between branch decomposition trees (rooted partial isomorphisms), for the
// classical, lifting, volume and region-aware ground metrics.

#include <rwass/assignment.hpp>
#include <rwass/errors.hpp>
#include <rwass/region_metric.hpp>
#include <rwass/topology.hpp>

#include <algorithm>
#include <compare>
#include <cstddef>
#include <string>
#include <vector>

namespace rwass {

enum class Method { Classic, Lifting, Volume, Region };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Classic: return "classic";
    case Method::Lifting: return "lifting";
    case Method::Volume: return "volume";
    case Method::Region: return "region";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "classic") return Method::Classic;
  if (s == "lifting") return Method::Lifting;
  if (s == "volume") return Method::Volume;
  if (s == "region") return Method::Region;
  throw InputError("unknown method '" + s + "'");
}

struct DistanceParams {
  Method method = Method::Region;
  GroundParams ground;
};

inline constexpr std::ptrdiff_t kDiagonal = -1;

struct MatchEdge {
  std::ptrdiff_t source = kDiagonal;
  std::ptrdiff_t target = kDiagonal;
  double cost = 0.0;

  bool operator==(const MatchEdge&) const = default;
};

struct Matching {
  std::vector<MatchEdge> edges;
  double total = 0.0;
};

/// A region-aware BDT: one region-aware pair per BDT node, all of one kind.
struct RegionAwareBdt {
  std::vector<RegionAwarePair> pairs;
  BranchDecompositionTree bdt;
  PairKind kind = PairKind::SaddleMax;
};

inline double pair_cost_q(const RegionAwarePair& a, const RegionAwarePair& b,
                          const DistanceParams& p) {
  switch (p.method) {
    case Method::Classic: return classical_ground_q(a.pair, b.pair, p.ground.q);
    case Method::Lifting: return lifting_ground_q(a, b, p.ground);
    case Method::Volume: return volume_ground_q(a, b, p.ground);
    case Method::Region: return ground_distance_q(a, b, p.ground);
  }
  throw InvariantError("unhandled method");
}

/// Geometric terms of the lifting and volume metrics vanish on the diagonal
/// projection, so their deletion cost is the classical one.
inline double deletion_cost_q(const RegionAwarePair& a, const DistanceParams& p) {
  if (p.method == Method::Region) return projection_cost_q(a, p.ground);
  return classical_diagonal_q(a.pair, p.ground.q);
}

namespace detail {

template <class T>
std::strong_ordering order_of(const T& a, const T& b) {
  if (a < b) return std::strong_ordering::less;
  if (b < a) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

inline std::strong_ordering compare_pairs(const RegionAwarePair& a, const RegionAwarePair& b) {
  if (auto c = order_of(a.pair.birth, b.pair.birth); c != 0) return c;
  if (auto c = order_of(a.pair.death, b.pair.death); c != 0) return c;
  if (auto c = order_of(a.saddle_value, b.saddle_value); c != 0) return c;
  if (auto c = order_of(a.extremum_coord, b.extremum_coord); c != 0) return c;
  if (auto c = order_of(a.normalized_coord, b.normalized_coord); c != 0) return c;
  if (auto c = order_of(a.normalized_volume, b.normalized_volume); c != 0) return c;
  if (auto c = order_of(a.members.size(), b.members.size()); c != 0) return c;
  for (std::size_t k = 0; k < a.members.size(); ++k) {
    if (auto c = order_of(a.members[k].offset, b.members[k].offset); c != 0) return c;
    if (auto c = order_of(a.members[k].value, b.members[k].value); c != 0) return c;
  }
  if (a.source && b.source && a.source != b.source) {
    if (auto c = order_of(a.source->dims(), b.source->dims()); c != 0) return c;
    if (auto c = order_of(a.source->values(), b.source->values()); c != 0) return c;
  }
  return std::strong_ordering::equal;
}

inline std::strong_ordering compare_diagrams(const std::vector<RegionAwarePair>& a,
                                             const std::vector<RegionAwarePair>& b) {
  if (auto c = order_of(a.size(), b.size()); c != 0) return c;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (auto c = compare_pairs(a[i], b[i]); c != 0) return c;
  return std::strong_ordering::equal;
}

inline void check_kinds(const std::vector<RegionAwarePair>& a, const std::vector<RegionAwarePair>& b) {
  const RegionAwarePair* first = !a.empty() ? &a.front() : (!b.empty() ? &b.front() : nullptr);
  if (!first) return;
  for (const auto* side : {&a, &b})
    for (const auto& p : *side)
      if (p.pair.kind != first->pair.kind)
        throw ContractError("pair kind mismatch (min-saddle vs saddle-max)");
}

inline Matching transposed(Matching m) {
  for (auto& e : m.edges) std::swap(e.source, e.target);
  std::sort(m.edges.begin(), m.edges.end(), [](const MatchEdge& x, const MatchEdge& y) {
    return std::pair(x.source, x.target) < std::pair(y.source, y.target);
  });
  return m;
}

// augmented matrix: rows = a-items then diagonal copies of b-items,
// columns = b-items then diagonal copies of a-items
inline std::vector<std::vector<double>> augmented(const std::vector<std::vector<double>>& match,
                                                  const std::vector<double>& del_a,
                                                  const std::vector<double>& del_b) {
  const std::size_t na = del_a.size(), nb = del_b.size(), n = na + nb;
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) m[i][j] = match[i][j];
    for (std::size_t j = nb; j < n; ++j) m[i][j] = del_a[i];
  }
  for (std::size_t i = na; i < n; ++i)
    for (std::size_t j = 0; j < nb; ++j) m[i][j] = del_b[j];
  return m;
}

inline Matching diagrams_oriented(const std::vector<RegionAwarePair>& a,
                                  const std::vector<RegionAwarePair>& b, const DistanceParams& p) {
  auto global_of = [](const std::vector<RegionAwarePair>& d) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d[i].pair.is_global()) return static_cast<std::ptrdiff_t>(i);
    return -1;
  };
  const auto ga = global_of(a), gb = global_of(b);
  const bool forced = ga >= 0 && gb >= 0;
  std::vector<std::size_t> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!forced || static_cast<std::ptrdiff_t>(i) != ga) ra.push_back(i);
  for (std::size_t j = 0; j < b.size(); ++j)
    if (!forced || static_cast<std::ptrdiff_t>(j) != gb) rb.push_back(j);

  std::vector<std::vector<double>> match(ra.size(), std::vector<double>(rb.size()));
  std::vector<double> del_a(ra.size()), del_b(rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    del_a[i] = deletion_cost_q(a[ra[i]], p);
    for (std::size_t j = 0; j < rb.size(); ++j) match[i][j] = pair_cost_q(a[ra[i]], b[rb[j]], p);
  }
  for (std::size_t j = 0; j < rb.size(); ++j) del_b[j] = deletion_cost_q(b[rb[j]], p);
  const auto sol = solve_assignment(augmented(match, del_a, del_b));

  Matching out;
  double total_q = 0.0;
  const double q = p.ground.q;
  if (forced) {
    total_q = pair_cost_q(a[static_cast<std::size_t>(ga)], b[static_cast<std::size_t>(gb)], p);
    out.edges.push_back({ga, gb, root_q(total_q, q)});
  }
  total_q += sol.total;
  for (std::size_t i = 0; i < sol.col_of_row.size(); ++i) {
    const std::size_t j = sol.col_of_row[i];
    if (i < ra.size() && j < rb.size())
      out.edges.push_back({static_cast<std::ptrdiff_t>(ra[i]), static_cast<std::ptrdiff_t>(rb[j]),
                           root_q(match[i][j], q)});
    else if (i < ra.size())
      out.edges.push_back({static_cast<std::ptrdiff_t>(ra[i]), kDiagonal, root_q(del_a[i], q)});
    else if (j < rb.size())
      out.edges.push_back({kDiagonal, static_cast<std::ptrdiff_t>(rb[j]), root_q(del_b[j], q)});
  }
  std::sort(out.edges.begin(), out.edges.end(), [](const MatchEdge& x, const MatchEdge& y) {
    return std::pair(x.source, x.target) < std::pair(y.source, y.target);
  });
  out.total = root_q(total_q, q);
  return out;
}

}  // namespace detail

/// Wasserstein distance between two diagrams given as region-aware pairs.
/// When both contain a global pair, the two global pairs are matched to
/// each other. The computation runs in a canonical operand order so the
/// result is exactly symmetric.
inline Matching wasserstein_diagrams(const std::vector<RegionAwarePair>& a,
                                     const std::vector<RegionAwarePair>& b,
                                     const DistanceParams& p) {
  p.ground.validate();
  detail::check_kinds(a, b);
  if (detail::compare_diagrams(b, a) < 0) return detail::transposed(detail::diagrams_oriented(b, a, p));
  return detail::diagrams_oriented(a, b, p);
}

namespace detail {

inline std::vector<std::size_t> post_order(const BranchDecompositionTree& t,
                                           const std::vector<std::vector<std::size_t>>& kids) {
  std::vector<std::size_t> out, stack{t.root};
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    out.push_back(v);
    for (auto c : kids[v]) stack.push_back(c);
  }
  if (out.size() != t.size()) throw ContractError("BDT is not a single rooted tree");
  std::reverse(out.begin(), out.end());
  return out;
}

class BdtSolver {
 public:
  BdtSolver(const RegionAwareBdt& a, const RegionAwareBdt& b, const DistanceParams& p)
      : a_(a), b_(b), p_(p), kids_a_(a.bdt.children()), kids_b_(b.bdt.children()) {
    const auto order_a = post_order(a.bdt, kids_a_);
    const auto order_b = post_order(b.bdt, kids_b_);
    del_a_ = subtree_deletions(a, kids_a_, order_a);
    del_b_ = subtree_deletions(b, kids_b_, order_b);
    table_.assign(a.pairs.size(), std::vector<double>(b.pairs.size(), 0.0));
    for (auto i : order_a)
      for (auto j : order_b) table_[i][j] = pair_cost_q(a.pairs[i], b.pairs[j], p) + forest(i, j).total;
  }

  Matching matching() const {
    Matching m;
    collect(a_.bdt.root, b_.bdt.root, m);
    std::sort(m.edges.begin(), m.edges.end(), [](const MatchEdge& x, const MatchEdge& y) {
      return std::pair(x.source, x.target) < std::pair(y.source, y.target);
    });
    m.total = root_q(table_[a_.bdt.root][b_.bdt.root], p_.ground.q);
    return m;
  }

 private:
  std::vector<double> subtree_deletions(const RegionAwareBdt& t,
                                        const std::vector<std::vector<std::size_t>>& kids,
                                        const std::vector<std::size_t>& order) const {
    std::vector<double> del(t.pairs.size(), 0.0);
    for (auto v : order) {
      double s = deletion_cost_q(t.pairs[v], p_);
      for (auto c : kids[v]) s += del[c];
      del[v] = s;
    }
    return del;
  }

  Assignment forest(std::size_t i, std::size_t j) const {
    const auto& ca = kids_a_[i];
    const auto& cb = kids_b_[j];
    std::vector<std::vector<double>> match(ca.size(), std::vector<double>(cb.size()));
    std::vector<double> da(ca.size()), db(cb.size());
    for (std::size_t x = 0; x < ca.size(); ++x) {
      da[x] = del_a_[ca[x]];
      for (std::size_t y = 0; y < cb.size(); ++y) match[x][y] = table_[ca[x]][cb[y]];
    }
    for (std::size_t y = 0; y < cb.size(); ++y) db[y] = del_b_[cb[y]];
    return solve_assignment(augmented(match, da, db));
  }

  void delete_subtree(const RegionAwareBdt& t, const std::vector<std::vector<std::size_t>>& kids,
                      std::size_t v, bool source_side, Matching& m) const {
    const double c = root_q(deletion_cost_q(t.pairs[v], p_), p_.ground.q);
    const auto id = static_cast<std::ptrdiff_t>(v);
    m.edges.push_back(source_side ? MatchEdge{id, kDiagonal, c} : MatchEdge{kDiagonal, id, c});
    for (auto k : kids[v]) delete_subtree(t, kids, k, source_side, m);
  }

  void collect(std::size_t i, std::size_t j, Matching& m) const {
    m.edges.push_back({static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(j),
                       root_q(pair_cost_q(a_.pairs[i], b_.pairs[j], p_), p_.ground.q)});
    const auto& ca = kids_a_[i];
    const auto& cb = kids_b_[j];
    const auto sol = forest(i, j);
    for (std::size_t x = 0; x < sol.col_of_row.size(); ++x) {
      const std::size_t y = sol.col_of_row[x];
      if (x < ca.size() && y < cb.size())
        collect(ca[x], cb[y], m);
      else if (x < ca.size())
        delete_subtree(a_, kids_a_, ca[x], true, m);
      else if (y < cb.size())
        delete_subtree(b_, kids_b_, cb[y], false, m);
    }
  }

  const RegionAwareBdt& a_;
  const RegionAwareBdt& b_;
  const DistanceParams& p_;
  std::vector<std::vector<std::size_t>> kids_a_, kids_b_;
  std::vector<double> del_a_, del_b_;
  std::vector<std::vector<double>> table_;
};

inline std::strong_ordering compare_bdts(const RegionAwareBdt& a, const RegionAwareBdt& b) {
  if (auto c = compare_diagrams(a.pairs, b.pairs); c != 0) return c;
  return order_of(a.bdt.parent, b.bdt.parent);
}

}  // namespace detail

/// Distance over rooted partial isomorphisms: roots are matched, a matched
/// node's children are assigned to the other side's children or deleted
/// together with their subtrees.
inline Matching wasserstein_bdt(const RegionAwareBdt& a, const RegionAwareBdt& b,
                                const DistanceParams& p) {
  p.ground.validate();
  if (a.bdt.eps1 != b.bdt.eps1)
    throw ContractError("BDTs were preprocessed with different eps1");
  if (a.pairs.size() != a.bdt.size() || b.pairs.size() != b.bdt.size())
    throw ContractError("BDT and region-aware pair list differ in size");
  if (a.pairs.empty() || b.pairs.empty()) throw ContractError("empty BDT");
  if (a.kind != b.kind) throw ContractError("pair kind mismatch (min-saddle vs saddle-max)");
  detail::check_kinds(a.pairs, b.pairs);
  if (detail::compare_bdts(b, a) < 0) return detail::transposed(detail::BdtSolver(b, a, p).matching());
  return detail::BdtSolver(a, b, p).matching();
}

}  // namespace rwass
