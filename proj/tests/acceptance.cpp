// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.

#include <rwass/assignment.hpp>
#include <rwass/compression.hpp>
#include <rwass/ensemble.hpp>
#include <rwass/pipeline.hpp>

#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace rwass;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

// accumulates the first few failure messages
struct Check {
  bool ok = true;
  std::ostringstream why;
  int reported = 0;
  void require(bool cond, const std::string& msg) {
    if (cond) return;
    ok = false;
    if (reported++ < 3) why << (reported > 1 ? "; " : "") << msg;
  }
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

AnalysisParams params(double simplify, double eps1, double lambda) {
  return {TreeVariant::Split, simplify, eps1, lambda};
}

DistanceParams method(Method m, double q = 2.0, Background bg = Background::Null) {
  DistanceParams p;
  p.method = m;
  p.ground.q = q;
  p.ground.background = bg;
  return p;
}

ScalarGrid transpose(const ScalarGrid& g) {
  const std::size_t n0 = g.dims()[0], n1 = g.dims()[1];
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < n0; ++i)
    for (std::size_t j = 0; j < n1; ++j) v[j * n0 + i] = g[i * n1 + j];
  return ScalarGrid({n1, n0}, v);
}

// a smooth field plus a tiny tie breaker
ScalarGrid hills_field(const std::vector<std::size_t>& dims, std::size_t count, std::uint64_t seed) {
  return add_noise(synth_hills(dims, random_hills(dims, count, seed)), 1e-6, seed + 7);
}

// ---------------------------------------------------------------------------

Outcome diagram_oracle() {
  Check c;
  std::mt19937_64 rng(1001);
  const auto t0 = Clock::now();
  for (int it = 0; it < 500; ++it) {
    const auto g = oracle::random_grid(rng, 4, it % 2 == 0);
    for (bool split : {true, false}) {
      const auto r = compute_merge_tree(g, split ? TreeVariant::Split : TreeVariant::Join);
      const auto o = oracle::diagram(g, split);
      c.require(oracle::as_oracle(r.pairs) == o.pairs, "pairs differ on grid " + std::to_string(it));
      c.require(r.segmentation.pair_of == o.pair_of, "segmentation differs on grid " + std::to_string(it));
    }
  }
  const double t = seconds_since(t0);
  c.require(t < 30.0, "took " + fmt(t) + " s");
  return {c.ok, c.ok ? "500 grids, join and split, " + fmt(t) + " s" : c.why.str()};
}

Outcome partition() {
  Check c;
  std::mt19937_64 rng(1001);
  for (int it = 0; it < 500; ++it) {
    auto g = std::make_shared<const ScalarGrid>(oracle::random_grid(rng, 4, it % 2 == 0));
    for (auto variant : {TreeVariant::Split, TreeVariant::Join}) {
      const auto r = compute_merge_tree(*g, variant);
      const auto regions = make_region_aware(r.pairs, r.segmentation, g);
      std::vector<int> owner(g->size(), -1);
      for (std::size_t i = 0; i < regions.size(); ++i)
        for (const auto& m : regions[i].members) {
          Coord at{};
          for (std::size_t k = 0; k < 3; ++k) at[k] = regions[i].extremum_coord[k] + m.offset[k];
          const Vertex v = g->index(at);
          c.require(owner[v] < 0, "vertex in two regions on grid " + std::to_string(it));
          owner[v] = static_cast<int>(i);
        }
      c.require(std::find(owner.begin(), owner.end(), -1) == owner.end(),
                "domain not covered on grid " + std::to_string(it));
      for (std::size_t i = 0; i < r.pairs.size(); ++i) {
        std::size_t extrema_inside = 0;
        for (const auto& p : r.pairs)
          if (owner[p.extremum_vertex] == static_cast<int>(i)) ++extrema_inside;
        c.require(extrema_inside == 1, "region without exactly one extremum on grid " + std::to_string(it));
        c.require(owner[r.pairs[i].extremum_vertex] == static_cast<int>(i), "extremum outside its region");
        if (r.pairs[i].saddle_vertex)
          c.require(owner[*r.pairs[i].saddle_vertex] != static_cast<int>(i),
                    "region holds its own saddle on grid " + std::to_string(it));
      }
    }
  }
  return {c.ok, c.ok ? "500 grids, join and split" : c.why.str()};
}

Outcome metric_axioms() {
  Check c;
  std::mt19937_64 rng(1003);
  const auto t0 = Clock::now();
  const GroundParams gp;
  double worst = 0.0;
  auto triangle = [&](double ab, double bc, double ac, const std::string& what) {
    const double slack = ac - (ab + bc);
    if (slack > 0) worst = std::max(worst, slack / std::max(ac, 1e-300));
    c.require(ac <= (ab + bc) * (1 + 1e-9), what + " triangle violated");
  };
  for (int it = 0; it < 1000; ++it) {
    const auto a = oracle::random_region_pair(rng), b = oracle::random_region_pair(rng),
               d = oracle::random_region_pair(rng);
    const double ab = ground_distance(a, b, gp), bd = ground_distance(b, d, gp), ad = ground_distance(a, d, gp);
    c.require(ab == ground_distance(b, a, gp), "pair distance not symmetric");
    c.require(ground_distance(a, a, gp) == 0.0, "pair self-distance not 0");
    triangle(ab, bd, ad, "pair");
  }
  const auto p = method(Method::Region);
  for (int it = 0; it < 200; ++it) {
    const auto a = oracle::random_bdt(rng, 5), b = oracle::random_bdt(rng, 5), d = oracle::random_bdt(rng, 5);
    const double ab = wasserstein_bdt(a, b, p).total, bd = wasserstein_bdt(b, d, p).total,
                 ad = wasserstein_bdt(a, d, p).total;
    c.require(ab == wasserstein_bdt(b, a, p).total, "tree distance not symmetric");
    c.require(wasserstein_bdt(a, a, p).total == 0.0, "tree self-distance not 0");
    triangle(ab, bd, ad, "tree");
  }
  const double t = seconds_since(t0);
  c.require(t < 120.0, "took " + fmt(t) + " s");
  return {c.ok, c.ok ? "1000 pair and 200 tree triples, worst relative violation " + fmt(worst) + ", " + fmt(t) + " s"
                     : c.why.str()};
}

Outcome classical_reduction() {
  Check c;
  double worst = 0.0;
  const std::vector<std::size_t> dims{24, 24};
  for (std::uint64_t it = 0; it < 100; ++it) {
    const auto ap = params(0.005, 1.0, 1.0);
    const auto a = analyze(hills_field(dims, 4 + it % 7, 2 * it), ap);
    const auto b = analyze(hills_field(dims, 4 + (it * 3) % 7, 2 * it + 1), ap);
    const double ref = oracle::classical_wasserstein(a.sweep.pairs, b.sweep.pairs, 2.0);
    for (auto rep : {Representation::Diagram, Representation::MergeTree}) {
      const double rw = distance(a.rbdt, b.rbdt, rep, method(Method::Region)).total;
      const double rel = std::abs(rw - ref) / std::max(ref, 1e-300);
      worst = std::max(worst, rel);
      c.require(rel <= 1e-9, std::string(to_string(rep)) + " off by " + fmt(rel) + " on pair " + std::to_string(it));
    }
  }
  return {c.ok, c.ok ? "100 field pairs, diagram and tree paths, worst relative error " + fmt(worst) : c.why.str()};
}

Outcome assignment_exactness() {
  Check c;
  std::mt19937_64 rng(1005);
  int count = 0;
  for (int it = 0; it < 300; ++it) {
    const std::size_t na = static_cast<std::size_t>(it % 7);
    const std::size_t nb = static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 6 - static_cast<int>(na))(rng));
    if (na + nb == 0) continue;
    const auto p = method(static_cast<Method>(it % 4), it % 3 == 0 ? 1.0 : 2.0);
    std::vector<RegionAwarePair> a, b;
    for (std::size_t i = 0; i < na; ++i) a.push_back(oracle::random_region_pair(rng));
    for (std::size_t j = 0; j < nb; ++j) b.push_back(oracle::random_region_pair(rng));
    std::vector<std::vector<double>> match(na, std::vector<double>(nb));
    std::vector<double> da(na), db(nb);
    for (std::size_t i = 0; i < na; ++i) {
      da[i] = deletion_cost_q(a[i], p);
      for (std::size_t j = 0; j < nb; ++j) match[i][j] = pair_cost_q(a[i], b[j], p);
    }
    for (std::size_t j = 0; j < nb; ++j) db[j] = deletion_cost_q(b[j], p);
    const auto m = detail::augmented(match, da, db);
    const double got = solve_assignment(m).total, want = oracle::assignment(m);
    c.require(got == want, "instance " + std::to_string(it) + ": " + fmt(got) + " vs " + fmt(want));
    ++count;
  }
  c.require(count >= 200, "only " + std::to_string(count) + " instances");
  return {c.ok, c.ok ? std::to_string(count) + " augmented problems up to 6x6" : c.why.str()};
}

Outcome bdt_exactness() {
  Check c;
  std::mt19937_64 rng(1006);
  for (int it = 0; it < 150; ++it) {
    const auto p = method(it % 2 ? Method::Region : Method::Classic, it % 5 == 0 ? 1.0 : 2.0);
    const auto a = oracle::random_bdt(rng, 5), b = oracle::random_bdt(rng, 5);
    const double got = wasserstein_bdt(a, b, p).total, want = oracle::bdt_distance(a, b, p);
    c.require(got == want, "instance " + std::to_string(it) + ": " + fmt(got) + " vs " + fmt(want));
  }
  return {c.ok, c.ok ? "150 tree pairs up to 5 nodes" : c.why.str()};
}

Outcome discriminativity() {
  Check c;
  // m = 24: strides 1, 2, 4, 8, 24 form a divisibility chain
  const std::vector<double> lambdas{0.0, 1.0 / 24, 3.0 / 24, 7.0 / 24, 23.0 / 24};
  const std::vector<std::size_t> dims{24, 24};
  for (std::uint64_t it = 0; it < 100; ++it) {
    const auto a = analyze(hills_field(dims, 6, 3000 + 2 * it), params(0.005, 0.05, 0.0));
    const auto b = analyze(hills_field(dims, 6, 3001 + 2 * it), params(0.005, 0.05, 0.0));
    for (auto rep : {Representation::Diagram, Representation::MergeTree}) {
      double prev = std::numeric_limits<double>::infinity();
      for (double l : lambdas) {
        const double d = distance(subsampled(a.full, l), subsampled(b.full, l), rep, method(Method::Region)).total;
        c.require(d <= prev, std::string(to_string(rep)) + " increased at lambda " + fmt(l) + " on pair " +
                                 std::to_string(it));
        prev = d;
      }
    }
  }
  // identical diagrams, one ridge turned by 90 degrees
  std::vector<double> va(32 * 32);
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) {
      const double x = i - 15.3, y = j - 15.7;
      va[static_cast<std::size_t>(i * 32 + j)] = std::exp(-(x * x / 40 + y * y / 6));
    }
  const ScalarGrid ga({32, 32}, va);
  const auto a = analyze(ga, params(0.005, 0.05, 0.1)), b = analyze(transpose(ga), params(0.005, 0.05, 0.1));
  const double classic = distance(a.rbdt, b.rbdt, Representation::Diagram, method(Method::Classic)).total;
  const double region = distance(a.rbdt, b.rbdt, Representation::Diagram, method(Method::Region)).total;
  c.require(classic == 0.0, "classical distance " + fmt(classic) + " on the turned ridge");
  c.require(region > 0.0, "region-aware distance 0 on the turned ridge");
  return {c.ok, c.ok ? "100 pairs monotone over strides 1,2,4,8,24; turned ridge classic 0, region " + fmt(region)
                     : c.why.str()};
}

// a five-armed star or a disc, centered at (ci, cj)
double bump(double i, double j, double ci, double cj, double h, bool star) {
  const double x = i - ci, y = j - cj;
  const double r2 = x * x + y * y;
  double w = 4.0;
  if (star) w *= 1.0 + 0.7 * std::cos(5.0 * std::atan2(y, x));
  return h * std::exp(-r2 / (2 * w * w));
}

ScalarGrid circle_star(double h_circle, double h_star) {
  const std::size_t n = 64;
  std::vector<double> v(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double x = static_cast<double>(i), y = static_cast<double>(j);
      v[i * n + j] = bump(x, y, 14.2, 14.6, h_circle, false) + bump(x, y, 14.4, 49.3, h_star, true) +
                     bump(x, y, 49.1, 31.8, 1.6, false) * 1.0 + 1e-4 * (x + 0.37 * y) / 64.0;
    }
  return ScalarGrid({n, n}, v);
}

Outcome matching_witness() {
  Check c;
  // the star lobes add maxima below 2% of the range
  const auto ap = params(0.02, 0.05, 0.0);
  const auto a = analyze(circle_star(1.0, 0.8), ap), b = analyze(circle_star(0.8, 1.0), ap);
  auto find = [&](const Analysis& x, int ci, int cj) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < x.rbdt.pairs.size(); ++i) {
      const auto& e = x.rbdt.pairs[i].extremum_coord;
      if (std::abs(e[0] - ci) <= 1 && std::abs(e[1] - cj) <= 1) return static_cast<std::ptrdiff_t>(i);
    }
    return -2;
  };
  const auto ca = find(a, 14, 15), sa = find(a, 14, 49), cb = find(b, 14, 15), sb = find(b, 14, 49);
  c.require(ca >= 0 && sa >= 0 && cb >= 0 && sb >= 0, "fixture features not found");
  c.require(a.rbdt.pairs.size() == 3 && b.rbdt.pairs.size() == 3, "fixture should have 3 pairs");
  if (!c.ok) return {false, c.why.str()};
  c.require(!a.rbdt.pairs[static_cast<std::size_t>(ca)].pair.is_global() &&
                !a.rbdt.pairs[static_cast<std::size_t>(sa)].pair.is_global(),
            "circle or star is the global pair");
  auto has = [](const Matching& m, std::ptrdiff_t s, std::ptrdiff_t t) {
    return std::any_of(m.edges.begin(), m.edges.end(), [&](const MatchEdge& e) { return e.source == s && e.target == t; });
  };
  const auto classic = distance(a.rbdt, b.rbdt, Representation::Diagram, method(Method::Classic));
  const auto region = distance(a.rbdt, b.rbdt, Representation::Diagram, method(Method::Region));
  c.require(has(classic, ca, sb) && has(classic, sa, cb), "classical matching does not cross");
  c.require(has(region, ca, cb) && has(region, sa, sb), "region-aware matching does not pair like with like");
  return {c.ok, c.ok ? "classical circle->star and star->circle; region-aware circle->circle and star->star"
                     : c.why.str()};
}

double spearman(const std::vector<double>& y) {
  const std::size_t n = y.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && y[idx[j + 1]] == y[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = (static_cast<double>(i + j)) / 2.0;
    i = j + 1;
  }
  // x ranks are 0..n-1
  double mx = (static_cast<double>(n) - 1) / 2, sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i) - mx, dy = rank[i] - mx;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return syy == 0 ? 0.0 : sxy / std::sqrt(sxx * syy);
}

Outcome stability() {
  Check c;
  // order-preserving perturbations: g = phi(f) with phi strictly increasing
  std::mt19937_64 rng(1009);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double tightest = 0.0;
  for (std::uint64_t it = 0; it < 50; ++it) {
    const std::vector<std::size_t> dims{16, 16};
    const auto f = hills_field(dims, 5, 5000 + it);
    const auto [lo, hi] = f.value_range();
    const double k = (2 + 6 * u(rng)) / (hi - lo), amp = 0.9 * u(rng) / k, phase = 6.28 * u(rng);
    std::vector<double> gv = f.values();
    for (double& x : gv) x = x + amp * std::sin(k * x + phase);
    const ScalarGrid g = f.with_values(gv);
    c.require(sorted_vertices(f) == sorted_vertices(g), "perturbation changed the vertex order");
    const auto ap = params(0.0, 0.05, 0.0);
    const auto a = analyze(f, ap), b = analyze(g, ap);
    for (double q : {1.0, 2.0}) {
      double norm = 0.0;
      for (std::size_t v = 0; v < f.size(); ++v) norm += std::pow(std::abs(f[v] - g[v]), q);
      const double bound = std::pow(2.0, 1.0 / q) * std::pow(norm, 1.0 / q);
      const double rw =
          distance(a.rbdt, b.rbdt, Representation::Diagram, method(Method::Region, q, Background::Data)).total;
      tightest = std::max(tightest, rw / bound);
      c.require(rw <= bound, "RW " + fmt(rw) + " exceeds " + fmt(bound) + " on pair " + std::to_string(it));
    }
  }
  // noise sweep: eps = 0%..30% of the range in 1% steps, mean over 5 fields
  const std::vector<std::size_t> dims{32, 32};
  std::vector<ScalarGrid> bases;
  for (std::uint64_t s = 0; s < 5; ++s) bases.push_back(hills_field(dims, 8, 6000 + s));
  double worst_rho = 1.0, worst_jump = 0.0;
  for (double lambda : {0.1, 0.5, 1.0}) {
    const auto ap = params(0.005, 0.05, lambda);
    std::vector<Analysis> clean;
    for (const auto& g : bases) clean.push_back(analyze(g, ap));
    std::vector<double> curve;
    for (int e = 0; e <= 30; ++e) {
      double sum = 0.0;
      for (std::size_t s = 0; s < bases.size(); ++s) {
        const auto [lo, hi] = bases[s].value_range();
        const auto noisy = analyze(add_noise(bases[s], e / 100.0 * (hi - lo), 7000 + s), ap);
        sum += distance(clean[s].rbdt, noisy.rbdt, Representation::Diagram, DistanceParams{}).total;
      }
      curve.push_back(sum / static_cast<double>(bases.size()));
    }
    const double rho = spearman(curve);
    worst_rho = std::min(worst_rho, rho);
    c.require(rho >= 0.9, "lambda " + fmt(lambda) + " trend not monotone (Spearman " + fmt(rho) + ")");
    for (int e = 5; e < 30; ++e) {
      const double jump = std::abs(curve[static_cast<std::size_t>(e + 1)] - curve[static_cast<std::size_t>(e)]) /
                          curve[static_cast<std::size_t>(e)];
      worst_jump = std::max(worst_jump, jump);
      c.require(jump <= 0.5, "lambda " + fmt(lambda) + " jumps " + fmt(jump) + " at eps " + std::to_string(e) + "%");
    }
  }
  return {c.ok, c.ok ? "50 pairs, max RW/bound " + fmt(tightest) + "; sweep Spearman >= " + fmt(worst_rho) +
                           ", largest adjacent jump " + fmt(worst_jump)
                     : c.why.str()};
}

Outcome lambda_trend() {
  Check c;
  const std::vector<std::size_t> dims{48, 48};
  std::vector<Analysis> ms;
  for (std::uint64_t s = 0; s < 10; ++s) ms.push_back(analyze(hills_field(dims, 10, 8000 + s), params(0.005, 0.05, 0.0)));
  std::vector<double> means;
  for (double l : {0.0, 0.1, 0.25, 0.5, 1.0}) {
    std::vector<RegionAwareBdt> sub;
    for (const auto& m : ms) sub.push_back(subsampled(m.full, l));
    const auto d = distance_matrix(sub, Representation::Diagram, DistanceParams{});
    double sum = 0.0;
    for (double x : d.entries) sum += x;
    means.push_back(sum);
  }
  std::string curve;
  const double base = means[0] > 0 ? means[0] : 1.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    means[i] /= base;
    curve += (i ? " " : "") + fmt(means[i]);
    if (i) c.require(means[i] <= means[i - 1], "mean distance increases at sample " + std::to_string(i));
  }
  return {c.ok, (c.ok ? "normalized means " : c.why.str() + "; means ") + curve};
}

// elongated hills; the mirrored class is the transpose
ScalarGrid ridges(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 48;
  struct R {
    double ci, cj, h;
  };
  std::vector<R> rs(3);
  for (auto& r : rs) r = {8 + 32 * u(rng), 8 + 32 * u(rng), 0.85 + 0.15 * u(rng)};
  std::vector<double> v(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 1e-4 * (static_cast<double>(i) + 0.29 * static_cast<double>(j)) / 48.0;
      for (const auto& r : rs) {
        const double x = static_cast<double>(i) - r.ci, y = static_cast<double>(j) - r.cj;
        s += r.h * std::exp(-(x * x / (2 * 49.0) + y * y / (2 * 2.25)));
      }
      v[i * n + j] = s;
    }
  return ScalarGrid({n, n}, v);
}

Outcome separation() {
  Check c;
  std::vector<RegionAwareBdt> ms;
  std::vector<int> truth;
  std::vector<ScalarGrid> as;
  for (std::uint64_t s = 0; s < 20; ++s) as.push_back(ridges(9000 + s));
  for (const auto& g : as) {
    ms.push_back(analyze(g, params(0.005, 0.05, 0.1)).rbdt);
    truth.push_back(0);
  }
  for (const auto& g : as) {
    ms.push_back(analyze(transpose(g), params(0.005, 0.05, 0.1)).rbdt);
    truth.push_back(1);
  }
  auto scores = [&](Method m) {
    const auto d = distance_matrix(ms, Representation::Diagram, method(m));
    const auto labels = kmeans(mds_embed(d), 2);
    return std::pair(nmi(truth, labels), ari(truth, labels));
  };
  const auto [rn, ra] = scores(Method::Region);
  const auto [cn, ca] = scores(Method::Classic);
  c.require(rn == 1.0 && ra == 1.0, "region-aware NMI " + fmt(rn) + " ARI " + fmt(ra));
  c.require(cn < 0.2 && ca < 0.2, "classical NMI " + fmt(cn) + " ARI " + fmt(ca));
  return {c.ok, c.ok ? "region-aware NMI " + fmt(rn) + " ARI " + fmt(ra) + "; classical NMI " + fmt(cn) + " ARI " +
                           fmt(ca)
                     : c.why.str()};
}

Outcome sizing() {
  Check c;
  c.require(budget(0.1, 1000).p == 100, "budget(0.1, 1000)");
  c.require(budget(0.0, 1000).p == 0, "budget(0, 1000)");
  c.require(budget(1.0, 1000).p == 1000, "budget(1, 1000)");
  c.require(zfp_rate(100, 1000) == 32.0 * 100 / 1000, "zfp_rate(100, 1000)");
  c.require(zfp_rate(1000, 1000) == 32.0, "zfp_rate(n, n)");
  c.require(zfp_rate(0, 1000) == 0.0, "zfp_rate(0, n)");
  c.require(bspline_dims({200, 100}, 5000) == std::vector<std::size_t>{100, 50}, "bspline_dims 2D");
  c.require(bspline_dims({100, 100}, 2500) == std::vector<std::size_t>{50, 50}, "bspline_dims square");
  c.require(bspline_dims({100, 100, 100}, 8000) == std::vector<std::size_t>{20, 20, 20}, "bspline_dims 3D");
  c.require(neural_width(3, 1, 10) == 2, "neural_width(3, 1, 10)");
  for (std::size_t p : {100u, 1000u, 5000u, 123456u}) {
    const auto k = neural_width(18, 3, p);
    const double realized = static_cast<double>(neural_param_count(18, 3, k));
    const double step = static_cast<double>(neural_param_count(18, 3, k + 1) - neural_param_count(18, 3, k));
    c.require(std::abs(realized - static_cast<double>(p)) < step, "neural_width(18, 3, " + std::to_string(p) + ")");
  }
  const auto g = hills_field({64, 64}, 20, 10000);
  for (double tau : {0.005, 0.01, 0.05, 0.1})
    for (auto codec : {Codec::Quantizer, Codec::BSpline}) {
      const auto z = compress(g, tau, codec, std::vector<std::uint32_t>(g.size(), 0));
      c.require(z.parameter_bits <= 32 * z.budget.p, "budget exceeded at tau " + fmt(tau));
      c.require(decompress(z).dims() == g.dims(), "decompressed dims differ");
    }
  return {c.ok, c.ok ? "formula examples exact; both codecs within budget at tau 0.005, 0.01, 0.05, 0.1"
                     : c.why.str()};
}

Outcome scores_hand_cases() {
  Check c;
  c.require(std::abs(nmi({0, 0, 1, 1}, {0, 0, 1, 1}) - 1.0) <= 1e-12, "identity NMI");
  c.require(std::abs(ari({0, 0, 1, 1}, {0, 0, 1, 1}) - 1.0) <= 1e-12, "identity ARI");
  c.require(std::abs(nmi({0, 0, 1, 1}, {0, 1, 0, 1})) <= 1e-12, "crossing NMI");
  c.require(std::abs(ari({0, 0, 1, 1}, {0, 1, 0, 1}) + 0.5) <= 1e-12, "crossing ARI");
  c.require(nmi({2, 2, 2}, {0, 0, 0}) == 1.0 && ari({2, 2, 2}, {0, 0, 0}) == 1.0, "one cluster vs one cluster");
  return {c.ok, c.ok ? "identity 1/1, crossing 0/-0.5, single cluster 1/1" : c.why.str()};
}

Outcome performance() {
  Check c;
  const std::vector<std::size_t> dims{64, 64};
  const auto t0 = Clock::now();
  std::vector<Analysis> ms;
  std::size_t pairs = 0;
  for (std::uint64_t s = 0; s < 48; ++s) {
    const auto g = add_noise(synth_hills(dims, random_hills(dims, 80, 11000 + s, 0.2, 1.0, 1.0, 2.0)), 1e-6, s);
    ms.push_back(analyze(g, params(0.005, 0.05, 0.0)));
    pairs += ms.back().full.pairs.size();
  }
  auto timed = [&](double lambda) {
    std::vector<RegionAwareBdt> sub;
    for (const auto& m : ms) sub.push_back(subsampled(m.full, lambda));
    const auto t = Clock::now();
    distance_matrix(sub, Representation::Diagram, DistanceParams{}, 8);
    return seconds_since(t);
  };
  const double t_default = timed(0.1);
  const double total = seconds_since(t0);
  const double t0s = timed(0.0), t1s = timed(1.0);
  const double mean_pairs = static_cast<double>(pairs) / 48.0;
  c.require(mean_pairs >= 40 && mean_pairs <= 60, "mean pair count " + fmt(mean_pairs));
  c.require(total < 300.0, "matrix took " + fmt(total) + " s");
  c.require(t1s < t0s, "lambda 1 took " + fmt(t1s) + " s, lambda 0 took " + fmt(t0s) + " s");
  return {c.ok, c.ok ? "48 members, " + fmt(mean_pairs) + " pairs each, 8 threads: analysis + matrix " + fmt(total) +
                           " s (matrix " + fmt(t_default) + " s); lambda 0 " + fmt(t0s) + " s, lambda 1 " +
                           fmt(t1s) + " s"
                     : c.why.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"diagram oracle", diagram_oracle},
      {"partition", partition},
      {"metric axioms", metric_axioms},
      {"classical reduction", classical_reduction},
      {"assignment exactness", assignment_exactness},
      {"tree distance exactness", bdt_exactness},
      {"discriminativity", discriminativity},
      {"matching witness", matching_witness},
      {"stability", stability},
      {"lambda trend", lambda_trend},
      {"separation", separation},
      {"compression sizing", sizing},
      {"clustering scores", scores_hand_cases},
      {"performance", performance},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
