#pragma once

// Ensemble products: distance matrices, classical MDS, k-means, clustering
// scores, feature tracking and per-track persistence curves.

#include <rwass/errors.hpp>
#include <rwass/pipeline.hpp>
#include <rwass/wasserstein.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace rwass {

/// Runs fn(0..count-1) on up to `threads` workers. Each index is handled
/// exactly once; the first exception is rethrown after all workers stop.
template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_lock;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_lock);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> entries;  // row-major n x n

  double operator()(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
};

inline DistanceMatrix distance_matrix(const std::vector<RegionAwareBdt>& members, Representation rep,
                                      const DistanceParams& p, std::size_t threads = 1) {
  DistanceMatrix m;
  m.n = members.size();
  m.entries.assign(m.n * m.n, 0.0);
  for (std::size_t i = 1; i < m.n; ++i) {
    if (members[i].bdt.eps1 != members[0].bdt.eps1)
      throw ContractError("members were preprocessed with different eps1");
    if (members[i].kind != members[0].kind) throw ContractError("members differ in pair kind");
  }
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t i = 0; i < m.n; ++i)
    for (std::size_t j = i + 1; j < m.n; ++j) jobs.emplace_back(i, j);
  parallel_for(jobs.size(), threads, [&](std::size_t k) {
    const auto [i, j] = jobs[k];
    const double d = distance(members[i], members[j], rep, p).total;
    m.entries[i * m.n + j] = d;
    m.entries[j * m.n + i] = d;
  });
  return m;
}

struct Embedding {
  std::size_t n = 0, dim = 2;
  std::vector<double> coords;  // row-major n x dim
  std::vector<double> eigenvalues;  // descending, all of them
  bool degenerate = false;  // fewer than dim + 1 points

  double at(std::size_t i, std::size_t k) const { return coords[i * dim + k]; }
};

/// Classical (Torgerson) MDS.
inline Embedding mds_embed(const DistanceMatrix& d, std::size_t dim = 2) {
  Embedding e;
  e.n = d.n;
  e.dim = dim;
  e.coords.assign(d.n * dim, 0.0);
  e.degenerate = d.n < dim + 1;
  if (d.n == 0) return e;
  const auto n = static_cast<Eigen::Index>(d.n);
  Eigen::MatrixXd D2(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double x = d(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      D2(i, j) = x * x;
    }
  const Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  Eigen::MatrixXd B = -0.5 * J * D2 * J;
  B = 0.5 * (B + B.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(B);
  const auto& vals = solver.eigenvalues();
  const auto& vecs = solver.eigenvectors();
  for (Eigen::Index k = n - 1; k >= 0; --k) e.eigenvalues.push_back(vals(k));
  for (std::size_t k = 0; k < dim && static_cast<Eigen::Index>(k) < n; ++k) {
    const Eigen::Index col = n - 1 - static_cast<Eigen::Index>(k);
    const double scale = std::sqrt(std::max(0.0, vals(col)));
    Eigen::VectorXd v = vecs.col(col);
    Eigen::Index big = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if (std::abs(v(i)) > std::abs(v(big))) big = i;
    if (v(big) < 0) v = -v;
    for (Eigen::Index i = 0; i < n; ++i) e.coords[static_cast<std::size_t>(i) * dim + k] = v(i) * scale;
  }
  return e;
}

/// Lloyd iterations from a farthest-point seeding: the first center is the
/// point farthest from the centroid, each next one the point farthest from
/// the chosen centers. Ties go to the lowest index.
inline std::vector<int> kmeans(const Embedding& e, std::size_t k, std::size_t max_iter = 100) {
  const std::size_t n = e.n, dim = e.dim;
  std::vector<int> label(n, 0);
  if (n == 0 || k <= 1) return label;
  k = std::min(k, n);
  auto dist2 = [&](std::size_t i, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t a = 0; a < dim; ++a) s += (e.at(i, a) - c[a]) * (e.at(i, a) - c[a]);
    return s;
  };
  std::vector<double> centroid(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < dim; ++a) centroid[a] += e.at(i, a) / static_cast<double>(n);
  std::vector<std::vector<double>> centers;
  auto point = [&](std::size_t i) {
    return std::vector<double>(e.coords.begin() + static_cast<std::ptrdiff_t>(i * dim),
                               e.coords.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
  };
  {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (dist2(i, centroid) > dist2(best, centroid)) best = i;
    centers.push_back(point(best));
  }
  while (centers.size() < k) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      double dmin = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) dmin = std::min(dmin, dist2(i, c));
      if (dmin > best_d) {
        best_d = dmin;
        best = i;
      }
    }
    centers.push_back(point(best));
  }
  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < n; ++i) {
      int arg = 0;
      for (std::size_t c = 1; c < k; ++c)
        if (dist2(i, centers[c]) < dist2(i, centers[static_cast<std::size_t>(arg)])) arg = static_cast<int>(c);
      if (arg != label[i]) {
        label[i] = arg;
        changed = true;
      }
    }
    if (!changed) break;
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> sum(dim, 0.0);
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (label[i] == static_cast<int>(c)) {
          ++count;
          for (std::size_t a = 0; a < dim; ++a) sum[a] += e.at(i, a);
        }
      if (count == 0) continue;
      for (auto& s : sum) s /= static_cast<double>(count);
      centers[c] = sum;
    }
  }
  return label;
}

namespace detail {

struct Contingency {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> rows, cols;
  double n = 0;
};

inline Contingency contingency(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw InputError("label vectors differ in length");
  if (a.empty()) throw InputError("label vectors are empty");
  Contingency t;
  for (std::size_t i = 0; i < a.size(); ++i) {
    t.joint[{a[i], b[i]}] += 1;
    t.rows[a[i]] += 1;
    t.cols[b[i]] += 1;
  }
  t.n = static_cast<double>(a.size());
  return t;
}

}  // namespace detail

/// 2 I(A;B) / (H(A) + H(B)); 1 when both partitions are a single cluster.
inline double nmi(const std::vector<int>& a, const std::vector<int>& b) {
  const auto t = detail::contingency(a, b);
  auto entropy = [&](const std::map<int, double>& m) {
    double h = 0.0;
    for (const auto& [_, c] : m) h -= c / t.n * std::log(c / t.n);
    return h;
  };
  const double ha = entropy(t.rows), hb = entropy(t.cols);
  if (ha == 0.0 && hb == 0.0) return 1.0;
  double mi = 0.0;
  for (const auto& [key, c] : t.joint)
    mi += c / t.n * std::log(c * t.n / (t.rows.at(key.first) * t.cols.at(key.second)));
  return std::clamp(2.0 * mi / (ha + hb), 0.0, 1.0);
}

inline double ari(const std::vector<int>& a, const std::vector<int>& b) {
  const auto t = detail::contingency(a, b);
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double idx = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [_, c] : t.joint) idx += c2(c);
  for (const auto& [_, c] : t.rows) sa += c2(c);
  for (const auto& [_, c] : t.cols) sb += c2(c);
  const double expected = sa * sb / c2(t.n);
  const double max_idx = 0.5 * (sa + sb);
  if (max_idx - expected == 0.0) return 1.0;
  return (idx - expected) / (max_idx - expected);
}

// ---------------------------------------------------------------------------
// Tracking

struct TrackPoint {
  std::size_t step = 0;
  std::size_t pair = 0;
  double persistence = 0.0;
  Coord coord{0, 0, 0};
};

struct Track {
  std::size_t id = 0;
  std::vector<TrackPoint> points;  // consecutive steps
  std::ptrdiff_t merged_into = -1;  // track holding the BDT parent when this one ends
  std::ptrdiff_t split_from = -1;  // track holding the BDT parent when this one starts

  std::size_t first_step() const { return points.front().step; }
  std::size_t last_step() const { return points.back().step; }
  double max_persistence() const {
    double m = 0.0;
    for (const auto& p : points) m = std::max(m, p.persistence);
    return m;
  }
};

struct TrackingGraph {
  std::vector<Matching> matchings;  // step t -> t + 1
  std::vector<std::vector<std::size_t>> track_of;  // [step][pair]
  std::vector<Track> tracks;
};

inline TrackingGraph track(const std::vector<RegionAwareBdt>& seq, Representation rep,
                           const DistanceParams& p, std::size_t threads = 1) {
  if (seq.size() < 2) throw InputError("tracking needs at least two steps");
  TrackingGraph g;
  g.matchings.resize(seq.size() - 1);
  parallel_for(g.matchings.size(), threads,
               [&](std::size_t t) { g.matchings[t] = distance(seq[t], seq[t + 1], rep, p); });

  auto point = [&](std::size_t t, std::size_t i) {
    const auto& r = seq[t].pairs[i];
    return TrackPoint{t, i, r.pair.persistence(), r.extremum_coord};
  };
  auto start = [&](std::size_t t, std::size_t i) {
    Track tr;
    tr.id = g.tracks.size();
    tr.points.push_back(point(t, i));
    g.track_of[t][i] = tr.id;
    g.tracks.push_back(std::move(tr));
  };
  g.track_of.resize(seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) g.track_of[t].assign(seq[t].pairs.size(), 0);
  for (std::size_t i = 0; i < seq[0].pairs.size(); ++i) start(0, i);

  for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
    std::vector<std::ptrdiff_t> source_of(seq[t + 1].pairs.size(), kDiagonal);
    for (const auto& e : g.matchings[t].edges)
      if (e.target != kDiagonal) source_of[static_cast<std::size_t>(e.target)] = e.source;
    std::vector<std::size_t> fresh;
    for (std::size_t j = 0; j < source_of.size(); ++j) {
      if (source_of[j] == kDiagonal) {
        start(t + 1, j);
        fresh.push_back(j);
        continue;
      }
      const auto id = g.track_of[t][static_cast<std::size_t>(source_of[j])];
      g.track_of[t + 1][j] = id;
      g.tracks[id].points.push_back(point(t + 1, j));
    }
    for (auto j : fresh) {
      const auto up = seq[t + 1].bdt.parent[j];
      if (up >= 0) g.tracks[g.track_of[t + 1][j]].split_from =
          static_cast<std::ptrdiff_t>(g.track_of[t + 1][static_cast<std::size_t>(up)]);
    }
    for (const auto& e : g.matchings[t].edges) {
      if (e.source == kDiagonal || e.target != kDiagonal) continue;
      const auto up = seq[t].bdt.parent[static_cast<std::size_t>(e.source)];
      if (up >= 0)
        g.tracks[g.track_of[t][static_cast<std::size_t>(e.source)]].merged_into =
            static_cast<std::ptrdiff_t>(g.track_of[t][static_cast<std::size_t>(up)]);
    }
  }
  return g;
}

struct CurveRow {
  std::size_t track_id = 0;
  std::size_t step = 0;
  double persistence = 0.0;
  Coord coord{0, 0, 0};
};

/// One row per (track, step) the track is alive; topk > 0 keeps the tracks
/// with the largest maximum persistence.
inline std::vector<CurveRow> persistence_curves(const TrackingGraph& g, std::size_t topk = 0) {
  std::vector<std::size_t> ids(g.tracks.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  if (topk > 0 && topk < ids.size()) {
    std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
      return g.tracks[a].max_persistence() > g.tracks[b].max_persistence();
    });
    ids.resize(topk);
    std::sort(ids.begin(), ids.end());
  }
  std::vector<CurveRow> rows;
  for (auto id : ids)
    for (const auto& pt : g.tracks[id].points) rows.push_back({id, pt.step, pt.persistence, pt.coord});
  return rows;
}

inline std::vector<double> consecutive_distance_curve(const std::vector<RegionAwareBdt>& seq,
                                                      Representation rep, const DistanceParams& p,
                                                      std::size_t threads = 1) {
  if (seq.size() < 2) throw InputError("the curve needs at least two steps");
  std::vector<double> out(seq.size() - 1);
  parallel_for(out.size(), threads,
               [&](std::size_t t) { out[t] = distance(seq[t], seq[t + 1], rep, p).total; });
  return out;
}

// ---------------------------------------------------------------------------
// Text outputs

inline std::string format_real(double x) {
  std::ostringstream s;
  s << std::setprecision(12) << x;
  return s.str();
}

inline std::string matrix_csv(const DistanceMatrix& m) {
  std::ostringstream s;
  s << std::setprecision(17);
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t j = 0; j < m.n; ++j) s << (j ? "," : "") << m(i, j);
    s << '\n';
  }
  return s.str();
}

inline DistanceMatrix parse_matrix_csv(const std::string& text) {
  DistanceMatrix m;
  std::istringstream lines(text);
  std::string line;
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    std::size_t cols = 0;
    while (std::getline(cells, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InputError("bad matrix entry '" + cell + "' on row " + std::to_string(rows));
      }
      ++cols;
    }
    if (rows == 0) m.n = cols;
    if (cols != m.n) throw InputError("matrix row " + std::to_string(rows) + " has wrong length");
    ++rows;
  }
  if (rows != m.n) throw InputError("distance matrix is not square");
  m.entries = std::move(values);
  return m;
}

inline std::string embedding_csv(const Embedding& e) {
  std::ostringstream s;
  s << std::setprecision(17) << "member,u,v\n";
  for (std::size_t i = 0; i < e.n; ++i)
    s << i << ',' << (e.dim > 0 ? e.at(i, 0) : 0.0) << ',' << (e.dim > 1 ? e.at(i, 1) : 0.0) << '\n';
  return s.str();
}

inline std::string curves_csv(const std::vector<CurveRow>& rows) {
  std::ostringstream s;
  s << std::setprecision(17) << "track_id,step,persistence,x,y,z\n";
  for (const auto& r : rows)
    s << r.track_id << ',' << r.step << ',' << r.persistence << ',' << r.coord[0] << ',' << r.coord[1]
      << ',' << r.coord[2] << '\n';
  return s.str();
}

/// Static line chart of persistence against step, one polyline per track.
inline std::string curves_svg(const std::vector<CurveRow>& rows) {
  const double W = 640, H = 360, pad = 40;
  std::size_t max_step = 1;
  double max_p = 0.0;
  std::map<std::size_t, std::vector<const CurveRow*>> by_track;
  for (const auto& r : rows) {
    max_step = std::max(max_step, r.step);
    max_p = std::max(max_p, r.persistence);
    by_track[r.track_id].push_back(&r);
  }
  if (max_p <= 0.0) max_p = 1.0;
  std::ostringstream s;
  s << std::fixed << std::setprecision(2);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\"" << H - pad
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << H - pad
    << "\" stroke=\"black\"/>\n";
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  for (const auto& [id, pts] : by_track) {
    s << "<polyline fill=\"none\" stroke=\"" << palette[id % 10] << "\" points=\"";
    for (const auto* r : pts) {
      const double x = pad + (W - 2 * pad) * static_cast<double>(r->step) / static_cast<double>(max_step);
      const double y = H - pad - (H - 2 * pad) * r->persistence / max_p;
      s << x << ',' << y << ' ';
    }
    s << "\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace rwass
