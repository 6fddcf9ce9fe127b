// rwass: persistence diagrams, region-aware Wasserstein distances and
// ensemble products from the command line.

#include <rwass/compression.hpp>
#include <rwass/ensemble.hpp>
#include <rwass/export.hpp>
#include <rwass/field_io.hpp>
#include <rwass/pipeline.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace rwass;
using nlohmann::json;

namespace {

struct Config {
  std::string method = "region";
  std::string rep = "diagram";
  double q = 2.0;
  double lambda = 0.1;
  double eps1 = 0.05;
  double simplify = 0.005;
  std::string background = "null";
  double wl = 0.5;
  double wv = 0.2;
  double tau = 0.1;
  std::string codec = "quantizer";
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string out;
  std::string matching;
  std::size_t topk = 0;
  std::vector<std::string> inputs;
  std::string labels_a, labels_b;
  std::string synth_dims;
  std::size_t synth_count = 8;
  double synth_noise = 0.0;
};

std::size_t resolve_threads(const Config& c) {
  if (c.threads > 0) return c.threads;
  if (const char* env = std::getenv("RWASS_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw InputError(std::string("RWASS_THREADS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

AnalysisParams analysis_params(const Config& c) {
  AnalysisParams a;
  a.simplify = c.simplify;
  a.eps1 = c.eps1;
  a.lambda = c.lambda;
  return a;
}

DistanceParams distance_params(const Config& c) {
  DistanceParams p;
  p.method = parse_method(c.method);
  p.ground.q = c.q;
  p.ground.lambda = c.lambda;
  p.ground.background = parse_background(c.background);
  p.ground.w_lifting = c.wl;
  p.ground.w_volume = c.wv;
  p.ground.validate();
  if (!(c.eps1 >= 0.0 && c.eps1 <= 1.0)) throw InputError("--eps1 must lie in [0, 1]");
  if (!(c.simplify >= 0.0 && c.simplify <= 1.0)) throw InputError("--simplify must lie in [0, 1]");
  return p;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

ScalarGrid load_field(const std::string& path) {
  if (ends_with(path, ".csv")) return load_csv_2d(path);
  return load_rsf(path);
}

json tree_sidecar(const Analysis& a) {
  json j;
  j["variant"] = a.sweep.tree.variant == TreeVariant::Split ? "split" : "join";
  j["range"] = a.sweep.tree.range;
  j["root_vertex"] = a.sweep.tree.nodes[a.sweep.tree.root].vertex;
  j["pairs"] = diagram_json(a.sweep.pairs, a.raw_bdt);
  return j;
}

// A compressed member: pairs and tree from the sidecar written by `compress`,
// regions from the stored membership, region values from the codec.
RegionAwareBdt load_compressed(const std::string& path, const Config& c) {
  const auto field = decode_rwc(detail::read_file(path));
  json side;
  try {
    side = json::parse(detail::read_file(path + ".pairs.json"));
  } catch (const json::exception& e) {
    throw InputError("bad pair sidecar for " + path + ": " + e.what());
  }
  const TreeVariant variant = side.at("variant") == "split" ? TreeVariant::Split : TreeVariant::Join;
  std::vector<PersistencePair> pairs;
  std::vector<std::ptrdiff_t> parents;
  for (const auto& jp : side.at("pairs")) {
    PersistencePair p;
    p.kind = pair_kind(variant);
    p.birth = jp.at("birth");
    p.death = jp.at("death");
    p.extremum_vertex = jp.at("extremum_vertex");
    if (!jp.at("saddle_vertex").is_null()) p.saddle_vertex = jp.at("saddle_vertex").get<Vertex>();
    pairs.push_back(p);
    parents.push_back(jp.at("parent_id").is_null() ? -1 : jp.at("parent_id").get<std::ptrdiff_t>());
  }
  std::size_t global = 0;
  while (global < pairs.size() && !pairs[global].is_global()) ++global;
  if (global == pairs.size()) throw InputError("pair sidecar has no global pair");
  const auto tree = merge_tree_from_branches(variant, pairs, parents, side.at("root_vertex").get<Vertex>(),
                                             pairs[global].saddle_value(), side.at("range").get<double>());
  Segmentation seg;
  seg.pair_of.assign(field.membership.begin(), field.membership.end());
  auto grid = std::make_shared<const ScalarGrid>(decompress(field));
  RegionAwareBdt full;
  full.kind = pair_kind(variant);
  full.pairs = make_region_aware(pairs, seg, grid);
  for (auto& r : full.pairs)
    for (auto& m : r.members)
      if (m.offset == Coord{0, 0, 0}) m.value = r.pair.extremum_value();
  full.bdt = saddle_merge(build_bdt(tree, pairs), tree, pairs, c.eps1);
  return subsampled(full, c.lambda);
}

struct Member {
  std::vector<std::size_t> dims;
  RegionAwareBdt rbdt;
};

Member load_member(const std::string& path, const Config& c) {
  if (ends_with(path, ".rwc")) {
    auto r = load_compressed(path, c);
    return {r.pairs.front().source->dims(), std::move(r)};
  }
  auto grid = load_field(path);
  auto dims = grid.dims();
  return {dims, analyze(std::move(grid), analysis_params(c)).rbdt};
}

std::vector<RegionAwareBdt> load_members(const std::vector<std::string>& paths, const Config& c) {
  std::vector<RegionAwareBdt> out;
  std::vector<std::size_t> dims;
  for (const auto& p : paths) {
    auto m = load_member(p, c);
    if (out.empty()) dims = m.dims;
    else if (m.dims != dims) throw ContractError("grid dims of " + p + " differ from " + paths.front());
    out.push_back(std::move(m.rbdt));
  }
  return out;
}

std::vector<int> load_labels(const std::string& path) {
  std::string text = detail::read_file(path);
  for (char& ch : text)
    if (ch == ',' || ch == ';') ch = ' ';
  std::istringstream s(text);
  std::vector<int> out;
  std::string tok;
  while (s >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InputError("bad label '" + tok + "' in " + path);
    }
  }
  return out;
}

std::string stem_of(const std::string& out, const std::string& ext) {
  return ends_with(out, ext) ? out.substr(0, out.size() - ext.size()) : out;
}

void write_text(const std::string& path, const std::string& text) { detail::write_file(path, text); }

void write_provenance(const std::string& sub, const Config& c, std::size_t threads) {
  json j;
  j["tool"] = "rwass";
  j["subcommand"] = sub;
  j["inputs"] = c.inputs;
  j["method"] = c.method;
  j["rep"] = c.rep;
  j["q"] = c.q;
  j["lambda"] = c.lambda;
  j["eps1"] = c.eps1;
  j["simplify"] = c.simplify;
  j["background"] = c.background;
  j["wl"] = c.wl;
  j["wv"] = c.wv;
  j["tau"] = c.tau;
  j["codec"] = c.codec;
  j["seed"] = c.seed;
  j["threads"] = threads;
  j["out"] = c.out;
  j["matching"] = c.matching;
  j["topk"] = c.topk;
  j["tree"] = "split";
  if (sub == "scores") j["labels"] = {c.labels_a, c.labels_b};
  if (sub == "synth") j["synth"] = {{"dims", c.synth_dims}, {"count", c.synth_count}, {"noise", c.synth_noise}};
  write_text(c.out.empty() ? "rwass.provenance.json" : c.out + ".provenance.json", j.dump(2) + "\n");
}

json params_json(const Config& c) {
  return {{"method", c.method}, {"rep", c.rep},   {"q", c.q},   {"lambda", c.lambda},
          {"eps1", c.eps1},     {"simplify", c.simplify}, {"background", c.background},
          {"w_L", c.wl},        {"w_V", c.wv}};
}

int run(const std::string& sub, Config& c) {
  const std::size_t threads = resolve_threads(c);
  const auto params = distance_params(c);
  const auto rep = parse_representation(c.rep);

  if (sub == "diagram") {
    if (c.out.empty()) c.out = "diagram.json";
    auto grid = std::make_shared<const ScalarGrid>(load_field(c.inputs.at(0)));
    const auto a = analyze(grid, analysis_params(c));
    const std::string stem = stem_of(c.out, ".json");
    write_text(c.out, diagram_json(a.sweep.pairs, a.full.bdt).dump(2) + "\n");
    write_text(stem + ".regions.json", regions_json(a.rbdt).dump(2) + "\n");
    save_rsf(segmentation_grid(a.sweep.segmentation, *grid), stem + ".seg.rsf");
    std::cout << a.sweep.pairs.size() << " pairs\n";
  } else if (sub == "dist") {
    if (c.inputs.size() != 2) throw InputError("dist takes exactly two fields");
    const auto m = load_members(c.inputs, c);
    const auto match = distance(m[0], m[1], rep, params);
    std::cout << format_real(match.total) << "\n";
    if (!c.matching.empty()) write_text(c.matching, matching_json(match).dump(2) + "\n");
    if (!c.out.empty()) write_text(c.out, format_real(match.total) + "\n");
  } else if (sub == "matrix") {
    if (c.out.empty()) c.out = "matrix.csv";
    const auto m = load_members(c.inputs, c);
    const auto d = distance_matrix(m, rep, params, threads);
    write_text(c.out, matrix_csv(d));
    write_text(c.out + ".meta.json", params_json(c).dump(2) + "\n");
  } else if (sub == "embed") {
    if (c.out.empty()) c.out = "embedding.csv";
    const auto d = parse_matrix_csv(detail::read_file(c.inputs.at(0)));
    const auto e = mds_embed(d, 2);
    if (e.degenerate) std::cerr << "warning: fewer than 3 members, embedding is zero-padded\n";
    write_text(c.out, embedding_csv(e));
  } else if (sub == "track" || sub == "curves") {
    const auto m = load_members(c.inputs, c);
    const auto g = track(m, rep, params, threads);
    if (sub == "track") {
      if (c.out.empty()) c.out = "tracks.json";
      json j;
      j["params"] = params_json(c);
      j["consecutive_distances"] = consecutive_distance_curve(m, rep, params, threads);
      auto tracks = json::array();
      for (const auto& t : g.tracks) {
        json jt{{"id", t.id}, {"first_step", t.first_step()}, {"last_step", t.last_step()}};
        std::vector<std::size_t> pairs;
        for (const auto& p : t.points) pairs.push_back(p.pair);
        jt["pairs"] = pairs;
        jt["merged_into"] = t.merged_into >= 0 ? json(t.merged_into) : json(nullptr);
        jt["split_from"] = t.split_from >= 0 ? json(t.split_from) : json(nullptr);
        tracks.push_back(jt);
      }
      j["tracks"] = tracks;
      auto steps = json::array();
      for (const auto& mt : g.matchings) steps.push_back(matching_json(mt));
      j["matchings"] = steps;
      write_text(c.out, j.dump(2) + "\n");
    } else {
      if (c.out.empty()) c.out = "curves.csv";
      const auto rows = persistence_curves(g, c.topk);
      write_text(c.out, curves_csv(rows));
      write_text(stem_of(c.out, ".csv") + ".svg", curves_svg(rows));
    }
  } else if (sub == "scores") {
    const auto a = load_labels(c.labels_a), b = load_labels(c.labels_b);
    const double n = nmi(a, b), r = ari(a, b);
    std::cout << "nmi " << format_real(n) << "\nari " << format_real(r) << "\n";
    if (!c.out.empty()) write_text(c.out, json{{"nmi", n}, {"ari", r}}.dump(2) + "\n");
  } else if (sub == "compress") {
    if (c.out.empty()) c.out = "field.rwc";
    auto grid = std::make_shared<const ScalarGrid>(load_field(c.inputs.at(0)));
    const auto a = analyze(grid, analysis_params(c));
    const std::vector<std::uint32_t> ids(a.sweep.segmentation.pair_of.begin(), a.sweep.segmentation.pair_of.end());
    const auto field = compress(*grid, c.tau, parse_codec(c.codec), ids);
    write_text(c.out, encode_rwc(field));
    write_text(c.out + ".pairs.json", tree_sidecar(a).dump(2) + "\n");
    const auto back = decompress(field);
    double err = 0.0;
    for (std::size_t v = 0; v < grid->size(); ++v) err = std::max(err, std::abs(back[v] - (*grid)[v]));
    std::cout << "budget " << field.budget.p << " parameters, used " << format_real(field.parameter_bits / 32.0)
              << ", max error " << format_real(err) << "\n";
  } else if (sub == "synth") {
    if (c.out.empty()) c.out = "synth.rsf";
    std::vector<std::size_t> dims;
    std::string tok;
    std::istringstream s(c.synth_dims);
    while (std::getline(s, tok, 'x')) {
      try {
        std::size_t used = 0;
        const long v = std::stol(tok, &used);
        if (used != tok.size() || v < 1) throw std::invalid_argument(tok);
        dims.push_back(static_cast<std::size_t>(v));
      } catch (const std::exception&) {
        throw InputError("bad DIMS '" + c.synth_dims + "' (expected e.g. 64x64)");
      }
    }
    auto grid = synth_hills(dims, random_hills(dims, c.synth_count, c.seed));
    if (!(c.synth_noise >= 0.0)) throw InputError("NOISE must be >= 0");
    if (c.synth_noise > 0.0) {
      const auto [lo, hi] = grid.value_range();
      grid = add_noise(grid, c.synth_noise * (hi - lo), c.seed + 1);
    }
    save_rsf(grid, c.out);
  }
  write_provenance(sub, c, threads);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persistence diagrams, merge trees and region-aware Wasserstein distances"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Config c;
  app.add_option("--method", c.method, "Ground metric: classic, lifting, volume or region")
      ->capture_default_str();
  app.add_option("--rep", c.rep, "Representation: diagram or mergetree")->capture_default_str();
  app.add_option("--q", c.q, "Wasserstein exponent (>= 1)")->capture_default_str();
  app.add_option("--lambda", c.lambda, "Region subsampling in [0, 1]")->capture_default_str();
  app.add_option("--eps1", c.eps1, "Saddle merge threshold in [0, 1], relative to the range")
      ->capture_default_str();
  app.add_option("--simplify", c.simplify, "Persistence threshold, relative to the range")
      ->capture_default_str();
  app.add_option("--background", c.background, "Background field: null or data")->capture_default_str();
  app.add_option("--wl", c.wl, "Lifting weight")->capture_default_str();
  app.add_option("--wv", c.wv, "Volume weight")->capture_default_str();
  app.add_option("--tau", c.tau, "Compression budget ratio in [0, 1]")->capture_default_str();
  app.add_option("--codec", c.codec, "Codec: quantizer or bspline")->capture_default_str();
  app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", c.threads, "Worker threads (default: RWASS_THREADS, then all cores)");
  app.add_option("--out", c.out, "Output path");
  app.add_option("--matching", c.matching, "Write the matching of `dist` as JSON");
  app.add_option("--topk", c.topk, "Keep the K most persistent tracks (0 keeps all)")->capture_default_str();

  auto* diagram = app.add_subcommand("diagram", "Simplified diagram, regions and segmentation of one field");
  diagram->add_option("FIELD", c.inputs, "Input .rsf or .csv")->required()->expected(1);
  auto* dist = app.add_subcommand("dist", "Distance between two fields");
  dist->add_option("FIELDS", c.inputs, "Two .rsf, .csv or .rwc inputs")->required()->expected(2);
  auto* matrix = app.add_subcommand("matrix", "Distance matrix of an ensemble");
  matrix->add_option("FIELDS", c.inputs, "Ensemble members")->required()->expected(1, -1);
  auto* embed = app.add_subcommand("embed", "Classical MDS of a distance matrix CSV");
  embed->add_option("MATRIX", c.inputs, "Distance matrix CSV")->required()->expected(1);
  auto* trk = app.add_subcommand("track", "Feature tracks over a time-ordered sequence");
  trk->add_option("FIELDS", c.inputs, "Time steps in order")->required()->expected(2, -1);
  auto* curves = app.add_subcommand("curves", "Per-track persistence curves (CSV and SVG)");
  curves->add_option("FIELDS", c.inputs, "Time steps in order")->required()->expected(2, -1);
  auto* scores = app.add_subcommand("scores", "NMI and ARI between two label files");
  scores->add_option("LABELS_A", c.labels_a, "Labels, one integer per entry")->required();
  scores->add_option("LABELS_B", c.labels_b, "Labels, one integer per entry")->required();
  auto* comp = app.add_subcommand("compress", "Budgeted compression with lossless region membership");
  comp->add_option("FIELD", c.inputs, "Input .rsf or .csv")->required()->expected(1);
  auto* synth = app.add_subcommand("synth", "Random Gaussian hills field");
  synth->add_option("DIMS", c.synth_dims, "Extents such as 64x64")->required();
  synth->add_option("COUNT", c.synth_count, "Hill count")->capture_default_str();
  synth->add_option("NOISE", c.synth_noise, "Noise amplitude relative to the range")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    return run(sub, c);
  } catch (const InputError& e) {
    std::cerr << "rwass: input error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "rwass: contract violation: " << e.what() << "\n";
    return 3;
  } catch (const InvariantError& e) {
    std::cerr << "rwass: internal invariant failed: " << e.what() << "\n";
    return 4;
  } catch (const std::out_of_range& e) {
    std::cerr << "rwass: input error: " << e.what() << "\n";
    return 2;
  }
}
