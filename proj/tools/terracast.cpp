// terracast: command-line surface over the pipeline. Every subcommand reads and writes a working directory.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "terracast/evaluation.hpp"
#include "terracast/ingest.hpp"
#include "terracast/learn/baselines.hpp"
#include "terracast/learn/weights_io.hpp"
#include "terracast/node2vec.hpp"
#include "terracast/pipeline.hpp"
#include "terracast/regions.hpp"
#include "terracast/strategies.hpp"
#include "terracast/synthgen.hpp"

using namespace terracast;
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct Workspace {
  fs::path dir = "terracast_work";

  fs::path operator/(const std::string& name) const { return dir / name; }

  ojson plant() const {
    std::ifstream in(dir / "plant.json");
    if (!in) throw std::runtime_error("no plant.json in " + dir.string() + " (run 'synth' first)");
    return ojson::parse(in);
  }
  GeoPoint origin() const {
    const auto p = plant();
    return {p["origin"]["lat"].get<double>(), p["origin"]["lon"].get<double>(), {}};
  }
  TemporalNorm norm() const {
    const auto p = plant();
    return {p["first_year"].get<int>(), p["last_year"].get<int>()};
  }
  std::shared_ptr<GrayRasterSource> source() const {
    return std::make_shared<GrayRasterSource>(read_tcr((dir / "gray.tcr").string()), plant()["km_per_px"].get<double>());
  }
  GeoBox aoi() const {
    const auto b = plant()["bounds"];
    return {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
  }
  // Cleaned events when 'ingest' has run, the synthetic file otherwise.
  std::vector<ConflictEvent> events() const {
    const auto clean = dir / "events_clean.csv";
    auto [ev, rep] = load_events((fs::exists(clean) ? clean : dir / "events.csv").string(), aoi());
    return ev;
  }
};

// Records the command and its config hash; the hash also tags every report.
std::string log_run(const Workspace& ws, const std::string& cmd, const ojson& cfg) {
  const std::string h = config_hash(ojson{{"command", cmd}, {"config", cfg}});
  fs::create_directories(ws.dir);
  append_jsonl((ws / "runs.jsonl").string(), {{"command", cmd}, {"config", cfg}, {"config_hash", h}});
  std::cout << cmd << " config_hash " << h << "\n";
  return h;
}

std::pair<int, int> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) {
    const int v = std::stoi(s);
    return {v, v};
  }
  return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stod(item));
  return out;
}

std::vector<TimePeriod> periods_of(const std::string& years, const TemporalNorm& norm) {
  if (years.empty()) return years_span(norm.year_min, norm.year_max);
  const auto [a, b] = parse_range(years);
  return years_span(a, b);
}

TimePeriod parse_period(const std::string& s) {
  if (s.size() != 7 || s[4] != '-') throw std::invalid_argument("period must be YYYY-MM");
  return {std::stoi(s.substr(5, 2)), std::stoi(s.substr(0, 4))};
}

IntensityScheme scheme_of(int n) {
  if (n == 2) return IntensityScheme::two_class();
  if (n == 3) return IntensityScheme::three_class();
  if (n == 5) return IntensityScheme::five_class();
  throw std::invalid_argument("scheme must be 2, 3 or 5");
}

void write_report(const std::string& path, const MetricsReport& r) {
  if (!path.empty()) append_jsonl(path, to_json(r));
}

ClusterModel load_clusters(const Workspace& ws) {
  std::ifstream in(ws / "clusters.json");
  if (!in) throw std::runtime_error("no clusters.json (run 'cluster' first)");
  const auto j = ojson::parse(in);
  ClusterModel m;
  m.k = j["k"].get<std::size_t>();
  m.dim = j["dim"].get<std::size_t>();
  for (const auto& c : j["centroids"]) m.centroids.push_back({{c[0].get<double>(), c[1].get<double>(), c[2].get<double>()}});
  return m;
}

// ---- subcommands -----------------------------------------------------------------------------------

struct SynthOpts {
  std::uint64_t seed = 0;
  double rate = 0.38;
  std::uint32_t width_px = 1320, height_px = 1210;
  double km_per_px = 0.1;
  int first_year = 2014, last_year = 2017;
};

void cmd_synth(Workspace& ws, const SynthOpts& o, const std::string& out) {
  if (!out.empty()) ws.dir = out;
  const ojson cfg{{"seed", o.seed}, {"rate", o.rate}, {"width_px", o.width_px}, {"height_px", o.height_px},
                  {"km_per_px", o.km_per_px}, {"first_year", o.first_year}, {"last_year", o.last_year}};
  log_run(ws, "synth", cfg);
  PlantConfig pc;
  pc.seed = o.seed;
  pc.rate = o.rate;
  pc.width_px = o.width_px;
  pc.height_px = o.height_px;
  pc.km_per_px = o.km_per_px;
  pc.first_year = o.first_year;
  pc.last_year = o.last_year;
  const Plant p = make_plant(pc);
  write_tcr((ws / "landscape.tcr").string(), p.landscape.channels);
  write_tcr((ws / "gray.tcr").string(), p.source->raster());
  write_tcr((ws / "risk.tcr").string(), p.surface.risk);
  write_events_csv((ws / "events.csv").string(), p.events);
  const auto b = p.bounds();
  ojson meta = cfg;
  meta["origin"] = {{"lat", p.origin.lat}, {"lon", p.origin.lon}};
  meta["bounds"] = {b.lat0, b.lon0, b.lat1, b.lon1};
  meta["events"] = p.events.size();
  std::ofstream((ws / "plant.json").string()) << meta.dump(2) << "\n";
  std::cout << "landscape " << p.landscape.width_km() << " x " << p.landscape.height_km() << " km, " << p.events.size()
            << " events -> " << ws.dir.string() << "\n";
}

void cmd_ingest(const Workspace& ws, const std::string& file, const std::string& aoi_s) {
  GeoBox aoi;
  if (aoi_s.empty()) {
    aoi = ws.aoi();
  } else {
    const auto v = parse_list(aoi_s);
    if (v.size() != 4) throw std::invalid_argument("--aoi expects lat0,lon0,lat1,lon1");
    aoi = {v[0], v[1], v[2], v[3]};
  }
  log_run(ws, "ingest", {{"events", file}, {"aoi", {aoi.lat0, aoi.lon0, aoi.lat1, aoi.lon1}}});
  auto [ev, rep] = load_events(file, aoi);
  write_events_csv((ws / "events_clean.csv").string(), ev);
  ojson r{{"input", rep.input_count}, {"accepted", rep.accepted_count}};
  for (auto reason : {RejectReason::bad_coords, RejectReason::out_of_aoi, RejectReason::bad_date,
                      RejectReason::duplicate, RejectReason::missing_field})
    r[std::string(to_string(reason))] = rep.count(reason);
  std::ofstream((ws / "cleaning.json").string()) << r.dump(2) << "\n";
  std::cout << r.dump() << "\n";
}

void cmd_cluster(const Workspace& ws, std::size_t k, const std::string& elev, const std::string& elbow,
                 std::uint64_t seed) {
  if (elev != "on" && elev != "off") throw std::invalid_argument("--elev must be on or off");
  log_run(ws, "cluster", {{"k", k}, {"elev", elev}, {"elbow", elbow}, {"seed", seed}});
  const auto ev = ws.events();
  const bool with_elev = elev == "on";
  const auto pts = cluster_points(ev, with_elev);
  const std::size_t dim = with_elev ? 3 : 2;
  if (!elbow.empty()) {
    const auto [lo, hi] = parse_range(elbow);
    std::vector<std::size_t> ks;
    for (int v = lo; v <= hi; ++v) ks.push_back(static_cast<std::size_t>(v));
    std::ofstream out((ws / "elbow.csv").string());
    out << "k,sse\n";
    for (const auto& e : elbow_curve(pts, ks, seed, dim)) out << e.k << "," << e.sse << "\n";
    std::cout << "elbow curve -> " << (ws / "elbow.csv").string() << "\n";
  }
  const auto m = kmeans(pts, k, seed, dim);
  ojson j{{"k", m.k}, {"dim", m.dim}, {"sse", m.sse}, {"centroids", ojson::array()}};
  for (const auto& c : m.centroids) j["centroids"].push_back({c.v[0], c.v[1], c.v[2]});
  std::ofstream((ws / "clusters.json").string()) << j.dump(2) << "\n";
  const auto norm = ws.norm();
  const auto rows = build_nwa(ev, m, years_span(norm.year_min, norm.year_max));
  std::ofstream nwa((ws / "nwa.csv").string());
  nwa << "region_id,period,count\n";
  for (const auto& r : rows) nwa << r.region_id << "," << r.period.str() << "," << r.count << "\n";
  std::cout << "k " << m.k << " sse " << m.sse << ", " << rows.size() << " NWA rows, zero fraction "
            << fixed2(zero_fraction(rows)) << "\n";
}

void cmd_embed(const Workspace& ws, const Node2VecConfig& c) {
  log_run(ws, "embed", {{"dims", c.dims}, {"walks", c.walks_per_node}, {"len", c.walk_length}, {"seed", c.seed}});
  const auto g = adjacency_graph(load_clusters(ws));
  const auto t = node2vec_embed(g, c);
  std::ofstream out((ws / "embeddings.csv").string());
  write_embeddings_csv(out, t);
  std::cout << g.edge_count() << " edges, " << t.vectors.size() << " vectors of " << t.dims << " dims\n";
}

struct TileOpts {
  double k = 4;
  int offsets = 5;
  std::uint32_t res = 64;
  int scheme = 3;
  int sat = 1;
  std::string years, name;
};

void cmd_tile(const Workspace& ws, const TileOpts& o) {
  if (o.sat != 0 && o.sat != 1) throw std::invalid_argument("--sat must be 0 or 1");
  log_run(ws, "tile", {{"k", o.k}, {"offsets", o.offsets}, {"res", o.res}, {"scheme", o.scheme}, {"sat", o.sat},
                       {"years", o.years}});
  const auto src = ws.source();
  const auto ev = project_events(ws.events(), ws.origin());
  const auto periods = periods_of(o.years, ws.norm());
  auto d = build_sat0(*src, ev, o.k, periods, scheme_of(o.scheme), o.res, o.offsets);
  if (o.sat == 1) d = filter_sat1(d, ev);
  const std::string name = o.name.empty() ? "sat" + std::to_string(o.sat) + "_k" + detail::fmt_k(o.k) : o.name;
  save_dataset(d, ws / "tiles" / name);
  std::cout << d.name << ": " << d.tile_count() << " tiles, " << d.records.size() << " records, non-zero "
            << pct(d.nonzero_fraction()) << " -> " << (ws / "tiles" / name).string() << "\n";
}

struct TrainOpts {
  std::string model = "N2", strategy = "flat", out, macro_data, features = "onehot", test_years;
  std::vector<std::string> data;
  int epochs = 300;
  double lr = 1e-4, alpha = 1.0;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  int patience = 5;
  bool unweighted = false;
  int scheme = 3;
};

learn::TrainConfig train_config(const TrainOpts& o) {
  learn::TrainConfig c;
  c.adam.lr = o.lr;
  c.epochs = o.epochs;
  c.seed = o.seed;
  c.samples_per_epoch = o.samples;
  c.weighting = o.unweighted ? learn::ClassWeighting::uniform : learn::ClassWeighting::inverse_frequency;
  return c;
}

// Region-identifier baselines on the NWA table.
void train_baseline(const Workspace& ws, const TrainOpts& o, const std::string& hash) {
  const auto m = load_clusters(ws);
  const auto norm = ws.norm();
  const auto rows = build_nwa(ws.events(), m, years_span(norm.year_min, norm.year_max));
  const auto [ty0, ty1] = parse_range(o.test_years.empty() ? std::to_string(norm.year_max) : o.test_years);
  std::vector<NwaRow> tr, te;
  for (const auto& r : rows) (r.period.year >= ty0 && r.period.year <= ty1 ? te : tr).push_back(r);
  EmbeddingTable emb;
  const auto kind = o.features == "embedding" ? RegionFeatures::embedding : RegionFeatures::one_hot;
  if (kind == RegionFeatures::embedding) {
    std::ifstream in(ws / "embeddings.csv");
    if (!in) throw std::runtime_error("no embeddings.csv (run 'embed' first)");
    emb = read_embeddings_csv(in);
  }
  const auto Xtr = nwa_features(tr, m.k, kind, &emb, norm), Xte = nwa_features(te, m.k, kind, &emb, norm);
  if (o.model == "linreg" || o.model == "ridge" || o.model == "sgdreg") {
    learn::Vector ytr(static_cast<Eigen::Index>(tr.size()));
    for (std::size_t i = 0; i < tr.size(); ++i) ytr(static_cast<Eigen::Index>(i)) = static_cast<double>(tr[i].count);
    learn::SgdConfig sc;
    sc.seed = o.seed;
    const auto lm = o.model == "linreg"  ? learn::linreg_fit(Xtr, ytr)
                    : o.model == "ridge" ? learn::ridge_fit(Xtr, ytr, o.alpha)
                                         : learn::sgd_regression_fit(Xtr, ytr, sc);
    const learn::Vector p = lm.predict(Xte);
    std::vector<double> yt, yp(p.data(), p.data() + p.size());
    for (const auto& r : te) yt.push_back(static_cast<double>(r.count));
    const double r2 = learn::r2_score(yt, yp);
    std::cout << o.model << " (" << o.features << ") test R2 " << fixed2(r2) << "\n";
    append_jsonl((ws / "reports.jsonl").string(),
                 {{"model", o.model}, {"features", o.features}, {"r2", r2}, {"seed", o.seed}, {"config_hash", hash}});
    return;
  }
  const auto scheme = scheme_of(o.scheme);
  std::vector<int> ytr, yte;
  for (const auto& r : tr) ytr.push_back(scheme.bucket(r.count).class_index);
  for (const auto& r : te) yte.push_back(scheme.bucket(r.count).class_index);
  learn::BaselineConfig bc;
  bc.seed = o.seed;
  bc.epochs = o.epochs;
  auto b = learn::classify_baselines(Xtr, ytr, scheme.class_count(), bc);
  const auto pred = o.model == "mlp"        ? learn::predict_features(b.mlp, Xte)
                    : o.model == "logistic" ? learn::predict_features(b.logistic, Xte)
                                            : b.svm.predict(Xte);
  auto rep = compute_metrics(yte, pred, scheme);
  rep.model = o.model;
  rep.dataset = "NWA test (" + o.features + ")";
  rep.seed = o.seed;
  rep.config_hash = hash;
  std::cout << metrics_table(o.model, {o.features}, {rep});
  write_report((ws / "reports.jsonl").string(), rep);
}

void cmd_train(const Workspace& ws, const TrainOpts& o) {
  ojson cfg{{"model", o.model}, {"strategy", o.strategy}, {"data", o.data}, {"macro_data", o.macro_data},
            {"epochs", o.epochs}, {"lr", o.lr}, {"seed", o.seed}, {"samples", o.samples}, {"patience", o.patience},
            {"unweighted", o.unweighted}, {"features", o.features}, {"scheme", o.scheme}};
  const auto hash = log_run(ws, "train", cfg);
  static const std::set<std::string> baselines{"mlp", "logistic", "svm", "linreg", "ridge", "sgdreg"};
  if (baselines.count(o.model)) return train_baseline(ws, o, hash);
  if (o.data.empty()) throw std::invalid_argument("--data is required for CNN models");
  fs::create_directories(ws / "models");
  const auto norm = ws.norm();
  const auto tc = train_config(o);
  std::vector<TileDataset> ds;
  for (const auto& d : o.data) ds.push_back(load_dataset(d));
  const std::uint32_t res = ds[0].res;
  const std::string out = o.out.empty() ? (ws / "models" / (o.model + "_" + o.strategy + ".tcw")).string() : o.out;

  if (o.strategy == "flat") {
    std::vector<learn::Example> ex;
    for (const auto& d : ds) {
      auto e = to_examples(d, norm);
      ex.insert(ex.end(), e.begin(), e.end());
    }
    auto r = learn::train<float>(learn::cnn_spec(o.model, res), std::move(ex), tc);
    learn::save_weights(out, r.network);
    std::cout << "final val accuracy " << pct(r.trace.back().val_accuracy) << " -> " << out << "\n";
  } else if (o.strategy == "curriculum") {
    CurriculumPlan plan{ds, o.patience, o.epochs, norm};
    auto r = curriculum_train<float>(learn::cnn_spec(o.model, res), plan, tc);
    for (const auto& t : r.transitions)
      std::cout << "stage " << t.stage << " added after epoch " << t.epoch << " (pool " << t.pool_size << ")\n";
    learn::save_weights(out, r.network);
    std::cout << "-> " << out << "\n";
  } else if (o.strategy == "hierarchical") {
    if (o.macro_data.empty()) throw std::invalid_argument("hierarchical training needs --macro-data");
    const auto macro_ds = load_dataset(o.macro_data);
    const auto rows = assign_parents(ds[0], *ws.source(), project_events(ws.events(), ws.origin()), macro_ds.k,
                                     macro_ds.scheme);
    const std::string macro_name = macro_ds.scheme.class_count() == 5 ? "N1" : "N2";
    auto m = hier_train<float>(learn::cnn_spec(macro_name, res), learn::cnn_spec(o.model, res), macro_ds, rows, tc, tc,
                               norm);
    const auto macro_out = fs::path(out).replace_extension(".macro.tcw").string();
    learn::save_weights(macro_out, m.macro);
    learn::save_weights(out, m.micro);
    std::cout << "micro trained on " << pct(m.subset_fraction()) << " of the fine records -> " << out << ", "
              << macro_out << "\n";
  } else {
    throw std::invalid_argument("--strategy must be flat, curriculum or hierarchical");
  }
}

void cmd_eval(const Workspace& ws, const std::string& model, const std::string& macro, double macro_k,
              const std::string& testset, std::string report, std::uint64_t seed) {
  const auto hash = log_run(ws, "eval", {{"model", model}, {"macro", macro}, {"testset", testset}, {"seed", seed}});
  if (report.empty()) report = (ws / "reports.jsonl").string();
  const auto norm = ws.norm();
  const auto net = learn::load_weights<float>(model);
  const auto d = load_dataset(testset);
  auto r = evaluate_dataset(net, d, norm);
  r.seed = seed;
  r.config_hash = hash;
  write_report(report, r);
  std::vector<std::string> cols{net.spec().name};
  std::vector<MetricsReport> reps{r};
  if (!macro.empty()) {
    HierarchyModel<float> hm;
    hm.macro = learn::load_weights<float>(macro);
    hm.micro = net;
    hm.norm = norm;
    hm.macro_k = macro_k;
    const auto rows = assign_parents(d, *ws.source(), project_events(ws.events(), ws.origin()), macro_k,
                                     IntensityScheme::with_classes(static_cast<int>(hm.macro.spec().n_classes)));
    auto h = hm_metrics(hm, rows, d.scheme);
    for (auto* x : {&h.micro_gated, &h.composed}) {
      x->seed = seed;
      x->config_hash = hash;
      write_report(report, *x);
    }
    cols = {"4x4", "HM"};
    reps = {h.micro_gated, h.composed};
  }
  std::cout << metrics_table(d.name, cols, reps);
}

void cmd_robustness(const Workspace& ws, const std::string& model, const std::string& testset,
                    const std::string& offsets, int n_train_offsets, int test_year) {
  const auto hash = log_run(ws, "robustness", {{"model", model}, {"testset", testset}, {"offsets", offsets},
                                               {"training_offsets", n_train_offsets}, {"test_year", test_year}});
  const auto norm = ws.norm();
  const auto off = parse_list(offsets);
  if (off.size() != 2) throw std::invalid_argument("--offsets expects two values");
  std::set<int> years;
  for (int y = norm.year_min; y <= norm.year_max; ++y) years.insert(y);
  const auto specs = default_offsets(years, test_year == 0 ? norm.year_max : test_year, off[0], off[1]);
  const auto net = learn::load_weights<float>(model);
  const auto rep = robustness_eval(net, *ws.source(), project_events(ws.events(), ws.origin()), load_dataset(testset),
                                   specs, n_train_offsets, norm);
  for (const auto& row : rep.rows) {
    auto j = to_json(row.report);
    j["config_hash"] = hash;
    j["delta"] = row.delta;
    j["warned"] = row.warned;
    append_jsonl((ws / "reports.jsonl").string(), j);
  }
  std::cout << robustness_table(rep);
}

void cmd_map(const Workspace& ws, const std::string& model, const std::string& period, double k,
             const std::string& out) {
  log_run(ws, "map", {{"model", model}, {"period", period}, {"k", k}});
  const auto net = learn::load_weights<float>(model);
  const auto cells = predict_map(net, *ws.source(), k, net.spec().input_shape.h, parse_period(period), ws.norm());
  const std::string path = out.empty() ? (ws / "map.geojson").string() : out;
  std::ofstream(path) << emit_map(cells, ws.origin()).dump() << "\n";
  std::cout << cells.size() << " cells -> " << path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"terracast: conflict-intensity prediction from landscape rasters"};
  app.require_subcommand(1);
  Workspace ws;
  std::string work = ws.dir.string();
  app.add_option("--work", work, "Working directory shared by all subcommands")->capture_default_str();

  SynthOpts so;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic landscape and conflict events");
  synth->add_option("--seed", so.seed)->capture_default_str();
  synth->add_option("--rate", so.rate, "Events per month per 100 km^2")->capture_default_str();
  synth->add_option("--width-px", so.width_px)->capture_default_str();
  synth->add_option("--height-px", so.height_px)->capture_default_str();
  synth->add_option("--first-year", so.first_year)->capture_default_str();
  synth->add_option("--last-year", so.last_year)->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory (overrides --work)");

  std::string ingest_file, aoi;
  auto* ingest = app.add_subcommand("ingest", "Clean an events CSV");
  ingest->add_option("--events", ingest_file)->required();
  ingest->add_option("--aoi", aoi, "lat0,lon0,lat1,lon1 (default: the plant bounds)");

  std::size_t k_clusters = 38;
  std::string elev = "off", elbow;
  std::uint64_t cluster_seed = 0;
  auto* cluster = app.add_subcommand("cluster", "K-Means regions and the NWA table");
  cluster->add_option("--k", k_clusters)->capture_default_str();
  cluster->add_option("--elev", elev, "on|off")->capture_default_str();
  cluster->add_option("--elbow", elbow, "k range, e.g. 2..60");
  cluster->add_option("--seed", cluster_seed)->capture_default_str();

  Node2VecConfig nc;
  auto* embed = app.add_subcommand("embed", "node2vec embeddings of the region adjacency graph");
  embed->add_option("--dims", nc.dims)->capture_default_str();
  embed->add_option("--walks", nc.walks_per_node)->capture_default_str();
  embed->add_option("--len", nc.walk_length)->capture_default_str();
  embed->add_option("--seed", nc.seed)->capture_default_str();

  TileOpts to;
  auto* tile = app.add_subcommand("tile", "Build a SAT0/SAT1 tile dataset");
  tile->add_option("--k", to.k, "Tile side in km")->capture_default_str();
  tile->add_option("--offsets", to.offsets)->capture_default_str();
  tile->add_option("--res", to.res)->capture_default_str();
  tile->add_option("--scheme", to.scheme, "2|3|5 classes")->capture_default_str();
  tile->add_option("--sat", to.sat, "0|1")->capture_default_str();
  tile->add_option("--years", to.years, "Year range, e.g. 2014..2016 (default: all)");
  tile->add_option("--name", to.name, "Dataset directory name under tiles/");

  TrainOpts tr;
  auto* train = app.add_subcommand("train", "Train a CNN or a region-identifier baseline");
  train->add_option("--model", tr.model, "N1..N6|mlp|logistic|svm|linreg|ridge|sgdreg")->capture_default_str();
  train->add_option("--strategy", tr.strategy, "flat|curriculum|hierarchical")->capture_default_str();
  train->add_option("--data", tr.data, "Dataset directories (curriculum: coarse to fine)");
  train->add_option("--macro-data", tr.macro_data, "Macro dataset for hierarchical training");
  train->add_option("--epochs", tr.epochs)->capture_default_str();
  train->add_option("--lr", tr.lr)->capture_default_str();
  train->add_option("--seed", tr.seed)->capture_default_str();
  train->add_option("--samples", tr.samples, "Samples per epoch (0 = full pass)")->capture_default_str();
  train->add_option("--patience", tr.patience)->capture_default_str();
  train->add_flag("--unweighted", tr.unweighted, "Uniform class weights");
  train->add_option("--features", tr.features, "onehot|embedding (baselines)")->capture_default_str();
  train->add_option("--scheme", tr.scheme, "Classes for baseline classifiers")->capture_default_str();
  train->add_option("--alpha", tr.alpha, "Ridge penalty")->capture_default_str();
  train->add_option("--test-years", tr.test_years, "Held-out years for baselines (default: last year)");
  train->add_option("--out", tr.out, "Weights file");

  std::string model, macro, testset, report, offsets = "1.11,2.77", period, map_out;
  std::uint64_t eval_seed = 0;
  int n_train_offsets = 5, test_year = 0;
  double map_k = 4, macro_k = 10;
  auto* eval = app.add_subcommand("eval", "Evaluate a model on a tile dataset");
  eval->add_option("--model", model)->required();
  eval->add_option("--macro", macro, "Macro weights: evaluate the composed hierarchy");
  eval->add_option("--macro-k", macro_k, "Macro tile side in km")->capture_default_str();
  eval->add_option("--testset", testset)->required();
  eval->add_option("--report", report, "Line-delimited JSON report (default: reports.jsonl)");
  eval->add_option("--seed", eval_seed)->capture_default_str();

  auto* robust = app.add_subcommand("robustness", "Evaluate on unseen grid offsets");
  robust->add_option("--model", model)->required();
  robust->add_option("--testset", testset, "Trained-offset test dataset")->required();
  robust->add_option("--offsets", offsets)->capture_default_str();
  robust->add_option("--training-offsets", n_train_offsets)->capture_default_str();
  robust->add_option("--test-year", test_year, "Year for O3 (default: last year)");

  auto* map = app.add_subcommand("map", "Emit a GeoJSON prediction map");
  map->add_option("--model", model)->required();
  map->add_option("--period", period, "YYYY-MM")->required();
  map->add_option("--k", map_k)->capture_default_str();
  map->add_option("--out", map_out);

  CLI11_PARSE(app, argc, argv);
  ws.dir = work;
  try {
    if (*synth) cmd_synth(ws, so, synth_out);
    if (*ingest) cmd_ingest(ws, ingest_file, aoi);
    if (*cluster) cmd_cluster(ws, k_clusters, elev, elbow, cluster_seed);
    if (*embed) cmd_embed(ws, nc);
    if (*tile) cmd_tile(ws, to);
    if (*train) cmd_train(ws, tr);
    if (*eval) cmd_eval(ws, model, macro, macro_k, testset, report, eval_seed);
    if (*robust) cmd_robustness(ws, model, testset, offsets, n_train_offsets, test_year);
    if (*map) cmd_map(ws, model, period, map_k, map_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
