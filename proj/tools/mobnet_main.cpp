// mobnet: build commute networks from O-D records, derive node embeddings,
// train edge-reconstruction and graph models, and score out-of-sample R^2
// for a per-region target.

#include "mobnet/embeddings.hpp"
#include "mobnet/eval.hpp"
#include "mobnet/geojson.hpp"
#include "mobnet/gnn.hpp"
#include "mobnet/grid.hpp"
#include "mobnet/ingest.hpp"
#include "mobnet/kmeans.hpp"
#include "mobnet/synth.hpp"
#include "mobnet/text_io.hpp"
#include "mobnet/vnn_embed.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace mobnet;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommonInputs {
  std::string od;
  std::string income;
  std::string centroids;
  std::string features;
  std::string geo_level = "tract";
  std::string origin_col = "h_geocode";
  std::string dest_col = "w_geocode";
  std::string count_col = "S000";
  std::string target_col = "median_income";
  std::string region_col = "geoid";
  std::string weight_transform = "log1p";
  bool features_proportions = false;
};

struct TrainFlags {
  std::string method = "gcn";
  std::string init = "spatial";
  Index d = 5;
  std::string seeds = "0..9";
  std::string split = "holdout:0.7";
  int vnn_epochs = 200;
  int gnn_epochs = 300;
  int head_epochs = 600;
  Index batch_size = 4096;
  double lr = 1e-3;
  Index hidden1 = 64;
  Index hidden2 = 16;
  Index heads = 4;
  bool full_head = false;  // (32,64,32) head after the graph layers
};

void add_common_od(CLI::App* cmd, CommonInputs& in) {
  cmd->add_option("--od", in.od, "O-D flow file (delimited text)")->required();
  cmd->add_option("--geo-level", in.geo_level, "Aggregation level: tract or block")
      ->check(CLI::IsMember({"tract", "block"}));
  cmd->add_option("--od-origin-col", in.origin_col, "Home-location column name");
  cmd->add_option("--od-dest-col", in.dest_col, "Work-location column name");
  cmd->add_option("--od-count-col", in.count_col, "Flow count column name");
  cmd->add_option("--weight-transform", in.weight_transform, "Edge weight transform")
      ->check(CLI::IsMember({"raw", "log1p", "binary"}));
}

MobilityNetwork load_network(const CommonInputs& in) {
  OdSchema schema;
  schema.origin_column = in.origin_col;
  schema.destination_column = in.dest_col;
  schema.count_column = in.count_col;
  const GeoLevel level = in.geo_level == "block" ? GeoLevel::block : GeoLevel::tract;
  return build_network(parse_od_file(in.od, level, schema));
}

AttributeTable load_income(const CommonInputs& in) {
  AttributeSchema schema;
  schema.region_column = in.region_col;
  schema.columns = {in.target_col};
  schema.positive_columns = {in.target_col};
  return parse_attribute_file(in.income, schema);
}

AttributeTable load_centroids(const CommonInputs& in) {
  AttributeSchema schema;
  schema.region_column = in.region_col;
  schema.columns = {"lon", "lat"};
  return parse_attribute_file(in.centroids, schema);
}

AttributeTable load_features(const CommonInputs& in) {
  AttributeSchema schema;
  schema.region_column = in.region_col;
  schema.row_normalize = in.features_proportions;
  return parse_attribute_file(in.features, schema);
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& part : split_line(text, ',')) {
    auto dots = part.find("..");
    if (dots != std::string::npos) {
      auto lo = parse_int(part.substr(0, dots));
      auto hi = parse_int(part.substr(dots + 2));
      if (!lo || !hi || *hi < *lo) throw Error("bad seed range: " + part);
      for (long long s = *lo; s <= *hi; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    } else {
      auto s = parse_int(part);
      if (!s || *s < 0) throw Error("bad seed: " + part);
      seeds.push_back(static_cast<std::uint64_t>(*s));
    }
  }
  if (seeds.empty()) throw Error("no seeds given");
  return seeds;
}

std::vector<Index> parse_dims(const std::string& text) {
  std::vector<Index> dims;
  for (const std::string& part : split_line(text, ',')) {
    auto v = parse_int(part);
    if (!v || *v < 1) throw Error("bad dimension: " + part);
    dims.push_back(static_cast<Index>(*v));
  }
  return dims;
}

/// Run manifest written next to every command's outputs. The config map
/// uses flat dotted keys (command.option) that --config accepts back.
class ManifestWriter {
 public:
  ManifestWriter(std::string command, std::uint64_t seed)
      : command_(std::move(command)), seed_(seed), started_(std::chrono::steady_clock::now()) {}

  void set(const std::string& key, const std::string& value) {
    config_[command_ + "." + key] = value;
  }
  void set_int(const std::string& key, long long value) { set(key, std::to_string(value)); }
  void set_num(const std::string& key, double value) { set(key, format_double(value)); }
  void add_output(const fs::path& p) { outputs_.push_back(p.filename().string()); }

  void write(const fs::path& path) const {
    ordered_json m;
    m["tool"] = "mobnet";
    m["version"] = kVersion;
    m["command"] = command_;
    m["seed"] = seed_;
    ordered_json cfg;
    for (const auto& [key, value] : config_) cfg[key] = value;
    m["config"] = std::move(cfg);
    m["outputs"] = outputs_;
    m["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    atomic_write(path, m.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::uint64_t seed_;
  std::chrono::steady_clock::time_point started_;
  std::map<std::string, std::string> config_;
  std::vector<std::string> outputs_;
};

void fill_common_manifest(ManifestWriter& mw, const CommonInputs& in) {
  if (!in.od.empty()) mw.set("od", in.od);
  if (!in.income.empty()) mw.set("income", in.income);
  if (!in.centroids.empty()) mw.set("centroids", in.centroids);
  if (!in.features.empty()) mw.set("features", in.features);
  if (in.features_proportions) mw.set("features-proportions", "true");
  mw.set("geo-level", in.geo_level);
  mw.set("od-origin-col", in.origin_col);
  mw.set("od-dest-col", in.dest_col);
  mw.set("od-count-col", in.count_col);
  mw.set("weight-transform", in.weight_transform);
}

int cmd_stats(const CommonInputs& in, const std::string& out_path) {
  MobilityNetwork net = load_network(in);
  NetworkStats stats = network_stats(net);
  if (stats.nodes == 0) throw Error("no nodes in the network");

  std::cout << "nodes: " << stats.nodes << "\n"
            << "nonzero_edges: " << stats.nonzero_edges << "\n"
            << "total_weight: " << format_double(stats.total_weight) << "\n"
            << "avg_weight_all_pairs: " << format_double(stats.avg_weight_all_pairs) << "\n"
            << "avg_weight_nonzero: " << format_double(stats.avg_weight_nonzero) << "\n"
            << "out_degree_min: " << format_double(stats.min_out_degree) << "\n"
            << "out_degree_mean: " << format_double(stats.mean_out_degree) << "\n"
            << "out_degree_max: " << format_double(stats.max_out_degree) << "\n";

  if (!out_path.empty()) {
    ordered_json j;
    j["nodes"] = stats.nodes;
    j["nonzero_edges"] = stats.nonzero_edges;
    j["total_weight"] = stats.total_weight;
    j["avg_weight_all_pairs"] = stats.avg_weight_all_pairs;
    j["avg_weight_nonzero"] = stats.avg_weight_nonzero;
    j["out_degree_min"] = stats.min_out_degree;
    j["out_degree_mean"] = stats.mean_out_degree;
    j["out_degree_max"] = stats.max_out_degree;
    atomic_write(out_path, j.dump(2) + "\n");
    ManifestWriter mw("stats", 0);
    fill_common_manifest(mw, in);
    mw.set("out", out_path);
    mw.add_output(out_path);
    mw.write(out_path + ".manifest.json");
  }
  return 0;
}

EmbeddingMatrix build_embedding_for_cli(const CommonInputs& in, const MobilityNetwork& net,
                                        const std::string& init, Index d) {
  const WeightTransform transform = weight_transform_from_string(in.weight_transform);
  const EmbeddingMethod method = embedding_method_from_string(init);
  switch (method) {
    case EmbeddingMethod::spatial:
      if (in.centroids.empty()) throw Error("--init spatial needs --centroids");
      return spatial_embedding(net, load_centroids(in));
    case EmbeddingMethod::svd:
      return svd_embedding(net, d, transform);
    case EmbeddingMethod::laplacian:
      return laplacian_embedding(net, d, transform);
    case EmbeddingMethod::random_walk:
      return random_walk_embedding(net, d);
    default:
      throw Error("--init must be one of spatial, svd, laplacian, randomwalk");
  }
}

int cmd_embed(const CommonInputs& in, const std::string& init, Index d,
              const std::string& out_path) {
  MobilityNetwork net = load_network(in);
  EmbeddingMatrix emb = build_embedding_for_cli(in, net, init, d);
  write_embedding(emb, net, out_path);
  ManifestWriter mw("embed", 0);
  fill_common_manifest(mw, in);
  mw.set("init", init);
  mw.set_int("d", d);
  mw.set("out", out_path);
  mw.add_output(out_path);
  mw.write(out_path + ".manifest.json");
  return 0;
}

int cmd_cluster(const CommonInputs& in, const std::string& init, Index d, int k,
                std::uint64_t seed, const std::string& format, const std::string& out_path) {
  MobilityNetwork net = load_network(in);
  EmbeddingMatrix emb = build_embedding_for_cli(in, net, init, d);
  ClusterAssignment clusters = kmeans(emb, k, seed);

  std::optional<AttributeTable> centroids;
  if (!in.centroids.empty()) centroids = load_centroids(in);
  std::optional<AttributeTable> income;
  if (!in.income.empty()) income = load_income(in);

  const bool geojson = format == "geojson" || (format == "auto" && centroids.has_value());
  if (geojson) {
    if (!centroids) throw Error("geojson output needs --centroids");
    atomic_write(out_path, clusters_to_geojson(net, clusters, *centroids,
                                               income ? &*income : nullptr, in.target_col));
  } else {
    atomic_write(out_path, clusters_to_csv(net, clusters));
  }

  ManifestWriter mw("cluster", seed);
  fill_common_manifest(mw, in);
  mw.set("init", init);
  mw.set_int("d", d);
  mw.set_int("k", k);
  mw.set_int("seed", static_cast<long long>(seed));
  mw.set("format", format);
  mw.set("target-col", in.target_col);
  mw.set("out", out_path);
  mw.add_output(out_path);
  mw.write(out_path + ".manifest.json");
  return 0;
}

ordered_json report_to_json(const GridCell& cell) {
  ordered_json row;
  row["city"] = cell.city;
  row["method"] = to_string(cell.method);
  row["init"] = cell.init;
  row["d"] = cell.d;
  row["seeds"] = cell.report.seeds;
  row["per_seed_r2"] = cell.report.per_seed_r2;
  row["r2_mean"] = cell.report.r2_mean;
  row["r2_halfwidth"] = cell.report.r2_halfwidth;
  row["runtime_s"] = cell.report.runtime_s;
  return row;
}

EmbeddingMatrix feature_embedding(const MobilityNetwork& net, const AttributeTable& table) {
  EmbeddingMatrix emb;
  emb.method = EmbeddingMethod::features;
  emb.values = Matrix::Zero(net.size(), static_cast<Index>(table.columns.size()));
  std::unordered_map<RegionId, Index> row_of;
  for (std::size_t i = 0; i < table.regions.size(); ++i) {
    row_of[table.regions[i]] = static_cast<Index>(i);
  }
  for (Index i = 0; i < net.size(); ++i) {
    auto it = row_of.find(net.regions[static_cast<std::size_t>(i)]);
    if (it == row_of.end()) continue;
    for (Index c = 0; c < emb.values.cols(); ++c) {
      if (!table.missing(it->second, c)) emb.values(i, c) = table.values(it->second, c);
    }
  }
  standardize(emb);
  return emb;
}

int cmd_train(const CommonInputs& in, const TrainFlags& flags, const std::string& out_dir) {
  MobilityNetwork net = load_network(in);
  AttributeTable income_table = load_income(in);
  AlignedTarget target = align_target(net, income_table, in.target_col);
  if (target.table_only_regions > 0) {
    std::cerr << "warning: " << target.table_only_regions
              << " attribute rows have no network node and were kept out of the model\n";
  }

  const WeightTransform transform = weight_transform_from_string(in.weight_transform);
  const Method method = method_from_string(flags.method);
  const std::vector<std::uint64_t> seeds = parse_seeds(flags.seeds);
  const SplitSpec split_spec = split_spec_from_string(flags.split);

  EmbeddingMatrix base;
  if (method == Method::feature_mlp) {
    if (in.features.empty()) throw Error("--method features needs --features");
    base = feature_embedding(net, load_features(in));
  } else {
    base = build_embedding_for_cli(in, net, flags.init, flags.d);
  }

  std::vector<Index> nodes;
  for (Index i = 0; i < net.size(); ++i) {
    if (target.valid[static_cast<std::size_t>(i)]) nodes.push_back(i);
  }

  fs::create_directories(out_dir);
  GridCell cell;
  cell.city = fs::path(in.od).stem().string();
  cell.method = method;
  cell.init = method == Method::feature_mlp ? "features" : flags.init;
  cell.d = base.d();
  cell.report.seeds = seeds;

  const auto started = std::chrono::steady_clock::now();
  std::vector<fs::path> outputs;
  for (std::uint64_t seed : seeds) {
    SplitPlan split = make_split(nodes, split_spec, seed);
    EvalReport seed_report;
    const fs::path ckpt = fs::path(out_dir) / ("checkpoint-seed" + std::to_string(seed) + ".txt");
    switch (method) {
      case Method::vnn_two_step: {
        VnnTrainConfig vnn;
        vnn.d = flags.d;
        vnn.epochs = flags.vnn_epochs;
        vnn.batch_size = flags.batch_size;
        vnn.optimizer.lr = flags.lr;
        vnn.seed = seed;
        vnn.transform = transform;
        VnnEmbedModel model = train_vnn_embedding(net, &base, vnn);
        EmbeddingMatrix learned = model.learned_embedding();
        HeadConfig head;
        head.epochs = flags.head_epochs;
        head.optimizer.lr = flags.lr;
        head.seed = seed;
        seed_report = predict_income_from_embedding(learned, target.y, target.valid, split, head);
        nn::save_params(model.params, ckpt);
        outputs.push_back(ckpt);
        const fs::path embp =
            fs::path(out_dir) / ("embedding-seed" + std::to_string(seed) + ".csv");
        write_embedding(learned, net, embp);
        outputs.push_back(embp);
        break;
      }
      case Method::gcn_vnn:
      case Method::gat_vnn: {
        GnnConfig gnn;
        gnn.kind = method == Method::gcn_vnn ? GnnLayerKind::gcn : GnnLayerKind::gat;
        gnn.hidden1 = flags.hidden1;
        gnn.hidden2 = flags.hidden2;
        gnn.heads = flags.heads;
        if (flags.full_head) gnn.head_hidden = {32, 64, 32};
        gnn.epochs = flags.gnn_epochs;
        gnn.optimizer.lr = flags.lr;
        gnn.seed = seed;
        gnn.transform = transform;
        GnnTrainResult result = train_end_to_end(net, base, target.y, target.valid, split, gnn);
        seed_report = std::move(result.report);
        nn::save_params(result.model.params(), ckpt);
        outputs.push_back(ckpt);
        break;
      }
      case Method::feature_mlp: {
        HeadConfig head;
        head.epochs = flags.head_epochs;
        head.optimizer.lr = flags.lr;
        head.seed = seed;
        nn::ModelParams head_params;
        seed_report = predict_income_from_embedding(base, target.y, target.valid, split, head,
                                                    &head_params);
        nn::save_params(head_params, ckpt);
        outputs.push_back(ckpt);
        break;
      }
    }
    cell.report.per_seed_r2.push_back(seed_report.r2);
    cell.report.y_test = std::move(seed_report.y_test);
    cell.report.y_hat_test = std::move(seed_report.y_hat_test);
    cell.report.r2 = seed_report.r2;
  }
  cell.report.aggregate();
  cell.report.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const fs::path csv_path = fs::path(out_dir) / "report.csv";
  atomic_write(csv_path, grid_to_csv({cell}));
  outputs.push_back(csv_path);
  const fs::path json_path = fs::path(out_dir) / "report.json";
  atomic_write(json_path, report_to_json(cell).dump(2) + "\n");
  outputs.push_back(json_path);

  std::cout << "method=" << to_string(cell.method) << " init=" << cell.init << " d=" << cell.d
            << " r2_mean=" << format_double(cell.report.r2_mean)
            << " r2_halfwidth=" << format_double(cell.report.r2_halfwidth) << "\n";

  ManifestWriter mw("train", seeds.front());
  fill_common_manifest(mw, in);
  mw.set("method", flags.method);
  mw.set("init", flags.init);
  mw.set_int("d", flags.d);
  mw.set("seeds", flags.seeds);
  mw.set("split", flags.split);
  mw.set_int("vnn-epochs", flags.vnn_epochs);
  mw.set_int("gnn-epochs", flags.gnn_epochs);
  mw.set_int("head-epochs", flags.head_epochs);
  mw.set_int("batch-size", flags.batch_size);
  mw.set_num("lr", flags.lr);
  mw.set_int("hidden1", flags.hidden1);
  mw.set_int("hidden2", flags.hidden2);
  mw.set_int("heads", flags.heads);
  if (flags.full_head) mw.set("full-head", "true");
  mw.set("target-col", in.target_col);
  mw.set("region-col", in.region_col);
  mw.set("out", out_dir);
  for (const auto& p : outputs) mw.add_output(p);
  mw.write(fs::path(out_dir) / "manifest.json");
  return 0;
}

int cmd_grid(const CommonInputs& in, const std::string& methods, const std::string& inits,
             const std::string& dims, const std::string& seeds, const std::string& split,
             int workers, const std::string& out_dir) {
  CityData city;
  city.name = fs::path(in.od).stem().string();
  city.net = load_network(in);
  AttributeTable income_table = load_income(in);
  AlignedTarget target = align_target(city.net, income_table, in.target_col);
  city.income = target.y;
  city.income_valid = target.valid;
  if (!in.centroids.empty()) city.centroids = load_centroids(in);
  if (!in.features.empty()) city.features = load_features(in);

  GridSpec spec;
  spec.methods.clear();
  for (const auto& m : split_line(methods, ',')) spec.methods.push_back(method_from_string(m));
  spec.inits.clear();
  for (const auto& i : split_line(inits, ',')) {
    spec.inits.push_back(embedding_method_from_string(i));
  }
  spec.dims = parse_dims(dims);
  spec.seeds = parse_seeds(seeds);
  spec.split = split_spec_from_string(split);
  spec.transform = weight_transform_from_string(in.weight_transform);
  spec.workers = workers;

  std::vector<GridCell> cells = run_grid(city, spec);

  fs::create_directories(out_dir);
  const fs::path csv_path = fs::path(out_dir) / "results.csv";
  atomic_write(csv_path, grid_to_csv(cells));
  const fs::path json_path = fs::path(out_dir) / "results.json";
  atomic_write(json_path, grid_to_json(cells));
  std::cout << grid_to_csv(cells);

  ManifestWriter mw("grid", spec.seeds.front());
  fill_common_manifest(mw, in);
  mw.set("methods", methods);
  mw.set("inits", inits);
  mw.set("dims", dims);
  mw.set("seeds", seeds);
  mw.set("split", split);
  mw.set_int("workers", workers);
  mw.set("target-col", in.target_col);
  mw.set("region-col", in.region_col);
  mw.set("out", out_dir);
  mw.add_output(csv_path);
  mw.add_output(json_path);
  mw.write(fs::path(out_dir) / "manifest.json");
  return 0;
}

int cmd_synth(Index n, int communities, double lambda_in, double lambda_out, double noise_sigma,
              double income_gradient, double spatial_scatter, std::uint64_t seed,
              const std::string& out_dir) {
  PlantedCityConfig config;
  config.n = n;
  config.communities = communities;
  config.lambda_in = lambda_in;
  config.lambda_out = lambda_out;
  config.noise_sigma = noise_sigma;
  config.income_gradient = income_gradient;
  config.spatial_scatter = spatial_scatter;
  SyntheticCity city = generate_city(config, seed);
  write_city(city, out_dir);

  ManifestWriter mw("synth", seed);
  mw.set_int("n", n);
  mw.set_int("communities", communities);
  mw.set_num("lambda-in", lambda_in);
  mw.set_num("lambda-out", lambda_out);
  mw.set_num("noise-sigma", noise_sigma);
  mw.set_num("income-gradient", income_gradient);
  mw.set_num("spatial-scatter", spatial_scatter);
  mw.set_int("seed", static_cast<long long>(seed));
  mw.set("out", out_dir);
  for (const char* f : {"od.csv", "income.csv", "centroids.csv", "communities.csv"}) {
    mw.add_output(fs::path(out_dir) / f);
  }
  mw.write(fs::path(out_dir) / "manifest.json");
  std::cout << "wrote synthetic city (" << n << " nodes, " << communities << " communities) to "
            << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"commute-network socioeconomic modeling"};
  app.set_config("--config", "", "Key-value config file; flags override its values");
  app.require_subcommand(1);

  CommonInputs in;
  TrainFlags flags;
  std::string out;
  std::string init = "svd";
  Index d = 5;
  int k = 5;
  std::uint64_t seed = 0;
  std::string format = "auto";
  std::string methods = "vnn,gcn,gat";
  std::string inits = "spatial,svd,laplacian,randomwalk";
  std::string dims = "5";
  std::string seeds = "0..9";
  std::string split = "holdout:0.7";
  int workers = 0;
  Index synth_n = 60;
  int synth_communities = 2;
  double lambda_in = 5.0, lambda_out = 0.2, noise_sigma = 4000.0, income_gradient = 0.0,
         spatial_scatter = 0.25;

  CLI::App* stats = app.add_subcommand("stats", "Network statistics from an O-D file");
  add_common_od(stats, in);
  stats->add_option("--out", out, "Optional JSON report path");

  CLI::App* embed = app.add_subcommand("embed", "Write a node embedding file");
  add_common_od(embed, in);
  embed->add_option("--init", init, "Embedding family")
      ->check(CLI::IsMember({"spatial", "svd", "laplacian", "randomwalk"}));
  embed->add_option("--d", d, "Embedding dimensionality");
  embed->add_option("--centroids", in.centroids, "Centroid table (geoid,lon,lat)");
  embed->add_option("--region-col", in.region_col, "Region id column name");
  embed->add_option("--out", out, "Output embedding file")->required();

  CLI::App* cluster = app.add_subcommand("cluster", "K-means over a node embedding");
  add_common_od(cluster, in);
  cluster->add_option("--init", init, "Embedding family")
      ->check(CLI::IsMember({"spatial", "svd", "laplacian", "randomwalk"}));
  cluster->add_option("--d", d, "Embedding dimensionality");
  cluster->add_option("--k", k, "Number of clusters");
  cluster->add_option("--seed", seed, "Clustering seed");
  cluster->add_option("--centroids", in.centroids, "Centroid table (geoid,lon,lat)");
  cluster->add_option("--income", in.income, "Optional income table for properties");
  cluster->add_option("--target-col", in.target_col, "Income column name");
  cluster->add_option("--region-col", in.region_col, "Region id column name");
  cluster->add_option("--format", format, "geojson, csv, or auto")
      ->check(CLI::IsMember({"auto", "geojson", "csv"}));
  cluster->add_option("--out", out, "Output file")->required();

  CLI::App* train = app.add_subcommand("train", "Train one model configuration");
  add_common_od(train, in);
  train->add_option("--income", in.income, "Income table")->required();
  train->add_option("--target-col", in.target_col, "Income column name");
  train->add_option("--region-col", in.region_col, "Region id column name");
  train->add_option("--method", flags.method, "vnn, gcn, gat, or features")
      ->check(CLI::IsMember({"vnn", "gcn", "gat", "features"}));
  train->add_option("--init", flags.init, "Initial embedding family")
      ->check(CLI::IsMember({"spatial", "svd", "laplacian", "randomwalk"}));
  train->add_option("--d", flags.d, "Embedding dimensionality");
  train->add_option("--seeds", flags.seeds, "Comma list or a..b range");
  train->add_option("--split", flags.split, "holdout:<frac> or kfold:<k>");
  train->add_option("--centroids", in.centroids, "Centroid table");
  train->add_option("--features", in.features, "Feature table for --method features");
  train->add_flag("--features-proportions", in.features_proportions,
                  "Row-normalize feature columns to proportions");
  train->add_option("--vnn-epochs", flags.vnn_epochs, "Reconstruction training epochs");
  train->add_option("--gnn-epochs", flags.gnn_epochs, "Graph model training epochs");
  train->add_option("--head-epochs", flags.head_epochs, "Supervised head training epochs");
  train->add_option("--batch-size", flags.batch_size, "Pair batch size");
  train->add_option("--lr", flags.lr, "Learning rate");
  train->add_option("--hidden1", flags.hidden1, "First graph layer width");
  train->add_option("--hidden2", flags.hidden2, "Second graph layer width");
  train->add_option("--heads", flags.heads, "Attention heads");
  train->add_flag("--full-head", flags.full_head, "Use the (32,64,32) head MLP");
  train->add_option("--out", out, "Output directory")->required();

  CLI::App* grid = app.add_subcommand("grid", "Run a method x init x d grid");
  add_common_od(grid, in);
  grid->add_option("--income", in.income, "Income table")->required();
  grid->add_option("--target-col", in.target_col, "Income column name");
  grid->add_option("--region-col", in.region_col, "Region id column name");
  grid->add_option("--methods", methods, "Comma list of vnn,gcn,gat,features");
  grid->add_option("--inits", inits, "Comma list of embedding families");
  grid->add_option("--dims", dims, "Comma list of dimensionalities");
  grid->add_option("--seeds", seeds, "Comma list or a..b range");
  grid->add_option("--split", split, "holdout:<frac> or kfold:<k>");
  grid->add_option("--centroids", in.centroids, "Centroid table");
  grid->add_option("--features", in.features, "Feature table");
  grid->add_flag("--features-proportions", in.features_proportions,
                 "Row-normalize feature columns to proportions");
  grid->add_option("--workers", workers, "Worker pool size (0 = logical cores)");
  grid->add_option("--out", out, "Output directory")->required();

  CLI::App* synth = app.add_subcommand("synth", "Generate a planted-community city");
  synth->add_option("--n", synth_n, "Node count");
  synth->add_option("--communities", synth_communities, "Community count");
  synth->add_option("--lambda-in", lambda_in, "Within-community Poisson rate");
  synth->add_option("--lambda-out", lambda_out, "Across-community Poisson rate");
  synth->add_option("--noise-sigma", noise_sigma, "Income noise stddev");
  synth->add_option("--income-gradient", income_gradient, "Income slope per unit longitude");
  synth->add_option("--spatial-scatter", spatial_scatter, "Node scatter around centers");
  synth->add_option("--seed", seed, "Generation seed");
  synth->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (stats->parsed()) return cmd_stats(in, out);
    if (embed->parsed()) return cmd_embed(in, init, d, out);
    if (cluster->parsed()) return cmd_cluster(in, init, d, k, seed, format, out);
    if (train->parsed()) return cmd_train(in, flags, out);
    if (grid->parsed()) return cmd_grid(in, methods, inits, dims, seeds, split, workers, out);
    if (synth->parsed()) {
      return cmd_synth(synth_n, synth_communities, lambda_in, lambda_out, noise_sigma,
                       income_gradient, spatial_scatter, seed, out);
    }
  } catch (const std::exception& e) {
    ordered_json err;
    err["error"] = e.what();
    err["command"] = app.get_subcommands().empty() ? "" : app.get_subcommands()[0]->get_name();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
