#include "mobnet/grid.hpp"

#include "mobnet/text_io.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <thread>

namespace mobnet {

Method method_from_string(const std::string& s) {
  if (s == "vnn" || s == "vnn_two_step") return Method::vnn_two_step;
  if (s == "gcn" || s == "gcn_vnn") return Method::gcn_vnn;
  if (s == "gat" || s == "gat_vnn") return Method::gat_vnn;
  if (s == "features" || s == "feature_mlp") return Method::feature_mlp;
  throw Error("unknown method: " + s);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::vnn_two_step: return "vnn";
    case Method::gcn_vnn: return "gcn";
    case Method::gat_vnn: return "gat";
    case Method::feature_mlp: return "features";
  }
  return "vnn";
}

EmbeddingMatrix make_initial_embedding(const CityData& city, EmbeddingMethod init, Index d,
                                       WeightTransform transform) {
  switch (init) {
    case EmbeddingMethod::spatial:
      if (!city.centroids) throw Error("spatial embedding needs centroids");
      return spatial_embedding(city.net, *city.centroids);
    case EmbeddingMethod::svd:
      return svd_embedding(city.net, d, transform);
    case EmbeddingMethod::laplacian:
      return laplacian_embedding(city.net, d, transform);
    case EmbeddingMethod::random_walk:
      return random_walk_embedding(city.net, d);
    default:
      throw Error("not an initial embedding method: " + to_string(init));
  }
}

namespace {

std::vector<Index> nodes_with_targets(const CityData& city) {
  std::vector<Index> nodes;
  for (Index i = 0; i < city.net.size(); ++i) {
    if (city.income_valid[static_cast<std::size_t>(i)]) nodes.push_back(i);
  }
  return nodes;
}

EmbeddingMatrix feature_matrix(const CityData& city) {
  if (!city.features) throw Error("feature benchmark needs an attribute table");
  const AttributeTable& t = *city.features;
  EmbeddingMatrix emb;
  emb.method = EmbeddingMethod::features;
  emb.values = Matrix::Zero(city.net.size(), static_cast<Index>(t.columns.size()));
  std::unordered_map<RegionId, Index> row_of;
  for (std::size_t i = 0; i < t.regions.size(); ++i) row_of[t.regions[i]] = static_cast<Index>(i);
  for (Index i = 0; i < city.net.size(); ++i) {
    auto it = row_of.find(city.net.regions[static_cast<std::size_t>(i)]);
    if (it == row_of.end()) continue;  // absent rows stay zero
    for (Index c = 0; c < emb.values.cols(); ++c) {
      if (!t.missing(it->second, c)) emb.values(i, c) = t.values(it->second, c);
    }
  }
  standardize(emb);
  return emb;
}

void run_cell(const CityData& city, const GridSpec& spec, GridCell& cell) {
  const auto started = std::chrono::steady_clock::now();
  const std::vector<Index> nodes = nodes_with_targets(city);

  EmbeddingMatrix base;
  if (cell.method == Method::feature_mlp) {
    base = feature_matrix(city);
    cell.d = base.d();
  } else {
    base = make_initial_embedding(city, embedding_method_from_string(cell.init), cell.d,
                                  spec.transform);
  }

  EvalReport& report = cell.report;
  report.seeds = spec.seeds;
  for (std::uint64_t seed : spec.seeds) {
    SplitPlan split = make_split(nodes, spec.split, seed);
    EvalReport seed_report;
    switch (cell.method) {
      case Method::vnn_two_step: {
        VnnTrainConfig vnn = spec.vnn;
        vnn.d = cell.d;
        vnn.seed = seed;
        vnn.transform = spec.transform;
        VnnEmbedModel model = train_vnn_embedding(city.net, &base, vnn);
        EmbeddingMatrix learned = model.learned_embedding();
        HeadConfig head = spec.head;
        head.seed = seed;
        seed_report = predict_income_from_embedding(learned, city.income, city.income_valid,
                                                    split, head);
        break;
      }
      case Method::gcn_vnn:
      case Method::gat_vnn: {
        GnnConfig gnn = spec.gnn;
        gnn.kind = cell.method == Method::gcn_vnn ? GnnLayerKind::gcn : GnnLayerKind::gat;
        gnn.seed = seed;
        gnn.transform = spec.transform;
        seed_report = train_end_to_end(city.net, base, city.income, city.income_valid, split,
                                       gnn).report;
        break;
      }
      case Method::feature_mlp: {
        HeadConfig head = spec.head;
        head.seed = seed;
        seed_report =
            predict_income_from_embedding(base, city.income, city.income_valid, split, head);
        break;
      }
    }
    report.per_seed_r2.push_back(seed_report.r2);
    // Keep the last seed's predictions for inspection.
    report.y_test = std::move(seed_report.y_test);
    report.y_hat_test = std::move(seed_report.y_hat_test);
    report.r2 = seed_report.r2;
  }
  report.aggregate();
  report.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
}

}  // namespace

std::vector<GridCell> run_grid(const CityData& city, const GridSpec& spec) {
  std::vector<GridCell> cells;
  for (Method method : spec.methods) {
    if (method == Method::feature_mlp) {
      GridCell cell;
      cell.city = city.name;
      cell.method = method;
      cell.init = "features";
      if (!city.features) {
        cell.available = false;
        cell.na_reason = "no feature table supplied";
      }
      cells.push_back(std::move(cell));
      continue;
    }
    for (EmbeddingMethod init : spec.inits) {
      for (Index d : spec.dims) {
        GridCell cell;
        cell.city = city.name;
        cell.method = method;
        cell.init = to_string(init);
        cell.d = d;
        if (init == EmbeddingMethod::spatial && !city.centroids) {
          cell.available = false;
          cell.na_reason = "no centroid table supplied";
        }
        cells.push_back(std::move(cell));
      }
    }
  }

  unsigned workers = spec.workers > 0 ? static_cast<unsigned>(spec.workers)
                                      : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(cells.size()));

  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(cells.size());
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      if (!cells[i].available) continue;
      try {
        run_cell(city, spec, cells[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!errors[i].empty()) {
      throw Error("grid cell " + cells[i].city + "/" + to_string(cells[i].method) + "/" +
                  cells[i].init + " failed: " + errors[i]);
    }
  }
  return cells;
}

EmbeddingMatrix concat_features(const EmbeddingMatrix& emb, const MobilityNetwork& net,
                                const AttributeTable& extra,
                                const std::vector<std::string>& columns) {
  if (emb.n() != net.size()) throw Error("concat_features: embedding/network size mismatch");
  std::vector<int> cols;
  if (columns.empty()) {
    for (std::size_t c = 0; c < extra.columns.size(); ++c) cols.push_back(static_cast<int>(c));
  } else {
    for (const auto& name : columns) {
      const int c = extra.column(name);
      if (c < 0) throw Error("concat_features: table has no column '" + name + "'");
      cols.push_back(c);
    }
  }

  std::unordered_map<RegionId, Index> row_of;
  for (std::size_t i = 0; i < extra.regions.size(); ++i) {
    row_of[extra.regions[i]] = static_cast<Index>(i);
  }
  std::string missing_in_table, missing_in_net;
  for (Index i = 0; i < net.size(); ++i) {
    const RegionId& r = net.regions[static_cast<std::size_t>(i)];
    auto it = row_of.find(r);
    bool ok = it != row_of.end();
    if (ok) {
      for (int c : cols) ok = ok && !extra.missing(it->second, c);
    }
    if (!ok) missing_in_table += missing_in_table.empty() ? r.geoid : ", " + r.geoid;
  }
  for (const auto& r : extra.regions) {
    if (!net.index.count(r)) missing_in_net += missing_in_net.empty() ? r.geoid : ", " + r.geoid;
  }
  if (!missing_in_table.empty() || !missing_in_net.empty()) {
    std::string msg = "concat_features: region sets differ.";
    if (!missing_in_table.empty()) msg += " missing from table: " + missing_in_table + ".";
    if (!missing_in_net.empty()) msg += " missing from network: " + missing_in_net + ".";
    throw Error(msg);
  }

  EmbeddingMatrix left = emb;
  if (!left.standardized) standardize(left);
  EmbeddingMatrix right;
  right.method = EmbeddingMethod::features;
  right.values = Matrix::Zero(net.size(), static_cast<Index>(cols.size()));
  for (Index i = 0; i < net.size(); ++i) {
    const Index row = row_of.at(net.regions[static_cast<std::size_t>(i)]);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      right.values(i, static_cast<Index>(k)) = extra.values(row, cols[k]);
    }
  }
  standardize(right);

  EmbeddingMatrix out;
  out.method = EmbeddingMethod::concat;
  out.values.resize(net.size(), left.d() + right.d());
  out.values << left.values, right.values;
  out.standardized = true;
  return out;
}

// The delimited table stays free of wall-clock values so re-runs are
// byte-identical; runtimes live in the JSON report.
std::string grid_to_csv(const std::vector<GridCell>& cells) {
  std::string out = "city,method,init,d,seeds,r2_mean,r2_halfwidth\n";
  for (const auto& cell : cells) {
    out += cell.city + "," + to_string(cell.method) + "," + cell.init + ",";
    if (cell.available) {
      out += std::to_string(cell.d) + "," + std::to_string(cell.report.seeds.size()) + "," +
             format_double(cell.report.r2_mean) + "," + format_double(cell.report.r2_halfwidth);
    } else {
      out += ",,NA,NA";
    }
    out += '\n';
  }
  return out;
}

std::string grid_to_json(const std::vector<GridCell>& cells) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& cell : cells) {
    nlohmann::ordered_json row;
    row["city"] = cell.city;
    row["method"] = to_string(cell.method);
    row["init"] = cell.init;
    if (cell.available) {
      row["d"] = cell.d;
      row["seeds"] = cell.report.seeds;
      row["per_seed_r2"] = cell.report.per_seed_r2;
      row["r2_mean"] = cell.report.r2_mean;
      row["r2_halfwidth"] = cell.report.r2_halfwidth;
      row["runtime_s"] = cell.report.runtime_s;
    } else {
      row["na"] = true;
      row["na_reason"] = cell.na_reason;
    }
    rows.push_back(std::move(row));
  }
  return rows.dump(2) + "\n";
}

}  // namespace mobnet
