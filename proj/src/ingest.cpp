#include "mobnet/ingest.hpp"

#include "mobnet/text_io.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace mobnet {

namespace {

std::string truncate_code(const std::string& code, GeoLevel level, std::size_t line_no) {
  if (!all_digits(code)) {
    throw Error("parse error at line " + std::to_string(line_no) +
                ": region code is not numeric: '" + code + "'");
  }
  if (level == GeoLevel::tract) {
    if (code.size() == 11) return code;
    if (code.size() == 15) return code.substr(0, 11);
    throw Error("parse error at line " + std::to_string(line_no) +
                ": expected 11- or 15-digit code, got " + std::to_string(code.size()) +
                " digits");
  }
  if (code.size() != 15) {
    throw Error("parse error at line " + std::to_string(line_no) +
                ": expected 15-digit block code, got " + std::to_string(code.size()) +
                " digits");
  }
  return code;
}

}  // namespace

std::vector<FlowRecord> parse_od_file(const std::filesystem::path& path, GeoLevel geo_level,
                                      const OdSchema& schema) {
  DelimitedTable table = read_delimited(path, schema.delimiter);
  if (table.rows.empty()) throw Error("empty O-D file: " + path.string());

  int origin_col, dest_col, count_col;
  if (!table.header.empty()) {
    origin_col = table.column(schema.origin_column);
    dest_col = table.column(schema.destination_column);
    count_col = table.column(schema.count_column);
    if (origin_col < 0 || dest_col < 0 || count_col < 0) {
      // Canonical edge lists name their columns origin,destination,count.
      origin_col = table.column("origin");
      dest_col = table.column("destination");
      count_col = table.column("count");
    }
    if (origin_col < 0 || dest_col < 0 || count_col < 0) {
      throw Error("O-D file " + path.string() + " has no columns (" + schema.origin_column +
                  ", " + schema.destination_column + ", " + schema.count_column +
                  ") nor (origin, destination, count)");
    }
  } else {
    if (table.rows.front().size() < 3) {
      throw Error("headerless O-D file needs 3 columns: " + path.string());
    }
    origin_col = 0;
    dest_col = 1;
    count_col = 2;
  }

  std::map<std::pair<std::string, std::string>, long long> aggregated;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line_no = table.line_numbers[r];
    const std::size_t need = static_cast<std::size_t>(std::max({origin_col, dest_col, count_col})) + 1;
    if (row.size() < need) {
      throw Error("parse error at line " + std::to_string(line_no) + ": expected at least " +
                  std::to_string(need) + " columns, got " + std::to_string(row.size()));
    }
    const std::string origin = truncate_code(row[static_cast<std::size_t>(origin_col)], geo_level, line_no);
    const std::string dest = truncate_code(row[static_cast<std::size_t>(dest_col)], geo_level, line_no);
    auto count = parse_int(row[static_cast<std::size_t>(count_col)]);
    if (!count) {
      throw Error("parse error at line " + std::to_string(line_no) + ": non-numeric count '" +
                  row[static_cast<std::size_t>(count_col)] + "'");
    }
    if (*count < 0) {
      throw Error("parse error at line " + std::to_string(line_no) + ": negative count");
    }
    aggregated[{origin, dest}] += *count;
  }

  std::vector<FlowRecord> records;
  records.reserve(aggregated.size());
  for (const auto& [key, count] : aggregated) {
    records.push_back({RegionId(key.first), RegionId(key.second), count});
  }
  return records;
}

int AttributeTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::optional<Index> AttributeTable::row_of(const RegionId& r) const {
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i] == r) return static_cast<Index>(i);
  }
  return std::nullopt;
}

AttributeTable parse_attribute_file(const std::filesystem::path& path,
                                    const AttributeSchema& schema) {
  DelimitedTable table = read_delimited(path, schema.delimiter);
  if (table.header.empty()) throw Error("attribute file needs a header row: " + path.string());
  if (table.rows.empty()) throw Error("empty attribute file: " + path.string());

  const int region_col = table.column(schema.region_column);
  if (region_col < 0) {
    throw Error("attribute file " + path.string() + " has no region column '" +
                schema.region_column + "'");
  }

  std::vector<std::pair<std::string, int>> selected;  // name, source column
  if (schema.columns.empty()) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (static_cast<int>(c) != region_col) selected.emplace_back(table.header[c], static_cast<int>(c));
    }
  } else {
    for (const auto& name : schema.columns) {
      int c = table.column(name);
      if (c < 0) throw Error("attribute file " + path.string() + " has no column '" + name + "'");
      selected.emplace_back(name, c);
    }
  }

  AttributeTable out;
  for (const auto& [name, c] : selected) out.columns.push_back(name);
  const Index n_cols = static_cast<Index>(selected.size());
  const Index n_rows = static_cast<Index>(table.rows.size());
  out.values = Matrix::Zero(n_rows, n_cols);
  out.missing = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n_rows, n_cols, false);

  std::set<std::string> positive(schema.positive_columns.begin(), schema.positive_columns.end());
  std::set<std::string> seen;
  for (Index r = 0; r < n_rows; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    const std::size_t line_no = table.line_numbers[static_cast<std::size_t>(r)];
    if (row.size() <= static_cast<std::size_t>(region_col)) {
      throw Error("parse error at line " + std::to_string(line_no) + ": missing region cell");
    }
    const std::string& geoid = row[static_cast<std::size_t>(region_col)];
    if (!seen.insert(geoid).second) {
      throw Error("duplicate region row '" + geoid + "' at line " + std::to_string(line_no));
    }
    out.regions.emplace_back(geoid);
    for (Index c = 0; c < n_cols; ++c) {
      const int src = selected[static_cast<std::size_t>(c)].second;
      std::optional<double> v;
      if (row.size() > static_cast<std::size_t>(src)) v = parse_double(row[static_cast<std::size_t>(src)]);
      const bool must_be_positive = positive.count(selected[static_cast<std::size_t>(c)].first) > 0;
      if (!v || (must_be_positive && *v <= 0.0)) {
        out.missing(r, c) = true;
        ++out.warning_count;
      } else {
        out.values(r, c) = *v;
      }
    }
  }

  if (schema.row_normalize) {
    for (Index r = 0; r < n_rows; ++r) {
      double total = 0.0;
      for (Index c = 0; c < n_cols; ++c) {
        if (!out.missing(r, c)) total += out.values(r, c);
      }
      if (total > 0.0) {
        for (Index c = 0; c < n_cols; ++c) {
          if (!out.missing(r, c)) out.values(r, c) /= total;
        }
      } else {
        for (Index c = 0; c < n_cols; ++c) {
          out.missing(r, c) = true;
        }
        ++out.warning_count;
      }
    }
  }
  return out;
}

MobilityNetwork build_network(const std::vector<FlowRecord>& flows,
                              const std::vector<RegionId>* universe) {
  std::set<RegionId> node_set;
  if (universe) {
    node_set.insert(universe->begin(), universe->end());
    for (const auto& f : flows) {
      if (!node_set.count(f.origin) || !node_set.count(f.destination)) {
        throw Error("flow endpoint outside the supplied region universe: " + f.origin.geoid +
                    " -> " + f.destination.geoid);
      }
    }
  } else {
    for (const auto& f : flows) {
      node_set.insert(f.origin);
      node_set.insert(f.destination);
    }
  }
  if (node_set.empty()) throw Error("build_network: no regions");

  MobilityNetwork net;
  net.regions.assign(node_set.begin(), node_set.end());
  for (std::size_t i = 0; i < net.regions.size(); ++i) {
    net.index[net.regions[i]] = static_cast<Index>(i);
  }
  const Index n = net.size();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(flows.size());
  for (const auto& f : flows) {
    if (f.count > 0) {
      trips.emplace_back(net.index.at(f.origin), net.index.at(f.destination),
                         static_cast<double>(f.count));
    }
  }
  net.adjacency.resize(n, n);
  net.adjacency.setFromTriplets(trips.begin(), trips.end());
  net.adjacency.makeCompressed();
  return net;
}

std::string edge_list_string(const MobilityNetwork& net) {
  struct Edge {
    const std::string* o;
    const std::string* d;
    double w;
  };
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(net.adjacency.nonZeros()));
  for (Index k = 0; k < net.adjacency.outerSize(); ++k) {
    for (SpMat::InnerIterator it(net.adjacency, k); it; ++it) {
      if (it.value() > 0.0) {
        edges.push_back({&net.regions[static_cast<std::size_t>(it.row())].geoid,
                         &net.regions[static_cast<std::size_t>(it.col())].geoid, it.value()});
      }
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (*a.o != *b.o) return *a.o < *b.o;
    return *a.d < *b.d;
  });
  std::string out = "origin,destination,count\n";
  for (const auto& e : edges) {
    out += *e.o;
    out += ',';
    out += *e.d;
    out += ',';
    const double w = e.w;
    if (w == std::floor(w) && std::abs(w) < 9.007199254740992e15) {
      out += std::to_string(static_cast<long long>(w));
    } else {
      out += format_double(w);
    }
    out += '\n';
  }
  return out;
}

void write_edge_list(const MobilityNetwork& net, const std::filesystem::path& path) {
  atomic_write(path, edge_list_string(net));
}

OdSchema canonical_od_schema() {
  OdSchema s;
  s.origin_column = "origin";
  s.destination_column = "destination";
  s.count_column = "count";
  return s;
}

NetworkStats network_stats(const MobilityNetwork& net) {
  NetworkStats s;
  s.nodes = net.size();
  Vector out_deg = Vector::Zero(net.size());
  for (Index k = 0; k < net.adjacency.outerSize(); ++k) {
    for (SpMat::InnerIterator it(net.adjacency, k); it; ++it) {
      if (it.value() > 0.0) {
        ++s.nonzero_edges;
        s.total_weight += it.value();
        out_deg[it.row()] += it.value();
      }
    }
  }
  const double n = static_cast<double>(s.nodes);
  s.avg_weight_all_pairs = s.total_weight / (n * n);
  s.avg_weight_nonzero = s.nonzero_edges > 0 ? s.total_weight / static_cast<double>(s.nonzero_edges) : 0.0;
  s.min_out_degree = out_deg.minCoeff();
  s.mean_out_degree = out_deg.mean();
  s.max_out_degree = out_deg.maxCoeff();
  return s;
}

AlignedTarget align_target(const MobilityNetwork& net, const AttributeTable& table,
                           const std::string& column) {
  const int c = table.column(column);
  if (c < 0) throw Error("attribute table has no column '" + column + "'");
  AlignedTarget out;
  out.y = Vector::Zero(net.size());
  out.valid.assign(static_cast<std::size_t>(net.size()), 0);

  std::unordered_map<RegionId, Index> table_rows;
  for (std::size_t i = 0; i < table.regions.size(); ++i) {
    table_rows[table.regions[i]] = static_cast<Index>(i);
  }
  for (Index i = 0; i < net.size(); ++i) {
    auto it = table_rows.find(net.regions[static_cast<std::size_t>(i)]);
    if (it == table_rows.end()) continue;
    if (table.missing(it->second, c)) continue;
    out.y[i] = table.values(it->second, c);
    out.valid[static_cast<std::size_t>(i)] = 1;
    ++out.n_valid;
  }
  for (const auto& r : table.regions) {
    if (!net.index.count(r)) ++out.table_only_regions;
  }
  return out;
}

}  // namespace mobnet
