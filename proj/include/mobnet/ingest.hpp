#pragma once

#include "mobnet/graph.hpp"
#include "mobnet/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mobnet {

/// One aggregated origin-destination flow. Origin is the home region,
/// destination the work region.
struct FlowRecord {
  RegionId origin;
  RegionId destination;
  long long count = 0;  // commuters/day, >= 0
};

enum class GeoLevel { block, tract };

/// Column names vary by file vintage, so they are configurable. The
/// defaults match LODES main files; canonical edge lists written by this
/// library (origin,destination,count) are recognized automatically.
struct OdSchema {
  std::string origin_column = "h_geocode";       // home
  std::string destination_column = "w_geocode";  // work
  std::string count_column = "S000";
  char delimiter = ',';
};

/// Parses an O-D file and aggregates to the requested geo level.
/// Block codes (15 digits) are truncated to their leading 11 digits when
/// geo_level is tract; duplicate pairs after truncation are summed.
/// The result is sorted by (origin, destination).
std::vector<FlowRecord> parse_od_file(const std::filesystem::path& path, GeoLevel geo_level,
                                      const OdSchema& schema = {});

/// Per-region named numeric columns with an explicit missing mask.
struct AttributeTable {
  std::vector<std::string> columns;
  std::vector<RegionId> regions;  // row order
  Matrix values;                  // R x C, 0 where missing
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> missing;
  int warning_count = 0;          // unparsable or invalid cells flagged

  int column(const std::string& name) const;
  std::optional<Index> row_of(const RegionId& r) const;
  bool has_region(const RegionId& r) const { return row_of(r).has_value(); }
};

struct AttributeSchema {
  std::string region_column = "geoid";
  std::vector<std::string> columns;       // empty selects every other column
  std::vector<std::string> positive_columns;  // values <= 0 flagged missing
  bool row_normalize = false;             // convert selected columns to row proportions
  char delimiter = ',';
};

AttributeTable parse_attribute_file(const std::filesystem::path& path,
                                    const AttributeSchema& schema = {});

/// Directed weighted graph over the union of flow endpoints, or over the
/// supplied region universe. Node order is lexicographic by geoid.
MobilityNetwork build_network(const std::vector<FlowRecord>& flows,
                              const std::vector<RegionId>* universe = nullptr);

/// Canonical edge list: origin,destination,count sorted by (origin,destination).
std::string edge_list_string(const MobilityNetwork& net);
void write_edge_list(const MobilityNetwork& net, const std::filesystem::path& path);

/// Schema that reads files produced by write_edge_list.
OdSchema canonical_od_schema();

struct NetworkStats {
  Index nodes = 0;
  long long nonzero_edges = 0;
  double total_weight = 0.0;
  double avg_weight_all_pairs = 0.0;  // total / N^2
  double avg_weight_nonzero = 0.0;    // total / nonzero_edges
  double min_out_degree = 0.0;
  double mean_out_degree = 0.0;
  double max_out_degree = 0.0;
};

NetworkStats network_stats(const MobilityNetwork& net);

/// Aligns one attribute column with the network's node order. Returns the
/// target vector (0 where invalid) and a validity mask; regions absent from
/// the table or flagged missing are invalid.
struct AlignedTarget {
  Vector y;
  std::vector<std::uint8_t> valid;
  Index n_valid = 0;
  Index table_only_regions = 0;  // rows in the table with no network node
};

AlignedTarget align_target(const MobilityNetwork& net, const AttributeTable& table,
                           const std::string& column);

}  // namespace mobnet
