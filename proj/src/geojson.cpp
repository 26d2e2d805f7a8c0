#include "mobnet/geojson.hpp"

#include <json.hpp>

namespace mobnet {

std::string clusters_to_geojson(const MobilityNetwork& net, const ClusterAssignment& clusters,
                                const AttributeTable& centroids, const AttributeTable* income,
                                const std::string& income_column) {
  const int lon_c = centroids.column("lon");
  const int lat_c = centroids.column("lat");
  if (lon_c < 0 || lat_c < 0) throw Error("centroid table needs lon/lat columns");
  const int income_c = income ? income->column(income_column) : -1;

  std::unordered_map<RegionId, Index> centroid_row, income_row;
  for (std::size_t i = 0; i < centroids.regions.size(); ++i) {
    centroid_row[centroids.regions[i]] = static_cast<Index>(i);
  }
  if (income) {
    for (std::size_t i = 0; i < income->regions.size(); ++i) {
      income_row[income->regions[i]] = static_cast<Index>(i);
    }
  }

  nlohmann::ordered_json features = nlohmann::ordered_json::array();
  for (Index i = 0; i < net.size(); ++i) {
    const RegionId& r = net.regions[static_cast<std::size_t>(i)];
    auto it = centroid_row.find(r);
    if (it == centroid_row.end()) throw Error("no centroid for region " + r.geoid);
    nlohmann::ordered_json feature;
    feature["type"] = "Feature";
    feature["geometry"] = {{"type", "Point"},
                           {"coordinates", {centroids.values(it->second, lon_c),
                                            centroids.values(it->second, lat_c)}}};
    nlohmann::ordered_json props;
    props["geoid"] = r.geoid;
    props["cluster"] = clusters.labels[static_cast<std::size_t>(i)];
    if (income_c >= 0) {
      auto jt = income_row.find(r);
      if (jt != income_row.end() && !income->missing(jt->second, income_c)) {
        props["median_income"] = income->values(jt->second, income_c);
      }
    }
    feature["properties"] = std::move(props);
    features.push_back(std::move(feature));
  }
  nlohmann::ordered_json out;
  out["type"] = "FeatureCollection";
  out["features"] = std::move(features);
  return out.dump(2) + "\n";
}

std::string clusters_to_csv(const MobilityNetwork& net, const ClusterAssignment& clusters) {
  std::string out = "geoid,cluster\n";
  for (Index i = 0; i < net.size(); ++i) {
    out += net.regions[static_cast<std::size_t>(i)].geoid + "," +
           std::to_string(clusters.labels[static_cast<std::size_t>(i)]) + "\n";
  }
  return out;
}

}  // namespace mobnet
