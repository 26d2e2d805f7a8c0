#pragma once

#include "mobnet/ingest.hpp"
#include "mobnet/kmeans.hpp"

#include <string>

namespace mobnet {

/// FeatureCollection of Point features with properties
/// {geoid, cluster, median_income?}; needs lon/lat per region.
std::string clusters_to_geojson(const MobilityNetwork& net, const ClusterAssignment& clusters,
                                const AttributeTable& centroids,
                                const AttributeTable* income = nullptr,
                                const std::string& income_column = "median_income");

/// Fallback when no centroid table is available: geoid,cluster rows.
std::string clusters_to_csv(const MobilityNetwork& net, const ClusterAssignment& clusters);

}  // namespace mobnet
