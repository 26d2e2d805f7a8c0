#pragma once

#include "mobnet/ingest.hpp"

#include <filesystem>
#include <vector>

namespace mobnet {

/// Planted-community city: Poisson commute flows with stronger intensity
/// inside communities, plus a seeded income rule per node.
struct PlantedCityConfig {
  Index n = 60;
  int communities = 2;
  double lambda_in = 5.0;    // Poisson intensity within a community
  double lambda_out = 0.2;   // and across communities
  std::vector<double> base_income;  // per community; default 40000 + 40000*g
  double income_gradient = 0.0;     // added per unit of longitude
  double noise_sigma = 4000.0;
  double spatial_scatter = 0.25;    // stddev of node positions around the community center
};

struct SyntheticCity {
  MobilityNetwork net;
  AttributeTable attributes;  // column median_income
  AttributeTable centroids;   // columns lon, lat
  std::vector<int> community; // aligned to net node order
};

/// Deterministic per (config, seed). Node i belongs to community i % c;
/// flows are drawn for every ordered pair including i = i self-loops.
SyntheticCity generate_city(const PlantedCityConfig& config, std::uint64_t seed);

/// Writes od.csv (canonical edge list), income.csv, centroids.csv and
/// communities.csv into `dir`; the same formats the ingest side reads.
void write_city(const SyntheticCity& city, const std::filesystem::path& dir);

}  // namespace mobnet
