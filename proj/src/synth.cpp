#include "mobnet/synth.hpp"

#include "mobnet/rng.hpp"
#include "mobnet/text_io.hpp"

#include <cmath>
#include <cstdio>

namespace mobnet {

namespace {

std::string synthetic_geoid(Index i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "99%09lld", static_cast<long long>(i));
  return buf;
}

}  // namespace

SyntheticCity generate_city(const PlantedCityConfig& config, std::uint64_t seed) {
  if (config.n < 10) throw Error("generate_city: n must be at least 10");
  if (config.communities < 2) throw Error("generate_city: need at least 2 communities");
  if (config.lambda_out < 0.0 || config.lambda_in <= config.lambda_out) {
    throw Error("generate_city: rates must satisfy lambda_in > lambda_out >= 0");
  }
  const Index n = config.n;
  const int c = config.communities;

  std::vector<double> base = config.base_income;
  if (base.empty()) {
    for (int g = 0; g < c; ++g) base.push_back(40000.0 + 40000.0 * g);
  }
  if (static_cast<int>(base.size()) != c) {
    throw Error("generate_city: base_income must list one value per community");
  }

  SyntheticCity city;
  city.community.resize(static_cast<std::size_t>(n));
  std::vector<RegionId> universe;
  for (Index i = 0; i < n; ++i) {
    city.community[static_cast<std::size_t>(i)] = static_cast<int>(i % c);
    universe.emplace_back(synthetic_geoid(i));
  }

  Rng rng(seed);
  std::vector<FlowRecord> flows;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const bool within = city.community[static_cast<std::size_t>(i)] ==
                          city.community[static_cast<std::size_t>(j)];
      const double lambda = within ? config.lambda_in : config.lambda_out;
      const long long count = static_cast<long long>(rng.poisson(lambda));
      if (count > 0) flows.push_back({universe[static_cast<std::size_t>(i)],
                                      universe[static_cast<std::size_t>(j)], count});
    }
  }
  city.net = build_network(flows, &universe);

  // Community centers sit on a unit circle; nodes scatter around them.
  city.centroids.columns = {"lon", "lat"};
  city.centroids.values = Matrix::Zero(n, 2);
  city.centroids.missing =
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, 2, false);
  city.attributes.columns = {"median_income"};
  city.attributes.values = Matrix::Zero(n, 1);
  city.attributes.missing =
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, 1, false);
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  for (Index i = 0; i < n; ++i) {
    const int g = city.community[static_cast<std::size_t>(i)];
    const double angle = kTwoPi * static_cast<double>(g) / static_cast<double>(c);
    const double lon = std::cos(angle) + config.spatial_scatter * rng.normal();
    const double lat = std::sin(angle) + config.spatial_scatter * rng.normal();
    city.centroids.regions.push_back(universe[static_cast<std::size_t>(i)]);
    city.centroids.values(i, 0) = lon;
    city.centroids.values(i, 1) = lat;
    city.attributes.regions.push_back(universe[static_cast<std::size_t>(i)]);
    city.attributes.values(i, 0) = base[static_cast<std::size_t>(g)] +
                                   config.income_gradient * lon +
                                   config.noise_sigma * rng.normal();
  }
  return city;
}

void write_city(const SyntheticCity& city, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_edge_list(city.net, dir / "od.csv");

  std::string income = "geoid,median_income\n";
  for (std::size_t i = 0; i < city.attributes.regions.size(); ++i) {
    income += city.attributes.regions[i].geoid + "," +
              format_double(city.attributes.values(static_cast<Index>(i), 0)) + "\n";
  }
  atomic_write(dir / "income.csv", income);

  std::string centroids = "geoid,lon,lat\n";
  for (std::size_t i = 0; i < city.centroids.regions.size(); ++i) {
    centroids += city.centroids.regions[i].geoid + "," +
                 format_double(city.centroids.values(static_cast<Index>(i), 0)) + "," +
                 format_double(city.centroids.values(static_cast<Index>(i), 1)) + "\n";
  }
  atomic_write(dir / "centroids.csv", centroids);

  std::string communities = "geoid,community\n";
  for (std::size_t i = 0; i < city.community.size(); ++i) {
    communities += city.net.regions[i].geoid + "," + std::to_string(city.community[i]) + "\n";
  }
  atomic_write(dir / "communities.csv", communities);
}

}  // namespace mobnet
