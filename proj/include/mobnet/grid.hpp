#pragma once

#include "mobnet/eval.hpp"
#include "mobnet/gnn.hpp"
#include "mobnet/ingest.hpp"
#include "mobnet/vnn_embed.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mobnet {

enum class Method { vnn_two_step, gcn_vnn, gat_vnn, feature_mlp };

Method method_from_string(const std::string& s);
std::string to_string(Method m);

/// Everything one city contributes to a grid run.
struct CityData {
  std::string name;
  MobilityNetwork net;
  Vector income;                          // aligned to net nodes
  std::vector<std::uint8_t> income_valid;
  std::optional<AttributeTable> centroids;  // lon/lat per region
  std::optional<AttributeTable> features;   // contextual benchmark columns
};

struct GridSpec {
  std::vector<Method> methods{Method::vnn_two_step, Method::gcn_vnn, Method::gat_vnn};
  std::vector<EmbeddingMethod> inits{EmbeddingMethod::spatial, EmbeddingMethod::svd,
                                     EmbeddingMethod::laplacian, EmbeddingMethod::random_walk};
  std::vector<Index> dims{5};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  SplitSpec split;
  WeightTransform transform = WeightTransform::log1p;
  int workers = 0;  // 0 picks the hardware concurrency
  VnnTrainConfig vnn;   // per-cell d/seed are overridden
  GnnConfig gnn;
  HeadConfig head;
};

/// One grid cell: (method, init, d) aggregated over the seeds. Cells whose
/// inputs are unavailable are marked NA with a reason instead of failing
/// the whole grid.
struct GridCell {
  std::string city;
  Method method = Method::vnn_two_step;
  std::string init;  // embedding name, or "features" for the benchmark
  Index d = 0;
  bool available = true;
  std::string na_reason;
  EvalReport report;
};

/// Runs every cell on a bounded worker pool; cell order (and therefore
/// report order) is deterministic.
std::vector<GridCell> run_grid(const CityData& city, const GridSpec& spec);

/// Builds the initial embedding one cell asks for.
EmbeddingMatrix make_initial_embedding(const CityData& city, EmbeddingMethod init, Index d,
                                       WeightTransform transform);

/// Column-wise concatenation of an embedding with attribute columns; the
/// two blocks are standardized independently. Every network region must
/// appear in the table with values present, and vice versa.
EmbeddingMatrix concat_features(const EmbeddingMatrix& emb, const MobilityNetwork& net,
                                const AttributeTable& extra,
                                const std::vector<std::string>& columns = {});

std::string grid_to_csv(const std::vector<GridCell>& cells);
std::string grid_to_json(const std::vector<GridCell>& cells);

}  // namespace mobnet
